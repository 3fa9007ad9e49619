//! CSV plot data from one or more reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::DrrReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotAxis {
    Band,
    Scene,
}

/// A report with the scene label and ground truth it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct LabeledReport<'a> {
    pub id: &'a str,
    pub report: &'a DrrReport,
    pub truth_db: Option<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, s)
}

fn fmt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite())
        .map(|v| format!("{v:.4}"))
        .unwrap_or_default()
}

/// Per-band rows (`axis = band`) or per-scene rows (`axis = scene`).
///
/// Band rows average over the supplied reports; error columns are empty
/// when no report carries a ground truth. Scene rows require a ground
/// truth for every report.
pub fn emit_plot_data(reports: &[LabeledReport<'_>], axis: PlotAxis) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("emit_plot_data"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    match axis {
        PlotAxis::Band => {
            w.write_record(["center_hz", "estimate_db", "truth_db", "error_db", "error_std_db", "n"])
                .map_err(csv_err)?;
            let bands = reports[0].report.bands.len();
            if let Some(r) = reports.iter().find(|r| r.report.bands.len() != bands) {
                return Err(Error::LengthMismatch {
                    expected: bands,
                    got: r.report.bands.len(),
                });
            }
            for b in 0..bands {
                let center = reports[0].report.bands[b].band_hz;
                let est: Vec<f64> = reports.iter().filter_map(|r| r.report.bands[b].drr_db).collect();
                let truths: Vec<f64> = reports.iter().filter_map(|r| r.truth_db).collect();
                let errs: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| Some(r.report.bands[b].drr_db? - r.truth_db?))
                    .collect();
                let e = (!errs.is_empty()).then(|| mean_std(&errs));
                w.write_record([
                    format!("{center:.2}"),
                    fmt((!est.is_empty()).then(|| mean_std(&est).0)),
                    fmt((!truths.is_empty()).then(|| mean_std(&truths).0)),
                    fmt(e.map(|e| e.0)),
                    fmt(e.map(|e| e.1)),
                    est.len().to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        PlotAxis::Scene => {
            w.write_record([
                "scene_id",
                "estimate_db",
                "truth_db",
                "error_db",
                "band_error_mean_db",
                "band_error_std_db",
            ])
            .map_err(csv_err)?;
            for r in reports {
                let truth = r
                    .truth_db
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| Error::MissingGroundTruth(r.id.to_string()))?;
                let errs: Vec<f64> = r
                    .report
                    .bands
                    .iter()
                    .filter_map(|b| b.drr_db)
                    .map(|d| d - truth)
                    .collect();
                let e = (!errs.is_empty()).then(|| mean_std(&errs));
                w.write_record([
                    r.id.to_string(),
                    fmt(r.report.fullband_db),
                    fmt(Some(truth)),
                    fmt(r.report.fullband_db.map(|f| f - truth)),
                    fmt(e.map(|e| e.0)),
                    fmt(e.map(|e| e.1)),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
