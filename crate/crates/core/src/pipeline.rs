//! End-to-end estimation: STFT, encoding, DOA, subband and fullband DRR.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{ArrayGeometry, Encoder, ShFrame};
use crate::config::{AnalysisConfig, RunConfig};
use crate::doa::{estimate_doa, DoaEstimate};
use crate::drr::{fullband_drr, subband_drr, DirectionResult, DrrFlag};
use crate::error::{Error, Result};
use crate::sh::Wavenumber;
use crate::tf::{active_frames, hz_range_bins, stft_multichannel, StftConfig, SubbandGrid};
use crate::wav::{read_multichannel_wav, Recording};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub module: String,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code().to_string(),
            module: e.module().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaReport {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub confidence: Confidence,
    pub peak_to_median_db: f64,
    pub num_averaged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub band_hz: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    pub num_bins: usize,
    pub num_frames: usize,
    pub drr_db: Option<f64>,
    pub gamma_msc: Vec<f64>,
    pub theta0_deg: Vec<f64>,
    pub directions: Vec<DirectionResult>,
    pub flags: BTreeSet<DrrFlag>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub sample_rate_hz: f64,
    pub num_samples: usize,
    pub num_channels: usize,
    pub subband_method: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub extra_channels_ignored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrrReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub doa: DoaReport,
    pub bands: Vec<BandReport>,
    pub fullband_db: Option<f64>,
    pub fullband_bands_used: usize,
    pub config: AnalysisConfig,
}

impl DrrReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn is_low_confidence(&self) -> bool {
        self.doa.confidence == Confidence::Low
    }
}

/// SH frames of one recording over a contiguous bin range.
pub struct EncodedRecording {
    pub stft: StftConfig,
    pub first_bin: usize,
    pub num_bins: usize,
    pub frames: usize,
    /// `[frame][bin - first_bin]`
    pub cells: Vec<ShFrame>,
    pub spectra: crate::array::CapsuleSpectra,
}

impl EncodedRecording {
    pub fn cell(&self, frame: usize, bin: usize) -> &ShFrame {
        &self.cells[frame * self.num_bins + bin - self.first_bin]
    }

    /// Cells of the given frames and bins, frame-major.
    pub fn select(&self, frames: &[usize], bins: std::ops::Range<usize>) -> Vec<ShFrame> {
        frames
            .iter()
            .flat_map(|&f| bins.clone().map(move |b| (f, b)))
            .map(|(f, b)| self.cell(f, b).clone())
            .collect()
    }
}

pub fn encode_recording(
    rec: &Recording,
    geometry: &ArrayGeometry,
    cfg: &AnalysisConfig,
    lo_hz: f64,
    hi_hz: f64,
) -> Result<EncodedRecording> {
    let stft = cfg.stft.at_rate(rec.sample_rate_hz);
    stft.validate()?;
    let range = hz_range_bins(lo_hz, hi_hz, &stft)
        .ok_or_else(|| Error::config("bands", format!("no STFT bins between {lo_hz:.1} and {hi_hz:.1} Hz")))?;
    // widen by one bin so narrow-band fallbacks stay inside
    let first_bin = range.start.saturating_sub(1).max(1);
    let end = (range.end + 1).min(stft.num_bins());
    let spectra = stft_multichannel(&rec.channels, &stft, end)?;
    let encoder = Encoder::new(geometry, cfg.encode.max_order, cfg.encode.regularization)?;
    let num_bins = end - first_bin;
    let inverses: Vec<_> = (first_bin..end)
        .map(|b| encoder.inverse_mode_strength(Wavenumber::from_frequency(stft.bin_frequency(b), cfg.sound_speed_m_s)))
        .collect::<Result<_>>()?;
    let cells: Vec<ShFrame> = (0..spectra.frames)
        .into_par_iter()
        .flat_map_iter(|f| {
            let spectra = &spectra;
            let encoder = &encoder;
            inverses
                .iter()
                .enumerate()
                .map(move |(i, inv)| encoder.encode_with(spectra.cell(f, first_bin + i), inv, f))
        })
        .collect::<Result<_>>()?;
    Ok(EncodedRecording {
        stft,
        first_bin,
        num_bins,
        frames: spectra.frames,
        cells,
        spectra,
    })
}

/// Runs the estimator on an in-memory recording.
pub fn analyze_recording(rec: &Recording, geometry: &ArrayGeometry, cfg: &AnalysisConfig) -> Result<DrrReport> {
    cfg.validate()?;
    let nq = geometry.num_capsules();
    if rec.num_channels() != nq {
        return Err(Error::ChannelCount {
            expected: nq,
            got: rec.num_channels(),
        });
    }
    let grid = cfg.bands.grid()?;
    let lo = grid.low_hz().min(cfg.doa.band_hz[0]);
    let hi = grid.high_hz().max(cfg.doa.band_hz[1]);
    let enc = encode_recording(rec, geometry, cfg, lo, hi)?;

    let doa_bins = hz_range_bins(cfg.doa.band_hz[0], cfg.doa.band_hz[1], &enc.stft)
        .ok_or_else(|| Error::config("doa.band_hz", "no STFT bins in the DOA band"))?;
    let doa_frames = active_frames(&enc.spectra, doa_bins.clone(), cfg.vad.threshold_db)?;
    if doa_frames.is_empty() {
        return Err(Error::NoSignal("every frame is silent".into()));
    }
    let doa: DoaEstimate = estimate_doa(&enc.select(&doa_frames, doa_bins), &cfg.doa)?;

    let bands = analyze_bands(&enc, &grid, &doa, cfg);
    let estimates: Vec<_> = bands.iter().filter_map(|b| b.1.clone()).collect();
    let fullband = fullband_drr(&estimates, cfg.drr.fullband_averaging).ok();
    Ok(DrrReport {
        schema_version: REPORT_SCHEMA_VERSION,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            input_sha256: None,
            sample_rate_hz: rec.sample_rate_hz,
            num_samples: rec.len(),
            num_channels: rec.num_channels(),
            subband_method: "stft_bin_grouping".into(),
            extra_channels_ignored: false,
        },
        doa: DoaReport {
            theta_deg: doa.direction.theta_deg(),
            phi_deg: doa.direction.phi_deg(),
            confidence: if doa.low_confidence {
                Confidence::Low
            } else {
                Confidence::High
            },
            peak_to_median_db: doa.peak_to_median_db,
            num_averaged: doa.num_averaged,
        },
        bands: bands.into_iter().map(|b| b.0).collect(),
        fullband_db: fullband.as_ref().map(|f| f.drr_db),
        fullband_bands_used: fullband.as_ref().map_or(0, |f| f.bands_used),
        config: cfg.clone(),
    })
}

fn analyze_bands(
    enc: &EncodedRecording,
    grid: &SubbandGrid,
    doa: &DoaEstimate,
    cfg: &AnalysisConfig,
) -> Vec<(BandReport, Option<crate::drr::DrrEstimate>)> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let bins = grid.band_bins(i, &enc.stft);
            let center = grid.centers_hz[i];
            let (low_hz, high_hz) = grid.edges_hz[i];
            let outcome = active_frames(&enc.spectra, bins.clone(), cfg.vad.threshold_db).and_then(|frames| {
                if frames.is_empty() {
                    return Err(Error::NoSignal("no active frames in band".into()));
                }
                let cells = enc.select(&frames, bins.clone());
                subband_drr(&cells, &doa.direction, center, &cfg.drr).map(|e| (frames.len(), e))
            });
            let mut report = BandReport {
                band_hz: center,
                low_hz,
                high_hz,
                num_bins: bins.len(),
                num_frames: 0,
                drr_db: None,
                gamma_msc: vec![],
                theta0_deg: vec![],
                directions: vec![],
                flags: BTreeSet::new(),
                count: 0,
                error: None,
            };
            match outcome {
                Ok((nf, e)) => {
                    report.num_frames = nf;
                    report.drr_db = Some(e.drr_db);
                    report.gamma_msc = e.directions.iter().map(|d| d.gamma_msc).collect();
                    report.theta0_deg = e.directions.iter().map(|d| d.theta0_deg).collect();
                    report.directions = e.directions.clone();
                    report.flags = e.flags.clone();
                    report.count = e.count;
                    (report, Some(e))
                }
                Err(err) => {
                    report.error = Some(ErrorInfo::from(&err.in_band(center)));
                    (report, None)
                }
            }
        })
        .collect()
}

/// Loads the files named in `cfg` and runs the estimator.
pub fn run_estimate(cfg: &RunConfig) -> Result<DrrReport> {
    cfg.validate()?;
    let geometry = cfg.geometry.load()?;
    let bytes = std::fs::read(&cfg.input)?;
    let mut rec = read_multichannel_wav(&cfg.input)?;
    let nq = geometry.num_capsules();
    let mut extra = false;
    if rec.num_channels() > nq && cfg.allow_extra_channels {
        rec.channels.truncate(nq);
        extra = true;
    }
    let mut report = analyze_recording(&rec, &geometry, &cfg.analysis)?;
    report.provenance.input_sha256 = Some(hex::encode(Sha256::digest(&bytes)));
    report.provenance.extra_channels_ignored = extra;
    Ok(report)
}
