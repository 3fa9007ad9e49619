//! Run configuration, loaded from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{ArrayGeometry, Regularization, MAX_ENCODE_ORDER};
use crate::doa::DoaConfig;
use crate::drr::DrrConfig;
use crate::error::{Error, Result};
use crate::sim::DEFAULT_SOUND_SPEED;
use crate::tf::{default_subband_grid, StftConfig, SubbandGrid, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftSettings {
    pub frame_len: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: Window,
}

impl Default for StftSettings {
    fn default() -> Self {
        Self {
            frame_len: 1024,
            hop: 512,
            window: Window::Hann,
        }
    }
}

impl StftSettings {
    pub fn at_rate(&self, sample_rate_hz: f64) -> StftConfig {
        StftConfig {
            sample_rate_hz,
            frame_len: self.frame_len,
            hop: self.hop,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VadSettings {
    pub threshold_db: f64,
}

impl Default for VadSettings {
    fn default() -> Self {
        Self { threshold_db: -25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode")]
pub enum BandSettings {
    #[default]
    #[serde(rename = "default10thDecade")]
    Default10thDecade,
    #[serde(rename = "explicit")]
    Explicit { centers_hz: Vec<f64> },
}

impl BandSettings {
    pub fn grid(&self) -> Result<SubbandGrid> {
        match self {
            BandSettings::Default10thDecade => Ok(default_subband_grid()),
            BandSettings::Explicit { centers_hz } => SubbandGrid::from_centers(centers_hz.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeSettings {
    pub max_order: usize,
    pub regularization: Regularization,
}

impl Default for EncodeSettings {
    fn default() -> Self {
        Self {
            max_order: MAX_ENCODE_ORDER,
            regularization: Regularization::default(),
        }
    }
}

/// Everything that controls the estimate, independent of file locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub stft: StftSettings,
    #[serde(default)]
    pub vad: VadSettings,
    #[serde(default)]
    pub bands: BandSettings,
    #[serde(default)]
    pub encode: EncodeSettings,
    #[serde(default)]
    pub doa: DoaConfig,
    #[serde(default)]
    pub drr: DrrConfig,
    #[serde(default = "default_sound_speed")]
    pub sound_speed_m_s: f64,
}

fn default_sound_speed() -> f64 {
    DEFAULT_SOUND_SPEED
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            stft: StftSettings::default(),
            vad: VadSettings::default(),
            bands: BandSettings::default(),
            encode: EncodeSettings::default(),
            doa: DoaConfig::default(),
            drr: DrrConfig::default(),
            sound_speed_m_s: DEFAULT_SOUND_SPEED,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.stft.at_rate(48_000.0).validate()?;
        if !(self.vad.threshold_db < 0.0 && self.vad.threshold_db.is_finite()) {
            return Err(Error::config(
                "vad.threshold_db",
                format!("must be negative, got {}", self.vad.threshold_db),
            ));
        }
        let grid = self.bands.grid()?;
        if !(self.encode.max_order >= 1 && self.encode.max_order <= MAX_ENCODE_ORDER) {
            return Err(Error::config(
                "encode.max_order",
                format!("must lie in 1..={MAX_ENCODE_ORDER}, got {}", self.encode.max_order),
            ));
        }
        if let Regularization::SoftKnee { lambda } = self.encode.regularization {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::config(
                    "encode.regularization.lambda",
                    format!("must be positive, got {lambda}"),
                ));
            }
        }
        self.doa.validate()?;
        self.drr.validate()?;
        if !(self.sound_speed_m_s > 0.0 && self.sound_speed_m_s.is_finite()) {
            return Err(Error::config("sound_speed_m_s", "must be positive"));
        }
        if grid.low_hz() <= 0.0 {
            return Err(Error::config("bands.centers_hz", "bands must lie above 0 Hz"));
        }
        Ok(())
    }

    /// Short hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySource {
    /// The literal string `"builtin"`.
    Builtin(BuiltinTag),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinTag {
    Builtin,
}

impl Default for GeometrySource {
    fn default() -> Self {
        GeometrySource::Builtin(BuiltinTag::Builtin)
    }
}

impl GeometrySource {
    pub fn load(&self) -> Result<ArrayGeometry> {
        match self {
            GeometrySource::Builtin(_) => Ok(crate::array::builtin_eigenmike_geometry()),
            GeometrySource::File(p) => ArrayGeometry::load(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub geometry: GeometrySource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Accept recordings with more channels than capsules, using the first
    /// ones.
    #[serde(default)]
    pub allow_extra_channels: bool,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            geometry: GeometrySource::default(),
            output: None,
            format: OutputFormat::default(),
            allow_extra_channels: false,
            analysis: AnalysisConfig::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config("<root>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.input.exists() {
            return Err(Error::MissingFile(self.input.clone()));
        }
        if let GeometrySource::File(p) = &self.geometry {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        if let Some(out) = &self.output {
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                if !parent.is_dir() {
                    return Err(Error::config(
                        "output",
                        format!("directory {} does not exist", parent.display()),
                    ));
                }
            }
        }
        self.analysis.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn default_round_trip_and_validate() {
        let c = AnalysisConfig::default();
        c.validate().unwrap();
        let json = serde_json::to_string_pretty(&c).unwrap();
        let back: AnalysisConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let empty: AnalysisConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(empty, c);
    }

    #[test]
    fn field_specific_rejections() {
        type Mutation = Box<dyn Fn(&mut AnalysisConfig)>;
        let cases: Vec<(&str, Mutation)> = vec![
            ("stft.frame_len", Box::new(|c| c.stft.frame_len = 1000)),
            ("stft.hop", Box::new(|c| c.stft.hop = 0)),
            ("vad.threshold_db", Box::new(|c| c.vad.threshold_db = 1.0)),
            ("encode.max_order", Box::new(|c| c.encode.max_order = 5)),
            ("doa.grid_deg", Box::new(|c| c.doa.grid_deg = -1.0)),
            ("doa.refine_deg", Box::new(|c| c.doa.refine_deg = 10.0)),
            ("doa.band_hz", Box::new(|c| c.doa.band_hz = [500.0, 100.0])),
            ("drr.limits.cos_min", Box::new(|c| c.drr.limits.cos_min = 1.5)),
            ("drr.min_count", Box::new(|c| c.drr.min_count = 0)),
            ("sound_speed_m_s", Box::new(|c| c.sound_speed_m_s = 0.0)),
            (
                "bands.centers_hz",
                Box::new(|c| {
                    c.bands = BandSettings::Explicit {
                        centers_hz: vec![500.0, 400.0],
                    }
                }),
            ),
        ];
        for (field, mutate) in cases {
            let mut c = AnalysisConfig::default();
            mutate(&mut c);
            assert_eq!(field_of(c.validate().unwrap_err()), field);
        }
    }

    #[test]
    fn run_config_parsing() {
        let c = RunConfig::from_json_str(
            r#"{"input": "x.wav", "geometry": "builtin", "analysis": {"vad": {"threshold_db": -20}}}"#,
        )
        .unwrap();
        assert_eq!(c.geometry, GeometrySource::default());
        assert_eq!(c.analysis.vad.threshold_db, -20.0);
        let c = RunConfig::from_json_str(r#"{"input": "x.wav", "geometry": "geo.json"}"#).unwrap();
        assert_eq!(c.geometry, GeometrySource::File("geo.json".into()));
        assert!(RunConfig::from_json_str(r#"{"input": "x.wav", "bogus": 1}"#).is_err());
        let err = RunConfig::new("/does/not/exist.wav").validate().unwrap_err();
        assert_eq!(err.code(), "missing_file");
    }

    #[test]
    fn bands_mode_tags() {
        let b: BandSettings = serde_json::from_str(r#"{"mode": "default10thDecade"}"#).unwrap();
        assert_eq!(b.grid().unwrap().len(), 12);
        let b: BandSettings = serde_json::from_str(r#"{"mode": "explicit", "centers_hz": [250, 500, 1000]}"#).unwrap();
        assert_eq!(b.grid().unwrap().len(), 3);
    }
}
