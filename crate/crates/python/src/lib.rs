//! Python bindings. Structured values (configs, scenes, reports) cross the
//! boundary as JSON strings or plain Python objects.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use sphere_drr::array::{self as arr, Encoder, Regularization};
use sphere_drr::config::{AnalysisConfig, RunConfig};
use sphere_drr::direction as dir;
use sphere_drr::pipeline::{self, Confidence};
use sphere_drr::sh::Wavenumber;
use sphere_drr::sim::{self, DrySignal};
use sphere_drr::wav::Recording;
use sphere_drr::{drr, selftest, sweep};

create_exception!(
    sphere_drr,
    SphereDrrError,
    PyException,
    "Error raised by the DRR pipeline."
);

fn err(e: sphere_drr::Error) -> PyErr {
    SphereDrrError::new_err(format!("{} [{}/{}]", e, e.module(), e.code()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    SphereDrrError::new_err(format!("invalid JSON: {e}"))
}

/// Point on the unit sphere; angles in radians.
#[pyclass(module = "sphere_drr", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct Direction(dir::Direction);

#[pymethods]
impl Direction {
    #[new]
    fn new(theta: f64, phi: f64) -> Self {
        Self(dir::Direction::new(theta, phi))
    }

    #[staticmethod]
    fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self(dir::Direction::from_degrees(theta_deg, phi_deg))
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi
    }

    #[getter]
    fn theta_deg(&self) -> f64 {
        self.0.theta_deg()
    }

    #[getter]
    fn phi_deg(&self) -> f64 {
        self.0.phi_deg()
    }

    /// Great-circle angle to `other` in radians.
    fn angle_to(&self, other: &Direction) -> f64 {
        dir::angle_between(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "Direction(theta_deg={:.3}, phi_deg={:.3})",
            self.0.theta_deg(),
            self.0.phi_deg()
        )
    }
}

/// Capsule layout of a rigid-sphere array.
#[pyclass(module = "sphere_drr", frozen, from_py_object)]
#[derive(Clone)]
pub struct ArrayGeometry(arr::ArrayGeometry);

#[pymethods]
impl ArrayGeometry {
    /// Built-in 32-capsule Eigenmike layout.
    #[staticmethod]
    fn eigenmike() -> Self {
        Self(arr::builtin_eigenmike_geometry())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        arr::ArrayGeometry::from_json_str(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn radius_m(&self) -> f64 {
        self.0.radius_m
    }

    #[getter]
    fn num_capsules(&self) -> usize {
        self.0.num_capsules()
    }

    /// Capsule directions.
    fn capsules(&self) -> Vec<Direction> {
        self.0.capsules.iter().map(|d| Direction(*d)).collect()
    }
}

fn geometry_or_default(g: Option<&ArrayGeometry>) -> arr::ArrayGeometry {
    g.map(|g| g.0.clone()).unwrap_or_else(arr::builtin_eigenmike_geometry)
}

fn analysis_config(json: Option<&str>) -> PyResult<AnalysisConfig> {
    let cfg = match json {
        Some(s) => serde_json::from_str(s).map_err(json_err)?,
        None => AnalysisConfig::default(),
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Result of one analysis.
#[pyclass(module = "sphere_drr", frozen)]
pub struct DrrReport(pipeline::DrrReport);

#[pymethods]
impl DrrReport {
    #[getter]
    fn fullband_db(&self) -> Option<f64> {
        self.0.fullband_db
    }

    #[getter]
    fn doa(&self) -> Direction {
        Direction(dir::Direction::from_degrees(self.0.doa.theta_deg, self.0.doa.phi_deg))
    }

    #[getter]
    fn peak_to_median_db(&self) -> f64 {
        self.0.doa.peak_to_median_db
    }

    #[getter]
    fn low_confidence(&self) -> bool {
        self.0.doa.confidence == Confidence::Low
    }

    #[getter]
    fn band_centers_hz(&self) -> Vec<f64> {
        self.0.bands.iter().map(|b| b.band_hz).collect()
    }

    /// Per-band estimates in dB; `None` where a band produced no estimate.
    #[getter]
    fn band_drr_db(&self) -> Vec<Option<f64>> {
        self.0.bands.iter().map(|b| b.drr_db).collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        match self.0.fullband_db {
            Some(d) => format!("DrrReport(fullband_db={d:.2}, bands={})", self.0.bands.len()),
            None => format!("DrrReport(fullband_db=None, bands={})", self.0.bands.len()),
        }
    }
}

/// Analyzes `channels` (one list of samples per capsule).
#[pyfunction]
#[pyo3(signature = (channels, sample_rate_hz, config_json=None, geometry=None))]
fn analyze(
    py: Python<'_>,
    channels: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    config_json: Option<&str>,
    geometry: Option<&ArrayGeometry>,
) -> PyResult<DrrReport> {
    let cfg = analysis_config(config_json)?;
    let g = geometry_or_default(geometry);
    let rec = Recording {
        sample_rate_hz,
        channels,
    };
    py.detach(|| pipeline::analyze_recording(&rec, &g, &cfg))
        .map(DrrReport)
        .map_err(err)
}

/// Reads a 32-channel WAV and analyzes it.
#[pyfunction]
#[pyo3(signature = (path, config_json=None, allow_extra_channels=false))]
fn estimate_file(
    py: Python<'_>,
    path: PathBuf,
    config_json: Option<&str>,
    allow_extra_channels: bool,
) -> PyResult<DrrReport> {
    let mut cfg = RunConfig::new(&path);
    cfg.analysis = analysis_config(config_json)?;
    cfg.allow_extra_channels = allow_extra_channels;
    py.detach(|| pipeline::run_estimate(&cfg)).map(DrrReport).map_err(err)
}

/// Room scene JSON for a source `distance_m` from the array in the default
/// 5 x 4 x 3 m shoebox.
#[pyfunction]
#[pyo3(signature = (absorption, distance_m, azimuth_deg, seed=1))]
fn shoebox_scene(absorption: f64, distance_m: f64, azimuth_deg: f64, seed: u64) -> PyResult<String> {
    let scene = sim::RoomScene::shoebox(absorption, distance_m, azimuth_deg, seed);
    scene.validate().map_err(err)?;
    serde_json::to_string(&scene).map_err(json_err)
}

/// Renders a scene; returns `(channels, sample_rate_hz, sidecar_json)`.
#[pyfunction]
#[pyo3(signature = (scene_json, duration_s, signal="speech", geometry=None))]
fn simulate(
    py: Python<'_>,
    scene_json: &str,
    duration_s: f64,
    signal: &str,
    geometry: Option<&ArrayGeometry>,
) -> PyResult<(Vec<Vec<f64>>, f64, String)> {
    let scene: sim::RoomScene = serde_json::from_str(scene_json).map_err(json_err)?;
    scene.validate().map_err(err)?;
    let signal = match signal {
        "speech" => DrySignal::SpeechShapedNoise,
        "bursts" => DrySignal::BurstTrain {
            period_s: 0.5,
            duty: 0.5,
        },
        other => return Err(SphereDrrError::new_err(format!("unknown signal {other:?}"))),
    };
    let g = geometry_or_default(geometry);
    let (rec, sidecar) = py
        .detach(|| sweep::simulate_scene(&scene, &signal, duration_s, &g))
        .map_err(err)?;
    let side = serde_json::to_string(&sidecar).map_err(json_err)?;
    Ok((rec.channels, rec.sample_rate_hz, side))
}

/// Image-source ground truth DRR in dB (`inf` for an anechoic scene).
#[pyfunction]
fn ground_truth_drr_db(scene_json: &str) -> PyResult<f64> {
    let scene: sim::RoomScene = serde_json::from_str(scene_json).map_err(json_err)?;
    let images = sim::image_sources(&scene).map_err(err)?;
    sim::ground_truth_drr(&images).map_err(err)
}

/// Linear DRR from magnitude coherence `gamma` and the angle `theta0`
/// (radians) between the source and the velocity direction.
#[pyfunction]
fn drr_from_coherence(gamma: f64, theta0: f64) -> PyResult<f64> {
    drr::drr_from_coherence(gamma, theta0).map_err(err)
}

/// SH coefficients of a unit plane wave arriving from `direction`.
#[pyfunction]
#[pyo3(signature = (direction, frequency_hz, max_order=4, sound_speed=sim::DEFAULT_SOUND_SPEED))]
fn plane_wave_alpha(direction: &Direction, frequency_hz: f64, max_order: usize, sound_speed: f64) -> Vec<Complex64> {
    let k = Wavenumber::from_frequency(frequency_hz, sound_speed);
    sim::plane_wave_alpha(&direction.0, Complex64::new(1.0, 0.0), k, max_order).coeffs
}

/// Capsule pressures of a unit plane wave on the rigid sphere.
#[pyfunction]
#[pyo3(signature = (direction, frequency_hz, geometry=None, sound_speed=sim::DEFAULT_SOUND_SPEED))]
fn plane_wave_pressures(
    direction: &Direction,
    frequency_hz: f64,
    geometry: Option<&ArrayGeometry>,
    sound_speed: f64,
) -> PyResult<Vec<Complex64>> {
    let k = Wavenumber::from_frequency(frequency_hz, sound_speed);
    sim::plane_wave_capsule_pressures(&direction.0, k, &geometry_or_default(geometry)).map_err(err)
}

/// Encodes capsule pressures to SH coefficients. `max_wng_db=None` inverts
/// the mode strength exactly.
#[pyfunction]
#[pyo3(signature = (pressures, frequency_hz, max_order=4, max_wng_db=Some(arr::DEFAULT_MAX_WNG_DB), geometry=None, sound_speed=sim::DEFAULT_SOUND_SPEED))]
fn encode(
    pressures: Vec<Complex64>,
    frequency_hz: f64,
    max_order: usize,
    max_wng_db: Option<f64>,
    geometry: Option<&ArrayGeometry>,
    sound_speed: f64,
) -> PyResult<Vec<Complex64>> {
    let reg = max_wng_db.map_or(Regularization::None, Regularization::from_max_wng_db);
    let enc = Encoder::new(&geometry_or_default(geometry), max_order, reg).map_err(err)?;
    let k = Wavenumber::from_frequency(frequency_hz, sound_speed);
    enc.encode(&pressures, k, 0).map(|f| f.coeffs).map_err(err)
}

/// Numerical self-checks as `(name, value, tolerance, passed)` tuples.
#[pyfunction(name = "selftest")]
fn run_selftest() -> Vec<(String, f64, f64, bool)> {
    selftest::run()
        .into_iter()
        .map(|c| (c.name, c.value, c.tolerance, c.passed))
        .collect()
}

#[pymodule(name = "sphere_drr")]
pub fn sphere_drr_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SphereDrrError", m.py().get_type::<SphereDrrError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Direction>()?;
    m.add_class::<ArrayGeometry>()?;
    m.add_class::<DrrReport>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_file, m)?)?;
    m.add_function(wrap_pyfunction!(shoebox_scene, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ground_truth_drr_db, m)?)?;
    m.add_function(wrap_pyfunction!(drr_from_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(plane_wave_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(plane_wave_pressures, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
