//! Batch simulation and estimation over grids of scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::config::AnalysisConfig;
use crate::error::Result;
use crate::pipeline::{analyze_recording, DrrReport, ErrorInfo};
use crate::sim::{
    capsule_impulse_responses, image_sources, synth_with_impulse_responses, DrySignal, NoiseSpec, RoomScene,
    SimulationSidecar,
};
use crate::wav::Recording;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepScene {
    pub id: String,
    pub scene: RoomScene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenes: Vec<SweepScene>,
    pub signal: DrySignal,
    pub duration_s: f64,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneResult {
    pub id: String,
    pub sidecar: SimulationSidecar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DrrReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

/// Simulates the recording of `signal` in `scene` together with its
/// ground-truth sidecar.
pub fn simulate_scene(
    scene: &RoomScene,
    signal: &DrySignal,
    duration_s: f64,
    geometry: &ArrayGeometry,
) -> Result<(Recording, SimulationSidecar)> {
    let images = image_sources(scene)?;
    let sidecar = SimulationSidecar::new(scene, &images)?;
    let irs = capsule_impulse_responses(scene, &images, geometry)?;
    let len = (duration_s * scene.sample_rate_hz).round() as usize;
    let dry = signal.generate(len, scene.sample_rate_hz, scene.seed);
    let rec = synth_with_impulse_responses(scene, &irs, &dry, geometry)?;
    Ok((rec, sidecar))
}

pub fn run_scene(id: &str, scene: &RoomScene, spec: &SweepSpec, geometry: &ArrayGeometry) -> Result<SceneResult> {
    let (rec, sidecar) = simulate_scene(scene, &spec.signal, spec.duration_s, geometry)?;
    let (report, error) = match analyze_recording(&rec, geometry, &spec.analysis) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(ErrorInfo::from(&e))),
    };
    Ok(SceneResult {
        id: id.to_string(),
        sidecar,
        report,
        error,
    })
}

/// Runs every scene; results keep the order of `spec.scenes`.
pub fn run_sweep(spec: &SweepSpec, geometry: &ArrayGeometry) -> Result<Vec<SceneResult>> {
    spec.scenes
        .par_iter()
        .map(|s| run_scene(&s.id, &s.scene, spec, geometry))
        .collect()
}

/// Scenes in a 5 × 4 × 3 m room for every distance and absorption pair.
pub fn scene_grid(distances_m: &[f64], absorptions: &[f64], snr_db: f64, seed: u64) -> Vec<SweepScene> {
    let mut out = Vec::new();
    for (i, &d) in distances_m.iter().enumerate() {
        for (j, &a) in absorptions.iter().enumerate() {
            let mut scene = RoomScene::shoebox(a, d, 35.0 + 50.0 * j as f64, seed + (i * 100 + j) as u64);
            scene.noise = NoiseSpec::diffuse(snr_db);
            out.push(SweepScene {
                id: format!("d{d:.1}_a{a:.2}"),
                scene,
            });
        }
    }
    out
}
