//! Bias of the closed-form estimator on an image-source field with perfect
//! averaging: spectral densities are formed from the image list with
//! incoherent arrivals, so only the model mismatch between a specular
//! shoebox field and an isotropic one remains.
//!
//! Usage: cargo run --release --example ideal_bias

use sphere_drr::direction::{angle_between, Direction};
use sphere_drr::drr::{ClosedForm, OffsetScheme};
use sphere_drr::sim::{ground_truth_drr, image_sources, ImageList, DIRECT_WINDOW_S};
use sphere_drr::sweep::scene_grid;

/// Estimated DRR (linear) along `u` for an incoherent sum of the images.
fn ideal_estimate(images: &ImageList, doa: &Direction, u: &Direction) -> f64 {
    let (mut spp, mut svv, mut spv) = (0.0, 0.0, 0.0);
    for e in &images.entries {
        let a2 = e.amplitude * e.amplitude;
        let c = angle_between(&e.direction, u).cos();
        spp += a2;
        svv += a2 * c * c;
        spv += a2 * c;
    }
    let msc = spv * spv / (spp * svv);
    ClosedForm::default()
        .solve(msc.sqrt(), angle_between(doa, u))
        .unwrap()
        .drr_linear
}

fn main() {
    println!(
        "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "scene", "truth", "K=4", "on-axis", "E[cos2]", "flux"
    );
    for s in scene_grid(&[1.0, 2.0], &[0.7, 0.55, 0.45, 0.35, 0.28], 18.0, 1) {
        let images = image_sources(&s.scene).unwrap();
        let truth = ground_truth_drr(&images).unwrap();
        let doa = s.scene.source_direction();
        let k4: Vec<f64> = OffsetScheme::default()
            .directions(&doa)
            .iter()
            .map(|u| ideal_estimate(&images, &doa, u))
            .collect();
        let k4 = 10.0 * (k4.iter().sum::<f64>() / k4.len() as f64).log10();
        let on = 10.0 * ideal_estimate(&images, &doa, &doa).log10();

        // reverberant energy statistics seen along the DOA
        let t0 = images.direct().delay_s + DIRECT_WINDOW_S;
        let (mut er, mut q, mut x) = (0.0, 0.0, 0.0);
        for e in images.entries.iter().filter(|e| e.delay_s > t0) {
            let a2 = e.amplitude * e.amplitude;
            let c = angle_between(&e.direction, &doa).cos();
            er += a2;
            q += a2 * c * c;
            x += a2 * c;
        }
        println!(
            "{:<12} {:>+8.1} {:>+8.1} {:>+8.1} {:>8.3} {:>+8.3}",
            s.id,
            truth,
            k4 - truth,
            on - truth,
            q / er,
            x / er
        );
    }
}
