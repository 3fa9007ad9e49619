//! Numerical self-checks that run in well under a second.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{builtin_eigenmike_geometry, discrete_orthonormality_error, Encoder, Regularization};
use crate::direction::Direction;
use crate::drr::drr_from_coherence;
use crate::sh::{num_coeffs, sh_vector, ModeOrder, Wavenumber};
use crate::sim::{plane_wave_alpha, plane_wave_capsule_pressures, DEFAULT_SOUND_SPEED};
use crate::tf::default_subband_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

/// Largest relative error of the closed form over DRR in [-20, 20] dB and
/// theta0 in {0, 15, ..., 75} degrees, fed by the forward coherence model.
pub fn inverse_consistency_error() -> f64 {
    let mut worst: f64 = 0.0;
    for db in -20..=20 {
        let drr = 10f64.powf(db as f64 / 10.0);
        for t in (0..=75).step_by(15) {
            let th = (t as f64).to_radians();
            let c2 = th.cos().powi(2);
            let msc = drr * drr * c2 / ((1.0 + drr) * (0.5 + drr * c2));
            match drr_from_coherence(msc.sqrt(), th) {
                Ok(v) => worst = worst.max(((v - drr) / drr).abs()),
                Err(_) => return f64::INFINITY,
            }
        }
    }
    worst
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Gram-matrix error of the harmonics up to `max_order` under a
/// Gauss-Legendre × uniform-azimuth product rule.
pub fn dense_orthonormality_error(max_order: usize) -> f64 {
    let nc = num_coeffs(max_order);
    let nt = max_order + 2;
    let np = 2 * max_order + 2;
    let mut gram = vec![Complex64::new(0.0, 0.0); nc * nc];
    for (x, w) in gauss_legendre(nt) {
        for j in 0..np {
            let y = sh_vector(max_order, &Direction::new(x.acos(), 2.0 * PI * j as f64 / np as f64));
            let wt = w * 2.0 * PI / np as f64;
            for a in 0..nc {
                for b in 0..nc {
                    gram[a * nc + b] += y[a] * y[b].conj() * wt;
                }
            }
        }
    }
    (0..nc * nc)
        .map(|i| (gram[i] - if i / nc == i % nc { 1.0 } else { 0.0 }).norm())
        .fold(0.0, f64::max)
}

/// Worst per-order relative error of encoding unregularized plane waves at
/// the default band centers, orders up to 3.
pub fn round_trip_error() -> f64 {
    let g = builtin_eigenmike_geometry();
    let enc = match Encoder::new(&g, 4, Regularization::None) {
        Ok(e) => e,
        Err(_) => return f64::INFINITY,
    };
    let dirs: Vec<Direction> = (0..20)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / 20.0;
            Direction::new(z.acos(), i as f64 * 2.399_963)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &f in &default_subband_grid().centers_hz {
        let k = Wavenumber::from_frequency(f, DEFAULT_SOUND_SPEED);
        for d in &dirs {
            let got = plane_wave_capsule_pressures(d, k, &g).and_then(|p| enc.encode(&p, k, 0));
            let Ok(got) = got else { return f64::INFINITY };
            let want = plane_wave_alpha(d, Complex64::new(1.0, 0.0), k, 4);
            for n in 0..=3usize {
                let (mut num, mut den) = (0.0, 0.0);
                for m in -(n as i64)..=n as i64 {
                    let i = ModeOrder { n, m }.flat_index();
                    num += (got.coeffs[i] - want.coeffs[i]).norm_sqr();
                    den += want.coeffs[i].norm_sqr();
                }
                worst = worst.max((num / den).sqrt());
            }
        }
    }
    worst
}

pub fn run() -> Vec<Check> {
    let g = builtin_eigenmike_geometry();
    vec![
        Check::new("closed_form_inverse_consistency", inverse_consistency_error(), 1e-6),
        Check::new("dense_orthonormality_order4", dense_orthonormality_error(4), 1e-6),
        Check::new(
            "capsule_orthonormality_order3",
            discrete_orthonormality_error(&g, 3),
            0.05,
        ),
        Check::new("plane_wave_round_trip", round_trip_error(), 0.01),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let q = gauss_legendre(5);
        let s: f64 = q.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }
}
