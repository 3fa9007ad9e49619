//! Direction of arrival by MUSIC on the frequency-smoothed modal cross
//! spectrum.
//!
//! The steering vector is the coefficient vector of a unit plane wave,
//! `a_nm(Ω) = iⁿ Y*_nm(Ω)`, so the pseudo-spectrum peaks where the noise
//! subspace is orthogonal to what the encoder actually produces for an
//! arrival from `Ω`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ShFrame;
use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::sh::{self, num_coeffs};

/// Floor on the noise-subspace projection so the spectrum stays finite.
pub const PROJECTION_FLOOR: f64 = 1e-12;

/// Peak-to-median ratio below which a DOA is reported as unreliable.
pub const LOW_CONFIDENCE_DB: f64 = 6.0;

// fixed chunking keeps the reduction order independent of the thread count
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalCrossSpectrum {
    pub matrix: DMatrix<Complex64>,
    pub num_averaged: usize,
}

impl ModalCrossSpectrum {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `true` when there were fewer samples than needed for a full-rank
    /// estimate.
    pub fn is_rank_deficient(&self) -> bool {
        self.num_averaged <= self.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Rescales each order block so its mean diagonal power is one.
    ///
    /// A single plane wave carries the same mean power per coefficient in
    /// every order, whatever its direction, so this undoes the per-order
    /// gain of the regularized encoder without moving the MUSIC peak.
    /// Orders with no power are left alone.
    pub fn order_equalized(&self) -> Self {
        let dim = self.dim();
        let max_order = (dim as f64).sqrt() as usize - 1;
        let mut d = vec![1.0; dim];
        for n in 0..=max_order {
            let block = n * n..((n + 1) * (n + 1)).min(dim);
            let p = block.clone().map(|i| self.matrix[(i, i)].re).sum::<f64>() / block.len() as f64;
            if p > f64::MIN_POSITIVE {
                d[block].fill(1.0 / p.sqrt());
            }
        }
        let mut matrix = self.matrix.clone();
        for r in 0..dim {
            for c in 0..dim {
                matrix[(r, c)] *= d[r] * d[c];
            }
        }
        Self {
            matrix,
            num_averaged: self.num_averaged,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * s),
            num_averaged: self.num_averaged,
        }
    }
}

/// `R = (1/I) Σ α αᴴ` over all supplied (frame, bin) cells.
pub fn smoothed_cross_spectrum(frames: &[ShFrame]) -> Result<ModalCrossSpectrum> {
    smoothed_cross_spectrum_iter(frames.iter())
}

pub fn smoothed_cross_spectrum_iter<'a, I>(frames: I) -> Result<ModalCrossSpectrum>
where
    I: IntoIterator<Item = &'a ShFrame>,
{
    let frames: Vec<&ShFrame> = frames.into_iter().collect();
    let first = frames.first().ok_or(Error::EmptyInput("smoothed_cross_spectrum"))?;
    let n = first.coeffs.len();
    if let Some(f) = frames.iter().find(|f| f.coeffs.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: f.coeffs.len(),
        });
    }
    let partials: Vec<Vec<Complex64>> = frames
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
            for f in chunk {
                for (r, a) in f.coeffs.iter().enumerate() {
                    let row = &mut acc[r * n..(r + 1) * n];
                    for (c, b) in f.coeffs.iter().enumerate() {
                        row[c] += a * b.conj();
                    }
                }
            }
            acc
        })
        .collect();
    let mut sum = vec![Complex64::new(0.0, 0.0); n * n];
    for p in &partials {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let inv = 1.0 / frames.len() as f64;
    let mut matrix = DMatrix::from_row_slice(n, n, &sum).map(|z| z * inv);
    // symmetrize away rounding so the matrix is exactly Hermitian
    for r in 0..n {
        matrix[(r, r)].im = 0.0;
        for c in r + 1..n {
            let v = (matrix[(r, c)] + matrix[(c, r)].conj()) * 0.5;
            matrix[(r, c)] = v;
            matrix[(c, r)] = v.conj();
        }
    }
    Ok(ModalCrossSpectrum {
        matrix,
        num_averaged: frames.len(),
    })
}

/// Steering vector `iⁿ Y*_nm(dir)` of the encoder output for a unit plane
/// wave.
pub fn steering_vector(max_order: usize, dir: &Direction) -> Vec<Complex64> {
    let y = sh::sh_vector(max_order, dir);
    let mut out = Vec::with_capacity(y.len());
    for n in 0..=max_order {
        let phase = Complex64::i().powu(n as u32);
        for m in 0..(2 * n + 1) {
            out.push(phase * y[n * n + m].conj());
        }
    }
    out
}

/// Noise-subspace projector `E_n E_nᴴ`.
#[derive(Debug, Clone)]
pub struct NoiseProjector {
    max_order: usize,
    matrix: DMatrix<Complex64>,
}

impl NoiseProjector {
    pub fn new(r: &ModalCrossSpectrum, num_sources: usize) -> Result<Self> {
        let dim = r.dim();
        if num_sources == 0 || num_sources >= dim {
            return Err(Error::InvalidArgument(format!(
                "num_sources must lie in 1..{dim}, got {num_sources}"
            )));
        }
        let max_order = (dim as f64).sqrt() as usize - 1;
        if num_coeffs(max_order) != dim {
            return Err(Error::InvalidArgument(format!(
                "cross spectrum dimension {dim} is not (N+1)²"
            )));
        }
        let eig = SymmetricEigen::new(r.matrix.clone());
        let mut order: Vec<usize> = (0..dim).collect();
        // ascending by eigenvalue, ties broken by index
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let lam = |k: usize| eig.eigenvalues[order[k]];
        let scale = lam(dim - 1).abs().max(f64::MIN_POSITIVE);
        // a signal eigenvalue tied with the largest noise eigenvalue picks
        // out no direction, so the whole space is treated as noise
        let tied = (lam(dim - num_sources) - lam(dim - num_sources - 1)).abs() <= 1e-9 * scale;
        let noise = if tied { &order[..] } else { &order[..dim - num_sources] };
        let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
        for &k in noise {
            let v = eig.eigenvectors.column(k);
            matrix += v * v.adjoint();
        }
        Ok(Self { max_order, matrix })
    }

    /// `1 / max(aᴴ P a, floor)` at `dir`.
    pub fn evaluate(&self, dir: &Direction) -> f64 {
        let a = steering_vector(self.max_order, dir);
        let n = a.len();
        let mut q = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for c in 0..n {
                row += self.matrix[(r, c)] * a[c];
            }
            q += a[r].conj() * row;
        }
        1.0 / q.re.max(PROJECTION_FLOOR)
    }
}

/// MUSIC pseudo-spectrum over `grid`.
pub fn music_spectrum(r: &ModalCrossSpectrum, grid: &[Direction], num_sources: usize) -> Result<Vec<f64>> {
    let p = NoiseProjector::new(r, num_sources)?;
    Ok(grid.par_iter().map(|d| p.evaluate(d)).collect())
}

/// Regular grid with `step_deg` spacing in both angles; each pole appears
/// once.
pub fn direction_grid(step_deg: f64) -> Vec<Direction> {
    let n_theta = (180.0 / step_deg).round() as usize;
    let n_phi = (360.0 / step_deg).round() as usize;
    let mut grid = vec![Direction::new(0.0, 0.0)];
    for i in 1..n_theta {
        let theta = PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            grid.push(Direction::new(theta, 2.0 * PI * j as f64 / n_phi as f64));
        }
    }
    grid.push(Direction::new(PI, 0.0));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaConfig {
    #[serde(default = "default_grid_deg")]
    pub grid_deg: f64,
    #[serde(default = "default_refine_deg")]
    pub refine_deg: f64,
    #[serde(default = "default_doa_band")]
    pub band_hz: [f64; 2],
    #[serde(default = "default_num_sources")]
    pub num_sources: usize,
}

fn default_grid_deg() -> f64 {
    5.0
}
fn default_refine_deg() -> f64 {
    0.5
}
fn default_doa_band() -> [f64; 2] {
    [10f64.powf(2.3), 10f64.powf(3.4)]
}
fn default_num_sources() -> usize {
    1
}

impl Default for DoaConfig {
    fn default() -> Self {
        Self {
            grid_deg: default_grid_deg(),
            refine_deg: default_refine_deg(),
            band_hz: default_doa_band(),
            num_sources: default_num_sources(),
        }
    }
}

impl DoaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_deg > 0.0 && self.grid_deg <= 30.0) {
            return Err(Error::config(
                "doa.grid_deg",
                format!("must lie in (0, 30], got {}", self.grid_deg),
            ));
        }
        if !(self.refine_deg > 0.0 && self.refine_deg <= self.grid_deg) {
            return Err(Error::config(
                "doa.refine_deg",
                format!("must lie in (0, grid_deg], got {}", self.refine_deg),
            ));
        }
        let [lo, hi] = self.band_hz;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::config("doa.band_hz", format!("invalid band [{lo}, {hi}]")));
        }
        if self.num_sources != 1 {
            return Err(Error::config("doa.num_sources", "only a single source is supported"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    pub direction: Direction,
    pub peak_to_median_db: f64,
    pub low_confidence: bool,
    pub num_averaged: usize,
    pub rank_deficient: bool,
}

/// Coarse grid search followed by local refinement around the peak, on the
/// order-equalized cross spectrum.
pub fn estimate_doa_from_spectrum(r: &ModalCrossSpectrum, cfg: &DoaConfig) -> Result<DoaEstimate> {
    cfg.validate()?;
    let proj = NoiseProjector::new(&r.order_equalized(), cfg.num_sources)?;
    let grid = direction_grid(cfg.grid_deg);
    let values: Vec<f64> = grid.par_iter().map(|d| proj.evaluate(d)).collect();
    let (best, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("grid is nonempty");
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let peak_to_median_db = 10.0 * (peak / median).log10();

    let center = grid[best];
    let steps = (cfg.grid_deg / cfg.refine_deg).round() as i64;
    let h = cfg.refine_deg.to_radians();
    let local: Vec<Direction> = (-steps..=steps)
        .flat_map(|i| {
            (-steps..=steps).map(move |j| {
                let theta = center.theta + i as f64 * h;
                // equal great-circle steps in azimuth, capped near the poles
                let dphi = (h / theta.sin().abs().max(1e-3)).min(2.0 * PI / (2 * steps + 1) as f64);
                Direction::new(theta, center.phi + j as f64 * dphi)
            })
        })
        .collect();
    let local_values: Vec<f64> = local.par_iter().map(|d| proj.evaluate(d)).collect();
    let (k, &v) = local_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("refinement grid is nonempty");
    let direction = if v >= peak { local[k] } else { center };
    Ok(DoaEstimate {
        direction,
        peak_to_median_db,
        low_confidence: peak_to_median_db < LOW_CONFIDENCE_DB,
        num_averaged: r.num_averaged,
        rank_deficient: r.is_rank_deficient(),
    })
}

/// DOA from frames that already span the smoothing band.
pub fn estimate_doa(frames: &[ShFrame], cfg: &DoaConfig) -> Result<DoaEstimate> {
    let r = smoothed_cross_spectrum(frames)?;
    estimate_doa_from_spectrum(&r, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::angle_between;
    use crate::sh::Wavenumber;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane_wave(dir: &Direction, amp: Complex64, order: usize) -> ShFrame {
        let coeffs = steering_vector(order, dir)
            .into_iter()
            .map(|a| a * amp * (4.0 * PI))
            .collect();
        ShFrame {
            coeffs,
            k: Wavenumber(10.0),
            frame_index: 0,
            suppressed: 0,
        }
    }

    fn random_frames(n: usize, seed: u64) -> Vec<ShFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut f = ShFrame::zeros(4, Wavenumber(10.0), i);
                for c in &mut f.coeffs {
                    *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
                f
            })
            .collect()
    }

    #[test]
    fn rank_one_from_single_frame() {
        let f = plane_wave(&Direction::from_degrees(30.0, 40.0), Complex64::new(0.3, 0.2), 4);
        let r = smoothed_cross_spectrum(std::slice::from_ref(&f)).unwrap();
        let eig = SymmetricEigen::new(r.matrix.clone());
        let norm2: f64 = f.coeffs.iter().map(|z| z.norm_sqr()).sum();
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |a, (i, &l)| if l > a.1 { (i, l) } else { a });
        assert!((lmax - norm2).abs() < 1e-9 * norm2);
        let v = eig.eigenvectors.column(imax);
        let dot: Complex64 = f.coeffs.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!((dot.norm() / norm2.sqrt() - 1.0).abs() < 1e-9);
        assert!(r.is_rank_deficient());
    }

    #[test]
    fn hermitian_psd() {
        let r = smoothed_cross_spectrum(&random_frames(300, 1)).unwrap();
        let n = r.dim();
        for i in 0..n {
            for j in 0..n {
                assert!((r.matrix[(i, j)] - r.matrix[(j, i)].conj()).norm() < 1e-10);
            }
        }
        let eig = SymmetricEigen::new(r.matrix.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-8 * r.trace()));
    }

    #[test]
    fn iid_input_has_small_eigenvalue_spread() {
        let r = smoothed_cross_spectrum(&random_frames(10_000, 2)).unwrap();
        let eig = SymmetricEigen::new(r.matrix);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        assert!(max / min < 3.0, "{max} / {min}");
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(smoothed_cross_spectrum(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn rank_one_peak_at_source() {
        let src = Direction::from_degrees(90.0, 45.0);
        let f = plane_wave(&src, Complex64::new(1.0, 0.0), 4);
        let r = smoothed_cross_spectrum(&[f]).unwrap();
        let grid = direction_grid(5.0);
        let s = music_spectrum(&r, &grid, 1).unwrap();
        let best = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(angle_between(&grid[best], &src) < 1e-9);
        assert!(s.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn identity_gives_flat_spectrum() {
        let r = ModalCrossSpectrum {
            matrix: DMatrix::identity(25, 25),
            num_averaged: 100,
        };
        let s = music_spectrum(&r, &direction_grid(10.0), 1).unwrap();
        let (min, max) = s.iter().fold((f64::MAX, f64::MIN), |a, &v| (a.0.min(v), a.1.max(v)));
        assert!((max - min) / max < 1e-6);
    }

    #[test]
    fn num_sources_range() {
        let r = smoothed_cross_spectrum(&random_frames(50, 3)).unwrap();
        let g = direction_grid(30.0);
        assert!(music_spectrum(&r, &g, 0).is_err());
        assert!(music_spectrum(&r, &g, 25).is_err());
        assert!(music_spectrum(&r, &g, 24).is_ok());
    }

    fn two_arrivals(src: &Direction, refl: &Direction, refl_gain: f64, bins: usize) -> Vec<ShFrame> {
        // coherent reflection delayed by 4 ms, observed across many bins
        (0..bins)
            .map(|b| {
                let f = 300.0 + 20.0 * b as f64;
                let phase = Complex64::from_polar(refl_gain, -2.0 * PI * f * 0.004);
                let mut a = plane_wave(src, Complex64::new(1.0, 0.0), 4);
                let r = plane_wave(refl, phase, 4);
                for (x, y) in a.coeffs.iter_mut().zip(&r.coeffs) {
                    *x += y;
                }
                a
            })
            .collect()
    }

    #[test]
    fn frequency_smoothing_decorrelates_reflection() {
        let src = Direction::from_degrees(145.0, 90.0);
        let refl = Direction::from_degrees(60.0, 200.0);
        let frames = two_arrivals(&src, &refl, 10f64.powf(-3.0 / 20.0), 40);
        let est = estimate_doa(&frames, &DoaConfig::default()).unwrap();
        assert!(angle_between(&est.direction, &src).to_degrees() < 2.0);
    }

    #[test]
    fn estimate_is_refined_off_grid() {
        let src = Direction::from_degrees(97.3, 211.8);
        let frames: Vec<ShFrame> = (0..30)
            .map(|i| plane_wave(&src, Complex64::from_polar(1.0, i as f64), 4))
            .chain(
                random_frames(30, 9)
                    .into_iter()
                    .map(|f| f.scaled(Complex64::new(0.01, 0.0))),
            )
            .collect();
        let est = estimate_doa(&frames, &DoaConfig::default()).unwrap();
        assert!(
            angle_between(&est.direction, &src).to_degrees() < 0.5,
            "{:?}",
            est.direction
        );
        assert!(!est.low_confidence);
    }

    #[test]
    fn order_equalization_undoes_per_order_gain() {
        let src = Direction::from_degrees(63.0, 17.0);
        let clean = smoothed_cross_spectrum(&[plane_wave(&src, Complex64::new(1.0, 0.0), 4)]).unwrap();
        let mut f = plane_wave(&src, Complex64::new(1.0, 0.0), 4);
        for n in 0..=4usize {
            for i in n * n..(n + 1) * (n + 1) {
                f.coeffs[i] *= 0.5f64.powi(n as i32 * 3);
            }
        }
        let a = clean.order_equalized().matrix;
        let b = smoothed_cross_spectrum(&[f]).unwrap().order_equalized().matrix;
        assert!((a - b).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn regularized_orders_keep_high_confidence() {
        // per-bin soft-knee gains shrink the upper orders unevenly across
        // the band, as the encoder does below the array's aliasing limit
        let src = Direction::from_degrees(112.0, 250.0);
        let mut frames = Vec::new();
        for b in 0..40 {
            let kr = 0.2 + 0.045 * b as f64;
            let mut f = plane_wave(&src, Complex64::from_polar(1.0, 0.7 * b as f64), 4);
            for n in 0..=4usize {
                let bn = kr.powi(n as i32) / (1..=n).map(|k| (2 * k + 1) as f64).product::<f64>();
                let g = bn * bn / (bn * bn + 0.0025);
                for i in n * n..(n + 1) * (n + 1) {
                    f.coeffs[i] *= g;
                }
            }
            frames.push(f);
        }
        frames.extend(
            random_frames(40, 3)
                .into_iter()
                .map(|f| f.scaled(Complex64::new(0.02, 0.0))),
        );
        let est = estimate_doa(&frames, &DoaConfig::default()).unwrap();
        assert!(
            angle_between(&est.direction, &src).to_degrees() < 1.0,
            "{:?}",
            est.direction
        );
        assert!(!est.low_confidence, "{}", est.peak_to_median_db);
    }

    #[test]
    fn scale_and_phase_invariance() {
        let src = Direction::from_degrees(50.0, 300.0);
        let frames = two_arrivals(&src, &Direction::from_degrees(120.0, 20.0), 0.5, 30);
        let r = smoothed_cross_spectrum(&frames).unwrap();
        let grid = direction_grid(5.0);
        let argmax = |s: Vec<f64>| s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let base = argmax(music_spectrum(&r, &grid, 1).unwrap());
        assert_eq!(argmax(music_spectrum(&r.scaled(37.5), &grid, 1).unwrap()), base);
        let rotated: Vec<ShFrame> = frames
            .iter()
            .map(|f| f.scaled(Complex64::from_polar(1.0, 2.1)))
            .collect();
        let r2 = smoothed_cross_spectrum(&rotated).unwrap();
        assert_eq!(argmax(music_spectrum(&r2, &grid, 1).unwrap()), base);
    }

    #[test]
    fn joint_conjugation_leaves_spectrum_unchanged() {
        // conjugating both the data and the steering vector is the only
        // global conjugation that preserves the quadratic form
        let src = Direction::from_degrees(70.0, 130.0);
        let frames = two_arrivals(&src, &Direction::from_degrees(20.0, 250.0), 0.4, 30);
        let r = smoothed_cross_spectrum(&frames).unwrap();
        let conj = ModalCrossSpectrum {
            matrix: r.matrix.map(|z| z.conj()),
            num_averaged: r.num_averaged,
        };
        let p = NoiseProjector::new(&r, 1).unwrap();
        let pc = NoiseProjector::new(&conj, 1).unwrap();
        for d in direction_grid(15.0) {
            let a: Vec<Complex64> = steering_vector(4, &d).iter().map(|z| z.conj()).collect();
            let q: Complex64 = (0..25)
                .map(|i| {
                    (0..25)
                        .map(|j| a[i].conj() * pc.matrix[(i, j)] * a[j])
                        .sum::<Complex64>()
                })
                .sum();
            let v = 1.0 / q.re.max(PROJECTION_FLOOR);
            assert!((v - p.evaluate(&d)).abs() <= 1e-6 * v);
        }
    }

    #[test]
    fn noise_only_is_low_confidence() {
        let est = estimate_doa(&random_frames(5000, 4), &DoaConfig::default()).unwrap();
        assert!(est.low_confidence, "{}", est.peak_to_median_db);
    }

    #[test]
    fn rotation_in_azimuth_follows() {
        let base = Direction::from_degrees(110.0, 30.0);
        let refl = Direction::from_degrees(40.0, 170.0);
        let e0 = estimate_doa(&two_arrivals(&base, &refl, 0.3, 30), &DoaConfig::default()).unwrap();
        let d = 47.0f64.to_radians();
        let e1 = estimate_doa(
            &two_arrivals(&base.rotated_azimuth(d), &refl.rotated_azimuth(d), 0.3, 30),
            &DoaConfig::default(),
        )
        .unwrap();
        assert!(angle_between(&e0.direction.rotated_azimuth(d), &e1.direction).to_degrees() < 1.0);
    }

    #[test]
    fn reduction_is_schedule_independent() {
        let frames = random_frames(1000, 5);
        let a = smoothed_cross_spectrum(&frames).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| smoothed_cross_spectrum(&frames).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn grid_has_single_poles() {
        let g = direction_grid(5.0);
        assert_eq!(g.len(), 2 + 35 * 72);
        assert_eq!(g.iter().filter(|d| d.theta == 0.0).count(), 1);
    }
}
