//! Shoebox room simulator for the rigid-sphere array.
//!
//! Every image source is treated as a far-field plane wave arriving at the
//! array center. Capsule transfer functions are evaluated bin by bin from
//! the rigid-sphere expansion
//! `p_i = Σ_n (2n+1) iⁿ b_n(kR) P_n(cos Θ_i)`, so the recordings carry the
//! exact scattering model the encoder inverts. Time convention is
//! `e^{+jωt}`; a delay `τ` is the phase factor `e^{-jωτ}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{ArrayGeometry, ShFrame};
use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::sh::{self, Wavenumber};
use crate::wav::Recording;

pub const DEFAULT_SOUND_SPEED: f64 = 343.0;

/// Air density in kg/m³. Only documents the physical velocity scale; it
/// cancels in every coherence the estimator forms.
pub const AIR_DENSITY: f64 = 1.2;

/// Arrivals within this window after the direct path count as direct
/// energy in the ground-truth DRR.
pub const DIRECT_WINDOW_S: f64 = 0.0025;

// Salts keep the random streams of different purposes independent.
const SALT_NOISE: u64 = 0x6e6f_6973_6500_0001;
const SALT_DIFFUSE: u64 = 0x6469_6666_7573_6502;
const SALT_DRY: u64 = 0x6472_7900_0000_0003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Isotropic diffuse field of white noise.
    DiffuseWhite,
    /// White noise arriving as a single plane wave.
    Directional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(rename = "type")]
    pub kind: NoiseKind,
    pub snr_db: f64,
    /// Arrival direction `[theta_deg, phi_deg]` for directional noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_deg: Option<[f64; 2]>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            snr_db: f64::INFINITY,
            direction_deg: None,
        }
    }

    pub fn diffuse(snr_db: f64) -> Self {
        Self {
            kind: NoiseKind::DiffuseWhite,
            snr_db,
            direction_deg: None,
        }
    }
}

/// Shoebox room, source, array placement and noise.
///
/// Absorption coefficients are per wall in the order
/// `[x = 0, x = Lx, y = 0, y = Ly, z = 0, z = Lz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomScene {
    pub room_dims_m: [f64; 3],
    pub absorption: [f64; 6],
    pub source_pos_m: [f64; 3],
    pub array_pos_m: [f64; 3],
    pub max_image_order: usize,
    pub sample_rate_hz: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    #[serde(default = "default_sound_speed")]
    pub sound_speed_m_s: f64,
    /// Synthesized band `[low, high]` in Hz; raised-cosine tapers of one
    /// octave (low edge) and 300 Hz (high edge) lie inside it.
    #[serde(default = "default_synth_band")]
    pub synth_band_hz: [f64; 2],
}

fn default_sound_speed() -> f64 {
    DEFAULT_SOUND_SPEED
}

fn default_synth_band() -> [f64; 2] {
    [50.0, 3600.0]
}

impl RoomScene {
    /// A 5 × 4 × 3 m room with uniform absorption, array at
    /// (2.3, 1.9, 1.4) m and the source `distance_m` away along
    /// the given horizontal azimuth and elevation offset.
    pub fn shoebox(absorption: f64, distance_m: f64, azimuth_deg: f64, seed: u64) -> Self {
        let array = [2.3, 1.9, 1.4];
        let az = azimuth_deg.to_radians();
        let el = 0.25f64;
        let source = [
            array[0] + distance_m * el.cos() * az.cos(),
            array[1] + distance_m * el.cos() * az.sin(),
            array[2] + distance_m * el.sin(),
        ];
        Self {
            room_dims_m: [5.0, 4.0, 3.0],
            absorption: [absorption; 6],
            source_pos_m: source,
            array_pos_m: array,
            max_image_order: 12,
            sample_rate_hz: 48_000.0,
            noise: NoiseSpec::diffuse(18.0),
            seed,
            sound_speed_m_s: DEFAULT_SOUND_SPEED,
            synth_band_hz: default_synth_band(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::config(format!("scene.{name}"), msg));
        if self.room_dims_m.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return field("room_dims_m", "dimensions must be positive".into());
        }
        for (name, p) in [("source_pos_m", self.source_pos_m), ("array_pos_m", self.array_pos_m)] {
            for (x, l) in p.iter().zip(&self.room_dims_m) {
                if !(*x > 0.0 && *x < *l) {
                    return field(name, format!("position {p:?} not strictly inside the room"));
                }
            }
        }
        if self.absorption.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return field("absorption", "coefficients must lie in (0, 1]".into());
        }
        if !(self.sample_rate_hz > 0.0) {
            return field("sample_rate_hz", "must be positive".into());
        }
        if !(self.sound_speed_m_s > 0.0) {
            return field("sound_speed_m_s", "must be positive".into());
        }
        let [lo, hi] = self.synth_band_hz;
        if !(lo > 0.0 && hi > lo * 2.5 && hi < self.sample_rate_hz / 2.0) {
            return field("synth_band_hz", format!("invalid band [{lo}, {hi}]"));
        }
        if self.noise.kind != NoiseKind::None && !self.noise.snr_db.is_finite() {
            return field("noise.snr_db", "must be finite when noise is enabled".into());
        }
        if self.noise.kind == NoiseKind::Directional && self.noise.direction_deg.is_none() {
            return field("noise.direction_deg", "required for directional noise".into());
        }
        Ok(())
    }

    /// Direction of the direct path as seen from the array.
    pub fn source_direction(&self) -> Direction {
        let v = [
            self.source_pos_m[0] - self.array_pos_m[0],
            self.source_pos_m[1] - self.array_pos_m[1],
            self.source_pos_m[2] - self.array_pos_m[2],
        ];
        Direction::from_vector(v)
    }

    pub fn source_distance(&self) -> f64 {
        (0..3)
            .map(|i| (self.source_pos_m[i] - self.array_pos_m[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Short content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scene serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub delay_s: f64,
    pub amplitude: f64,
    pub direction: Direction,
    pub order: usize,
}

/// Image sources sorted by arrival time; the first entry is the direct path.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageList {
    pub entries: Vec<ImageSource>,
}

impl ImageList {
    pub fn direct(&self) -> &ImageSource {
        &self.entries[0]
    }

    pub fn total_energy(&self) -> f64 {
        self.entries.iter().map(|e| e.amplitude * e.amplitude).sum()
    }

    /// Squared amplitudes accumulated in time bins of `bin_s` seconds.
    pub fn energy_histogram(&self, bin_s: f64) -> Vec<f64> {
        let last = self.entries.iter().map(|e| e.delay_s).fold(0.0, f64::max);
        let mut h = vec![0.0; (last / bin_s) as usize + 1];
        for e in &self.entries {
            h[(e.delay_s / bin_s) as usize] += e.amplitude * e.amplitude;
        }
        h
    }
}

/// Enumerates all images with reflection order `<= scene.max_image_order`.
pub fn image_sources(scene: &RoomScene) -> Result<ImageList> {
    scene.validate()?;
    let c = scene.sound_speed_m_s;
    let beta: Vec<f64> = scene.absorption.iter().map(|a| (1.0 - a).sqrt()).collect();
    let n_max = scene.max_image_order as i64;
    let s = scene.source_pos_m;
    let r = scene.array_pos_m;
    let l = scene.room_dims_m;
    if scene.source_distance() < 1e-6 {
        return Err(Error::Geometry("source coincides with the array".into()));
    }
    let mut entries = Vec::new();
    for lx in -n_max..=n_max {
        for ly in -n_max..=n_max {
            for lz in -n_max..=n_max {
                let lat = [lx, ly, lz];
                for p in 0..8u32 {
                    let parity = [(p & 1) as i64, ((p >> 1) & 1) as i64, ((p >> 2) & 1) as i64];
                    let mut order = 0i64;
                    let mut gain = 1.0;
                    let mut v = [0.0; 3];
                    for axis in 0..3 {
                        let low_hits = (lat[axis] - parity[axis]).abs();
                        let high_hits = lat[axis].abs();
                        order += low_hits + high_hits;
                        gain *= beta[2 * axis].powi(low_hits as i32) * beta[2 * axis + 1].powi(high_hits as i32);
                        let img = (1 - 2 * parity[axis]) as f64 * s[axis] + 2.0 * lat[axis] as f64 * l[axis];
                        v[axis] = img - r[axis];
                    }
                    if order > n_max {
                        continue;
                    }
                    let dist = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    entries.push(ImageSource {
                        delay_s: dist / c,
                        amplitude: gain / dist,
                        direction: Direction::from_vector(v),
                        order: order as usize,
                    });
                }
            }
        }
    }
    // stable sort keeps enumeration order for equal delays
    entries.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s).then(a.order.cmp(&b.order)));
    Ok(ImageList { entries })
}

/// Ground-truth DRR in dB from the image list. Direct energy is every
/// arrival within [`DIRECT_WINDOW_S`] of the first one. Returns `+∞` when
/// there is no reverberant energy.
pub fn ground_truth_drr(images: &ImageList) -> Result<f64> {
    let first = images.entries.first().ok_or(Error::EmptyInput("ground_truth_drr"))?;
    let cutoff = first.delay_s + DIRECT_WINDOW_S;
    let (mut direct, mut reverb) = (0.0, 0.0);
    for e in &images.entries {
        if e.delay_s <= cutoff {
            direct += e.amplitude * e.amplitude;
        } else {
            reverb += e.amplitude * e.amplitude;
        }
    }
    if reverb == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (direct / reverb).log10())
}

/// Analytic coefficients of a plane wave of complex amplitude `amplitude`
/// arriving from `dir`: `α_nm = 4π iⁿ amplitude Y*_nm(dir)`.
pub fn plane_wave_alpha(dir: &Direction, amplitude: Complex64, k: Wavenumber, max_order: usize) -> ShFrame {
    let y = sh::sh_vector(max_order, dir);
    let coeffs = y
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let n = sh::ModeOrder::from_flat(i).n;
            i_pow(n) * y.conj() * amplitude * (4.0 * PI)
        })
        .collect();
    ShFrame {
        coeffs,
        k,
        frame_index: 0,
        suppressed: 0,
    }
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Truncation order that keeps the rigid-sphere series accurate to well
/// below 1e-6 at `kr`.
pub fn synthesis_order(kr: f64) -> usize {
    kr.ceil() as usize + 10
}

/// Per-order factors `(2n+1) iⁿ b_n(kR)` of the rigid-sphere series.
fn series_factors(order: usize, kr: f64) -> Result<Vec<Complex64>> {
    (0..=order)
        .map(|n| Ok(i_pow(n) * sh::mode_strength(n, kr)? * (2 * n + 1) as f64))
        .collect()
}

/// Capsule pressures of a unit plane wave from `dir`, full series.
pub fn plane_wave_capsule_pressures(
    dir: &Direction,
    k: Wavenumber,
    geometry: &ArrayGeometry,
) -> Result<Vec<Complex64>> {
    let kr = k.0 * geometry.radius_m;
    let order = synthesis_order(kr);
    let f = series_factors(order, kr)?;
    let u = dir.unit_vector();
    Ok(geometry
        .capsules
        .iter()
        .map(|c| {
            let v = c.unit_vector();
            let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            sh::legendre_polynomials(order, cos)
                .iter()
                .zip(&f)
                .map(|(p, f)| f * *p)
                .sum()
        })
        .collect())
}

fn band_taper(f: f64, band: [f64; 2]) -> f64 {
    let [lo, hi] = band;
    let lo_full = 2.0 * lo;
    let hi_start = hi - 300.0;
    if f <= lo || f >= hi {
        0.0
    } else if f < lo_full {
        0.5 - 0.5 * (PI * (f - lo) / (lo_full - lo)).cos()
    } else if f > hi_start {
        0.5 + 0.5 * (PI * (f - hi_start) / (hi - hi_start)).cos()
    } else {
        1.0
    }
}

/// Capsule impulse responses `[capsule][sample]` of the scene.
pub fn capsule_impulse_responses(
    scene: &RoomScene,
    images: &ImageList,
    geometry: &ArrayGeometry,
) -> Result<Vec<Vec<f64>>> {
    geometry.validate()?;
    let fs = scene.sample_rate_hz;
    let c = scene.sound_speed_m_s;
    let last = images.entries.iter().map(|e| e.delay_s).fold(0.0, f64::max);
    let len = ((last * fs).ceil() as usize + 4096).next_power_of_two();
    let nbins = len / 2 + 1;
    let hi_bin = ((scene.synth_band_hz[1] * len as f64 / fs).ceil() as usize).min(nbins - 1);
    let kr_max = 2.0 * PI * scene.synth_band_hz[1] / c * geometry.radius_m;
    let order = synthesis_order(kr_max);
    let nq = geometry.num_capsules();
    let stride = order + 1;

    // Legendre table, row per image, column per (capsule, n)
    let caps: Vec<[f64; 3]> = geometry.capsules.iter().map(|d| d.unit_vector()).collect();
    let nimg = images.entries.len();
    let mut legendre = DMatrix::<f64>::zeros(nimg, nq * stride);
    for (i, img) in images.entries.iter().enumerate() {
        let u = img.direction.unit_vector();
        for (q, v) in caps.iter().enumerate() {
            let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            for (n, p) in sh::legendre_polynomials(order, cos).into_iter().enumerate() {
                legendre[(i, q * stride + n)] = p;
            }
        }
    }

    // G[bin, (q, n)] = sum_i A_i exp(-j w tau_i) P_n(cos), evaluated as two
    // real matrix products per block of bins
    const BLOCK: usize = 64;
    let blocks: Vec<Vec<Vec<Complex64>>> = (1..=hi_bin)
        .collect::<Vec<_>>()
        .par_chunks(BLOCK)
        .map(|chunk| -> Result<Vec<Vec<Complex64>>> {
            let rows = chunk.len();
            let mut ph_re = DMatrix::<f64>::zeros(rows, nimg);
            let mut ph_im = DMatrix::<f64>::zeros(rows, nimg);
            for (r, &bin) in chunk.iter().enumerate() {
                let omega = 2.0 * PI * bin as f64 * fs / len as f64;
                for (i, img) in images.entries.iter().enumerate() {
                    let ph = Complex64::from_polar(img.amplitude, -omega * img.delay_s);
                    ph_re[(r, i)] = ph.re;
                    ph_im[(r, i)] = ph.im;
                }
            }
            let g_re = &ph_re * &legendre;
            let g_im = &ph_im * &legendre;
            chunk
                .iter()
                .enumerate()
                .map(|(r, &bin)| {
                    let f = bin as f64 * fs / len as f64;
                    let taper = band_taper(f, scene.synth_band_hz);
                    if taper == 0.0 {
                        return Ok(vec![Complex64::new(0.0, 0.0); nq]);
                    }
                    let kr = 2.0 * PI * f / c * geometry.radius_m;
                    let factors = series_factors(order, kr)?;
                    Ok((0..nq)
                        .map(|q| {
                            (0..stride)
                                .map(|n| {
                                    let col = q * stride + n;
                                    factors[n] * Complex64::new(g_re[(r, col)], g_im[(r, col)])
                                })
                                .sum::<Complex64>()
                                * taper
                        })
                        .collect())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); nq]; nbins];
    for (bin, h) in (1..=hi_bin).zip(blocks.into_iter().flatten()) {
        spectra[bin] = h;
    }

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(len);
    let mut out = Vec::with_capacity(nq);
    for q in 0..nq {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for bin in 1..nbins {
            buf[bin] = spectra[bin][q];
            if bin != len - bin {
                buf[len - bin] = spectra[bin][q].conj();
            }
        }
        ifft.process(&mut buf);
        out.push(buf.iter().map(|z| z.re / len as f64).collect());
    }
    Ok(out)
}

/// Linear convolution of every channel with `dry`, truncated to `dry.len()`.
fn convolve_channels(irs: &[Vec<f64>], dry: &[f64]) -> Vec<Vec<f64>> {
    let ir_len = irs.iter().map(Vec::len).max().unwrap_or(0);
    let len = (dry.len() + ir_len).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);
    let mut dry_spec: Vec<Complex64> = dry.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dry_spec.resize(len, Complex64::new(0.0, 0.0));
    fft.process(&mut dry_spec);
    irs.iter()
        .map(|ir| {
            let mut buf: Vec<Complex64> = ir.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            buf.resize(len, Complex64::new(0.0, 0.0));
            fft.process(&mut buf);
            for (b, d) in buf.iter_mut().zip(&dry_spec) {
                *b *= d;
            }
            ifft.process(&mut buf);
            buf[..dry.len()].iter().map(|z| z.re / len as f64).collect()
        })
        .collect()
}

/// Noise field `[capsule][sample]` of unit (arbitrary) scale.
fn noise_field(scene: &RoomScene, len: usize, geometry: &ArrayGeometry) -> Result<Vec<Vec<f64>>> {
    let fs = scene.sample_rate_hz;
    let c = scene.sound_speed_m_s;
    let fft_len = len.next_power_of_two();
    let nbins = fft_len / 2 + 1;
    let nq = geometry.num_capsules();
    let kr_max = 2.0 * PI * scene.synth_band_hz[1] / c * geometry.radius_m;
    let order = synthesis_order(kr_max);
    let ylm: Vec<Vec<Complex64>> = geometry.capsules.iter().map(|d| sh::sh_vector(order, d)).collect();
    let noise_dir = scene.noise.direction_deg.map(|[t, p]| Direction::from_degrees(t, p));
    let base_seed = scene.seed ^ SALT_NOISE;

    let spectra: Vec<Vec<Complex64>> = (0..nbins)
        .into_par_iter()
        .map(|bin| -> Result<Vec<Complex64>> {
            let f = bin as f64 * fs / fft_len as f64;
            let taper = band_taper(f, scene.synth_band_hz);
            if taper == 0.0 {
                return Ok(vec![Complex64::new(0.0, 0.0); nq]);
            }
            let k = Wavenumber(2.0 * PI * f / c);
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
            rng.set_stream(bin as u64);
            match scene.noise.kind {
                NoiseKind::None => Ok(vec![Complex64::new(0.0, 0.0); nq]),
                NoiseKind::DiffuseWhite => {
                    let b = sh::mode_strengths(order, k.0 * geometry.radius_m)?;
                    // i.i.d. coefficients of equal variance per order are the
                    // SH-domain statistics of an isotropic diffuse field
                    let alpha: Vec<Complex64> = sh::ModeOrder::iter(order)
                        .map(|o| complex_normal(&mut rng) * b[o.n] * taper)
                        .collect();
                    Ok(ylm
                        .iter()
                        .map(|y| y.iter().zip(&alpha).map(|(y, a)| y * a).sum())
                        .collect())
                }
                NoiseKind::Directional => {
                    let s = complex_normal(&mut rng) * taper;
                    let dir = noise_dir.expect("validated");
                    Ok(plane_wave_capsule_pressures(&dir, k, geometry)?
                        .into_iter()
                        .map(|p| p * s)
                        .collect())
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(fft_len);
    Ok((0..nq)
        .map(|q| {
            let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
            for bin in 1..nbins {
                buf[bin] = spectra[bin][q];
                if bin != fft_len - bin {
                    buf[fft_len - bin] = spectra[bin][q].conj();
                }
            }
            ifft.process(&mut buf);
            buf[..len].iter().map(|z| z.re).collect()
        })
        .collect())
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Synthesizes the 32-channel recording of `dry_signal` played at the
/// source, plus noise at the requested SNR measured on the first channel.
pub fn synth_recording(scene: &RoomScene, dry_signal: &[f64], geometry: &ArrayGeometry) -> Result<Recording> {
    if dry_signal.is_empty() {
        return Err(Error::EmptyInput("synth_recording"));
    }
    let images = image_sources(scene)?;
    let irs = capsule_impulse_responses(scene, &images, geometry)?;
    synth_with_impulse_responses(scene, &irs, dry_signal, geometry)
}

/// Same as [`synth_recording`] with precomputed capsule impulse responses,
/// so trials that only differ in signal or noise can share them.
pub fn synth_with_impulse_responses(
    scene: &RoomScene,
    irs: &[Vec<f64>],
    dry_signal: &[f64],
    geometry: &ArrayGeometry,
) -> Result<Recording> {
    let mut channels = convolve_channels(irs, dry_signal);
    if scene.noise.kind != NoiseKind::None {
        let noise = noise_field(scene, dry_signal.len(), geometry)?;
        let sig_energy: f64 = channels[0].iter().map(|x| x * x).sum();
        let noise_energy: f64 = noise[0].iter().map(|x| x * x).sum();
        if sig_energy > 0.0 && noise_energy > 0.0 {
            let gain = (sig_energy / (noise_energy * 10f64.powf(scene.noise.snr_db / 10.0))).sqrt();
            for (ch, nz) in channels.iter_mut().zip(&noise) {
                for (x, n) in ch.iter_mut().zip(nz) {
                    *x += gain * n;
                }
            }
        } else if noise_energy > 0.0 {
            // silent source: noise at unit RMS-ish scale
            let gain = (noise[0].len() as f64 / noise_energy).sqrt() * 0.01;
            for (ch, nz) in channels.iter_mut().zip(&noise) {
                for (x, n) in ch.iter_mut().zip(nz) {
                    *x += gain * n;
                }
            }
        }
    }
    Ok(Recording {
        sample_rate_hz: scene.sample_rate_hz,
        channels,
    })
}

/// Frames of an idealized diffuse field: each frame superposes
/// `num_waves` unit plane waves with directions uniform on the sphere and
/// independent uniform phases, normalized to unit expected power per wave
/// sum.
pub fn diffuse_field_frames(num: usize, seed: u64, k: Wavenumber, max_order: usize) -> Vec<ShFrame> {
    const NUM_WAVES: usize = 256;
    (0..num)
        .into_par_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SALT_DIFFUSE);
            rng.set_stream(f as u64);
            let mut frame = ShFrame::zeros(max_order, k, f);
            let scale = 1.0 / (NUM_WAVES as f64).sqrt();
            for _ in 0..NUM_WAVES {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                let psi: f64 = rng.random_range(0.0..2.0 * PI);
                let dir = Direction::new(z.acos(), phi);
                let pw = plane_wave_alpha(&dir, Complex64::from_polar(scale, psi), k, max_order);
                for (a, b) in frame.coeffs.iter_mut().zip(&pw.coeffs) {
                    *a += b;
                }
            }
            frame
        })
        .collect()
}

/// Dry source signals for simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrySignal {
    /// Continuous noise with a speech-like long-term spectrum (flat to
    /// 500 Hz, -6 dB/octave above).
    SpeechShapedNoise,
    /// Speech-shaped noise gated on and off with the given period and duty
    /// cycle, 5 ms raised-cosine ramps.
    BurstTrain { period_s: f64, duty: f64 },
}

impl DrySignal {
    pub fn generate(&self, len: usize, sample_rate_hz: f64, seed: u64) -> Vec<f64> {
        let mut x = speech_shaped_noise(len, sample_rate_hz, seed);
        if let DrySignal::BurstTrain { period_s, duty } = *self {
            let ramp = 0.005 * sample_rate_hz;
            let period = period_s * sample_rate_hz;
            let on = duty * period;
            for (i, s) in x.iter_mut().enumerate() {
                let t = (i as f64) % period;
                let g = if t >= on {
                    0.0
                } else if t < ramp {
                    0.5 - 0.5 * (PI * t / ramp).cos()
                } else if t > on - ramp {
                    0.5 - 0.5 * (PI * (on - t) / ramp).cos()
                } else {
                    1.0
                };
                *s *= g;
            }
        }
        x
    }
}

fn speech_shaped_noise(len: usize, fs: f64, seed: u64) -> Vec<f64> {
    let n = len.next_power_of_two();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SALT_DRY);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (bin, z) in buf.iter_mut().enumerate() {
        let b = bin.min(n - bin);
        let f = b as f64 * fs / n as f64;
        *z *= if f <= 500.0 { 1.0 } else { 500.0 / f };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out: Vec<f64> = buf[..len].iter().map(|z| z.re).collect();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    out.into_iter().map(|x| 0.1 * x / rms).collect()
}

/// Sidecar written next to simulated recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSidecar {
    /// `None` encodes an anechoic (infinite) ground truth.
    pub ground_truth_drr_db: Option<f64>,
    pub doa: SidecarDoa,
    pub scene_hash: String,
    pub num_images: usize,
    pub scene: RoomScene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarDoa {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl SimulationSidecar {
    pub fn new(scene: &RoomScene, images: &ImageList) -> Result<Self> {
        let truth = ground_truth_drr(images)?;
        let dir = scene.source_direction();
        Ok(Self {
            ground_truth_drr_db: truth.is_finite().then_some(truth),
            doa: SidecarDoa {
                theta_deg: dir.theta_deg(),
                phi_deg: dir.phi_deg(),
            },
            scene_hash: scene.hash(),
            num_images: images.entries.len(),
            scene: scene.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{builtin_eigenmike_geometry, Encoder, Regularization};

    fn small_scene() -> RoomScene {
        let mut s = RoomScene::shoebox(0.4, 1.0, 30.0, 7);
        s.max_image_order = 2;
        s
    }

    #[test]
    fn image_counts_follow_enumeration() {
        // brute-force count of lattice points with sum |l-p| + |l| <= N
        for n in 0..=3 {
            let mut s = small_scene();
            s.max_image_order = n;
            let mut count = 0;
            let n = n as i64;
            for lx in -n..=n {
                for ly in -n..=n {
                    for lz in -n..=n {
                        for p in 0..8 {
                            let ord: i64 = [lx, ly, lz]
                                .iter()
                                .enumerate()
                                .map(|(a, &l)| (l - ((p >> a) & 1) as i64).abs() + l.abs())
                                .sum();
                            if ord <= n {
                                count += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(image_sources(&s).unwrap().entries.len(), count);
        }
        let mut s = small_scene();
        s.max_image_order = 2;
        assert_eq!(image_sources(&s).unwrap().entries.len(), 25);
    }

    #[test]
    fn direct_path_only_at_order_zero() {
        let mut s = small_scene();
        s.max_image_order = 0;
        let im = image_sources(&s).unwrap();
        assert_eq!(im.entries.len(), 1);
        assert!((im.direct().amplitude - 1.0 / s.source_distance()).abs() < 1e-12);
        assert!(ground_truth_drr(&im).unwrap().is_infinite());
        assert!(ground_truth_drr(&ImageList { entries: vec![] }).is_err());
    }

    #[test]
    fn inverse_distance_law() {
        let a = image_sources(&RoomScene::shoebox(0.4, 1.0, 0.0, 1)).unwrap();
        let b = image_sources(&RoomScene::shoebox(0.4, 2.0, 0.0, 1)).unwrap();
        assert!((a.direct().amplitude / b.direct().amplitude - 2.0).abs() < 1e-12);
    }

    #[test]
    fn direct_path_is_first_and_points_at_source() {
        let s = RoomScene::shoebox(0.3, 1.5, 120.0, 1);
        let im = image_sources(&s).unwrap();
        assert_eq!(im.direct().order, 0);
        assert!(crate::direction::angle_between(&im.direct().direction, &s.source_direction()) < 1e-12);
        assert!(im.entries.windows(2).all(|w| w[0].delay_s <= w[1].delay_s));
    }

    #[test]
    fn ground_truth_window() {
        let mk = |delay_s, amplitude| ImageSource {
            delay_s,
            amplitude,
            direction: Direction::new(0.0, 0.0),
            order: 0,
        };
        let im = ImageList {
            entries: vec![mk(0.003, 1.0), mk(0.010, 1.0)],
        };
        assert!(ground_truth_drr(&im).unwrap().abs() < 1e-12);
        let im = ImageList {
            entries: vec![mk(0.003, 1.0), mk(0.0049, 1.0), mk(0.010, 1.0)],
        };
        assert!((ground_truth_drr(&im).unwrap() - 10.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_monotone_in_absorption() {
        let mut prev = f64::INFINITY;
        for a in [0.9, 0.7, 0.5, 0.3, 0.15] {
            let mut s = RoomScene::shoebox(a, 1.5, 45.0, 1);
            s.max_image_order = 6;
            let d = ground_truth_drr(&image_sources(&s).unwrap()).unwrap();
            assert!(d < prev, "absorption {a}: {d} !< {prev}");
            prev = d;
        }
    }

    #[test]
    fn doubling_distance_drops_drr() {
        let mut near = RoomScene::shoebox(0.3, 1.0, 10.0, 1);
        let mut far = RoomScene::shoebox(0.3, 2.0, 10.0, 1);
        near.max_image_order = 8;
        far.max_image_order = 8;
        let im_near = image_sources(&near).unwrap();
        let im_far = image_sources(&far).unwrap();
        let d_near = ground_truth_drr(&im_near).unwrap();
        let d_far = ground_truth_drr(&im_far).unwrap();
        // 6 dB from the direct path, corrected by the reverberant change
        let rev = |im: &ImageList| im.total_energy() - im.direct().amplitude.powi(2);
        let expect = 20.0 * 2f64.log10() + 10.0 * (rev(&im_far) / rev(&im_near)).log10();
        assert!((d_near - d_far - expect).abs() < 1e-9);
    }

    #[test]
    fn energy_histogram_keeps_every_arrival() {
        let mut s = RoomScene::shoebox(0.2, 1.5, 70.0, 1);
        s.max_image_order = 7;
        let im = image_sources(&s).unwrap();
        let h: f64 = im.energy_histogram(0.001).iter().sum();
        assert!((h - im.total_energy()).abs() <= 1e-9 * im.total_energy());
    }

    #[test]
    fn invalid_scenes_are_rejected() {
        let mut s = small_scene();
        s.source_pos_m[0] = 6.0;
        assert!(s.validate().is_err());
        let mut s = small_scene();
        s.absorption[3] = 0.0;
        assert!(s.validate().is_err());
        let mut s = small_scene();
        s.source_pos_m = s.array_pos_m;
        assert!(matches!(image_sources(&s), Err(Error::Geometry(_))));
    }

    #[test]
    fn antipodal_parity_and_isotropic_order_zero() {
        let d = Direction::from_degrees(40.0, 100.0);
        let a = plane_wave_alpha(&d, Complex64::new(1.0, 0.0), Wavenumber(10.0), 4);
        let b = plane_wave_alpha(&d.antipode(), Complex64::new(1.0, 0.0), Wavenumber(10.0), 4);
        for (i, (x, y)) in a.coeffs.iter().zip(&b.coeffs).enumerate() {
            let n = sh::ModeOrder::from_flat(i).n;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            assert!((x * sign - y).norm() < 1e-12);
        }
        assert!((a.coeffs[0].norm() - b.coeffs[0].norm()).abs() < 1e-15);
    }

    #[test]
    fn legendre_series_matches_sh_synthesis() {
        let g = builtin_eigenmike_geometry();
        let d = Direction::from_degrees(75.0, 15.0);
        let k = Wavenumber(30.0);
        let full = plane_wave_capsule_pressures(&d, k, &g).unwrap();
        let frame = plane_wave_alpha(&d, Complex64::new(1.0, 0.0), k, 8);
        let truncated = g.pressures_from_frame(&frame).unwrap();
        for (a, b) in full.iter().zip(&truncated) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn impulse_response_spectrum_matches_image_sum() {
        let g = builtin_eigenmike_geometry();
        let s = small_scene();
        let images = image_sources(&s).unwrap();
        let irs = capsule_impulse_responses(&s, &images, &g).unwrap();
        let len = irs[0].len();
        for f_hz in [150.0, 1200.0, 3000.0] {
            let bin = (f_hz * len as f64 / s.sample_rate_hz).round() as usize;
            let f = bin as f64 * s.sample_rate_hz / len as f64;
            let omega = 2.0 * PI * f;
            let k = Wavenumber(omega / s.sound_speed_m_s);
            let mut want = vec![Complex64::new(0.0, 0.0); g.num_capsules()];
            for img in &images.entries {
                let a = Complex64::from_polar(img.amplitude, -omega * img.delay_s);
                let frame = plane_wave_alpha(&img.direction, a, k, 12);
                for (w, p) in want.iter_mut().zip(g.pressures_from_frame(&frame).unwrap()) {
                    *w += p * band_taper(f, s.synth_band_hz);
                }
            }
            for (q, ir) in irs.iter().enumerate().step_by(7) {
                let got: Complex64 = ir
                    .iter()
                    .enumerate()
                    .map(|(t, &h)| h * Complex64::from_polar(1.0, -2.0 * PI * (bin * t % len) as f64 / len as f64))
                    .sum();
                let scale = want.iter().map(|w| w.norm()).fold(0.0, f64::max);
                assert!(
                    (got - want[q]).norm() < 1e-6 * scale,
                    "bin {bin} capsule {q}: {got} vs {}",
                    want[q]
                );
            }
        }
    }

    #[test]
    fn encode_recovers_plane_wave_at_kr_1_5() {
        let g = builtin_eigenmike_geometry();
        let k = Wavenumber(1.5 / g.radius_m);
        let d = Direction::from_degrees(90.0, 0.0);
        let frame = plane_wave_alpha(&d, Complex64::new(1.0, 0.0), k, 4);
        let p = g.pressures_from_frame(&frame).unwrap();
        let enc = Encoder::new(&g, 4, Regularization::None).unwrap();
        let back = enc.encode(&p, k, 0).unwrap();
        for i in 0..16 {
            let rel = (back.coeffs[i] - frame.coeffs[i]).norm() / frame.coeffs[i].norm().max(1e-300);
            if frame.coeffs[i].norm() > 1e-9 {
                assert!(rel < 1e-3, "coeff {i}: {rel}");
            }
        }
    }

    #[test]
    fn silent_noiseless_scene_is_silent() {
        let mut s = small_scene();
        s.noise = NoiseSpec::none();
        let rec = synth_recording(&s, &vec![0.0; 4000], &builtin_eigenmike_geometry()).unwrap();
        assert_eq!(rec.num_channels(), 32);
        assert!(rec.channels.iter().flatten().all(|&x| x == 0.0));
        assert!(synth_recording(&s, &[], &builtin_eigenmike_geometry()).is_err());
    }

    #[test]
    fn burst_train_duty_cycle() {
        let x = DrySignal::BurstTrain {
            period_s: 0.5,
            duty: 0.4,
        }
        .generate(48_000, 48_000.0, 3);
        let zeros = x.iter().filter(|&&v| v == 0.0).count();
        assert!((zeros as f64 / x.len() as f64 - 0.6).abs() < 0.01);
    }

    #[test]
    fn scene_json_round_trip_and_hash() {
        let s = RoomScene::shoebox(0.35, 2.0, 200.0, 99);
        let json = serde_json::to_string(&s).unwrap();
        let back: RoomScene = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        let mut t = s.clone();
        t.seed += 1;
        assert_ne!(t.hash(), s.hash());
    }
}
