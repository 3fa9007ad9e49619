//! Coherence-based DRR estimation from coincident pressure and particle
//! velocity.
//!
//! Under the plane-wave model with an isotropic late field the
//! magnitude-squared coherence between `P` and the velocity aimed at
//! `ϑ₀` from the direct path is
//!
//! ```text
//! MSC = D² cos²ϑ₀ / ((1 + D)(0.5 + D cos²ϑ₀))
//! ```
//!
//! and [`drr_from_coherence`] is its closed-form positive root, fed with
//! the magnitude coherence `γ = √MSC`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::ShFrame;
use crate::direction::{angle_between, Direction};
use crate::error::{Error, Result};
use crate::velocity::{pressure_origin, velocity_xyz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensities {
    pub s_pp: f64,
    pub s_vv: f64,
    pub s_pv: Complex64,
    pub count: usize,
}

const CHUNK: usize = 256;

/// Sample auto and cross densities of two aligned sequences.
pub fn spectral_densities(p: &[Complex64], v: &[Complex64]) -> Result<SpectralDensities> {
    if p.is_empty() {
        return Err(Error::EmptyInput("spectral_densities"));
    }
    if p.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: v.len(),
        });
    }
    let (mut s_pp, mut s_vv, mut s_pv) = (0.0, 0.0, Complex64::new(0.0, 0.0));
    for (pc, vc) in p.chunks(CHUNK).zip(v.chunks(CHUNK)) {
        let (mut a, mut b, mut c) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for (x, y) in pc.iter().zip(vc) {
            a += x.norm_sqr();
            b += y.norm_sqr();
            c += x * y.conj();
        }
        s_pp += a;
        s_vv += b;
        s_pv += c;
    }
    let n = p.len() as f64;
    Ok(SpectralDensities {
        s_pp: s_pp / n,
        s_vv: s_vv / n,
        s_pv: s_pv / n,
        count: p.len(),
    })
}

/// `|S_PV|² / (S_PP S_VV)`, clipped to `[0, 1]`.
pub fn coherence_msc(s: &SpectralDensities) -> Result<f64> {
    if !(s.s_pp > 0.0) || !(s.s_vv > 0.0) {
        return Err(Error::domain(
            "coherence_msc",
            format!("auto densities must be positive (s_pp = {}, s_vv = {})", s.s_pp, s.s_vv),
        ));
    }
    Ok((s.s_pv.norm_sqr() / (s.s_pp * s.s_vv)).clamp(0.0, 1.0))
}

/// Which coherence value is substituted for `γ` in the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaConvention {
    /// `γ = √MSC`, consistent with the model densities.
    #[default]
    Magnitude,
    /// `γ = MSC`; kept only for comparison.
    Msc,
}

impl GammaConvention {
    pub fn gamma(&self, msc: f64) -> f64 {
        match self {
            GammaConvention::Magnitude => msc.sqrt(),
            GammaConvention::Msc => msc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub cos_min: f64,
    pub max_drr_db: f64,
    pub min_drr_db: f64,
}

impl Default for ClosedForm {
    fn default() -> Self {
        Self {
            cos_min: 0.2,
            max_drr_db: 30.0,
            min_drr_db: -30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrrFlag {
    ClampedHigh,
    ClampedLow,
    LowCount,
    DirectionDropped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormValue {
    pub drr_linear: f64,
    pub clamped_high: bool,
    pub clamped_low: bool,
}

impl ClosedForm {
    /// Positive root of the coherence relation for magnitude coherence
    /// `gamma` and angle `theta0` between the direct path and the
    /// velocity direction.
    pub fn solve(&self, gamma: f64, theta0: f64) -> Result<ClosedFormValue> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(
                "drr_from_coherence",
                format!("gamma {gamma} outside [0, 1]"),
            ));
        }
        let cos = theta0.cos();
        if cos.abs() < self.cos_min {
            return Err(Error::NearDipoleNull {
                cos_theta0: cos.abs(),
                cos_min: self.cos_min,
            });
        }
        let max = 10f64.powf(self.max_drr_db / 10.0);
        let min = 10f64.powf(self.min_drr_db / 10.0);
        if gamma == 0.0 {
            return Ok(ClosedFormValue {
                drr_linear: 0.0,
                clamped_high: false,
                clamped_low: false,
            });
        }
        let c = cos * cos;
        let g2 = gamma * gamma;
        let d = if g2 >= 1.0 {
            f64::INFINITY
        } else {
            let den = 4.0 * c * (g2 - 1.0);
            let root = (c * c * g2 - c * g2 + 2.0 * c + 0.25 * g2).sqrt();
            (-(g2 + 2.0 * c * g2) / den - 2.0 * gamma * root / den).max(0.0)
        };
        Ok(if !(d <= max) {
            ClosedFormValue {
                drr_linear: max,
                clamped_high: true,
                clamped_low: false,
            }
        } else if d < min {
            ClosedFormValue {
                drr_linear: min,
                clamped_high: false,
                clamped_low: true,
            }
        } else {
            ClosedFormValue {
                drr_linear: d,
                clamped_high: false,
                clamped_low: false,
            }
        })
    }
}

/// Closed-form DRR (linear) with the default limits.
pub fn drr_from_coherence(gamma_mag: f64, theta0: f64) -> Result<f64> {
    ClosedForm::default().solve(gamma_mag, theta0).map(|v| v.drr_linear)
}

/// Velocity steering directions around the DOA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetScheme {
    /// `(θ ± δ, φ)` and `(θ, φ ± δ)`.
    Cross { offset_deg: f64 },
    /// Velocity aimed at the direct path only.
    OnAxis,
    /// `count` directions at great-circle angle `offset_deg`, equally
    /// spaced around the DOA.
    Ring { count: usize, offset_deg: f64 },
}

impl Default for OffsetScheme {
    fn default() -> Self {
        OffsetScheme::Cross { offset_deg: 60.0 }
    }
}

impl OffsetScheme {
    pub fn directions(&self, doa: &Direction) -> Vec<Direction> {
        match *self {
            OffsetScheme::OnAxis => vec![*doa],
            OffsetScheme::Cross { offset_deg } => {
                let d = offset_deg.to_radians();
                // Direction::new folds colatitudes past a pole
                vec![
                    Direction::new(doa.theta + d, doa.phi),
                    Direction::new(doa.theta - d, doa.phi),
                    Direction::new(doa.theta, doa.phi + d),
                    Direction::new(doa.theta, doa.phi - d),
                ]
            }
            OffsetScheme::Ring { count, offset_deg } => {
                let u = doa.unit_vector();
                // orthonormal frame around the DOA
                let e1 = Direction::new(doa.theta + std::f64::consts::FRAC_PI_2, doa.phi).unit_vector();
                let e2 = cross(u, e1);
                let (s, c) = offset_deg.to_radians().sin_cos();
                (0..count)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                        let v: [f64; 3] = std::array::from_fn(|k| c * u[k] + s * (a.cos() * e1[k] + a.sin() * e2[k]));
                        Direction::from_vector(v)
                    })
                    .collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OffsetScheme::OnAxis => Ok(()),
            OffsetScheme::Cross { offset_deg } | OffsetScheme::Ring { offset_deg, .. }
                if !(offset_deg > 0.0 && offset_deg < 90.0) =>
            {
                Err(Error::config(
                    "drr.offsets.offset_deg",
                    format!("must lie in (0, 90), got {offset_deg}"),
                ))
            }
            OffsetScheme::Ring { count: 0, .. } => Err(Error::config("drr.offsets.count", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AveragingDomain {
    #[default]
    Db,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrrConfig {
    #[serde(default)]
    pub offsets: OffsetScheme,
    #[serde(default)]
    pub limits: ClosedForm,
    #[serde(default)]
    pub gamma: GammaConvention,
    #[serde(default)]
    pub fullband_averaging: AveragingDomain,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
}

fn default_min_count() -> usize {
    50
}

impl Default for DrrConfig {
    fn default() -> Self {
        Self {
            offsets: OffsetScheme::default(),
            limits: ClosedForm::default(),
            gamma: GammaConvention::default(),
            fullband_averaging: AveragingDomain::default(),
            min_count: default_min_count(),
        }
    }
}

impl DrrConfig {
    pub fn validate(&self) -> Result<()> {
        self.offsets.validate()?;
        let l = &self.limits;
        if !(l.cos_min >= 0.0 && l.cos_min < 1.0) {
            return Err(Error::config(
                "drr.limits.cos_min",
                format!("must lie in [0, 1), got {}", l.cos_min),
            ));
        }
        if !(l.max_drr_db.is_finite() && l.min_drr_db.is_finite() && l.min_drr_db < l.max_drr_db) {
            return Err(Error::config(
                "drr.limits.max_drr_db",
                format!(
                    "need finite min_drr_db < max_drr_db, got {} / {}",
                    l.min_drr_db, l.max_drr_db
                ),
            ));
        }
        if self.min_count == 0 {
            return Err(Error::config("drr.min_count", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub theta0_deg: f64,
    pub gamma_msc: f64,
    /// `None` when the direction was dropped.
    pub drr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrrEstimate {
    pub band_center_hz: f64,
    pub drr_linear: f64,
    pub drr_db: f64,
    /// Mean MSC over the directions that entered the average.
    pub gamma_msc: f64,
    pub theta0_rad: Vec<f64>,
    pub directions: Vec<DirectionResult>,
    pub flags: BTreeSet<DrrFlag>,
    pub count: usize,
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Spatially averaged DRR of one band from frames already restricted to
/// the band's bins and active frames.
pub fn subband_drr(frames: &[ShFrame], doa: &Direction, band_center_hz: f64, cfg: &DrrConfig) -> Result<DrrEstimate> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("subband_drr"));
    }
    let p: Vec<Complex64> = frames.iter().map(pressure_origin).collect();
    let v: Vec<_> = frames.iter().map(velocity_xyz).collect();
    let mut flags = BTreeSet::new();
    let mut results = Vec::new();
    let mut used = Vec::new();
    let mut theta0s = Vec::new();
    for dir in cfg.offsets.directions(doa) {
        let theta0 = angle_between(doa, &dir);
        let vd: Vec<Complex64> = v.iter().map(|t| t.along(&dir)).collect();
        let outcome = spectral_densities(&p, &vd)
            .and_then(|s| coherence_msc(&s))
            .and_then(|msc| Ok((msc, cfg.limits.solve(cfg.gamma.gamma(msc), theta0)?)));
        let mut r = DirectionResult {
            theta_deg: dir.theta_deg(),
            phi_deg: dir.phi_deg(),
            theta0_deg: theta0.to_degrees(),
            gamma_msc: f64::NAN,
            drr_db: None,
            error: None,
        };
        match outcome {
            Ok((msc, val)) => {
                r.gamma_msc = msc;
                r.drr_db = Some(to_db(val.drr_linear));
                if val.clamped_high {
                    flags.insert(DrrFlag::ClampedHigh);
                }
                if val.clamped_low {
                    flags.insert(DrrFlag::ClampedLow);
                }
                used.push((msc, val.drr_linear));
                theta0s.push(theta0);
            }
            Err(e) => {
                flags.insert(DrrFlag::DirectionDropped);
                r.error = Some(e.to_string());
            }
        }
        results.push(r);
    }
    if used.is_empty() {
        return Err(Error::NoUsableDirection);
    }
    if frames.len() < cfg.min_count {
        flags.insert(DrrFlag::LowCount);
    }
    let k = used.len() as f64;
    let drr_linear = used.iter().map(|u| u.1).sum::<f64>() / k;
    let gamma_msc = used.iter().map(|u| u.0).sum::<f64>() / k;
    Ok(DrrEstimate {
        band_center_hz,
        drr_linear,
        drr_db: to_db(drr_linear),
        gamma_msc,
        theta0_rad: theta0s,
        directions: results,
        flags,
        count: frames.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullbandDrr {
    pub drr_db: f64,
    pub bands_used: usize,
    pub averaging: AveragingDomain,
}

/// Average of the subband estimates.
pub fn fullband_drr(estimates: &[DrrEstimate], domain: AveragingDomain) -> Result<FullbandDrr> {
    let usable: Vec<f64> = estimates.iter().map(|e| e.drr_db).filter(|d| d.is_finite()).collect();
    if usable.is_empty() {
        return Err(Error::NoUsableBand);
    }
    let n = usable.len() as f64;
    let drr_db = match domain {
        AveragingDomain::Db => usable.iter().sum::<f64>() / n,
        AveragingDomain::Linear => to_db(usable.iter().map(|d| 10f64.powf(d / 10.0)).sum::<f64>() / n),
    };
    Ok(FullbandDrr {
        drr_db,
        bands_used: usable.len(),
        averaging: domain,
    })
}
