//! Rigid-sphere array geometry and spherical-harmonic encoding of capsule
//! pressures.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::sh::{self, num_coeffs, Wavenumber};

/// Capsule count of the supported array family.
pub const NUM_CAPSULES: usize = 32;

/// Highest order the 32-capsule layout can resolve: `(N+1)² = 25 <= 32`.
pub const MAX_ENCODE_ORDER: usize = 4;

/// Radius of the built-in array preset, meters.
pub const EIGENMIKE_RADIUS_M: f64 = 0.042;

/// Default cap on the white-noise gain of the mode-strength inversion.
pub const DEFAULT_MAX_WNG_DB: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub radius_m: f64,
    pub capsules: Vec<Direction>,
    /// Quadrature weights in steradians.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CapsuleRecord {
    theta_deg: f64,
    phi_deg: f64,
    weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeometryFile {
    radius_m: f64,
    capsules: Vec<CapsuleRecord>,
}

impl ArrayGeometry {
    pub fn new(radius_m: f64, capsules: Vec<Direction>, weights: Vec<f64>) -> Result<Self> {
        let g = Self {
            radius_m,
            capsules,
            weights,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(Error::Geometry(format!(
                "radius must be positive, got {}",
                self.radius_m
            )));
        }
        if self.capsules.len() != NUM_CAPSULES {
            return Err(Error::Geometry(format!(
                "expected {NUM_CAPSULES} capsules, got {}",
                self.capsules.len()
            )));
        }
        if self.weights.len() != self.capsules.len() {
            return Err(Error::Geometry(format!(
                "{} weights for {} capsules",
                self.weights.len(),
                self.capsules.len()
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 4.0 * PI).abs() > 1e-6 {
            return Err(Error::Geometry(format!("weights must sum to 4π, got {total}")));
        }
        Ok(())
    }

    pub fn num_capsules(&self) -> usize {
        self.capsules.len()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GeometryFile = serde_json::from_str(s)?;
        let capsules = file
            .capsules
            .iter()
            .map(|c| Direction::from_degrees(c.theta_deg, c.phi_deg))
            .collect();
        let weights = file.capsules.iter().map(|c| c.weight).collect();
        Self::new(file.radius_m, capsules, weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = GeometryFile {
            radius_m: self.radius_m,
            capsules: self
                .capsules
                .iter()
                .zip(&self.weights)
                .map(|(d, &w)| CapsuleRecord {
                    theta_deg: d.theta_deg(),
                    phi_deg: d.phi_deg(),
                    weight: w,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("geometry serializes")
    }

    /// Same capsule layout with uniform `4π/32` weights.
    pub fn eigenmike_uniform() -> Self {
        let mut g = builtin_eigenmike_geometry();
        g.weights = vec![4.0 * PI / NUM_CAPSULES as f64; NUM_CAPSULES];
        g
    }

    /// Pressures on the capsules produced by an incident field whose
    /// coefficients are `frame`, `P_i = Σ α_nm b_n(kR) Y_nm(Ω_i)`.
    pub fn pressures_from_frame(&self, frame: &ShFrame) -> Result<Vec<Complex64>> {
        let order = frame.max_order();
        let b = sh::mode_strengths(order, frame.k.0 * self.radius_m)?;
        Ok(self
            .capsules
            .iter()
            .map(|dir| {
                let y = sh::sh_vector(order, dir);
                frame
                    .coeffs
                    .iter()
                    .zip(&y)
                    .enumerate()
                    .map(|(i, (a, y))| a * b[sh::ModeOrder::from_flat(i).n] * y)
                    .sum()
            })
            .collect())
    }
}

/// The 32-capsule rigid-sphere layout of the Eigenmike em32.
///
/// Capsules sit at the vertices of a pentakis dodecahedron (12 icosahedron
/// vertices plus 20 dodecahedron vertices), channel order as in the device
/// documentation. The published coordinates are these directions rounded to
/// whole degrees. Weights are the two-orbit cubature `4π/32 · 20/21` on the
/// icosahedral capsules and `4π/32 · 36/35` on the dodecahedral ones, which
/// integrates every harmonic product up to order 4 exactly.
pub fn builtin_eigenmike_geometry() -> ArrayGeometry {
    const G: f64 = 1.618_033_988_749_895;
    const I: f64 = 1.0 / G;
    const RAW: [[f64; 3]; NUM_CAPSULES] = [
        [G, 0.0, I],
        [G, 1.0, 0.0],
        [G, 0.0, -I],
        [G, -1.0, 0.0],
        [1.0, 0.0, G],
        [1.0, 1.0, 1.0],
        [I, G, 0.0],
        [1.0, 1.0, -1.0],
        [1.0, 0.0, -G],
        [1.0, -1.0, -1.0],
        [I, -G, 0.0],
        [1.0, -1.0, 1.0],
        [0.0, I, G],
        [0.0, G, 1.0],
        [0.0, G, -1.0],
        [0.0, I, -G],
        [-G, 0.0, I],
        [-G, -1.0, 0.0],
        [-G, 0.0, -I],
        [-G, 1.0, 0.0],
        [-1.0, 0.0, G],
        [-1.0, -1.0, 1.0],
        [-I, -G, 0.0],
        [-1.0, -1.0, -1.0],
        [-1.0, 0.0, -G],
        [-1.0, 1.0, -1.0],
        [-I, G, 0.0],
        [-1.0, 1.0, 1.0],
        [0.0, -I, G],
        [0.0, -G, 1.0],
        [0.0, -G, -1.0],
        [0.0, -I, -G],
    ];
    let base = 4.0 * PI / NUM_CAPSULES as f64;
    let mut capsules = Vec::with_capacity(NUM_CAPSULES);
    let mut weights = Vec::with_capacity(NUM_CAPSULES);
    for v in RAW {
        // icosahedron vertices are the ones with a zero coordinate and a unit one
        let icosahedral = v.contains(&0.0) && v.iter().any(|&c| c.abs() == 1.0);
        capsules.push(Direction::from_vector(v));
        weights.push(if icosahedral {
            base * 20.0 / 21.0
        } else {
            base * 36.0 / 35.0
        });
    }
    ArrayGeometry {
        radius_m: EIGENMIKE_RADIUS_M,
        capsules,
        weights,
    }
}

/// Spherical-harmonic coefficients of one (frame, bin) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShFrame {
    /// `α_nm` in flat-index order `n² + n + m`.
    pub coeffs: Vec<Complex64>,
    pub k: Wavenumber,
    pub frame_index: usize,
    /// Bit `i` set when coefficient `i` was gain-limited by regularization.
    pub suppressed: u32,
}

impl ShFrame {
    pub fn zeros(max_order: usize, k: Wavenumber, frame_index: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); num_coeffs(max_order)],
            k,
            frame_index,
            suppressed: 0,
        }
    }

    pub fn max_order(&self) -> usize {
        ((self.coeffs.len() as f64).sqrt() as usize).saturating_sub(1)
    }

    pub fn coeff(&self, n: usize, m: i64) -> Complex64 {
        self.coeffs[((n * n + n) as i64 + m) as usize]
    }

    pub fn is_suppressed(&self, index: usize) -> bool {
        self.suppressed & (1 << index) != 0
    }

    pub fn scaled(&self, g: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * g).collect(),
            ..self.clone()
        }
    }
}

/// Complex capsule pressures laid out as `[frame][bin][capsule]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapsuleSpectra {
    pub frames: usize,
    pub bins: usize,
    pub capsules: usize,
    pub data: Vec<Complex64>,
}

impl CapsuleSpectra {
    pub fn new(frames: usize, bins: usize, capsules: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != frames * bins * capsules {
            return Err(Error::LengthMismatch {
                expected: frames * bins * capsules,
                got: data.len(),
            });
        }
        Ok(Self {
            frames,
            bins,
            capsules,
            data,
        })
    }

    pub fn cell(&self, frame: usize, bin: usize) -> &[Complex64] {
        let start = (frame * self.bins + bin) * self.capsules;
        &self.data[start..start + self.capsules]
    }
}

/// Treatment of `1 / b_n(kR)` in the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    /// Exact inversion.
    None,
    /// Soft-knee gain limit `b* / (|b|² + λ²)`; peak gain is `1 / 2λ`.
    SoftKnee { lambda: f64 },
}

impl Regularization {
    /// Soft knee whose peak gain equals `max_wng_db`.
    pub fn from_max_wng_db(max_wng_db: f64) -> Self {
        let peak = 10f64.powf(max_wng_db / 20.0);
        Regularization::SoftKnee { lambda: 0.5 / peak }
    }

    /// Returns the inverse gain and whether it was limited.
    pub fn invert(&self, b: Complex64) -> (Complex64, bool) {
        match *self {
            Regularization::None => (b.inv(), false),
            Regularization::SoftKnee { lambda } => {
                let l2 = lambda * lambda;
                let p = b.norm_sqr();
                (b.conj() / (p + l2), p < l2)
            }
        }
    }
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::from_max_wng_db(DEFAULT_MAX_WNG_DB)
    }
}

/// Discrete spherical-harmonic transform for a fixed geometry and order.
///
/// Holds the weighted conjugate harmonics `W_i Y*_nm(Ω_i)` so repeated
/// bins only cost one small matrix-vector product.
#[derive(Debug, Clone)]
pub struct Encoder {
    geometry: ArrayGeometry,
    max_order: usize,
    regularization: Regularization,
    /// `[coeff][capsule]`
    analysis: Vec<Complex64>,
}

/// Per-wavenumber inverse mode strengths, reused across frames.
#[derive(Debug, Clone)]
pub struct InverseModeStrength {
    pub k: Wavenumber,
    gains: Vec<Complex64>,
    suppressed: u32,
}

impl Encoder {
    pub fn new(geometry: &ArrayGeometry, max_order: usize, regularization: Regularization) -> Result<Self> {
        geometry.validate()?;
        if max_order > MAX_ENCODE_ORDER {
            return Err(Error::InvalidArgument(format!(
                "max_order {max_order} exceeds {MAX_ENCODE_ORDER}"
            )));
        }
        let nc = num_coeffs(max_order);
        let mut analysis = vec![Complex64::new(0.0, 0.0); nc * geometry.num_capsules()];
        for (i, (dir, &w)) in geometry.capsules.iter().zip(&geometry.weights).enumerate() {
            let y = sh::sh_vector(max_order, dir);
            for (c, yc) in y.iter().enumerate() {
                analysis[c * geometry.num_capsules() + i] = yc.conj() * w;
            }
        }
        Ok(Self {
            geometry: geometry.clone(),
            max_order,
            regularization,
            analysis,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn inverse_mode_strength(&self, k: Wavenumber) -> Result<InverseModeStrength> {
        if !(k.0 > 0.0) {
            return Err(Error::domain(
                "encode",
                format!("wavenumber must be positive, got {}", k.0),
            ));
        }
        let b = sh::mode_strengths(self.max_order, k.0 * self.geometry.radius_m)?;
        let mut gains = Vec::with_capacity(num_coeffs(self.max_order));
        let mut suppressed = 0u32;
        for (i, order) in sh::ModeOrder::iter(self.max_order).enumerate() {
            let (g, limited) = self.regularization.invert(b[order.n]);
            if limited {
                suppressed |= 1 << i;
            }
            gains.push(g);
        }
        Ok(InverseModeStrength { k, gains, suppressed })
    }

    /// Encodes one bin using precomputed inverse mode strengths.
    pub fn encode_with(
        &self,
        pressures: &[Complex64],
        inverse: &InverseModeStrength,
        frame_index: usize,
    ) -> Result<ShFrame> {
        let nq = self.geometry.num_capsules();
        if pressures.len() != nq {
            return Err(Error::LengthMismatch {
                expected: nq,
                got: pressures.len(),
            });
        }
        let coeffs = self
            .analysis
            .chunks_exact(nq)
            .zip(&inverse.gains)
            .map(|(row, g)| row.iter().zip(pressures).map(|(a, p)| a * p).sum::<Complex64>() * g)
            .collect();
        Ok(ShFrame {
            coeffs,
            k: inverse.k,
            frame_index,
            suppressed: inverse.suppressed,
        })
    }

    pub fn encode(&self, pressures: &[Complex64], k: Wavenumber, frame_index: usize) -> Result<ShFrame> {
        let inv = self.inverse_mode_strength(k)?;
        self.encode_with(pressures, &inv, frame_index)
    }
}

/// One-shot encoding with the default regularization.
pub fn encode(capsule_bin: &[Complex64], geometry: &ArrayGeometry, k: Wavenumber, max_order: usize) -> Result<ShFrame> {
    Encoder::new(geometry, max_order, Regularization::default())?.encode(capsule_bin, k, 0)
}

/// Largest `|Σ W_i Y_nm Y*_n'm' - δ|` over all pairs up to `max_order`.
pub fn discrete_orthonormality_error(geometry: &ArrayGeometry, max_order: usize) -> f64 {
    let ys: Vec<Vec<Complex64>> = geometry.capsules.iter().map(|d| sh::sh_vector(max_order, d)).collect();
    let nc = num_coeffs(max_order);
    let mut worst: f64 = 0.0;
    for a in 0..nc {
        for b in 0..nc {
            let g: Complex64 = ys
                .iter()
                .zip(&geometry.weights)
                .map(|(y, &w)| y[a] * y[b].conj() * w)
                .sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng_pressures(seed: u64) -> Vec<Complex64> {
        // small LCG keeps this test free of the rand dependency chain
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..NUM_CAPSULES)
            .map(|_| {
                let mut next = || {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                };
                Complex64::new(next(), next())
            })
            .collect()
    }

    #[test]
    fn builtin_geometry_properties() {
        let g = builtin_eigenmike_geometry();
        g.validate().unwrap();
        assert_eq!(g.radius_m, 0.042);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        assert!(discrete_orthonormality_error(&g, 3) < 0.05);
        assert!(discrete_orthonormality_error(&g, 4) < 1e-12);
        let u = ArrayGeometry::eigenmike_uniform();
        assert!(discrete_orthonormality_error(&u, 3) < 0.05);
    }

    #[test]
    fn builtin_matches_published_degrees() {
        // em32 documentation, whole degrees
        let published: [(f64, f64); 8] = [
            (69.0, 0.0),
            (90.0, 32.0),
            (111.0, 0.0),
            (90.0, 328.0),
            (32.0, 0.0),
            (55.0, 45.0),
            (90.0, 69.0),
            (125.0, 45.0),
        ];
        let g = builtin_eigenmike_geometry();
        for (dir, &(t, p)) in g.capsules.iter().zip(&published) {
            let pd = Direction::from_degrees(t, p);
            assert!(crate::direction::angle_between(dir, &pd).to_degrees() < 0.75);
        }
    }

    #[test]
    fn geometry_json_round_trip() {
        let g = builtin_eigenmike_geometry();
        let back = ArrayGeometry::from_json_str(&g.to_json_string()).unwrap();
        for (a, b) in g.capsules.iter().zip(&back.capsules) {
            assert!(crate::direction::angle_between(a, b) < 1e-12);
        }
        assert_eq!(g.weights, back.weights);
    }

    #[test]
    fn geometry_validation_errors() {
        let mut g = builtin_eigenmike_geometry();
        g.weights[0] += 0.1;
        assert!(matches!(g.validate(), Err(Error::Geometry(_))));
        let mut g = builtin_eigenmike_geometry();
        g.capsules.pop();
        g.weights.pop();
        assert!(g.validate().is_err());
        assert!(ArrayGeometry::load(Path::new("/nonexistent/geometry.json")).is_err());
    }

    #[test]
    fn zero_pressures_encode_to_zero() {
        let g = builtin_eigenmike_geometry();
        let f = encode(&vec![Complex64::new(0.0, 0.0); 32], &g, Wavenumber(20.0), 4).unwrap();
        assert!(f.coeffs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn encode_scales_linearly() {
        let g = builtin_eigenmike_geometry();
        let enc = Encoder::new(&g, 4, Regularization::default()).unwrap();
        let p = rng_pressures(3);
        let gain = Complex64::new(-0.7, 2.1);
        let scaled: Vec<_> = p.iter().map(|x| x * gain).collect();
        let a = enc.encode(&p, Wavenumber(30.0), 0).unwrap();
        let b = enc.encode(&scaled, Wavenumber(30.0), 0).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x * gain - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn regularization_flags_low_orders_only_when_weak() {
        let g = builtin_eigenmike_geometry();
        let enc = Encoder::new(&g, 4, Regularization::default()).unwrap();
        // kR ≈ 0.153, the lowest band center
        let inv = enc
            .inverse_mode_strength(Wavenumber::from_frequency(199.5, 343.0))
            .unwrap();
        assert_eq!(inv.suppressed & 1, 0, "order 0 must not be limited");
        assert_ne!(inv.suppressed & (1 << 24), 0, "order 4 must be limited");
        let peak = inv.gains.iter().map(|g| g.norm()).fold(0.0, f64::max);
        assert!(peak <= 10.0 + 1e-9);
        assert!(enc.inverse_mode_strength(Wavenumber(0.0)).is_err());
    }

    #[test]
    fn encoder_rejects_bad_inputs() {
        let g = builtin_eigenmike_geometry();
        assert!(Encoder::new(&g, 5, Regularization::None).is_err());
        let enc = Encoder::new(&g, 2, Regularization::None).unwrap();
        assert!(enc.encode(&rng_pressures(1)[..31], Wavenumber(10.0), 0).is_err());
    }
}
