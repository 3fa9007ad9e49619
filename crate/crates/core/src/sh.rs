//! Spherical Bessel/Hankel functions, the rigid-sphere mode strength and
//! orthonormal complex spherical harmonics.
//!
//! Conventions used throughout the crate:
//!
//! * `Y_nm` is fully normalized, `∫ Y_nm Y*_n'm' dΩ = δ_nn' δ_mm'`, and
//!   includes the Condon–Shortley phase, so `Y_n,-m = (-1)^m Y*_nm`.
//! * Coefficient vectors are ordered by the flat index `n² + n + m`.
//! * Time dependence is `e^{+jωt}`; outgoing waves use `h_n^(2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};

/// Highest harmonic order the special-function routines are validated for.
pub const MAX_SUPPORTED_ORDER: usize = 8;

/// Number of coefficients of an order-`max_order` expansion, `(N+1)²`.
pub const fn num_coeffs(max_order: usize) -> usize {
    (max_order + 1) * (max_order + 1)
}

/// Order `n` and degree `m` of a spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeOrder {
    pub n: usize,
    pub m: i64,
}

impl ModeOrder {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(Error::InvalidArgument(format!("degree {m} out of range for order {n}")));
        }
        Ok(Self { n, m })
    }

    pub fn flat_index(&self) -> usize {
        ((self.n * self.n + self.n) as i64 + self.m) as usize
    }

    pub fn from_flat(index: usize) -> Self {
        let n = (index as f64).sqrt() as usize;
        // guard against sqrt rounding for perfect squares
        let n = if (n + 1) * (n + 1) <= index { n + 1 } else { n };
        let m = index as i64 - (n * n + n) as i64;
        Self { n, m }
    }

    /// All `(n, m)` pairs up to `max_order`, in flat-index order.
    pub fn iter(max_order: usize) -> impl Iterator<Item = ModeOrder> {
        (0..num_coeffs(max_order)).map(ModeOrder::from_flat)
    }
}

/// Acoustic wavenumber `k = 2πf/c` in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Wavenumber(pub f64);

impl Wavenumber {
    pub fn from_frequency(freq_hz: f64, sound_speed: f64) -> Self {
        Wavenumber(2.0 * PI * freq_hz / sound_speed)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn frequency(&self, sound_speed: f64) -> f64 {
        self.0 * sound_speed / (2.0 * PI)
    }
}

/// Spherical Bessel function of the first kind, `j_n(x)`.
///
/// Closed forms for `n <= 1`, upward recurrence when `x > n`, and
/// Miller-style downward recurrence (as a continued fraction of ratios, so
/// small arguments cannot overflow) otherwise.
pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "spherical_bessel_j requires x >= 0");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let j0 = j0(x);
    if n == 0 {
        return j0;
    }
    let j1 = j1(x);
    if n == 1 {
        return j1;
    }
    if x > n as f64 {
        let (mut prev, mut cur) = (j0, j1);
        for l in 1..n {
            let next = (2 * l + 1) as f64 / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    // r_l = j_l / j_{l-1} from r_l = x / (2l + 1 - x r_{l+1}), started far
    // above n where the ratio is negligible.
    let start = n + x.ceil() as usize + 40;
    let mut ratios = vec![0.0; n + 1];
    let mut r = 0.0;
    for l in (1..=start).rev() {
        r = x / ((2 * l + 1) as f64 - x * r);
        if l <= n {
            ratios[l] = r;
        }
    }
    if j1.abs() >= j0.abs() {
        ratios[2..=n].iter().fold(j1, |acc, r| acc * r)
    } else {
        ratios[1..=n].iter().fold(j0, |acc, r| acc * r)
    }
}

fn j0(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn j1(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        (x.sin() / x - x.cos()) / x
    }
}

/// Spherical Bessel function of the second kind, `y_n(x)`, for `x > 0`.
/// Upward recurrence is stable for this dominant solution.
pub fn spherical_bessel_y(n: usize, x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::domain(
            "spherical_bessel_y",
            format!("argument must be positive and finite, got {x}"),
        ));
    }
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    if n == 0 {
        return Ok(y0);
    }
    let y1 = -c / (x * x) - s / x;
    let (mut prev, mut cur) = (y0, y1);
    for l in 1..n {
        let next = (2 * l + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Spherical Hankel function of the second kind, `h_n^(2)(x) = j_n - i y_n`.
pub fn spherical_hankel2(n: usize, x: f64) -> Result<Complex64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::domain(
            "spherical_hankel2",
            format!("singular at x = {x}; argument must be positive"),
        ));
    }
    Ok(Complex64::new(spherical_bessel_j(n, x), -spherical_bessel_y(n, x)?))
}

/// Derivative `j'_n(x)` via `f'_n = f_{n-1} - (n+1)/x f_n` (`j'_0 = -j_1`).
pub fn spherical_bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        return -spherical_bessel_j(1, x);
    }
    if x == 0.0 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    spherical_bessel_j(n - 1, x) - (n + 1) as f64 / x * spherical_bessel_j(n, x)
}

/// Derivative `y'_n(x)`, same recurrence as [`spherical_bessel_j_prime`].
pub fn spherical_bessel_y_prime(n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Ok(-spherical_bessel_y(1, x)?);
    }
    Ok(spherical_bessel_y(n - 1, x)? - (n + 1) as f64 / x * spherical_bessel_y(n, x)?)
}

/// Derivative of the spherical Hankel function of the second kind.
pub fn spherical_hankel2_prime(n: usize, x: f64) -> Result<Complex64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::domain(
            "spherical_hankel2_prime",
            format!("singular at x = {x}; argument must be positive"),
        ));
    }
    Ok(Complex64::new(
        spherical_bessel_j_prime(n, x),
        -spherical_bessel_y_prime(n, x)?,
    ))
}

/// Rigid-sphere mode strength
/// `b_n(kR) = j_n(kR) - j'_n(kR) / h'^(2)_n(kR) · h^(2)_n(kR)`.
///
/// Evaluated through the Wronskian `j_n y'_n - j'_n y_n = 1/x²`, which
/// reduces the expression to `-i / (x² h'^(2)_n(x))` and avoids the
/// cancellation between the incident and scattered terms.
pub fn mode_strength(n: usize, kr: f64) -> Result<Complex64> {
    if kr <= 0.0 || !kr.is_finite() {
        return Err(Error::domain("mode_strength", format!("kR must be positive, got {kr}")));
    }
    let dh = spherical_hankel2_prime(n, kr)?;
    Ok(Complex64::new(0.0, -1.0) / (dh * kr * kr))
}

/// Mode strengths `b_0 .. b_max_order` at `kr`.
pub fn mode_strengths(max_order: usize, kr: f64) -> Result<Vec<Complex64>> {
    (0..=max_order).map(|n| mode_strength(n, kr)).collect()
}

/// Legendre polynomials `P_0(x) .. P_max_order(x)`.
pub fn legendre_polynomials(max_order: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(max_order + 1);
    p.push(1.0);
    if max_order >= 1 {
        p.push(x);
    }
    for l in 2..=max_order {
        let v = ((2 * l - 1) as f64 * x * p[l - 1] - (l - 1) as f64 * p[l - 2]) / l as f64;
        p.push(v);
    }
    p
}

/// Single orthonormal spherical harmonic `Y_nm(θ, φ)`.
pub fn spherical_harmonic(order: ModeOrder, dir: &Direction) -> Complex64 {
    sh_vector(order.n, dir)[order.flat_index()]
}

/// All harmonics up to `max_order` at `dir`, in flat-index order.
pub fn sh_vector(max_order: usize, dir: &Direction) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); num_coeffs(max_order)];
    let x = dir.theta.cos();
    let s = dir.theta.sin().abs();
    // Associated Legendre P_n^m(x) with the Condon–Shortley phase, m >= 0.
    let mut pmm = 1.0;
    for m in 0..=max_order {
        if m > 0 {
            pmm *= -((2 * m - 1) as f64) * s;
        }
        let phase = Complex64::from_polar(1.0, m as f64 * dir.phi);
        let mut p_prev2 = 0.0;
        let mut p_prev = pmm;
        for n in m..=max_order {
            let p = if n == m {
                pmm
            } else if n == m + 1 {
                x * (2 * m + 1) as f64 * pmm
            } else {
                ((2 * n - 1) as f64 * x * p_prev - (n + m - 1) as f64 * p_prev2) / (n - m) as f64
            };
            if n > m {
                p_prev2 = p_prev;
                p_prev = p;
            }
            let y = phase * (norm_factor(n, m) * p);
            out[n * n + n + m] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[n * n + n - m] = y.conj() * sign;
            }
        }
    }
    out
}

fn norm_factor(n: usize, m: usize) -> f64 {
    // (n-m)!/(n+m)! as a running product keeps it exact for small orders
    let ratio: f64 = ((n - m + 1)..=(n + m)).fold(1.0, |acc, k| acc / k as f64);
    ((2 * n + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_bijection() {
        for i in 0..num_coeffs(8) {
            let o = ModeOrder::from_flat(i);
            assert!(o.m.unsigned_abs() as usize <= o.n);
            assert_eq!(o.flat_index(), i);
        }
        assert!(ModeOrder::new(2, 3).is_err());
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(spherical_bessel_j(0, 0.0), 1.0);
        assert_eq!(spherical_bessel_j(1, 0.0), 0.0);
        assert!((spherical_bessel_j(0, 1.0) - 1f64.sin()).abs() < 1e-15);
        assert!((spherical_bessel_j(0, 1.0) - 0.841471).abs() < 1e-6);
    }

    #[test]
    fn hankel_examples() {
        let h = spherical_hankel2(0, PI / 2.0).unwrap();
        assert!((h.re - 2.0 / PI).abs() < 1e-12);
        assert!(h.im.abs() < 1e-12);
        let h = spherical_hankel2(0, PI).unwrap();
        assert!(h.re.abs() < 1e-15);
        assert!((h.im + 1.0 / PI).abs() < 1e-12);
        for n in 0..6 {
            for &x in &[0.3, 1.7, 6.2] {
                let h = spherical_hankel2(n, x).unwrap();
                assert_eq!(h.re, spherical_bessel_j(n, x));
            }
        }
        assert!(spherical_hankel2(0, 0.0).is_err());
        assert!(mode_strength(1, 0.0).is_err());
        assert!(mode_strength(1, -1.0).is_err());
    }

    #[test]
    fn wronskian_identity() {
        for &x in &[1.0, 2.0, 5.0] {
            for n in 0..=8 {
                let w = spherical_bessel_j(n, x) * spherical_bessel_y_prime(n, x).unwrap()
                    - spherical_bessel_j_prime(n, x) * spherical_bessel_y(n, x).unwrap();
                assert!((w - 1.0 / (x * x)).abs() < 1e-10, "n={n} x={x} w={w}");
            }
        }
    }

    #[test]
    fn mode_strength_matches_direct_formula() {
        for n in 0..=4 {
            for &x in &[0.15, 0.5, 1.0, 2.0, 3.9] {
                let direct = Complex64::new(spherical_bessel_j(n, x), 0.0)
                    - spherical_hankel2(n, x).unwrap() * spherical_bessel_j_prime(n, x)
                        / spherical_hankel2_prime(n, x).unwrap();
                let b = mode_strength(n, x).unwrap();
                assert!((b - direct).norm() <= 1e-10 * b.norm(), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn mode_strength_decay_and_band_sweep() {
        let b0 = mode_strength(0, 0.1).unwrap().norm();
        let b4 = mode_strength(4, 0.1).unwrap().norm();
        assert!(b4 < 1e-4 * b0);
        let mut kr = 0.15;
        while kr <= 3.9 {
            for n in 0..=4 {
                let b = mode_strength(n, kr).unwrap();
                assert!(b.re.is_finite() && b.im.is_finite() && b.norm() > 0.0);
            }
            kr += 0.05;
        }
    }

    #[test]
    fn low_order_harmonic_values() {
        let d = Direction::from_degrees(37.0, 211.0);
        let y00 = spherical_harmonic(ModeOrder::new(0, 0).unwrap(), &d);
        assert!((y00.re - 0.282095).abs() < 1e-6 && y00.im.abs() < 1e-15);
        let pole = Direction::new(0.0, 0.0);
        let y10 = spherical_harmonic(ModeOrder::new(1, 0).unwrap(), &pole);
        assert!((y10.re - 0.488603).abs() < 1e-6);
        // Condon–Shortley: Y_11 = -sqrt(3/8π) sinθ e^{iφ}
        let y11 = spherical_harmonic(ModeOrder::new(1, 1).unwrap(), &d);
        let expect = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * d.theta.sin(), d.phi);
        assert!((y11 - expect).norm() < 1e-14);
    }

    #[test]
    fn legendre_matches_m0_harmonic() {
        let d = Direction::from_degrees(63.0, 0.0);
        let p = legendre_polynomials(6, d.theta.cos());
        let y = sh_vector(6, &d);
        for n in 0..=6 {
            let scale = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
            assert!((y[n * n + n].re - scale * p[n]).abs() < 1e-13);
        }
    }
}
