//! Coincident pressure and particle-velocity signals synthesized from the
//! order-0 and order-1 coefficients.
//!
//! Under the orthonormal Condon–Shortley convention the dipole aimed at
//! `u` is `Σ_m α_1m Y_1m(u)`. Scaling it by `sqrt(4π/3)` keeps
//! `V_z = α_10` and gives
//!
//! ```text
//! V_x = (α_1,-1 - α_11) / √2
//! V_y = (α_11 + α_1,-1) / (√2 i)
//! V_z = α_10
//! ```
//!
//! The `1/(ρ₀c)` factor and the `i` phase of the order-1 plane-wave
//! coefficients are common to every arrival, so they cancel in the
//! pressure–velocity coherence and are left out.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::array::ShFrame;
use crate::direction::Direction;

pub use crate::direction::angle_between;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityTriplet {
    pub vx: Complex64,
    pub vy: Complex64,
    pub vz: Complex64,
}

impl VelocityTriplet {
    /// Projection onto `dir`.
    pub fn along(&self, dir: &Direction) -> Complex64 {
        let [ux, uy, uz] = dir.unit_vector();
        self.vx * ux + self.vy * uy + self.vz * uz
    }
}

/// Sound pressure at the array center, `P_o = α_00`.
pub fn pressure_origin(frame: &ShFrame) -> Complex64 {
    frame.coeffs[0]
}

pub fn velocity_xyz(frame: &ShFrame) -> VelocityTriplet {
    assert!(frame.coeffs.len() >= 4, "velocity needs order >= 1 coefficients");
    let a1m1 = frame.coeffs[1];
    let a10 = frame.coeffs[2];
    let a11 = frame.coeffs[3];
    VelocityTriplet {
        vx: (a1m1 - a11) * FRAC_1_SQRT_2,
        vy: (a11 + a1m1) * FRAC_1_SQRT_2 / Complex64::i(),
        vz: a10,
    }
}

/// Particle velocity component along `dir`.
pub fn velocity_along(frame: &ShFrame, dir: &Direction) -> Complex64 {
    velocity_xyz(frame).along(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::{self, Wavenumber};
    use std::f64::consts::PI;

    /// Analytic unit plane-wave coefficients `4π iⁿ Y*_nm(d)`, written out
    /// here so the sign re-derivation is checked against first principles.
    fn plane_wave(dir: &Direction, order: usize) -> ShFrame {
        let y = sh::sh_vector(order, dir);
        let coeffs = y
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let n = sh::ModeOrder::from_flat(i).n;
                Complex64::i().powu(n as u32) * y.conj() * (4.0 * PI)
            })
            .collect();
        ShFrame {
            coeffs,
            k: Wavenumber(10.0),
            frame_index: 0,
            suppressed: 0,
        }
    }

    #[test]
    fn velocity_zero_frame() {
        let f = ShFrame::zeros(1, Wavenumber(1.0), 0);
        let v = velocity_xyz(&f);
        assert_eq!(v.vx.norm() + v.vy.norm() + v.vz.norm(), 0.0);
        assert_eq!(pressure_origin(&f).norm(), 0.0);
    }

    #[test]
    fn plane_wave_from_z_and_x() {
        let v = velocity_xyz(&plane_wave(&Direction::new(0.0, 0.0), 1));
        assert!(v.vx.norm() < 1e-10 && v.vy.norm() < 1e-10);
        assert!(v.vz.norm() > 1.0);
        let v = velocity_xyz(&plane_wave(&Direction::from_degrees(90.0, 0.0), 1));
        assert!(v.vy.norm() < 1e-10 && v.vz.norm() < 1e-10);
        // all three components carry the same magnitude for their own axis
        let vy = velocity_xyz(&plane_wave(&Direction::from_degrees(90.0, 90.0), 1)).vy;
        let vz = velocity_xyz(&plane_wave(&Direction::new(0.0, 0.0), 1)).vz;
        assert!((v.vx.norm() - vz.norm()).abs() < 1e-12);
        assert!((vy.norm() - vz.norm()).abs() < 1e-12);
        // and the same phase, so the projection acts as a true vector
        assert!((v.vx - vz).norm() < 1e-12 && (vy - vz).norm() < 1e-12);
    }

    #[test]
    fn pressure_is_direction_independent() {
        let a = pressure_origin(&plane_wave(&Direction::from_degrees(12.0, 40.0), 2));
        let b = pressure_origin(&plane_wave(&Direction::from_degrees(160.0, 300.0), 2));
        assert!((a.norm() - b.norm()).abs() < 1e-12);
        assert!((a.norm() - (4.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn along_pole_is_vz() {
        let f = plane_wave(&Direction::from_degrees(33.0, 71.0), 1);
        for phi in [0.0, 1.0, 4.0] {
            assert_eq!(velocity_along(&f, &Direction::new(0.0, phi)), velocity_xyz(&f).vz);
        }
    }

    #[test]
    fn dipole_beam_pattern_is_cosine() {
        let src = Direction::from_degrees(145.0, 90.0);
        let f = plane_wave(&src, 1);
        let peak = velocity_along(&f, &src);
        let mut chi = 0.0f64;
        while chi <= 180.0 {
            // steer along the meridian of the source
            let steer = Direction::from_degrees(145.0 - chi, 90.0);
            let v = velocity_along(&f, &steer);
            let ratio = v / peak;
            let chi_rad = angle_between(&src, &steer);
            assert!((ratio.re - chi_rad.cos()).abs() < 1e-6);
            assert!(ratio.im.abs() < 1e-9);
            chi += 5.0;
        }
        let ortho = Direction::from_degrees(55.0, 90.0);
        assert!(velocity_along(&f, &ortho).norm() < 1e-8 * peak.norm());
    }

    #[test]
    fn dipole_is_odd() {
        let f = plane_wave(&Direction::from_degrees(70.0, 200.0), 3);
        let d = Direction::from_degrees(40.0, 10.0);
        let s = velocity_along(&f, &d) + velocity_along(&f, &d.antipode());
        assert!(s.norm() < 1e-12);
    }
}
