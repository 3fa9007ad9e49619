//! Directions on the unit sphere.
//!
//! Colatitude `theta` is measured from +z, azimuth `phi` counter-clockwise
//! from +x in the xy-plane.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Colatitude in radians, `[0, pi]`.
    pub theta: f64,
    /// Azimuth in radians, `[0, 2 pi)`.
    pub phi: f64,
}

impl Direction {
    /// Builds a direction, folding colatitudes outside `[0, pi]` across the
    /// pole and wrapping the azimuth into `[0, 2 pi)`.
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        Self {
            theta,
            phi: wrap_azimuth(phi),
        }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi.to_degrees()
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Direction of a nonzero vector. The zero vector maps to +z.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return Self { theta: 0.0, phi: 0.0 };
        }
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = wrap_azimuth(v[1].atan2(v[0]));
        Self { theta, phi }
    }

    pub fn antipode(&self) -> Self {
        Self::new(PI - self.theta, self.phi + PI)
    }

    /// Great-circle angle to `other`, in `[0, pi]`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        angle_between(self, other)
    }

    /// Same direction with the azimuth rotated by `delta` radians.
    pub fn rotated_azimuth(&self, delta: f64) -> Self {
        Self::new(self.theta, self.phi + delta)
    }
}

fn wrap_azimuth(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Great-circle angle between two directions, in `[0, pi]`.
///
/// Uses `atan2(|a x b|, a . b)`, which stays accurate near 0 and pi where
/// the plain arccos form loses precision.
pub fn angle_between(a: &Direction, b: &Direction) -> f64 {
    let u = a.unit_vector();
    let v = b.unit_vector();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    sin.atan2(cos)
}
