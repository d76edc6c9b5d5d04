//! Angles and points on the torus `[-π, π) × [-π, π)`.

use std::f64::consts::PI;

/// Wraps an angle into `[-π, π)`.
///
/// The upper endpoint maps to the lower one, so `wrap_angle(PI) == -PI`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut w = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
    if w >= PI {
        w -= 2.0 * PI;
    } else if w < -PI {
        w += 2.0 * PI;
    }
    w
}

/// Smallest signed difference `a - b` on the circle, in `[-π, π)`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// A point on the torus; both coordinates are kept wrapped to `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TorusPoint {
    theta1: f64,
    theta2: f64,
}

impl TorusPoint {
    /// Builds a point, wrapping both coordinates.
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }
}
