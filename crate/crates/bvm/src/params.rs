//! Parameters of the bivariate von Mises sine model.

use crate::torus::wrap_angle;
use crate::{Error, Result};

/// Concentrations at or below zero are clamped to this floor so that the
/// uniform limit stays inside the parameter space.
pub const KAPPA_FLOOR: f64 = 1e-10;

/// Which member of the sine family a fit or a mixture uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Variant {
    /// Full five-parameter sine model with the λ interaction term.
    Sine,
    /// λ fixed at zero: two independent von Mises factors (4 parameters).
    Independent,
}

impl Variant {
    /// Number of free parameters per component.
    pub fn dim(&self) -> usize {
        match self {
            Variant::Sine => 5,
            Variant::Independent => 4,
        }
    }
}

/// Parameter vector `(μ1, μ2, κ1, κ2, λ)` of the sine model.
///
/// Invariants enforced by the constructor: means wrapped to `[-π, π)`,
/// concentrations positive (zero is clamped to [`KAPPA_FLOOR`]), and
/// `λ² < κ1 κ2` strictly, which keeps the density unimodal-or-bimodal
/// family well-defined and the Gaussian limit covariance positive
/// definite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BvmSineParams {
    mu1: f64,
    mu2: f64,
    kappa1: f64,
    kappa2: f64,
    lambda: f64,
}

impl BvmSineParams {
    pub fn new(mu1: f64, mu2: f64, kappa1: f64, kappa2: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [
            ("mu1", mu1),
            ("mu2", mu2),
            ("kappa1", kappa1),
            ("kappa2", kappa2),
            ("lambda", lambda),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if kappa1 < 0.0 || kappa2 < 0.0 {
            return Err(Error::Domain(format!(
                "concentrations must be non-negative, got kappa1={kappa1}, kappa2={kappa2}"
            )));
        }
        let kappa1 = kappa1.max(KAPPA_FLOOR);
        let kappa2 = kappa2.max(KAPPA_FLOOR);
        if lambda * lambda >= kappa1 * kappa2 {
            return Err(Error::Domain(format!(
                "require lambda^2 < kappa1*kappa2, got lambda={lambda}, kappa1={kappa1}, kappa2={kappa2}"
            )));
        }
        Ok(Self {
            mu1: wrap_angle(mu1),
            mu2: wrap_angle(mu2),
            kappa1,
            kappa2,
            lambda,
        })
    }

    /// Builds parameters from the scale-free coupling `ρ = λ/√(κ1 κ2)`,
    /// which must lie strictly inside `(-1, 1)`.
    pub fn from_rho(mu1: f64, mu2: f64, kappa1: f64, kappa2: f64, rho: f64) -> Result<Self> {
        if !(-1.0..1.0).contains(&rho) || !rho.is_finite() {
            return Err(Error::Domain(format!(
                "rho must lie in (-1, 1), got {rho}"
            )));
        }
        let k1 = kappa1.max(KAPPA_FLOOR);
        let k2 = kappa2.max(KAPPA_FLOOR);
        Self::new(mu1, mu2, k1, k2, rho * (k1 * k2).sqrt())
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Scale-free coupling `ρ = λ/√(κ1 κ2)`, always in `(-1, 1)`.
    pub fn rho(&self) -> f64 {
        self.lambda / (self.kappa1 * self.kappa2).sqrt()
    }

    /// Same parameters with the interaction forced to zero (the
    /// independent variant of this point).
    pub fn independent(&self) -> Self {
        Self {
            lambda: 0.0,
            ..*self
        }
    }

    /// Correlation and covariance of the concentrated (large-κ) Gaussian
    /// limit around the mean direction.
    ///
    /// The limit precision matrix is `[[κ1, -λ], [-λ, κ2]]`; its inverse
    /// `[[κ2, λ], [λ, κ1]] / (κ1 κ2 - λ²)` is returned along with the
    /// correlation `ρ = λ/√(κ1 κ2)`.
    pub fn correlation_and_limit_covariance(&self) -> (f64, [[f64; 2]; 2]) {
        let det = self.kappa1 * self.kappa2 - self.lambda * self.lambda;
        let cov = [
            [self.kappa2 / det, self.lambda / det],
            [self.lambda / det, self.kappa1 / det],
        ];
        (self.rho(), cov)
    }
}
