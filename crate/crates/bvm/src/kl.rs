//! Closed-form Kullback–Leibler divergences between sine-model densities.

use crate::model::expectations;
use crate::params::BvmSineParams;
use crate::series::{log_norm_constant, SeriesConfig};
use crate::special::{bessel_ratio, log_bessel_i0};
use crate::{Error, Result};

/// Negative values above this floor are treated as roundoff and clamped
/// to zero.
const ZERO_FLOOR: f64 = -1e-10;

fn clamp_zero(kl: f64) -> f64 {
    if kl < 0.0 && kl >= ZERO_FLOOR {
        0.0
    } else {
        kl
    }
}

/// `KL(a ‖ b)` between two sine-model densities.
///
/// Expands `E_a[ln f_a − ln f_b]` into the first trigonometric moments
/// of `a`; the mean offsets enter through `Δk = μ_{ak} − μ_{bk}`.
pub fn kl_sine(a: &BvmSineParams, b: &BvmSineParams, cfg: &SeriesConfig) -> Result<f64> {
    let e = expectations(a, cfg)?;
    let log_ca = log_norm_constant(a, cfg)?;
    let log_cb = log_norm_constant(b, cfg)?;
    let d1 = a.mu1() - b.mu1();
    let d2 = a.mu2() - b.mu2();
    let kl = (log_cb - log_ca)
        + (a.kappa1() - b.kappa1() * d1.cos()) * e.e_cos1
        + (a.kappa2() - b.kappa2() * d2.cos()) * e.e_cos2
        + (a.lambda() - b.lambda() * d1.cos() * d2.cos()) * e.e_sinsin
        - b.lambda() * d1.sin() * d2.sin() * e.e_coscos;
    Ok(clamp_zero(kl))
}

/// `KL(a ‖ b)` between two products of independent von Mises factors.
///
/// Both inputs must have zero coupling; the divergence is the sum of
/// the two per-axis von Mises divergences.
pub fn kl_independent(a: &BvmSineParams, b: &BvmSineParams) -> Result<f64> {
    if a.lambda() != 0.0 || b.lambda() != 0.0 {
        return Err(Error::Domain(format!(
            "independent-variant divergence requires zero coupling, got λ_a={}, λ_b={}",
            a.lambda(),
            b.lambda()
        )));
    }
    let axis = |ka: f64, kb: f64, da: f64| -> f64 {
        log_bessel_i0(kb) - log_bessel_i0(ka) + bessel_ratio(ka) * (ka - kb * da.cos())
    };
    let kl = axis(a.kappa1(), b.kappa1(), a.mu1() - b.mu1())
        + axis(a.kappa2(), b.kappa2(), a.mu2() - b.mu2());
    Ok(clamp_zero(kl))
}
