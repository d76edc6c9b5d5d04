//! Exact sampling from the sine model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::BvmSineParams;
use crate::special::log_bessel_i0;
use crate::torus::{wrap_angle, TorusPoint};
use crate::{Error, Result};

/// Consecutive rejections after which the marginal sampler gives up.
const MAX_CONSECUTIVE_REJECTS: u64 = 100_000;

/// Draw one angle from the von Mises distribution `vM(mu, kappa)`.
///
/// Uses the wrapped-Cauchy envelope rejection method of Best and Fisher;
/// `kappa = 0` falls back to a uniform draw on `[-π, π)`.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-12 {
        return wrap_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen::<f64>();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen::<f64>();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen::<f64>();
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            return wrap_angle(sign * f.acos() + mu);
        }
    }
}

/// Draw `n` points from the sine model, deterministically in `seed`.
pub fn sample(p: &BvmSineParams, n: usize, seed: u64) -> Result<Vec<TorusPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(&mut rng, p, n)
}

/// Draw `n` points from the sine model using a caller-supplied generator.
///
/// The first coordinate is drawn by rejection from a `vM(μ1, κ1)`
/// proposal with acceptance ratio `I0(R(θ1)) / I0(R_max)` where
/// `R(θ1) = sqrt(κ2² + λ² sin²(θ1-μ1))`; the second coordinate then
/// follows its exact von Mises conditional. Errors with
/// [`Error::NotConverged`] if the accept step stalls.
pub fn sample_with_rng<R: Rng + ?Sized>(
    rng: &mut R,
    p: &BvmSineParams,
    n: usize,
) -> Result<Vec<TorusPoint>> {
    let lambda = p.lambda();
    let r_max = (p.kappa2() * p.kappa2() + lambda * lambda).sqrt();
    let log_i0_r_max = log_bessel_i0(r_max);
    let mut out = Vec::with_capacity(n);
    let mut rejects: u64 = 0;
    while out.len() < n {
        let theta1 = sample_von_mises(rng, p.mu1(), p.kappa1());
        let sin_d1 = (theta1 - p.mu1()).sin();
        let r = (p.kappa2() * p.kappa2() + lambda * lambda * sin_d1 * sin_d1).sqrt();
        let log_accept = log_bessel_i0(r) - log_i0_r_max;
        let u: f64 = rng.gen::<f64>();
        if u.ln() >= log_accept {
            rejects += 1;
            if rejects >= MAX_CONSECUTIVE_REJECTS {
                return Err(Error::NotConverged(format!(
                    "marginal sampler stalled after {rejects} consecutive rejections"
                )));
            }
            continue;
        }
        rejects = 0;
        let shift = f64::atan2(lambda * sin_d1, p.kappa2());
        let theta2 = sample_von_mises(rng, p.mu2() + shift, r);
        out.push(TorusPoint::new(theta1, theta2));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expectations;
    use crate::series::SeriesConfig;
    use crate::special::bessel_ratio;

    const CFG: SeriesConfig = SeriesConfig {
        termination_ratio: 1e-12,
        max_terms: 1000,
    };

    #[test]
    fn deterministic_in_seed() {
        let p = BvmSineParams::new(0.3, -0.7, 2.0, 3.0, 1.5).unwrap();
        let a = sample(&p, 100, 42).unwrap();
        let b = sample(&p, 100, 42).unwrap();
        let c = sample(&p, 100, 43).unwrap();
        assert_eq!(a.len(), 100);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.theta1(), y.theta1());
            assert_eq!(x.theta2(), y.theta2());
        }
        assert!(a
            .iter()
            .zip(&c)
            .any(|(x, y)| x.theta1() != y.theta1() || x.theta2() != y.theta2()));
    }

    #[test]
    fn von_mises_moments() {
        // Sample mean resultant length ≈ I1/I0 at three concentrations.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &kappa in &[0.5, 2.0, 10.0] {
            let n = 40_000;
            let (mut sc, mut ss) = (0.0, 0.0);
            for _ in 0..n {
                let t = sample_von_mises(&mut rng, 1.0, kappa);
                sc += (t - 1.0).cos();
                ss += (t - 1.0).sin();
            }
            let a = bessel_ratio(kappa);
            let se = ((1.0 - a * a) / n as f64).sqrt().max(1e-4);
            assert!(
                ((sc / n as f64) - a).abs() < 5.0 * se,
                "kappa={kappa}: {} vs {a}",
                sc / n as f64
            );
            assert!((ss / n as f64).abs() < 5.0 * se);
        }
    }

    #[test]
    fn sine_model_moments_match_series() {
        // Monte Carlo estimates of the four even trigonometric moments
        // agree with their series values within five standard errors.
        let p = BvmSineParams::new(0.4, -1.0, 2.0, 1.5, 1.2).unwrap();
        let e = expectations(&p, &CFG).unwrap();
        let n = 60_000;
        let data = sample(&p, n, 2024).unwrap();
        let (mut c1, mut c2, mut ss, mut cc) = (0.0, 0.0, 0.0, 0.0);
        for pt in &data {
            let d1 = pt.theta1() - p.mu1();
            let d2 = pt.theta2() - p.mu2();
            c1 += d1.cos();
            c2 += d2.cos();
            ss += d1.sin() * d2.sin();
            cc += d1.cos() * d2.cos();
        }
        let m = n as f64;
        let se = 1.0 / m.sqrt(); // variance of each summand is < 1
        assert!((c1 / m - e.e_cos1).abs() < 5.0 * se);
        assert!((c2 / m - e.e_cos2).abs() < 5.0 * se);
        assert!((ss / m - e.e_sinsin).abs() < 5.0 * se);
        assert!((cc / m - e.e_coscos).abs() < 5.0 * se);
    }

    #[test]
    fn negative_coupling_flips_sin_correlation() {
        let p = BvmSineParams::new(0.0, 0.0, 2.0, 2.0, -1.8).unwrap();
        let data = sample(&p, 20_000, 5).unwrap();
        let ss: f64 = data
            .iter()
            .map(|pt| pt.theta1().sin() * pt.theta2().sin())
            .sum();
        assert!(ss < 0.0, "sin-sin sum {ss} should be negative");
    }

    #[test]
    fn points_are_wrapped() {
        let p = BvmSineParams::new(3.0, -3.0, 5.0, 5.0, 0.0).unwrap();
        for pt in sample(&p, 2_000, 11).unwrap() {
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&pt.theta1()));
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&pt.theta2()));
        }
    }
}
