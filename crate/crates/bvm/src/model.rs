//! Density, likelihood, and moments of the sine model.

use crate::params::BvmSineParams;
use crate::series::{log_norm_constant, log_norm_derivatives, SeriesConfig};
use crate::torus::TorusPoint;
use crate::Result;

/// Unnormalized log-density exponent `κ1 cosΔ1 + κ2 cosΔ2 + λ sinΔ1 sinΔ2`.
#[inline]
pub(crate) fn exponent(pt: &TorusPoint, p: &BvmSineParams) -> f64 {
    let d1 = pt.theta1() - p.mu1();
    let d2 = pt.theta2() - p.mu2();
    p.kappa1() * d1.cos() + p.kappa2() * d2.cos() + p.lambda() * d1.sin() * d2.sin()
}

/// Log-density at a point given a precomputed `ln c` (hot path).
#[inline]
pub(crate) fn log_density_with(pt: &TorusPoint, p: &BvmSineParams, log_c: f64) -> f64 {
    exponent(pt, p) - log_c
}

/// `ln f(point; params)`.
pub fn log_density(pt: &TorusPoint, p: &BvmSineParams, cfg: &SeriesConfig) -> Result<f64> {
    Ok(log_density_with(pt, p, log_norm_constant(p, cfg)?))
}

/// Negative log-likelihood `Σ_i -ln f(x_i)` in nats; the normalization
/// constant is computed once for the whole sum.
pub fn negative_log_likelihood(
    data: &[TorusPoint],
    p: &BvmSineParams,
    cfg: &SeriesConfig,
) -> Result<f64> {
    let log_c = log_norm_constant(p, cfg)?;
    let mut acc = 0.0;
    for pt in data {
        acc += log_c - exponent(pt, p);
    }
    Ok(acc)
}

/// Trigonometric moments of the sine model about its means.
#[derive(Debug, Clone, Copy)]
pub struct Expectations {
    /// `E[cos(θ1 - μ1)]`
    pub e_cos1: f64,
    /// `E[cos(θ2 - μ2)]`
    pub e_cos2: f64,
    /// `E[sin(θ1 - μ1) sin(θ2 - μ2)]`
    pub e_sinsin: f64,
    /// `E[cos(θ1 - μ1) cos(θ2 - μ2)]`
    pub e_coscos: f64,
}

/// First trigonometric moments, as normalization-derivative ratios.
///
/// The odd moments `E[sin(θk - μk)]` and the mixed sin/cos moments are
/// identically zero by the density's symmetry and are not reported.
pub fn expectations(p: &BvmSineParams, cfg: &SeriesConfig) -> Result<Expectations> {
    let nd = log_norm_derivatives(p, cfg)?;
    Ok(Expectations {
        e_cos1: nd.e_cos1(),
        e_cos2: nd.e_cos2(),
        e_sinsin: nd.e_sinsin(),
        e_coscos: nd.e_coscos(),
    })
}

/// Weighted circular sufficient statistics of a sample.
///
/// The sine-model log-likelihood is linear in these nine sums, so
/// optimizers evaluate candidate parameters in O(1) after one pass over
/// the data. Weights are responsibilities in mixture fitting and 1.0
/// otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CircStats {
    /// Σ w_i
    pub n: f64,
    pub cos1: f64,
    pub sin1: f64,
    pub cos2: f64,
    pub sin2: f64,
    pub sinsin: f64,
    pub sincos: f64,
    pub cossin: f64,
    pub coscos: f64,
}

impl CircStats {
    pub fn from_data(data: &[TorusPoint]) -> Self {
        let mut s = Self::default();
        for pt in data {
            s.push(pt, 1.0);
        }
        s
    }

    pub fn from_weighted(data: &[TorusPoint], weights: &[f64]) -> Self {
        debug_assert_eq!(data.len(), weights.len());
        let mut s = Self::default();
        for (pt, &w) in data.iter().zip(weights) {
            s.push(pt, w);
        }
        s
    }

    pub fn push(&mut self, pt: &TorusPoint, w: f64) {
        let (s1, c1) = pt.theta1().sin_cos();
        let (s2, c2) = pt.theta2().sin_cos();
        self.n += w;
        self.cos1 += w * c1;
        self.sin1 += w * s1;
        self.cos2 += w * c2;
        self.sin2 += w * s2;
        self.sinsin += w * s1 * s2;
        self.sincos += w * s1 * c2;
        self.cossin += w * c1 * s2;
        self.coscos += w * c1 * c2;
    }

    /// `Σ w_i cos(θ1i - μ1)`.
    pub fn sum_cos1(&self, mu1: f64) -> f64 {
        let (sm, cm) = mu1.sin_cos();
        cm * self.cos1 + sm * self.sin1
    }

    /// `Σ w_i cos(θ2i - μ2)`.
    pub fn sum_cos2(&self, mu2: f64) -> f64 {
        let (sm, cm) = mu2.sin_cos();
        cm * self.cos2 + sm * self.sin2
    }

    /// `Σ w_i sin(θ1i - μ1) sin(θ2i - μ2)`.
    pub fn sum_sinsin(&self, mu1: f64, mu2: f64) -> f64 {
        let (s1, c1) = mu1.sin_cos();
        let (s2, c2) = mu2.sin_cos();
        c1 * c2 * self.sinsin - c1 * s2 * self.sincos - s1 * c2 * self.cossin
            + s1 * s2 * self.coscos
    }

    /// Weighted negative log-likelihood given a precomputed `ln c`.
    pub fn nll_with(&self, p: &BvmSineParams, log_c: f64) -> f64 {
        self.n * log_c
            - p.kappa1() * self.sum_cos1(p.mu1())
            - p.kappa2() * self.sum_cos2(p.mu2())
            - p.lambda() * self.sum_sinsin(p.mu1(), p.mu2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LN_FOUR_PI_SQ;
    use std::f64::consts::PI;

    const CFG: SeriesConfig = SeriesConfig {
        termination_ratio: 1e-12,
        max_terms: 1000,
    };

    fn params(k1: f64, k2: f64, l: f64) -> BvmSineParams {
        BvmSineParams::new(0.5, -1.2, k1, k2, l).unwrap()
    }

    #[test]
    fn density_integrates_to_one() {
        // Trapezoidal quadrature of exp(log_density) over the torus.
        let n = 256;
        let step = 2.0 * PI / n as f64;
        for &(k1, k2, l) in &[(1.0, 1.0, 0.5), (10.0, 10.0, 9.0), (0.1, 2.0, 0.3)] {
            let p = params(k1, k2, l);
            let mut mass = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let pt = TorusPoint::new(-PI + step * i as f64, -PI + step * j as f64);
                    mass += log_density(&pt, &p, &CFG).unwrap().exp();
                }
            }
            mass *= step * step;
            assert!((mass - 1.0).abs() < 1e-8, "({k1},{k2},{l}): mass {mass}");
        }
    }

    #[test]
    fn uniform_limit_density() {
        let p = BvmSineParams::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let pt = TorusPoint::new(1.0, -2.0);
        let got = log_density(&pt, &p, &CFG).unwrap();
        assert!((got + LN_FOUR_PI_SQ).abs() < 1e-9);
    }

    #[test]
    fn reflection_symmetry() {
        // f(μ1 + a, μ2 + b) = f(μ1 - a, μ2 - b): the density is even
        // under joint reflection about the means.
        let p = params(2.0, 5.0, -2.0);
        for (a, b) in [(0.3, 1.1), (-2.0, 0.4), (1.0, -1.0)] {
            let plus = TorusPoint::new(p.mu1() + a, p.mu2() + b);
            let minus = TorusPoint::new(p.mu1() - a, p.mu2() - b);
            let lp = log_density(&plus, &p, &CFG).unwrap();
            let lm = log_density(&minus, &p, &CFG).unwrap();
            assert!((lp - lm).abs() < 1e-12);
        }
    }

    #[test]
    fn nll_is_sum_of_log_densities() {
        let p = params(3.0, 1.0, 1.2);
        let data: Vec<TorusPoint> = (0..50)
            .map(|i| TorusPoint::new(0.1 * i as f64, -0.07 * i as f64))
            .collect();
        let nll = negative_log_likelihood(&data, &p, &CFG).unwrap();
        let direct: f64 = data
            .iter()
            .map(|pt| -log_density(pt, &p, &CFG).unwrap())
            .sum();
        assert!((nll - direct).abs() < 1e-9 * direct.abs());
    }

    #[test]
    fn sufficient_statistics_reproduce_nll() {
        let p = params(3.0, 1.0, -1.0);
        let data: Vec<TorusPoint> = (0..80)
            .map(|i| TorusPoint::new((0.17 * i as f64).sin() * 2.0, 0.05 * i as f64))
            .collect();
        let stats = CircStats::from_data(&data);
        let log_c = log_norm_constant(&p, &CFG).unwrap();
        let via_stats = stats.nll_with(&p, log_c);
        let direct = negative_log_likelihood(&data, &p, &CFG).unwrap();
        assert!((via_stats - direct).abs() < 1e-8 * direct.abs().max(1.0));
    }

    #[test]
    fn weighted_statistics_interpolate() {
        let data: Vec<TorusPoint> = (0..10)
            .map(|i| TorusPoint::new(0.3 * i as f64, -0.2 * i as f64))
            .collect();
        let half = CircStats::from_weighted(&data, &vec![0.5; 10]);
        let full = CircStats::from_data(&data);
        assert!((half.n - 5.0).abs() < 1e-12);
        assert!((half.sinsin - 0.5 * full.sinsin).abs() < 1e-12);
    }

    #[test]
    fn independence_factorizes_moments() {
        let p = params(2.0, 3.0, 0.0);
        let e = expectations(&p, &CFG).unwrap();
        assert_eq!(e.e_sinsin, 0.0);
        assert!((e.e_coscos - e.e_cos1 * e.e_cos2).abs() < 1e-12);
    }
}
