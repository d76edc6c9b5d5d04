//! Point estimators (ML, three MAP charts, MML), the unit-cube
//! reparameterization, and the likelihood-ratio test.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_ur;

use crate::mml::{log_prior_canonical, message_length_core};
use crate::model::CircStats;
use crate::optim::nelder_mead;
use crate::params::{BvmSineParams, Variant, KAPPA_FLOOR};
use crate::series::{log_norm_constant, SeriesConfig};
use crate::torus::TorusPoint;
use crate::{Error, Result};

/// ln κ box for the optimizer's concentration coordinates.
const LN_KAPPA_MIN: f64 = -23.0;
const LN_KAPPA_MAX: f64 = 12.0;
/// Correlation bound keeping λ² < κ1κ2 strictly inside the optimizer.
const RHO_BOUND: f64 = 1.0 - 1e-8;
/// Main optimization pass.
const FTOL: f64 = 1e-8;
const MAX_EVALS: usize = 5000;
/// Polish pass, tightened so different charts land on the same optimum.
const POLISH_FTOL: f64 = 1e-14;
const POLISH_EVALS: usize = 4000;

/// Estimation objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Maximum likelihood.
    Ml,
    /// Posterior mode in (μ1, μ2, κ1, κ2, λ).
    Map1,
    /// Posterior mode in (μ1, μ2, κ1, κ2, ρ).
    Map2,
    /// Posterior mode in the unit-cube chart (coincides with ML).
    Map3,
    /// Minimum message length.
    Mml,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ml,
        Method::Map1,
        Method::Map2,
        Method::Map3,
        Method::Mml,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Map1 => "map1",
            Method::Map2 => "map2",
            Method::Map3 => "map3",
            Method::Mml => "mml",
        }
    }
}

/// Fit result: the estimate plus optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub method: Method,
    pub params_hat: BvmSineParams,
    /// Final objective: NLL in nats (ML/MAP3), negative log posterior
    /// in nats (MAP1/MAP2), or total message length in bits (MML).
    pub objective_value: f64,
    pub optimizer_evals: usize,
    pub converged: bool,
}

/// Method-of-moments start point.
///
/// Circular means per axis, concentrations from the mean resultant
/// lengths via `κ̂ = R̄(2−R̄²)/(1−R̄²)`, and the coupling from the
/// correlation of the sine deviations (clipped into ±0.95).
pub fn moment_init(data: &[TorusPoint]) -> Result<BvmSineParams> {
    moment_init_weighted(data, None)
}

pub(crate) fn moment_init_weighted(
    data: &[TorusPoint],
    weights: Option<&[f64]>,
) -> Result<BvmSineParams> {
    if data.is_empty() {
        return Err(Error::Domain("moment initialization of empty data".into()));
    }
    if let Some(w) = weights {
        debug_assert_eq!(w.len(), data.len());
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

    let (mut n, mut c1, mut s1, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, pt) in data.iter().enumerate() {
        let w = weight(i);
        n += w;
        c1 += w * pt.theta1().cos();
        s1 += w * pt.theta1().sin();
        c2 += w * pt.theta2().cos();
        s2 += w * pt.theta2().sin();
    }
    if !(n > 0.0) {
        return Err(Error::DegenerateData(format!(
            "total weight {n} is not positive"
        )));
    }
    let mu1 = f64::atan2(s1, c1);
    let mu2 = f64::atan2(s2, c2);
    let r1 = (c1 * c1 + s1 * s1).sqrt() / n;
    let r2 = (c2 * c2 + s2 * s2).sqrt() / n;
    if r1 >= 1.0 - 1e-12 || r2 >= 1.0 - 1e-12 {
        return Err(Error::DegenerateData(format!(
            "resultant length at 1 (R̄1={r1}, R̄2={r2}); concentration unidentifiable"
        )));
    }
    let banerjee =
        |r: f64| (r * (2.0 - r * r) / (1.0 - r * r)).clamp(KAPPA_FLOOR, LN_KAPPA_MAX.exp());
    let k1 = banerjee(r1);
    let k2 = banerjee(r2);

    let (mut ss, mut s1s1, mut s2s2) = (0.0, 0.0, 0.0);
    for (i, pt) in data.iter().enumerate() {
        let w = weight(i);
        let d1 = (pt.theta1() - mu1).sin();
        let d2 = (pt.theta2() - mu2).sin();
        ss += w * d1 * d2;
        s1s1 += w * d1 * d1;
        s2s2 += w * d2 * d2;
    }
    let denom = (s1s1 * s2s2).sqrt();
    let rho = if denom > 0.0 {
        (ss / denom).clamp(-0.95, 0.95)
    } else {
        0.0
    };
    BvmSineParams::from_rho(mu1, mu2, k1, k2, rho)
}

/// Optimizer coordinate systems.
#[derive(Clone, Copy)]
enum Chart {
    /// (μ1, μ2, ln κ1, ln κ2, atanh ρ), the coupling coordinate
    /// dropped for the independent variant.
    Log,
    /// The unit-cube chart of `rosenblatt_forward`, means unwrapped.
    UnitCube,
}

impl Chart {
    fn encode(&self, p: &BvmSineParams, variant: Variant) -> Vec<f64> {
        let rho = p.rho().clamp(-RHO_BOUND, RHO_BOUND);
        let mut x = match self {
            Chart::Log => vec![
                p.mu1(),
                p.mu2(),
                p.kappa1().ln().clamp(LN_KAPPA_MIN, LN_KAPPA_MAX),
                p.kappa2().ln().clamp(LN_KAPPA_MIN, LN_KAPPA_MAX),
                rho.atanh(),
            ],
            Chart::UnitCube => {
                let z = rosenblatt_forward(p);
                vec![z[0], z[1], z[2], z[3], z[4]]
            }
        };
        if variant == Variant::Independent {
            x.truncate(4);
        }
        x
    }

    fn decode(&self, x: &[f64], variant: Variant) -> Result<BvmSineParams> {
        let rho = |raw: f64| raw.clamp(-RHO_BOUND, RHO_BOUND);
        match self {
            Chart::Log => {
                let k1 = x[2].clamp(LN_KAPPA_MIN, LN_KAPPA_MAX).exp();
                let k2 = x[3].clamp(LN_KAPPA_MIN, LN_KAPPA_MAX).exp();
                let r = match variant {
                    Variant::Sine => rho(x[4].tanh()),
                    Variant::Independent => 0.0,
                };
                BvmSineParams::from_rho(x[0], x[1], k1, k2, r)
            }
            Chart::UnitCube => {
                let z_max = 1.0 - 1.0 / (1.0 + LN_KAPPA_MAX.exp().powi(2)).sqrt();
                let kappa = |z: f64| {
                    let z = z.clamp(0.0, z_max);
                    (z * (2.0 - z)).sqrt() / (1.0 - z)
                };
                let r = match variant {
                    Variant::Sine => rho(2.0 * x[4] - 1.0),
                    Variant::Independent => 0.0,
                };
                BvmSineParams::from_rho(
                    PI * (2.0 * x[0] - 1.0),
                    PI * (2.0 * x[1] - 1.0),
                    kappa(x[2]),
                    kappa(x[3]),
                    r,
                )
            }
        }
    }

    fn steps(&self, variant: Variant) -> Vec<f64> {
        let mut s = match self {
            Chart::Log => vec![0.1, 0.1, 0.3, 0.3, 0.25],
            Chart::UnitCube => vec![0.04; 5],
        };
        if variant == Variant::Independent {
            s.truncate(4);
        }
        s
    }
}

/// Fit `method` to `data` under `variant`.
///
/// A derivative-free simplex search runs from the moment start in a
/// smooth chart (box constraints absorbed by the chart), with one
/// deterministic jittered restart on non-convergence and a tight final
/// polish pass.
pub fn estimate(data: &[TorusPoint], method: Method, variant: Variant) -> Result<EstimatorReport> {
    if data.len() < 5 {
        return Err(Error::Domain(format!(
            "need at least 5 points to estimate, got {}",
            data.len()
        )));
    }
    let init = moment_init(data)?;
    fit_from_stats(&CircStats::from_data(data), &init, method, variant)
}

/// Weighted fit used by mixture updates; `warm` skips the moment start.
pub(crate) fn estimate_weighted(
    data: &[TorusPoint],
    weights: &[f64],
    method: Method,
    variant: Variant,
    warm: Option<&BvmSineParams>,
) -> Result<EstimatorReport> {
    let init = match warm {
        Some(p) => *p,
        None => moment_init_weighted(data, Some(weights))?,
    };
    fit_from_stats(
        &CircStats::from_weighted(data, weights),
        &init,
        method,
        variant,
    )
}

fn fit_from_stats(
    stats: &CircStats,
    init: &BvmSineParams,
    method: Method,
    variant: Variant,
) -> Result<EstimatorReport> {
    let cfg = SeriesConfig::tight();
    let chart = match method {
        Method::Map3 => Chart::UnitCube,
        _ => Chart::Log,
    };

    let objective_at = |p: &BvmSineParams| -> Result<f64> {
        let nll = stats.nll_with(p, log_norm_constant(p, &cfg)?);
        Ok(match method {
            Method::Ml | Method::Map3 => nll,
            Method::Map1 => nll - log_prior_canonical(p, variant),
            Method::Map2 => {
                let jacobian = match variant {
                    Variant::Sine => 0.5 * (p.kappa1().ln() + p.kappa2().ln()),
                    Variant::Independent => 0.0,
                };
                nll - log_prior_canonical(p, variant) - jacobian
            }
            Method::Mml => message_length_core(stats, p, variant, &cfg)?.total,
        })
    };
    let mut objective = |x: &[f64]| -> f64 {
        match chart.decode(x, variant).and_then(|p| objective_at(&p)) {
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        }
    };

    let x0 = chart.encode(init, variant);
    let steps = chart.steps(variant);
    let mut best = nelder_mead(&mut objective, &x0, &steps, FTOL, MAX_EVALS);
    let mut evals = best.evals;

    if !best.converged {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB1A5_5EED);
        let jittered: Vec<f64> = x0
            .iter()
            .zip(&steps)
            .map(|(&x, &s)| x + 2.0 * s * rng.gen_range(-1.0..1.0))
            .collect();
        let retry = nelder_mead(&mut objective, &jittered, &steps, FTOL, MAX_EVALS);
        evals += retry.evals;
        if retry.f < best.f {
            best = retry;
        }
    }

    let polish_steps: Vec<f64> = steps.iter().map(|s| s * 1e-2).collect();
    let polish = nelder_mead(&mut objective, &best.x, &polish_steps, POLISH_FTOL, POLISH_EVALS);
    evals += polish.evals;
    let converged = polish.converged;
    if polish.f <= best.f {
        best = polish;
    }

    let params_hat = chart.decode(&best.x, variant)?;
    Ok(EstimatorReport {
        method,
        params_hat,
        objective_value: best.f,
        optimizer_evals: evals,
        converged,
    })
}

/// Map parameters to the unit hypercube:
/// `z = ((μ1+π)/2π, (μ2+π)/2π, 1−cos(arctan κ1), 1−cos(arctan κ2), (ρ+1)/2)`.
pub fn rosenblatt_forward(p: &BvmSineParams) -> [f64; 5] {
    let z_kappa = |k: f64| 1.0 - 1.0 / (1.0 + k * k).sqrt();
    [
        (p.mu1() + PI) / TAU,
        (p.mu2() + PI) / TAU,
        z_kappa(p.kappa1()),
        z_kappa(p.kappa2()),
        (p.rho() + 1.0) / 2.0,
    ]
}

/// Inverse of [`rosenblatt_forward`]; rejects coordinates outside the
/// open set where the concentrations are finite.
pub fn rosenblatt_inverse(z: &[f64; 5]) -> Result<BvmSineParams> {
    for (i, &zi) in z.iter().enumerate() {
        if !(0.0..=1.0).contains(&zi) {
            return Err(Error::Domain(format!(
                "cube coordinate z{} = {zi} outside [0, 1]",
                i + 1
            )));
        }
    }
    if z[2] >= 1.0 || z[3] >= 1.0 {
        return Err(Error::Domain(
            "concentration coordinate at 1 maps to infinite κ".into(),
        ));
    }
    let kappa = |zk: f64| (zk * (2.0 - zk)).sqrt() / (1.0 - zk);
    BvmSineParams::from_rho(
        PI * (2.0 * z[0] - 1.0),
        PI * (2.0 * z[1] - 1.0),
        kappa(z[2]),
        kappa(z[3]),
        2.0 * z[4] - 1.0,
    )
}

/// Upper-tail probability of the χ² distribution with `df` degrees of
/// freedom.
pub fn chi_squared_upper_tail(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0)
}

/// Value whose χ²(df) upper-tail probability equals `p`, by bisection.
pub fn chi_squared_upper_quantile(df: f64, p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "tail probability must be in (0, 1)");
    let mut hi = df.max(1.0);
    while chi_squared_upper_tail(df, hi) > p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_squared_upper_tail(df, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Likelihood-ratio test outcome.
#[derive(Debug, Clone, Copy)]
pub struct LrtOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Twice the log-likelihood gap of `reference` against `fitted`,
/// referred to the χ² distribution with five degrees of freedom.
pub fn likelihood_ratio_test(
    data: &[TorusPoint],
    fitted: &BvmSineParams,
    reference: &BvmSineParams,
) -> Result<LrtOutcome> {
    let cfg = SeriesConfig::tight();
    let stats = CircStats::from_data(data);
    let nll_fit = stats.nll_with(fitted, log_norm_constant(fitted, &cfg)?);
    let nll_ref = stats.nll_with(reference, log_norm_constant(reference, &cfg)?);
    let statistic = (2.0 * (nll_ref - nll_fit)).max(0.0);
    Ok(LrtOutcome {
        statistic,
        p_value: chi_squared_upper_tail(5.0, statistic),
    })
}
