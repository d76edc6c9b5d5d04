//! Greedy structure search over the number of mixture components,
//! driven by split, merge, and delete perturbations.

use crate::estimate::estimate_weighted;
use crate::estimate::Method;
use crate::kl::{kl_independent, kl_sine};
use crate::mixture::{em_fit, local_em_pair, EmConfig, MixtureComponent, MixtureModel};
use crate::params::{BvmSineParams, Variant};
use crate::series::SeriesConfig;
use crate::torus::{wrap_angle, TorusPoint};
use crate::{Error, Result};

const LOCAL_EM_ITERATIONS: usize = 10;
/// Minimum decrease of the total message length (bits) for a
/// perturbation to be accepted.
const IMPROVEMENT_SLACK: f64 = 1e-9;

/// Knobs for [`search_optimal_mixture`].
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Upper bound on accepted perturbation rounds.
    pub max_sweeps: usize,
    pub em: EmConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 20,
            em: EmConfig::default(),
        }
    }
}

/// One accepted state of the search, in order.
#[derive(Debug, Clone)]
pub struct SearchTraceRow {
    pub iteration: usize,
    pub k: usize,
    pub first_part: f64,
    pub second_part: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub model: MixtureModel,
    pub trace: Vec<SearchTraceRow>,
}

fn weighted_deviation_covariance(
    data: &[TorusPoint],
    outer: &[f64],
    mu1: f64,
    mu2: f64,
) -> (f64, f64, f64) {
    let n: f64 = outer.iter().sum();
    let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
    for (pt, w) in data.iter().zip(outer) {
        let d1 = wrap_angle(pt.theta1() - mu1);
        let d2 = wrap_angle(pt.theta2() - mu2);
        c11 += w * d1 * d1;
        c12 += w * d1 * d2;
        c22 += w * d2 * d2;
    }
    (c11 / n, c12 / n, c22 / n)
}

/// Unit principal axis of a symmetric 2×2 matrix, with isotropic
/// spreads resolved along the first axis.
fn principal_axis(c11: f64, c12: f64, c22: f64) -> (f64, f64, f64) {
    let half_trace = 0.5 * (c11 + c22);
    let disc = (0.25 * (c11 - c22) * (c11 - c22) + c12 * c12).sqrt();
    let top = half_trace + disc;
    if disc <= 1e-9 * half_trace.max(1e-300) {
        return (1.0, 0.0, top);
    }
    // Two algebraic forms of the same eigenvector; one can degenerate
    // to zero when the matrix is already diagonal, so take the longer.
    let (ax, ay) = (top - c22, c12);
    let (bx, by) = (c12, top - c11);
    let (vx, vy) = if ax.hypot(ay) >= bx.hypot(by) {
        (ax, ay)
    } else {
        (bx, by)
    };
    let norm = vx.hypot(vy);
    if norm == 0.0 {
        return (1.0, 0.0, top);
    }
    (vx / norm, vy / norm, top)
}

/// Replace component `j` by two children displaced one standard
/// deviation along the principal axis of its responsibility-weighted
/// spread, refine them locally, then relax the whole mixture by EM.
pub fn split_component(
    data: &[TorusPoint],
    model: &MixtureModel,
    j: usize,
    em: &EmConfig,
) -> Result<MixtureModel> {
    let k = model.k();
    if j >= k {
        return Err(Error::Domain(format!("component index {j} out of 0..{k}")));
    }
    let d = model.variant().dim();
    let (resp, _) = model.responsibilities(data);
    let outer: Vec<f64> = (0..data.len()).map(|i| resp[i * k + j]).collect();
    let n_j: f64 = outer.iter().sum();
    if n_j < 2.0 * (d + 1) as f64 {
        return Err(Error::ComponentStarved { index: j, n_eff: n_j });
    }

    let parent = &model.components()[j];
    let p = parent.params();
    let (c11, c12, c22) = weighted_deviation_covariance(data, &outer, p.mu1(), p.mu2());
    let (vx, vy, spread) = principal_axis(c11, c12, c22);
    let sd = spread.max(1e-6).sqrt().max(1e-3);

    let child = |sign: f64| {
        BvmSineParams::new(
            wrap_angle(p.mu1() + sign * sd * vx),
            wrap_angle(p.mu2() + sign * sd * vy),
            p.kappa1(),
            p.kappa2(),
            p.lambda(),
        )
    };
    let children = [
        MixtureComponent::new(0.5, child(-1.0)?)?,
        MixtureComponent::new(0.5, child(1.0)?)?,
    ];
    let refined = local_em_pair(data, &outer, children, LOCAL_EM_ITERATIONS, model.variant())?;

    let mut comps = Vec::with_capacity(k + 1);
    for (i, c) in model.components().iter().enumerate() {
        if i == j {
            for r in &refined {
                comps.push(MixtureComponent::new(
                    parent.weight() * r.weight(),
                    *r.params(),
                )?);
            }
        } else {
            comps.push(c.clone());
        }
    }
    let candidate = MixtureModel::new(model.variant(), comps)?;
    Ok(em_fit(data, &candidate, em)?.model)
}

fn divergence(variant: Variant, a: &BvmSineParams, b: &BvmSineParams) -> Result<f64> {
    match variant {
        Variant::Sine => kl_sine(a, b, &SeriesConfig::tight()),
        Variant::Independent => kl_independent(a, b),
    }
}

/// Merge component `j` with its nearest neighbour in divergence,
/// refit the pooled component from moments, then relax by EM.
pub fn merge_components(
    data: &[TorusPoint],
    model: &MixtureModel,
    j: usize,
    em: &EmConfig,
) -> Result<MixtureModel> {
    let k = model.k();
    if k < 2 {
        return Err(Error::Domain("merge needs at least two components".into()));
    }
    if j >= k {
        return Err(Error::Domain(format!("component index {j} out of 0..{k}")));
    }
    let comps = model.components();
    let mut partner = usize::MAX;
    let mut best = f64::INFINITY;
    for (i, c) in comps.iter().enumerate() {
        if i == j {
            continue;
        }
        let div = divergence(model.variant(), comps[j].params(), c.params())?;
        if div < best {
            best = div;
            partner = i;
        }
    }

    let (resp, _) = model.responsibilities(data);
    let pooled: Vec<f64> = (0..data.len())
        .map(|i| resp[i * k + j] + resp[i * k + partner])
        .collect();
    let weight = comps[j].weight() + comps[partner].weight();
    let heavier = if comps[j].weight() >= comps[partner].weight() {
        j
    } else {
        partner
    };
    let merged_params =
        match estimate_weighted(data, &pooled, Method::Mml, model.variant(), None) {
            Ok(report) => report.params_hat,
            Err(_) => *comps[heavier].params(),
        };

    let (lo, hi) = (j.min(partner), j.max(partner));
    let mut next = Vec::with_capacity(k - 1);
    for (i, c) in comps.iter().enumerate() {
        if i == lo {
            next.push(MixtureComponent::new(weight, merged_params)?);
        } else if i != hi {
            next.push(c.clone());
        }
    }
    let candidate = MixtureModel::new(model.variant(), next)?;
    Ok(em_fit(data, &candidate, em)?.model)
}

/// Drop component `j`, renormalize the remaining weights, and relax
/// by EM so its responsibility mass is reabsorbed.
pub fn delete_component(
    data: &[TorusPoint],
    model: &MixtureModel,
    j: usize,
    em: &EmConfig,
) -> Result<MixtureModel> {
    let k = model.k();
    if k < 2 {
        return Err(Error::Domain("delete needs at least two components".into()));
    }
    if j >= k {
        return Err(Error::Domain(format!("component index {j} out of 0..{k}")));
    }
    let keep = 1.0 - model.components()[j].weight();
    let mut next = Vec::with_capacity(k - 1);
    for (i, c) in model.components().iter().enumerate() {
        if i != j {
            next.push(MixtureComponent::new(c.weight() / keep, *c.params())?);
        }
    }
    let candidate = MixtureModel::new(model.variant(), next)?;
    Ok(em_fit(data, &candidate, em)?.model)
}

/// Grow and prune a mixture greedily, keeping at each round the single
/// perturbation (a split of any component, or for K ≥ 2 a delete or
/// merge of any component) that lowers the total message length the
/// most. Starts from the one-component fit; stops when no perturbation
/// improves. The trace records every accepted state.
pub fn search_optimal_mixture(
    data: &[TorusPoint],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    let start = crate::estimate::estimate(data, Method::Mml, variant)?;
    let single = MixtureModel::new(
        variant,
        vec![MixtureComponent::new(1.0, start.params_hat)?],
    )?;
    let mut incumbent = em_fit(data, &single, &cfg.em)?.model;

    let mut trace = Vec::new();
    let push_row = |trace: &mut Vec<SearchTraceRow>, iteration: usize, m: &MixtureModel| {
        trace.push(SearchTraceRow {
            iteration,
            k: m.k(),
            first_part: m.message().first_part,
            second_part: m.message().second_part,
            total: m.message().total,
        });
    };
    push_row(&mut trace, 0, &incumbent);

    for sweep in 1..=cfg.max_sweeps {
        let k = incumbent.k();
        let mut candidates: Vec<MixtureModel> = Vec::new();
        for j in 0..k {
            if let Ok(m) = split_component(data, &incumbent, j, &cfg.em) {
                candidates.push(m);
            }
        }
        if k >= 2 {
            for j in 0..k {
                if let Ok(m) = delete_component(data, &incumbent, j, &cfg.em) {
                    candidates.push(m);
                }
                if let Ok(m) = merge_components(data, &incumbent, j, &cfg.em) {
                    candidates.push(m);
                }
            }
        }

        let best = candidates
            .into_iter()
            .min_by(|a, b| a.message().total.partial_cmp(&b.message().total).unwrap());
        match best {
            Some(m) if m.message().total < incumbent.message().total - IMPROVEMENT_SLACK => {
                incumbent = m;
                push_row(&mut trace, sweep, &incumbent);
            }
            _ => break,
        }
    }

    Ok(SearchOutcome {
        model: incumbent,
        trace,
    })
}
