//! Finite mixtures: EM fitting with message-length component updates
//! and the mixture's own two-part code length.

use std::f64::consts::LN_2;

use crate::estimate::{estimate_weighted, Method};
use crate::mml::{first_part_bits, resolution_bits_per_point, MessageLength};
use crate::model::exponent;
use crate::params::{BvmSineParams, Variant};
use crate::series::{log_norm_constant, SeriesConfig};
use crate::torus::TorusPoint;
use crate::{Error, Result};

/// One weighted mixture component with its normalization cached.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    weight: f64,
    params: BvmSineParams,
    log_c: f64,
}

impl MixtureComponent {
    pub fn new(weight: f64, params: BvmSineParams) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Domain(format!(
                "component weight must be positive and finite, got {weight}"
            )));
        }
        let log_c = log_norm_constant(&params, &SeriesConfig::tight())?;
        Ok(Self {
            weight,
            params,
            log_c,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn params(&self) -> &BvmSineParams {
        &self.params
    }

    pub(crate) fn log_density(&self, pt: &TorusPoint) -> f64 {
        exponent(pt, &self.params) - self.log_c
    }
}

/// A K-component mixture with the message length of its latest scoring.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    variant: Variant,
    components: Vec<MixtureComponent>,
    message: MessageLength,
}

impl MixtureModel {
    /// Build a mixture from components whose weights sum to one
    /// (within 10⁻⁹; the stored weights are renormalized exactly).
    /// The message length is zero until the model is scored against
    /// data by [`mixture_message_length`] or [`em_fit`].
    pub fn new(variant: Variant, components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        if variant == Variant::Independent {
            for (j, c) in components.iter().enumerate() {
                if c.params.lambda() != 0.0 {
                    return Err(Error::Domain(format!(
                        "independent variant requires λ = 0, component {j} has λ = {}",
                        c.params.lambda()
                    )));
                }
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "component weights sum to {total}, expected 1"
            )));
        }
        let components = components
            .into_iter()
            .map(|mut c| {
                c.weight /= total;
                c
            })
            .collect();
        Ok(Self {
            variant,
            components,
            message: MessageLength::new(0.0, 0.0),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Two-part cost recorded by the most recent scoring.
    pub fn message(&self) -> &MessageLength {
        &self.message
    }

    /// `ln Σ_j w_j f_j(x)`.
    pub fn log_mixture_density(&self, pt: &TorusPoint) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(pt))
            .collect();
        log_sum_exp(&terms)
    }

    /// Row-stochastic responsibilities and the data log-likelihood
    /// `Σ_i ln Σ_j w_j f_j(x_i)` in nats.
    pub(crate) fn responsibilities(&self, data: &[TorusPoint]) -> (Vec<f64>, f64) {
        let k = self.k();
        let mut resp = vec![0.0; data.len() * k];
        let mut total = 0.0;
        let mut row = vec![0.0; k];
        for (i, pt) in data.iter().enumerate() {
            for (j, c) in self.components.iter().enumerate() {
                row[j] = c.weight.ln() + c.log_density(pt);
            }
            let lse = log_sum_exp(&row);
            total += lse;
            for j in 0..k {
                resp[i * k + j] = (row[j] - lse).exp();
            }
        }
        (resp, total)
    }

    pub(crate) fn with_message(mut self, message: MessageLength) -> Self {
        self.message = message;
        self
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Universal-code length (bits) for a positive integer.
fn log2_star(k: usize) -> f64 {
    let mut total = 2.865f64.log2();
    let mut term = (k as f64).log2();
    while term > 0.0 {
        total += term;
        term = term.log2();
    }
    total
}

fn log2_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).log2()).sum()
}

/// Two-part code length of `data` under `model`.
///
/// The first part prices the component count (universal integer code),
/// the weight simplex, and each component's parameters at its
/// effective sample size; the second part is the mixture data cost
/// plus the quantization and resolution overheads. Per-component
/// parameter costs are floored at zero bits: a parameter block whose
/// optimal statement precision exceeds its prior support is stated at
/// the support itself, never at negative cost.
pub fn mixture_message_length(data: &[TorusPoint], model: &MixtureModel) -> Result<MessageLength> {
    if data.is_empty() {
        return Err(Error::Domain("message length of empty data".into()));
    }
    let (resp, loglik) = model.responsibilities(data);
    message_from_responsibilities(data, model, &resp, loglik)
}

fn message_from_responsibilities(
    data: &[TorusPoint],
    model: &MixtureModel,
    resp: &[f64],
    loglik: f64,
) -> Result<MessageLength> {
    let n = data.len() as f64;
    let k = model.k();
    let d = model.variant.dim();
    let cfg = SeriesConfig::tight();

    let mut first = log2_star(k) + 0.5 * (k as f64 - 1.0) * n.log2() - log2_factorial(k - 1);
    for (j, c) in model.components.iter().enumerate() {
        let n_j: f64 = (0..data.len()).map(|i| resp[i * k + j]).sum();
        first -= 0.5 * c.weight.log2();
        first += first_part_bits(&c.params, model.variant, n_j, &cfg)?.max(0.0);
    }

    let big_d = (k * d + (k - 1)) as f64;
    let second = -loglik / LN_2 + n * resolution_bits_per_point() + 0.5 * big_d / LN_2;
    Ok(MessageLength::new(first, second))
}

/// EM stopping rules.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Relative improvement of the total message length below which
    /// iteration stops.
    pub rel_tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tol: 1e-6,
        }
    }
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub model: MixtureModel,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternate responsibility and update steps from `initial` until the
/// total message length stops improving.
///
/// The update step reweights components as `(n_j + ½)/(N + K/2)` and
/// refits each component by weighted message-length estimation, warm
/// started from its current parameters. An iteration is kept only if
/// it lowers the total; the returned model carries its final score.
/// Errors with [`Error::ComponentStarved`] when a component's
/// effective support falls below `d + 1` points or its weight below
/// `(d/2)/N`.
pub fn em_fit(data: &[TorusPoint], initial: &MixtureModel, cfg: &EmConfig) -> Result<EmOutcome> {
    let k = initial.k();
    let n = data.len() as f64;
    let d = initial.variant.dim();
    if data.len() < 5 * k {
        return Err(Error::Domain(format!(
            "need at least {} points for {k} components, got {}",
            5 * k,
            data.len()
        )));
    }

    let mut current = initial.clone();
    let (resp, loglik) = current.responsibilities(data);
    let initial_message = message_from_responsibilities(data, &current, &resp, loglik)?;
    current = current.with_message(initial_message);

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let (resp, _) = current.responsibilities(data);

        let mut updated = Vec::with_capacity(k);
        for (j, comp) in current.components.iter().enumerate() {
            let col: Vec<f64> = (0..data.len()).map(|i| resp[i * k + j]).collect();
            let n_j: f64 = col.iter().sum();
            let weight = (n_j + 0.5) / (n + 0.5 * k as f64);
            if n_j < (d + 1) as f64 || weight < 0.5 * d as f64 / n {
                return Err(Error::ComponentStarved {
                    index: j,
                    n_eff: n_j,
                });
            }
            // Keep the old parameters when the weighted refit fails
            // numerically; the acceptance gate below still protects
            // the message length.
            let params = match estimate_weighted(
                data,
                &col,
                Method::Mml,
                current.variant,
                Some(&comp.params),
            ) {
                Ok(report) => report.params_hat,
                Err(Error::ComponentStarved { index, n_eff }) => {
                    return Err(Error::ComponentStarved { index, n_eff })
                }
                Err(_) => comp.params,
            };
            updated.push(MixtureComponent::new(weight, params)?);
        }

        let candidate = MixtureModel::new(current.variant, updated)?;
        let (cand_resp, cand_loglik) = candidate.responsibilities(data);
        let message = message_from_responsibilities(data, &candidate, &cand_resp, cand_loglik)?;
        let improvement = current.message.total - message.total;
        if improvement <= 0.0 {
            converged = true;
            break;
        }
        current = candidate.with_message(message);
        if improvement < cfg.rel_tol * current.message.total.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(EmOutcome {
        model: current,
        iterations,
        converged,
    })
}

/// Refine a two-way split of one component's responsibility mass.
///
/// Runs a short EM over the two children inside the outer weights
/// (the parent's responsibilities), returning children whose local
/// weights sum to one.
pub(crate) fn local_em_pair(
    data: &[TorusPoint],
    outer: &[f64],
    mut children: [MixtureComponent; 2],
    iterations: usize,
    variant: Variant,
) -> Result<[MixtureComponent; 2]> {
    let n_outer: f64 = outer.iter().sum();
    let d = variant.dim();
    let mut col_a = vec![0.0; data.len()];
    let mut col_b = vec![0.0; data.len()];
    for _ in 0..iterations {
        let (mut n_a, mut n_b) = (0.0, 0.0);
        for (i, pt) in data.iter().enumerate() {
            let la = children[0].weight.ln() + children[0].log_density(pt);
            let lb = children[1].weight.ln() + children[1].log_density(pt);
            let lse = log_sum_exp(&[la, lb]);
            let ra = (la - lse).exp();
            col_a[i] = outer[i] * ra;
            col_b[i] = outer[i] * (1.0 - ra);
            n_a += col_a[i];
            n_b += col_b[i];
        }
        if n_a < (d + 1) as f64 || n_b < (d + 1) as f64 {
            return Err(Error::ComponentStarved {
                index: if n_a < n_b { 0 } else { 1 },
                n_eff: n_a.min(n_b),
            });
        }
        let refit = |col: &[f64], warm: &BvmSineParams| {
            match estimate_weighted(data, col, Method::Mml, variant, Some(warm)) {
                Ok(r) => r.params_hat,
                Err(_) => *warm,
            }
        };
        let pa = refit(&col_a, &children[0].params);
        let pb = refit(&col_b, &children[1].params);
        children = [
            MixtureComponent::new((n_a + 0.5) / (n_outer + 1.0), pa)?,
            MixtureComponent::new((n_b + 0.5) / (n_outer + 1.0), pb)?,
        ];
        let total = children[0].weight + children[1].weight;
        children[0].weight /= total;
        children[1].weight /= total;
    }
    Ok(children)
}
