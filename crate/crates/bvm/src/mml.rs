//! Fisher information, parameter priors, and two-part message lengths.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::model::CircStats;
use crate::params::{BvmSineParams, Variant};
use crate::series::{
    log_norm_constant, log_norm_derivatives, NormDerivatives, SeriesConfig, LN_EIGHT_PI_SQ,
    LN_FOUR_PI_SQ,
};
use crate::special::{bessel_ratio, bessel_ratio_derivative};
use crate::torus::TorusPoint;
use crate::{Error, Result};

/// Resolution (radians per coordinate) to which continuous angles are
/// encoded when stating data costs in bits.
pub(crate) const DATA_RESOLUTION: f64 = 0.001;

/// Bits added per encoded point by the angle resolution: `-2·log₂ ε`.
pub(crate) fn resolution_bits_per_point() -> f64 {
    -2.0 * DATA_RESOLUTION.log2()
}

/// Optimal lattice quantization constant for `d` parameters.
pub(crate) fn lattice_quantization_constant(d: usize) -> f64 {
    match d {
        1 => 1.0 / 12.0,
        4 => 0.076603,
        5 => 0.075625,
        _ => unreachable!("no lattice constant tabulated for d={d}"),
    }
}

/// Per-datum Fisher information of the sine model, split into its two
/// uncoupled blocks.
///
/// The mean/scale cross entries are identically zero and are not
/// stored. For the independent variant only the top-left 2×2 of
/// `scale` is meaningful; the padding row and column are zero.
#[derive(Debug, Clone)]
pub struct FisherBlocks {
    pub variant: Variant,
    /// Block for (μ1, μ2).
    pub angular: [[f64; 2]; 2],
    /// Block for (κ1, κ2, λ), or (κ1, κ2) padded with zeros.
    pub scale: [[f64; 3]; 3],
    /// `ln` determinant of the full per-datum matrix: `ln|F_angular| + ln|F_scale|`.
    pub log_det_single: f64,
}

impl FisherBlocks {
    /// Side length of the active scale block (3 sine, 2 independent).
    pub fn scale_dim(&self) -> usize {
        match self.variant {
            Variant::Sine => 3,
            Variant::Independent => 2,
        }
    }

    /// `ln` determinant of the Fisher matrix of `n` i.i.d. observations,
    /// which scales the per-datum determinant by `n^d`.
    pub fn log_det_for_sample(&self, n: f64) -> f64 {
        self.variant.dim() as f64 * n.ln() + self.log_det_single
    }
}

/// Log-determinant of a symmetric positive-definite matrix stored in
/// the top-left `dim`×`dim` of a 3×3 array, via Cholesky.
fn spd_log_det(m: &[[f64; 3]; 3], dim: usize) -> Result<f64> {
    let mut l = [[0.0f64; 3]; 3];
    let mut log_det = 0.0;
    for i in 0..dim {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::IllConditioned(format!(
                        "matrix not positive definite (pivot {s:e} at row {i})"
                    )));
                }
                l[i][i] = s.sqrt();
                log_det += s.ln();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(log_det)
}

fn sine_blocks(p: &BvmSineParams, nd: &NormDerivatives) -> Result<FisherBlocks> {
    let ec1 = nd.e_cos1();
    let ec2 = nd.e_cos2();
    let ess = nd.e_sinsin();
    let ecc = nd.e_coscos();
    let lambda = p.lambda();

    let angular = [
        [p.kappa1() * ec1 + lambda * ess, -lambda * ecc],
        [-lambda * ecc, p.kappa2() * ec2 + lambda * ess],
    ];

    // Central second moments of (cos Δ1, cos Δ2, sin Δ1 sin Δ2), i.e.
    // the Hessian of ln c in (κ1, κ2, λ).
    let ratio = |log_num: f64| (log_num - nd.log_c).exp();
    let mut scale = [[0.0f64; 3]; 3];
    scale[0][0] = ratio(nd.log_c_k1k1) - ec1 * ec1;
    scale[1][1] = ratio(nd.log_c_k2k2) - ec2 * ec2;
    scale[2][2] = ratio(nd.log_c_ll) - ess * ess;
    scale[0][1] = ecc - ec1 * ec2;
    scale[1][0] = scale[0][1];
    scale[0][2] = nd.log_c_k1l.ratio_to(nd.log_c) - ec1 * ess;
    scale[2][0] = scale[0][2];
    scale[1][2] = nd.log_c_k2l.ratio_to(nd.log_c) - ec2 * ess;
    scale[2][1] = scale[1][2];

    let angular_padded = [
        [angular[0][0], angular[0][1], 0.0],
        [angular[1][0], angular[1][1], 0.0],
        [0.0, 0.0, 0.0],
    ];
    let log_det_single = spd_log_det(&angular_padded, 2)? + spd_log_det(&scale, 3)?;
    Ok(FisherBlocks {
        variant: Variant::Sine,
        angular,
        scale,
        log_det_single,
    })
}

fn independent_blocks(p: &BvmSineParams) -> Result<FisherBlocks> {
    let (k1, k2) = (p.kappa1(), p.kappa2());
    let (a1, a2) = (bessel_ratio(k1), bessel_ratio(k2));
    let (ap1, ap2) = (bessel_ratio_derivative(k1), bessel_ratio_derivative(k2));
    let angular = [[k1 * a1, 0.0], [0.0, k2 * a2]];
    let mut scale = [[0.0f64; 3]; 3];
    scale[0][0] = ap1;
    scale[1][1] = ap2;
    let entries = [k1 * a1, k2 * a2, ap1, ap2];
    if entries.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::IllConditioned(format!(
            "independent-variant information entries not all positive: {entries:?}"
        )));
    }
    let log_det_single = entries.iter().map(|e| e.ln()).sum();
    Ok(FisherBlocks {
        variant: Variant::Independent,
        angular,
        scale,
        log_det_single,
    })
}

/// Per-datum Fisher information blocks of `params` under `variant`.
///
/// The independent variant requires `λ = 0` and uses closed-form von
/// Mises curvatures; the sine variant assembles both blocks from the
/// normalization-constant derivatives. Errors with
/// [`Error::IllConditioned`] when a block is not positive definite.
pub fn fisher_single(
    p: &BvmSineParams,
    variant: Variant,
    cfg: &SeriesConfig,
) -> Result<FisherBlocks> {
    match variant {
        Variant::Sine => sine_blocks(p, &log_norm_derivatives(p, cfg)?),
        Variant::Independent => {
            if p.lambda() != 0.0 {
                return Err(Error::Domain(format!(
                    "independent variant requires λ = 0, got {}",
                    p.lambda()
                )));
            }
            independent_blocks(p)
        }
    }
}

/// Parameterization in which a prior density is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorChart {
    /// (μ1, μ2, κ1, κ2, λ).
    Canonical,
    /// (μ1, μ2, κ1, κ2, ρ) with λ = ρ√(κ1κ2).
    RhoScaled,
    /// The unit-hypercube chart in which the prior is flat.
    UnitCube,
}

/// `ln` of the canonical-chart prior density at `params`.
pub(crate) fn log_prior_canonical(p: &BvmSineParams, variant: Variant) -> f64 {
    let (k1, k2) = (p.kappa1(), p.kappa2());
    let shape = -1.5 * ((k1 * k1).ln_1p() + (k2 * k2).ln_1p());
    match variant {
        // Uniform means, κ/(1+κ²)^{3/2} per concentration, uniform
        // coupling on |λ| < √(κ1κ2).
        Variant::Sine => 0.5 * (k1.ln() + k2.ln()) - LN_EIGHT_PI_SQ + shape,
        // Same without the coupling coordinate.
        Variant::Independent => k1.ln() + k2.ln() - LN_FOUR_PI_SQ + shape,
    }
}

/// Prior density of `params` in the requested chart.
pub fn prior_density(p: &BvmSineParams, chart: PriorChart, variant: Variant) -> f64 {
    let canonical = log_prior_canonical(p, variant);
    match (chart, variant) {
        (PriorChart::Canonical, _) => canonical.exp(),
        // dλ/dρ = √(κ1κ2); no coupling coordinate for the independent
        // variant, so its density is unchanged.
        (PriorChart::RhoScaled, Variant::Sine) => {
            (canonical + 0.5 * (p.kappa1().ln() + p.kappa2().ln())).exp()
        }
        (PriorChart::RhoScaled, Variant::Independent) => canonical.exp(),
        (PriorChart::UnitCube, _) => 1.0,
    }
}

/// Two-part code length, in bits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MessageLength {
    /// Cost of stating the parameters.
    pub first_part: f64,
    /// Cost of stating the data given the parameters.
    pub second_part: f64,
    pub total: f64,
}

impl MessageLength {
    pub(crate) fn new(first_part: f64, second_part: f64) -> Self {
        Self {
            first_part,
            second_part,
            total: first_part + second_part,
        }
    }
}

/// Parameter-statement cost in bits for a model fitted to an effective
/// sample of size `n_eff`:
/// `(d/2)·log₂ q_d + ½·log₂|F(Θ)| − log₂ h(Θ)` with `|F| = n^d·|F₁|`.
pub(crate) fn first_part_bits(
    p: &BvmSineParams,
    variant: Variant,
    n_eff: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    let blocks = fisher_single(p, variant, cfg)?;
    Ok(first_part_from_blocks(p, &blocks, n_eff))
}

fn first_part_from_blocks(p: &BvmSineParams, blocks: &FisherBlocks, n_eff: f64) -> f64 {
    let d = blocks.variant.dim() as f64;
    0.5 * d * lattice_quantization_constant(blocks.variant.dim()).log2()
        + 0.5 * blocks.log_det_for_sample(n_eff) / LN_2
        - log_prior_canonical(p, blocks.variant) / LN_2
}

/// Two-part message length of `data` encoded with `params`.
///
/// The first part states the parameters to the precision set by the
/// Fisher determinant under the canonical-chart prior; the second part
/// is the data negative log-likelihood plus the quantization overhead
/// `d/2` (both converted to bits) plus the per-point resolution cost.
pub fn message_length(
    data: &[TorusPoint],
    p: &BvmSineParams,
    variant: Variant,
    cfg: &SeriesConfig,
) -> Result<MessageLength> {
    if data.is_empty() {
        return Err(Error::Domain("message length of empty data".into()));
    }
    message_length_core(&CircStats::from_data(data), p, variant, cfg)
}

/// [`message_length`] evaluated from precomputed sufficient statistics
/// (weighted sums allowed; `stats.n` is the effective sample size).
pub(crate) fn message_length_core(
    stats: &CircStats,
    p: &BvmSineParams,
    variant: Variant,
    cfg: &SeriesConfig,
) -> Result<MessageLength> {
    if !(stats.n > 0.0) {
        return Err(Error::Domain(format!(
            "non-positive effective sample size {}",
            stats.n
        )));
    }
    let (blocks, log_c) = match variant {
        Variant::Sine => {
            let nd = log_norm_derivatives(p, cfg)?;
            (sine_blocks(p, &nd)?, nd.log_c)
        }
        Variant::Independent => {
            if p.lambda() != 0.0 {
                return Err(Error::Domain(format!(
                    "independent variant requires λ = 0, got {}",
                    p.lambda()
                )));
            }
            (independent_blocks(p)?, log_norm_constant(p, cfg)?)
        }
    };
    let d = variant.dim() as f64;
    let first = first_part_from_blocks(p, &blocks, stats.n);
    let nll = stats.nll_with(p, log_c);
    let second = (nll + 0.5 * d) / LN_2 + stats.n * resolution_bits_per_point();
    Ok(MessageLength::new(first, second))
}
