//! Normalization constant of the sine model and its partial derivatives.
//!
//! The constant is `c(κ1, κ2, λ) = 4π² Σ_{j≥0} C(2j,j) e^j I_j(κ1) I_j(κ2)`
//! with `e = λ²/(4 κ1 κ2)`, which converges because the parameter space
//! keeps `λ² < κ1 κ2`. Every quantity is carried as a log-magnitude (plus
//! a sign for the λ-derivatives, which flip with the sign of λ) so that
//! concentrations in the thousands cannot overflow. Each series is summed
//! with its leading term factored out and terminated when the latest
//! term's share of the running sum falls below a configured ratio; running
//! out of the term budget is an error, never a silent truncation.

use crate::params::BvmSineParams;
use crate::special::LogBesselLadder;
use crate::{Error, Result};

/// `ln(4π²)`.
pub(crate) const LN_FOUR_PI_SQ: f64 = 3.675754132818691;
/// `ln(8π²)`.
pub(crate) const LN_EIGHT_PI_SQ: f64 = 4.368901313378636;

/// Termination control for the normalization-constant series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesConfig {
    /// Stop once the latest term contributes less than this fraction of
    /// the running sum (applied to every series being accumulated).
    pub termination_ratio: f64,
    /// Hard budget; exceeding it yields [`Error::SeriesNotConverged`].
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            termination_ratio: 1e-6,
            max_terms: 1000,
        }
    }
}

impl SeriesConfig {
    /// Tight termination used inside optimizers, where step discontinuities
    /// from a coarse cutoff would drown the convergence tolerance.
    pub fn tight() -> Self {
        Self {
            termination_ratio: 1e-12,
            max_terms: 1000,
        }
    }
}

/// A quantity stored as `sign * exp(log_abs)`.
///
/// `sign` is -1, 0, or +1; when it is 0 the magnitude is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub log_abs: f64,
    pub sign: i8,
}

impl SignedLog {
    pub fn zero() -> Self {
        Self {
            log_abs: f64::NEG_INFINITY,
            sign: 0,
        }
    }

    pub fn new(log_abs: f64, sign: i8) -> Self {
        Self { log_abs, sign }
    }

    /// The represented value in linear scale (may underflow to ±0).
    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    /// `sign * exp(log_abs - log_ref)`, for forming ratios like `c_λ / c`
    /// without leaving log scale prematurely.
    pub fn ratio_to(&self, log_ref: f64) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * (self.log_abs - log_ref).exp(),
        }
    }
}

/// Log-scale normalization constant together with all first and second
/// partial derivatives with respect to `(κ1, κ2, λ)`.
///
/// Derivatives with respect to κ are positive, so a bare log magnitude
/// suffices; the odd λ-derivatives carry the sign of λ explicitly and are
/// exactly zero at `λ = 0`. `log_c_ll` is positive for all λ.
#[derive(Debug, Clone, Copy)]
pub struct NormDerivatives {
    pub log_c: f64,
    pub log_c_k1: f64,
    pub log_c_k2: f64,
    pub log_c_k1k1: f64,
    pub log_c_k2k2: f64,
    pub log_c_k1k2: f64,
    pub log_c_l: SignedLog,
    pub log_c_k1l: SignedLog,
    pub log_c_k2l: SignedLog,
    pub log_c_ll: f64,
}

impl NormDerivatives {
    /// `E[cos(θ1 - μ1)] = c_κ1 / c`.
    pub fn e_cos1(&self) -> f64 {
        (self.log_c_k1 - self.log_c).exp()
    }

    /// `E[cos(θ2 - μ2)] = c_κ2 / c`.
    pub fn e_cos2(&self) -> f64 {
        (self.log_c_k2 - self.log_c).exp()
    }

    /// `E[sin(θ1 - μ1) sin(θ2 - μ2)] = c_λ / c`.
    pub fn e_sinsin(&self) -> f64 {
        self.log_c_l.ratio_to(self.log_c)
    }

    /// `E[cos(θ1 - μ1) cos(θ2 - μ2)] = c_κ1κ2 / c`.
    pub fn e_coscos(&self) -> f64 {
        (self.log_c_k1k2 - self.log_c).exp()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln c(κ1, κ2, λ)`.
pub fn log_norm_constant(p: &BvmSineParams, cfg: &SeriesConfig) -> Result<f64> {
    let (k1, k2, l) = (p.kappa1(), p.kappa2(), p.lambda());
    let mut lad1 = LogBesselLadder::new(k1, 34);
    let mut lad2 = LogBesselLadder::new(k2, 34);
    if l == 0.0 {
        return Ok(LN_FOUR_PI_SQ + lad1.log_i(0) + lad2.log_i(0));
    }
    let ln_e = (l * l / (4.0 * k1 * k2)).ln();
    let base = lad1.log_i(0) + lad2.log_i(0);
    let mut sum = 1.0_f64;
    let mut log_binom = 0.0_f64;
    for j in 1..=cfg.max_terms {
        lad1.ensure(j);
        lad2.ensure(j);
        let jf = j as f64;
        log_binom += (2.0 * (2.0 * jf - 1.0) / jf).ln();
        let t = (log_binom + jf * ln_e + lad1.log_i(j) + lad2.log_i(j) - base).exp();
        sum += t;
        if t < cfg.termination_ratio * sum {
            return Ok(LN_FOUR_PI_SQ + base + sum.ln());
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: cfg.max_terms,
    })
}

/// `ln c` together with all nine log-scale partial derivatives.
///
/// At `λ = 0` the odd λ-derivatives short-circuit to exact zeros, the
/// κ-derivatives collapse to their single-Bessel closed forms, and
/// `c_λλ` takes its finite limit `4π² I_1(κ1) I_1(κ2)/(κ1 κ2)`.
pub fn log_norm_derivatives(p: &BvmSineParams, cfg: &SeriesConfig) -> Result<NormDerivatives> {
    let (k1, k2, l) = (p.kappa1(), p.kappa2(), p.lambda());
    let mut lad1 = LogBesselLadder::new(k1, 36);
    let mut lad2 = LogBesselLadder::new(k2, 36);

    if l == 0.0 {
        let (i1_0, i1_1, i1_2) = (lad1.log_i(0), lad1.log_i(1), lad1.log_i(2));
        let (i2_0, i2_1, i2_2) = (lad2.log_i(0), lad2.log_i(1), lad2.log_i(2));
        return Ok(NormDerivatives {
            log_c: LN_FOUR_PI_SQ + i1_0 + i2_0,
            log_c_k1: LN_FOUR_PI_SQ + i1_1 + i2_0,
            log_c_k2: LN_FOUR_PI_SQ + i1_0 + i2_1,
            log_c_k1k1: LN_FOUR_PI_SQ + i2_0 + log_add_exp(i1_2, i1_1 - k1.ln()),
            log_c_k2k2: LN_FOUR_PI_SQ + i1_0 + log_add_exp(i2_2, i2_1 - k2.ln()),
            log_c_k1k2: LN_FOUR_PI_SQ + i1_1 + i2_1,
            log_c_l: SignedLog::zero(),
            log_c_k1l: SignedLog::zero(),
            log_c_k2l: SignedLog::zero(),
            log_c_ll: LN_FOUR_PI_SQ + i1_1 + i2_1 - k1.ln() - k2.ln(),
        });
    }

    let ln_e = (l * l / (4.0 * k1 * k2)).ln();
    let sign = if l > 0.0 { 1_i8 } else { -1 };
    let ln_abs_l = l.abs().ln();

    // First-kind sums Σ_j C(2j,j) e^j I_{j+m}(κ1) I_{j+n}(κ2), each
    // normalized by its j = 0 term; the (m, n) offsets below feed c and
    // its κ-derivatives.
    const OFFSETS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
    let mut base1 = [0.0_f64; 6];
    for (i, (m, n)) in OFFSETS.iter().enumerate() {
        base1[i] = lad1.log_i(*m) + lad2.log_i(*n);
    }
    let mut sum1 = [1.0_f64; 6];

    // Second-kind sums Σ_{j≥1} C(2j,j) j e^j I_{j+m}(κ1) I_{j+n}(κ2)
    // (offsets (0,0), (1,0), (0,1)) and the λλ sum with the extra
    // (2j - 1) factor; each normalized by its j = 1 term.
    const OFFSETS2: [(usize, usize); 3] = [(0, 0), (1, 0), (0, 1)];
    let ln2 = std::f64::consts::LN_2;
    let mut base2 = [0.0_f64; 3];
    for (i, (m, n)) in OFFSETS2.iter().enumerate() {
        base2[i] = ln2 + ln_e + lad1.log_i(1 + m) + lad2.log_i(1 + n);
    }
    let base_ll = ln2 + ln_e + lad1.log_i(1) + lad2.log_i(1);
    let mut sum2 = [0.0_f64; 3];
    let mut sum_ll = 0.0_f64;

    let mut log_binom = 0.0_f64;
    let mut converged = false;
    let mut terms_used = 0;
    for j in 1..=cfg.max_terms {
        lad1.ensure(j + 2);
        lad2.ensure(j + 2);
        let jf = j as f64;
        log_binom += (2.0 * (2.0 * jf - 1.0) / jf).ln();
        let w = log_binom + jf * ln_e;

        let mut worst = 0.0_f64;
        for (i, (m, n)) in OFFSETS.iter().enumerate() {
            let t = (w + lad1.log_i(j + m) + lad2.log_i(j + n) - base1[i]).exp();
            sum1[i] += t;
            worst = worst.max(t / sum1[i]);
        }
        let wj = w + jf.ln();
        for (i, (m, n)) in OFFSETS2.iter().enumerate() {
            let t = (wj + lad1.log_i(j + m) + lad2.log_i(j + n) - base2[i]).exp();
            sum2[i] += t;
            worst = worst.max(t / sum2[i]);
        }
        let t = (wj + (2.0 * jf - 1.0).ln() + lad1.log_i(j) + lad2.log_i(j) - base_ll).exp();
        sum_ll += t;
        worst = worst.max(t / sum_ll);

        terms_used = j;
        if j >= 2 && worst < cfg.termination_ratio {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesNotConverged {
            max_terms: cfg.max_terms,
        });
    }
    let _ = terms_used;

    let s1 = |i: usize| LN_FOUR_PI_SQ + base1[i] + sum1[i].ln();
    let log_c = s1(0);
    let log_c_k1 = s1(1);
    let log_c_k2 = s1(2);
    let log_c_k1k2 = s1(3);
    // c_κκ = Σ ... I_{j+2} I_j + (1/κ) Σ ... I_{j+1} I_j, assembled in
    // log scale relative to the first-derivative magnitude.
    let log_c_k1k1 = log_c_k1 + log_add_exp(s1(4) - log_c_k1, -k1.ln());
    let log_c_k2k2 = log_c_k2 + log_add_exp(s1(5) - log_c_k2, -k2.ln());

    let s2 = |i: usize, sums: &[f64; 3]| LN_EIGHT_PI_SQ - ln_abs_l + base2[i] + sums[i].ln();
    let log_c_l = SignedLog::new(s2(0, &sum2), sign);
    let log_c_k1l = SignedLog::new(s2(1, &sum2), sign);
    let log_c_k2l = SignedLog::new(s2(2, &sum2), sign);
    let log_c_ll = LN_EIGHT_PI_SQ - 2.0 * ln_abs_l + base_ll + sum_ll.ln();

    Ok(NormDerivatives {
        log_c,
        log_c_k1,
        log_c_k2,
        log_c_k1k1,
        log_c_k2k2,
        log_c_k1k2,
        log_c_l,
        log_c_k1l,
        log_c_k2l,
        log_c_ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel_ratio, log_bessel_i0};
    use std::f64::consts::PI;

    const TIGHT: SeriesConfig = SeriesConfig {
        termination_ratio: 1e-13,
        max_terms: 1000,
    };

    fn params(k1: f64, k2: f64, l: f64) -> BvmSineParams {
        BvmSineParams::new(0.0, 0.0, k1, k2, l).unwrap()
    }

    /// Independent oracle: trapezoidal quadrature of the defining double
    /// integral on a uniform periodic grid (spectrally accurate here).
    fn quadrature_log_c(k1: f64, k2: f64, l: f64, n: usize) -> f64 {
        let step = 2.0 * PI / n as f64;
        let mut max_e = f64::NEG_INFINITY;
        let mut exponents = Vec::with_capacity(n * n);
        for i in 0..n {
            let t1 = -PI + step * i as f64;
            for j in 0..n {
                let t2 = -PI + step * j as f64;
                let e = k1 * t1.cos() + k2 * t2.cos() + l * t1.sin() * t2.sin();
                max_e = max_e.max(e);
                exponents.push(e);
            }
        }
        let sum: f64 = exponents.iter().map(|e| (e - max_e).exp()).sum();
        max_e + sum.ln() + 2.0 * step.ln()
    }

    #[test]
    fn independent_case_closed_form() {
        // c = 4π² I_0(κ1) I_0(κ2) when λ = 0; reference from 30-digit
        // evaluation at κ1 = 2, κ2 = 3.
        let got = log_norm_constant(&params(2.0, 3.0, 0.0), &SeriesConfig::default()).unwrap();
        assert!((got - 6.085055296115068).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn uniform_limit() {
        let p = params(0.0, 0.0, 0.0); // κ clamped to the floor
        let got = log_norm_constant(&p, &SeriesConfig::default()).unwrap();
        assert!((got - LN_FOUR_PI_SQ).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn matches_quadrature_with_interaction() {
        for &(k1, k2, l) in &[
            (10.0, 10.0, 9.0),
            (1.0, 10.0, 2.0),
            (0.1, 0.1, 0.05),
            (5.0, 2.0, -2.5),
            (1.0, 1.0, 0.9),
        ] {
            let series = log_norm_constant(&params(k1, k2, l), &TIGHT).unwrap();
            let quad = quadrature_log_c(k1, k2, l, 512);
            let rel = (series - quad).abs() / quad.abs();
            assert!(rel < 1e-9, "({k1},{k2},{l}): series {series}, quad {quad}");
        }
    }

    #[test]
    fn default_termination_close_to_tight() {
        let p = params(10.0, 10.0, 9.0);
        let coarse = log_norm_constant(&p, &SeriesConfig::default()).unwrap();
        let tight = log_norm_constant(&p, &TIGHT).unwrap();
        assert!((coarse - tight).abs() / tight.abs() < 1e-5);
    }

    #[test]
    fn first_derivatives_match_finite_differences_of_log_c() {
        let h = 1e-6;
        for &(k1, k2, l) in &[(1.0, 10.0, 2.0), (5.0, 2.0, -2.5), (0.3, 0.7, 0.2)] {
            let nd = log_norm_derivatives(&params(k1, k2, l), &TIGHT).unwrap();
            let lc = |a: f64, b: f64, c: f64| log_norm_constant(&params(a, b, c), &TIGHT).unwrap();
            let fd_k1 = (lc(k1 + h, k2, l) - lc(k1 - h, k2, l)) / (2.0 * h);
            let fd_k2 = (lc(k1, k2 + h, l) - lc(k1, k2 - h, l)) / (2.0 * h);
            let fd_l = (lc(k1, k2, l + h) - lc(k1, k2, l - h)) / (2.0 * h);
            assert!(((nd.log_c_k1 - nd.log_c).exp() - fd_k1).abs() < 1e-7 * fd_k1.abs());
            assert!(((nd.log_c_k2 - nd.log_c).exp() - fd_k2).abs() < 1e-7 * fd_k2.abs());
            let dl = nd.log_c_l.ratio_to(nd.log_c);
            assert!((dl - fd_l).abs() < 1e-7 * fd_l.abs().max(1e-6), "{dl} vs {fd_l}");
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences_of_first() {
        // Differencing the (exactly computed) first-derivative ratios
        // avoids the noise floor of double-differencing ln c itself.
        let h = 1e-5;
        for &(k1, k2, l) in &[(1.0, 10.0, 2.0), (5.0, 2.0, -2.5)] {
            let nd = |a: f64, b: f64, c: f64| log_norm_derivatives(&params(a, b, c), &TIGHT).unwrap();
            let at = nd(k1, k2, l);
            let dk1 = |d: &NormDerivatives| (d.log_c_k1 - d.log_c).exp();
            let dl = |d: &NormDerivatives| d.log_c_l.ratio_to(d.log_c);

            // ∂²lnc/∂κ1² = c_k1k1/c - (c_k1/c)²
            let got = (at.log_c_k1k1 - at.log_c).exp() - dk1(&at).powi(2);
            let fd = (dk1(&nd(k1 + h, k2, l)) - dk1(&nd(k1 - h, k2, l))) / (2.0 * h);
            assert!((got - fd).abs() < 1e-6 * fd.abs().max(1e-3), "k1k1 {got} vs {fd}");

            // ∂²lnc/∂κ1∂κ2 = c_k1k2/c - (c_k1/c)(c_k2/c)
            let dk2 = |d: &NormDerivatives| (d.log_c_k2 - d.log_c).exp();
            let got = (at.log_c_k1k2 - at.log_c).exp() - dk1(&at) * dk2(&at);
            let fd = (dk1(&nd(k1, k2 + h, l)) - dk1(&nd(k1, k2 - h, l))) / (2.0 * h);
            assert!((got - fd).abs() < 1e-6 * fd.abs().max(1e-3), "k1k2 {got} vs {fd}");

            // ∂²lnc/∂λ² = c_ll/c - (c_l/c)²
            let got = (at.log_c_ll - at.log_c).exp() - dl(&at).powi(2);
            let fd = (dl(&nd(k1, k2, l + h)) - dl(&nd(k1, k2, l - h))) / (2.0 * h);
            assert!((got - fd).abs() < 1e-6 * fd.abs().max(1e-3), "ll {got} vs {fd}");

            // ∂²lnc/∂κ1∂λ = c_k1l/c - (c_k1/c)(c_l/c)
            let got = at.log_c_k1l.ratio_to(at.log_c) - dk1(&at) * dl(&at);
            let fd = (dk1(&nd(k1, k2, l + h)) - dk1(&nd(k1, k2, l - h))) / (2.0 * h);
            assert!((got - fd).abs() < 1e-6 * fd.abs().max(1e-3), "k1l {got} vs {fd}");
        }
    }

    #[test]
    fn lambda_zero_short_circuits() {
        let nd = log_norm_derivatives(&params(2.0, 3.0, 0.0), &SeriesConfig::default()).unwrap();
        assert_eq!(nd.log_c_l.sign, 0);
        assert_eq!(nd.log_c_k1l.sign, 0);
        assert_eq!(nd.log_c_k2l.sign, 0);
        assert_eq!(nd.e_sinsin(), 0.0);
        // Independent factorization: E[cos] = A(κ) per axis and the
        // cosine product factorizes.
        assert!((nd.e_cos1() - bessel_ratio(2.0)).abs() < 1e-13);
        assert!((nd.e_cos2() - bessel_ratio(3.0)).abs() < 1e-13);
        assert!((nd.e_coscos() - bessel_ratio(2.0) * bessel_ratio(3.0)).abs() < 1e-13);
        // c_λλ/c limit = A(κ1) A(κ2) / (κ1 κ2).
        let want = bessel_ratio(2.0) * bessel_ratio(3.0) / 6.0;
        assert!(((nd.log_c_ll - nd.log_c).exp() - want).abs() < 1e-13);
    }

    #[test]
    fn lambda_sign_structure() {
        let nd = log_norm_derivatives(&params(4.0, 4.0, -3.0), &SeriesConfig::default()).unwrap();
        assert_eq!(nd.log_c_l.sign, -1);
        assert_eq!(nd.log_c_k1l.sign, -1);
        assert_eq!(nd.log_c_k2l.sign, -1);
        assert!(nd.log_c_ll.is_finite());
        let pos = log_norm_derivatives(&params(4.0, 4.0, 3.0), &SeriesConfig::default()).unwrap();
        // Flipping λ flips only the odd derivatives.
        assert!((pos.log_c - nd.log_c).abs() < 1e-13);
        assert!((pos.log_c_l.log_abs - nd.log_c_l.log_abs).abs() < 1e-13);
        assert_eq!(pos.log_c_l.sign, 1);
    }

    #[test]
    fn lambda_continuity_at_zero() {
        let near = log_norm_derivatives(&params(2.0, 3.0, 1e-8), &TIGHT).unwrap();
        let at = log_norm_derivatives(&params(2.0, 3.0, 0.0), &TIGHT).unwrap();
        assert!((near.log_c - at.log_c).abs() < 1e-12);
        assert!((near.log_c_k1 - at.log_c_k1).abs() < 1e-12);
        assert!((near.log_c_k1k1 - at.log_c_k1k1).abs() < 1e-10);
        assert!((near.log_c_ll - at.log_c_ll).abs() < 1e-10);
        assert!(near.e_sinsin().abs() < 1e-8);
    }

    #[test]
    fn swapping_axes_swaps_derivatives() {
        let a = log_norm_derivatives(&params(1.5, 6.0, 2.0), &TIGHT).unwrap();
        let b = log_norm_derivatives(&params(6.0, 1.5, 2.0), &TIGHT).unwrap();
        assert!((a.log_c - b.log_c).abs() < 1e-12);
        assert!((a.log_c_k1 - b.log_c_k2).abs() < 1e-12);
        assert!((a.log_c_k1k1 - b.log_c_k2k2).abs() < 1e-12);
        assert!((a.log_c_k1l.log_abs - b.log_c_k2l.log_abs).abs() < 1e-12);
    }

    #[test]
    fn exhausted_budget_is_an_error() {
        let cfg = SeriesConfig {
            termination_ratio: 1e-6,
            max_terms: 3,
        };
        assert!(matches!(
            log_norm_constant(&params(10.0, 10.0, 9.0), &cfg),
            Err(Error::SeriesNotConverged { max_terms: 3 })
        ));
        assert!(log_norm_derivatives(&params(10.0, 10.0, 9.0), &cfg).is_err());
    }

    #[test]
    fn norm_constant_agrees_with_bessel_identity_far_from_origin() {
        // Large equal concentrations, no interaction: sanity against the
        // scalar Bessel path.
        let p = params(500.0, 500.0, 0.0);
        let got = log_norm_constant(&p, &SeriesConfig::default()).unwrap();
        let want = LN_FOUR_PI_SQ + 2.0 * log_bessel_i0(500.0);
        assert!((got - want).abs() < 1e-10);
    }
}
