//! Repeated-sampling comparison of the point estimators.

use bvm::{
    estimate, kl_sine, likelihood_ratio_test, sample, wrap_angle, BvmSineParams, Method,
    SeriesConfig, Variant,
};
use serde::Deserialize;

use crate::InputError;

/// KL differences smaller than this count as a tie and contribute half
/// a win to each side.
const WIN_TIE_EPS: f64 = 1e-9;

/// Grid and replication settings, usually read from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub replicates: usize,
    pub n_values: Vec<usize>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho_values: Vec<f64>,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub mu2: f64,
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| InputError(format!("benchmark config: {e}")))?;
        if cfg.replicates == 0 || cfg.n_values.is_empty() || cfg.rho_values.is_empty() {
            return Err(InputError(
                "benchmark config needs replicates ≥ 1 and non-empty n/rho grids".into(),
            )
            .into());
        }
        Ok(cfg)
    }
}

/// Aggregates for one (method, N, ρ) cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub method: Method,
    pub n: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho: f64,
    /// Σ over the five coordinates of the squared mean error
    /// (angular errors wrapped).
    pub bias_sq: f64,
    /// Mean over replicates of the squared coordinate-error norm.
    pub mse: f64,
    pub kl_mean: f64,
    /// Win percentage of this method against MAP1/MAP2/MAP3 on
    /// per-replicate KL to the truth, ties split evenly.
    pub kl_win_pct: [f64; 3],
    pub lrt_stat_mean: f64,
    /// Fraction of replicates whose test against the same-replicate
    /// maximum-likelihood fit has p > 0.01.
    pub p_gt_001_frac: f64,
    /// Replicate fits that errored (excluded from the aggregates).
    pub failures: usize,
}

fn mix_seed(seed: u64, cell: u64, rep: u64) -> u64 {
    let mut z = seed
        ^ (cell + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (rep + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn coordinate_errors(est: &BvmSineParams, truth: &BvmSineParams) -> [f64; 5] {
    [
        wrap_angle(est.mu1() - truth.mu1()),
        wrap_angle(est.mu2() - truth.mu2()),
        est.kappa1() - truth.kappa1(),
        est.kappa2() - truth.kappa2(),
        est.lambda() - truth.lambda(),
    ]
}

struct ReplicateRecord {
    params: Option<BvmSineParams>,
    kl: Option<f64>,
    /// Statistic and p-value of the test against the replicate's
    /// maximum-likelihood fit.
    lrt: Option<(f64, f64)>,
}

/// Run every cell of the grid and aggregate per method.
pub fn run_cells(cfg: &BenchmarkConfig) -> anyhow::Result<Vec<CellSummary>> {
    let series = SeriesConfig::tight();
    let methods = Method::ALL;
    let mut out = Vec::new();
    let mut cell_index = 0u64;
    for &n in &cfg.n_values {
        for &rho in &cfg.rho_values {
            let truth = BvmSineParams::from_rho(cfg.mu1, cfg.mu2, cfg.kappa1, cfg.kappa2, rho)
                .map_err(|e| InputError(format!("benchmark truth parameters: {e}")))?;
            // records[m][r]
            let mut records: Vec<Vec<ReplicateRecord>> = methods
                .iter()
                .map(|_| Vec::with_capacity(cfg.replicates))
                .collect();
            let mut failures = vec![0usize; methods.len()];
            for rep in 0..cfg.replicates {
                let data = sample(&truth, n, mix_seed(cfg.seed, cell_index, rep as u64))?;
                let fits: Vec<Option<BvmSineParams>> = methods
                    .iter()
                    .enumerate()
                    .map(|(m, &method)| match estimate(&data, method, Variant::Sine) {
                        Ok(report) => Some(report.params_hat),
                        Err(_) => {
                            failures[m] += 1;
                            None
                        }
                    })
                    .collect();
                let ml = fits[0];
                for (m, fit) in fits.iter().enumerate() {
                    let kl = fit
                        .as_ref()
                        .and_then(|p| kl_sine(&truth, p, &series).ok());
                    let lrt = match (fit, &ml) {
                        (Some(p), Some(ml)) => likelihood_ratio_test(&data, ml, p)
                            .ok()
                            .map(|t| (t.statistic, t.p_value)),
                        _ => None,
                    };
                    records[m].push(ReplicateRecord {
                        params: *fit,
                        kl,
                        lrt,
                    });
                }
            }

            for (m, &method) in methods.iter().enumerate() {
                let ok: Vec<&BvmSineParams> =
                    records[m].iter().filter_map(|r| r.params.as_ref()).collect();
                let mut mean_err = [0.0f64; 5];
                let mut mse = 0.0;
                for p in &ok {
                    let e = coordinate_errors(p, &truth);
                    for (acc, v) in mean_err.iter_mut().zip(e) {
                        *acc += v;
                    }
                    mse += e.iter().map(|v| v * v).sum::<f64>();
                }
                let n_ok = ok.len().max(1) as f64;
                let bias_sq = mean_err.iter().map(|v| (v / n_ok).powi(2)).sum();
                mse /= n_ok;

                let kls: Vec<f64> = records[m].iter().filter_map(|r| r.kl).collect();
                let kl_mean = kls.iter().sum::<f64>() / kls.len().max(1) as f64;

                let mut kl_win_pct = [f64::NAN; 3];
                for (slot, opponent) in [Method::Map1, Method::Map2, Method::Map3]
                    .into_iter()
                    .enumerate()
                {
                    let o = methods.iter().position(|&x| x == opponent).unwrap();
                    let mut wins = 0.0;
                    let mut games = 0.0f64;
                    for (a, b) in records[m].iter().zip(&records[o]) {
                        if let (Some(ka), Some(kb)) = (a.kl, b.kl) {
                            games += 1.0;
                            if (ka - kb).abs() <= WIN_TIE_EPS {
                                wins += 0.5;
                            } else if ka < kb {
                                wins += 1.0;
                            }
                        }
                    }
                    kl_win_pct[slot] = 100.0 * wins / games.max(1.0);
                }

                let lrts: Vec<(f64, f64)> = records[m].iter().filter_map(|r| r.lrt).collect();
                let lrt_stat_mean =
                    lrts.iter().map(|t| t.0).sum::<f64>() / lrts.len().max(1) as f64;
                let p_gt_001_frac = lrts.iter().filter(|t| t.1 > 0.01).count() as f64
                    / lrts.len().max(1) as f64;

                out.push(CellSummary {
                    method,
                    n,
                    kappa1: cfg.kappa1,
                    kappa2: cfg.kappa2,
                    rho,
                    bias_sq,
                    mse,
                    kl_mean,
                    kl_win_pct,
                    lrt_stat_mean,
                    p_gt_001_frac,
                    failures: failures[m],
                });
            }
            cell_index += 1;
        }
    }
    Ok(out)
}

pub fn summaries_to_csv(cells: &[CellSummary]) -> String {
    let mut csv = String::from(
        "method,N,kappa1,kappa2,rho,bias_sq,mse,kl_mean,kl_win_pct_map1,kl_win_pct_map2,kl_win_pct_map3,lrt_stat_mean,p_gt_0.01_frac\n",
    );
    for c in cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            c.method.name(),
            c.n,
            c.kappa1,
            c.kappa2,
            c.rho,
            c.bias_sq,
            c.mse,
            c.kl_mean,
            c.kl_win_pct[0],
            c.kl_win_pct[1],
            c.kl_win_pct[2],
            c.lrt_stat_mean,
            c.p_gt_001_frac,
        ));
    }
    csv
}

/// Run the whole grid and render the report CSV.
pub fn run_estimator_benchmark(cfg: &BenchmarkConfig) -> anyhow::Result<String> {
    Ok(summaries_to_csv(&run_cells(cfg)?))
}
