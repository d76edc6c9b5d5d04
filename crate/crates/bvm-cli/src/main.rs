use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bvm::{estimate, Method, Variant};
use bvm_cli::{
    exit_code_for, ingest, run_estimator_benchmark, run_mixture, uniform_null_bits,
    AngleUnit, BenchmarkConfig, InputError,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ml,
    Map1,
    Map2,
    Map3,
    Mml,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ml => Method::Ml,
            MethodArg::Map1 => Method::Map1,
            MethodArg::Map2 => Method::Map2,
            MethodArg::Map3 => Method::Map3,
            MethodArg::Mml => Method::Mml,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Sine,
    Independent,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sine => Variant::Sine,
            VariantArg::Independent => Variant::Independent,
        }
    }
}

/// Fit torus distributions and mixtures to phi,psi angle data.
#[derive(Parser)]
#[command(name = "bvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one component and print the estimate as JSON
    Fit {
        /// CSV file with two columns phi,psi
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = AngleUnit::Radians)]
        unit: AngleUnit,
        #[arg(long, value_enum, default_value_t = MethodArg::Ml)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = VariantArg::Sine)]
        variant: VariantArg,
    },
    /// Search for the best mixture and write model, trace, contour,
    /// and null-comparison files
    Mixture {
        /// CSV file with two columns phi,psi
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = AngleUnit::Radians)]
        unit: AngleUnit,
        #[arg(long, value_enum, default_value_t = VariantArg::Sine)]
        variant: VariantArg,
        /// Seed for the contour-level sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on accepted search rounds
        #[arg(long = "max-iterations", default_value_t = 20)]
        max_iterations: usize,
        /// Angular resolution (radians) for the null comparison
        #[arg(long, default_value_t = 0.001)]
        epsilon: f64,
        /// Directory receiving model.json, trace.csv, contours.csv, null.csv
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Run the estimator comparison grid from a TOML config
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Write the report CSV here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Price a dataset under the uniform null model
    Null {
        /// Number of points to price
        #[arg(long, conflicts_with = "input")]
        n: Option<usize>,
        /// Count points from this CSV instead of passing --n
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AngleUnit::Radians)]
        unit: AngleUnit,
        /// Angular resolution in radians
        #[arg(long, default_value_t = 0.001)]
        epsilon: f64,
        /// Radius of the first circle
        #[arg(long, default_value_t = 1.0)]
        radius1: f64,
        /// Radius of the second circle
        #[arg(long, default_value_t = 1.0)]
        radius2: f64,
    },
}

fn params_json(p: &bvm::BvmSineParams) -> serde_json::Value {
    json!({
        "mu1_rad": p.mu1(),
        "mu2_rad": p.mu2(),
        "mu1_deg": p.mu1().to_degrees(),
        "mu2_deg": p.mu2().to_degrees(),
        "kappa1": p.kappa1(),
        "kappa2": p.kappa2(),
        "lambda": p.lambda(),
        "rho": p.rho(),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit {
            input,
            unit,
            method,
            variant,
        } => {
            let dataset = ingest(&input, unit)?;
            if dataset.n() < 5 {
                return Err(InputError(format!(
                    "fitting needs at least 5 points, got {}",
                    dataset.n()
                ))
                .into());
            }
            let report = estimate(dataset.points(), method.into(), variant.into())?;
            let out = json!({
                "method": report.method.name(),
                "variant": match variant { VariantArg::Sine => "sine", VariantArg::Independent => "independent" },
                "n": dataset.n(),
                "converged": report.converged,
                "objective_value": report.objective_value,
                "optimizer_evals": report.optimizer_evals,
                "params": params_json(&report.params_hat),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Mixture {
            input,
            unit,
            variant,
            seed,
            max_iterations,
            epsilon,
            output_dir,
        } => {
            let dataset = ingest(&input, unit)?;
            let run = run_mixture(&dataset, variant.into(), seed, max_iterations, epsilon)?;
            std::fs::create_dir_all(&output_dir)
                .with_context(|| format!("creating {}", output_dir.display()))?;
            let write = |name: &str, contents: &str| -> anyhow::Result<()> {
                let path = output_dir.join(name);
                std::fs::write(&path, contents)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
                Ok(())
            };
            write("model.json", &run.model_json)?;
            write("trace.csv", &run.trace_csv)?;
            write("contours.csv", &run.contour_csv)?;
            write("null.csv", &run.null_csv)?;
            println!(
                "k = {}, total = {:.1} bits, {:.4} bits/point (uniform null {:.4})",
                run.outcome.model.k(),
                run.mixture_null.total_bits,
                run.mixture_null.bits_per_point,
                run.uniform.bits_per_point
            );
        }
        Command::Benchmark { config, output } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = BenchmarkConfig::from_toml(&text)?;
            let csv = run_estimator_benchmark(&cfg)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &csv)
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
        }
        Command::Null {
            n,
            input,
            unit,
            epsilon,
            radius1,
            radius2,
        } => {
            let n = match (n, input) {
                (Some(n), _) => n,
                (None, Some(path)) => ingest(&path, unit)?.n(),
                (None, None) => {
                    return Err(InputError("pass --n or --input".into()).into());
                }
            };
            let report = uniform_null_bits(n, epsilon, radius1, radius2)?;
            println!("model,total_bits,bits_per_point");
            println!(
                "{},{:.4},{:.4}",
                report.model, report.total_bits, report.bits_per_point
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
