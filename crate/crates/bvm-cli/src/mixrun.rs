//! End-to-end mixture run: search, model JSON, trace CSV, contour CSV,
//! and the null-model comparison.

use bvm::{search_optimal_mixture, SearchConfig, SearchOutcome, Variant};
use serde_json::json;

use crate::contour::{component_contours, contour_csv};
use crate::ingest::AngleDataset;
use crate::null::{uniform_null_bits, NullModelReport};
use crate::InputError;

/// Fewest points worth running the structure search on.
const MIN_POINTS: usize = 20;

/// All artifacts of one mixture run, rendered and ready to write.
#[derive(Debug)]
pub struct MixtureRun {
    pub outcome: SearchOutcome,
    pub uniform: NullModelReport,
    pub mixture_null: NullModelReport,
    pub model_json: String,
    pub trace_csv: String,
    pub contour_csv: String,
    pub null_csv: String,
}

fn variant_name(variant: Variant) -> &'static str {
    match variant {
        Variant::Sine => "sine",
        Variant::Independent => "independent",
    }
}

pub fn run_mixture(
    dataset: &AngleDataset,
    variant: Variant,
    seed: u64,
    max_sweeps: usize,
    epsilon: f64,
) -> anyhow::Result<MixtureRun> {
    let n = dataset.n();
    if n < MIN_POINTS {
        return Err(InputError(format!(
            "mixture search needs at least {MIN_POINTS} points, got {n}"
        ))
        .into());
    }
    let cfg = SearchConfig {
        max_sweeps,
        ..SearchConfig::default()
    };
    let outcome = search_optimal_mixture(dataset.points(), variant, &cfg)?;
    let model = &outcome.model;

    let components: Vec<serde_json::Value> = model
        .components()
        .iter()
        .map(|c| {
            let p = c.params();
            json!({
                "weight": c.weight(),
                "mu1_rad": p.mu1(),
                "mu2_rad": p.mu2(),
                "mu1_deg": p.mu1().to_degrees(),
                "mu2_deg": p.mu2().to_degrees(),
                "kappa1": p.kappa1(),
                "kappa2": p.kappa2(),
                "lambda": p.lambda(),
                "rho": p.rho(),
            })
        })
        .collect();
    let message = model.message();
    let model_json = format!(
        "{}\n",
        serde_json::to_string_pretty(&json!({
            "variant": variant_name(variant),
            "k": model.k(),
            "n": n,
            "seed": seed,
            "message_bits": {
                "first_part": message.first_part,
                "second_part": message.second_part,
                "total": message.total,
            },
            "components": components,
        }))?
    );

    let mut trace_csv = String::from("iteration,k,first_part_bits,second_part_bits,total_bits\n");
    for row in &outcome.trace {
        trace_csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            row.iteration, row.k, row.first_part, row.second_part, row.total
        ));
    }

    let rings = component_contours(model, seed)?;
    let contour_csv = contour_csv(&rings);

    let uniform = uniform_null_bits(n, epsilon, 1.0, 1.0)?;
    let mixture_null = NullModelReport {
        model: "MIXTURE".to_string(),
        total_bits: message.total,
        bits_per_point: message.total / n as f64,
    };
    let null_csv = format!(
        "model,total_bits,bits_per_point\nUNIFORM,{:.4},{:.4}\nMIXTURE,{:.4},{:.4}\n",
        uniform.total_bits, uniform.bits_per_point, mixture_null.total_bits,
        mixture_null.bits_per_point
    );

    Ok(MixtureRun {
        outcome,
        uniform,
        mixture_null,
        model_json,
        trace_csv,
        contour_csv,
        null_csv,
    })
}
