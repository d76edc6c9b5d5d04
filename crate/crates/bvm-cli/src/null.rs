//! Baseline code lengths for encoding angle pairs without a model.

use serde::Serialize;

use crate::InputError;

/// Code-length summary for one encoding of the dataset.
#[derive(Debug, Clone, Serialize)]
pub struct NullModelReport {
    /// "UNIFORM" or "MIXTURE".
    pub model: String,
    pub total_bits: f64,
    pub bits_per_point: f64,
}

impl NullModelReport {
    pub fn new(model: &str, n: usize, bits_per_point: f64) -> Self {
        Self {
            model: model.to_string(),
            total_bits: n as f64 * bits_per_point,
            bits_per_point,
        }
    }
}

/// Cost of encoding `n` angle pairs uniformly over a torus whose two
/// circles have radii `big_r` and `small_r`, at angular resolution
/// `epsilon` radians: `2·log₂(2π) − log₂(ε²/(R·r))` bits per point.
pub fn uniform_null_bits(
    n: usize,
    epsilon: f64,
    big_r: f64,
    small_r: f64,
) -> anyhow::Result<NullModelReport> {
    if !(epsilon > 0.0) {
        return Err(InputError(format!("epsilon must be positive, got {epsilon}")).into());
    }
    if !(big_r > 0.0) || !(small_r > 0.0) {
        return Err(InputError("torus radii must be positive".into()).into());
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let per_point = 2.0 * two_pi.log2() - (epsilon * epsilon / (big_r * small_r)).log2();
    Ok(NullModelReport::new("UNIFORM", n, per_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_rate_at_millirad_resolution() {
        let report = uniform_null_bits(1, 0.001, 1.0, 1.0).unwrap();
        assert!((report.bits_per_point - 25.2346).abs() < 5e-5);
        assert!((report.bits_per_point - 25.23456082826881).abs() < 1e-12);
    }

    #[test]
    fn full_circle_resolution_costs_nothing() {
        let report = uniform_null_bits(7, 2.0 * PI, 1.0, 1.0).unwrap();
        assert!(report.bits_per_point.abs() < 1e-12);
        assert!(report.total_bits.abs() < 1e-12);
    }

    #[test]
    fn total_scales_with_count() {
        let unit = uniform_null_bits(1, 0.001, 1.0, 1.0).unwrap();
        let thousand = uniform_null_bits(1000, 0.001, 1.0, 1.0).unwrap();
        assert!((thousand.total_bits - 1000.0 * unit.bits_per_point).abs() < 1e-9);
        assert!((thousand.bits_per_point - thousand.total_bits / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_config() {
        assert!(uniform_null_bits(1, 0.0, 1.0, 1.0).is_err());
        assert!(uniform_null_bits(1, 0.001, -1.0, 1.0).is_err());
    }
}
