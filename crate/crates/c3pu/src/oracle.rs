//! Exact and fixed-point reference MACs, plus error reporting.
//!
//! The analog array is always judged against two baselines: the exact
//! floating-point dot product, and a digital fixed-point MAC of configurable
//! operand widths. Both operate on the same row-major weight layout the
//! array uses (`weights[row][column]`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounding rule used when an operand is quantized onto its integer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round to the nearest grid point (ties away from zero).
    #[default]
    Nearest,
    /// Drop the fractional part (floor on non-negative operands).
    Truncate,
}

/// Operand widths of the fixed-point baseline.
///
/// Operands live in [0, 1] and quantize onto `2^bits` levels, i.e. the grid
/// `k / (2^bits − 1)` — both 0 and 1 are representable. Accumulation is
/// exact integer arithmetic; only the operands lose precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FxpFormat {
    /// Input operand width in bits. Default: 8.
    pub input_bits: u32,
    /// Weight operand width in bits. Default: 8.
    pub weight_bits: u32,
    /// Rounding rule. Default: nearest.
    pub rounding: Rounding,
}

impl Default for FxpFormat {
    fn default() -> Self {
        FxpFormat {
            input_bits: 8,
            weight_bits: 8,
            rounding: Rounding::Nearest,
        }
    }
}

impl FxpFormat {
    /// Shorthand for a `input_bits`×`weight_bits` format with default rounding.
    pub fn new(input_bits: u32, weight_bits: u32) -> Self {
        FxpFormat {
            input_bits,
            weight_bits,
            ..FxpFormat::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, bits) in [
            ("input_bits", self.input_bits),
            ("weight_bits", self.weight_bits),
        ] {
            if !(1..=24).contains(&bits) {
                return Err(Error::param(
                    name,
                    format!("must lie in 1..=24 to keep integer accumulation exact, got {bits}"),
                ));
            }
        }
        Ok(())
    }
}

/// Integer code of `x` on the `levels`-point grid over [0, 1].
fn quantize_unit(x: f64, max_code: u64, rounding: Rounding) -> u64 {
    let scaled = x * max_code as f64;
    let code = match rounding {
        Rounding::Nearest => scaled.round(),
        Rounding::Truncate => scaled.floor(),
    };
    code as u64
}

fn check_unit_interval(what: &str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(Error::input(
                what,
                format!("entry {i} is {v}; fixed-point operands must lie in [0, 1]"),
            ));
        }
    }
    Ok(())
}

fn check_matrix(inputs: &[f64], weights: &[Vec<f64>]) -> Result<usize> {
    if weights.len() != inputs.len() {
        return Err(Error::DimensionMismatch {
            what: "weight rows vs inputs".into(),
            expected: inputs.len(),
            got: weights.len(),
        });
    }
    let cols = weights.first().map(Vec::len).unwrap_or(0);
    if cols == 0 {
        return Err(Error::input(
            "weights",
            "matrix must have at least one column",
        ));
    }
    for (i, row) in weights.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch {
                what: format!("weight row {i}"),
                expected: cols,
                got: row.len(),
            });
        }
    }
    Ok(cols)
}

/// Exact floating-point MAC: `out[j] = Σ_i inputs[i] · weights[i][j]`.
pub fn ideal_mac(inputs: &[f64], weights: &[Vec<f64>]) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Err(Error::input("inputs", "need at least one entry"));
    }
    let cols = check_matrix(inputs, weights)?;
    let mut out = vec![0.0; cols];
    for (x, row) in inputs.iter().zip(weights) {
        for (acc, w) in out.iter_mut().zip(row) {
            *acc += x * w;
        }
    }
    Ok(out)
}

/// Fixed-point MAC: operands quantized per `fmt`, products accumulated in
/// exact integer arithmetic, result rescaled to the unit domain.
pub fn fxp_mac(inputs: &[f64], weights: &[Vec<f64>], fmt: &FxpFormat) -> Result<Vec<f64>> {
    fmt.validate()?;
    if inputs.is_empty() {
        return Err(Error::input("inputs", "need at least one entry"));
    }
    let cols = check_matrix(inputs, weights)?;
    check_unit_interval("inputs", inputs)?;
    for row in weights {
        check_unit_interval("weights", row)?;
    }

    let in_max: u64 = (1 << fmt.input_bits) - 1;
    let w_max: u64 = (1 << fmt.weight_bits) - 1;
    let mut acc = vec![0u64; cols];
    for (x, row) in inputs.iter().zip(weights) {
        let qx = quantize_unit(*x, in_max, fmt.rounding);
        for (a, w) in acc.iter_mut().zip(row) {
            *a += qx * quantize_unit(*w, w_max, fmt.rounding);
        }
    }
    let scale = (in_max * w_max) as f64;
    Ok(acc.into_iter().map(|a| a as f64 / scale).collect())
}

/// Error metrics of an observed vector (or batch) against its expected
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean per-column error: relative percent where the expected value is
    /// nonzero, absolute difference where it is zero (see `zero_expected`).
    pub per_column_pct: Vec<f64>,
    /// Columns where at least one expected entry was zero, making the
    /// reported figure an absolute difference instead of a percentage.
    pub zero_expected: Vec<bool>,
    /// Mean of the per-entry errors over all columns and samples.
    pub average_pct: f64,
    /// Mean squared error over all entries (same units as the data).
    pub mse: f64,
    /// Number of observed/expected vector pairs aggregated.
    pub n_samples: usize,
}

/// Compares one observed vector against its expected values.
pub fn error_report(observed: &[f64], expected: &[f64]) -> Result<ErrorReport> {
    error_report_batch(&[observed.to_vec()], &[expected.to_vec()])
}

/// Compares a batch of observed vectors against expected vectors, averaging
/// per-column and overall.
pub fn error_report_batch(observed: &[Vec<f64>], expected: &[Vec<f64>]) -> Result<ErrorReport> {
    if observed.is_empty() || observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            what: "observed vs expected samples".into(),
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let cols = expected[0].len();
    if cols == 0 {
        return Err(Error::input("expected", "vectors must be non-empty"));
    }
    let mut col_sum = vec![0.0; cols];
    let mut zero_expected = vec![false; cols];
    let mut sq_sum = 0.0;
    for (obs, exp) in observed.iter().zip(expected) {
        if obs.len() != cols || exp.len() != cols {
            return Err(Error::DimensionMismatch {
                what: "observed/expected columns".into(),
                expected: cols,
                got: obs.len().min(exp.len()),
            });
        }
        for j in 0..cols {
            let diff = obs[j] - exp[j];
            sq_sum += diff * diff;
            if exp[j] == 0.0 {
                zero_expected[j] = true;
                col_sum[j] += diff.abs();
            } else {
                col_sum[j] += 100.0 * diff.abs() / exp[j].abs();
            }
        }
    }
    let n = observed.len() as f64;
    let per_column_pct: Vec<f64> = col_sum.into_iter().map(|s| s / n).collect();
    let average_pct = per_column_pct.iter().sum::<f64>() / cols as f64;
    Ok(ErrorReport {
        per_column_pct,
        zero_expected,
        average_pct,
        mse: sq_sum / (n * cols as f64),
        n_samples: observed.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_mac_matches_hand_dot_products() {
        let inputs = vec![1.0, 0.5, 0.25];
        let weights = vec![vec![0.5, 0.6], vec![0.7, 0.5], vec![0.5, 0.75]];
        let out = ideal_mac(&inputs, &weights).unwrap();
        assert_relative_eq!(out[0], 0.5 + 0.35 + 0.125, max_relative = 1e-15);
        assert_relative_eq!(out[1], 0.6 + 0.25 + 0.1875, max_relative = 1e-15);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let err = ideal_mac(&[1.0, 2.0], &[vec![0.5]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = ideal_mac(&[1.0, 2.0], &[vec![0.5, 0.5], vec![0.5]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn one_bit_endpoints_are_exact() {
        let fmt = FxpFormat::new(1, 1);
        let out = fxp_mac(&[1.0], &[vec![1.0]], &fmt).unwrap();
        assert_eq!(out[0], 1.0);
        let out = fxp_mac(&[1.0, 0.0], &[vec![1.0], vec![1.0]], &fmt).unwrap();
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn rounding_rule_changes_the_grid_landing() {
        // 0.9 on a 1-bit grid: nearest snaps up to 1, truncate drops to 0.
        let nearest = fxp_mac(&[0.9], &[vec![1.0]], &FxpFormat::new(1, 1)).unwrap();
        assert_eq!(nearest[0], 1.0);
        let fmt = FxpFormat {
            rounding: Rounding::Truncate,
            ..FxpFormat::new(1, 1)
        };
        let truncated = fxp_mac(&[0.9], &[vec![1.0]], &fmt).unwrap();
        assert_eq!(truncated[0], 0.0);
    }

    #[test]
    fn error_shrinks_as_operand_width_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sets = Vec::new();
        for _ in 0..100 {
            let inputs: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let weights: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
                .collect();
            sets.push((inputs, weights));
        }
        let mut avg = Vec::new();
        for fmt in [
            FxpFormat::new(3, 3),
            FxpFormat::new(4, 4),
            FxpFormat::new(8, 4),
            FxpFormat::new(8, 8),
        ] {
            let mut obs = Vec::new();
            let mut exp = Vec::new();
            for (inputs, weights) in &sets {
                obs.push(fxp_mac(inputs, weights, &fmt).unwrap());
                exp.push(ideal_mac(inputs, weights).unwrap());
            }
            avg.push(error_report_batch(&obs, &exp).unwrap().average_pct);
        }
        assert!(
            avg[0] > avg[1] && avg[1] > avg[2] && avg[2] > avg[3],
            "expected strictly decreasing error, got {avg:?}"
        );
        assert!(avg[3] < 1.0, "8x8 should land under 1%, got {}", avg[3]);
    }

    #[test]
    fn operands_outside_unit_interval_are_rejected() {
        let fmt = FxpFormat::default();
        assert!(matches!(
            fxp_mac(&[1.5], &[vec![0.5]], &fmt),
            Err(Error::InvalidInput { .. })
        ));
        assert!(matches!(
            fxp_mac(&[0.5], &[vec![-0.1]], &fmt),
            Err(Error::InvalidInput { .. })
        ));
    }

    #[test]
    fn error_report_computes_relative_percent() {
        let rep = error_report(&[1.065], &[1.0]).unwrap();
        assert_relative_eq!(rep.per_column_pct[0], 6.5, max_relative = 1e-12);
        assert_relative_eq!(rep.average_pct, 6.5, max_relative = 1e-12);
        assert_relative_eq!(rep.mse, 0.065 * 0.065, max_relative = 1e-10);
        assert!(!rep.zero_expected[0]);
    }

    #[test]
    fn zero_expected_columns_fall_back_to_absolute_error() {
        let rep = error_report(&[0.02, 2.0], &[0.0, 2.0]).unwrap();
        assert!(rep.zero_expected[0]);
        assert_relative_eq!(rep.per_column_pct[0], 0.02, max_relative = 1e-12);
        assert_relative_eq!(rep.per_column_pct[1], 0.0, max_relative = 1e-12);
    }

    #[test]
    fn batch_report_averages_over_samples_and_columns() {
        let obs = vec![vec![1.1, 2.0], vec![0.9, 2.0]];
        let exp = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let rep = error_report_batch(&obs, &exp).unwrap();
        assert_relative_eq!(rep.per_column_pct[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(rep.per_column_pct[1], 0.0, max_relative = 1e-12);
        assert_relative_eq!(rep.average_pct, 5.0, max_relative = 1e-12);
        assert_eq!(rep.n_samples, 2);
    }
}
