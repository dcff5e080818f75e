//! Localization error statistics: mean Euclidean error, worst case, and the
//! share of estimates within a distance threshold.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::mlp::{MlpModel, Position};
use crate::{Error, Result};

/// Default "good fix" radius in meters.
pub const DEFAULT_THRESHOLD_M: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean Euclidean error, meters.
    pub average_error: f64,
    pub max_error: f64,
    /// Percentage of rows with error strictly below `threshold`.
    pub pct_below: f64,
    pub threshold: f64,
    pub n: usize,
    pub per_row_errors: Vec<f64>,
}

pub fn localization_error(estimates: &[Position], truths: &[Position]) -> Result<EvalReport> {
    localization_error_with_threshold(estimates, truths, DEFAULT_THRESHOLD_M)
}

pub fn localization_error_with_threshold(
    estimates: &[Position],
    truths: &[Position],
    threshold: f64,
) -> Result<EvalReport> {
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), found: estimates.len() });
    }
    if truths.is_empty() {
        return Err(Error::DegenerateData("no rows to evaluate".into()));
    }
    let per_row_errors: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| e.distance(t)).collect();
    let n = per_row_errors.len();
    let average_error = per_row_errors.iter().map(|e| e / n as f64).sum();
    let max_error = per_row_errors.iter().copied().fold(0.0, f64::max);
    let below = per_row_errors.iter().filter(|&&e| e < threshold).count();
    Ok(EvalReport {
        average_error,
        max_error,
        pct_below: 100.0 * below as f64 / n as f64,
        threshold,
        n,
        per_row_errors,
    })
}

/// Runs the model over every row and scores it against the row targets.
pub fn evaluate(model: &MlpModel, test: &Dataset) -> Result<EvalReport> {
    evaluate_with_threshold(model, test, DEFAULT_THRESHOLD_M)
}

pub fn evaluate_with_threshold(model: &MlpModel, test: &Dataset, threshold: f64) -> Result<EvalReport> {
    if test.anchor_count() != model.input_count() {
        return Err(Error::DimensionMismatch { expected: model.input_count(), found: test.anchor_count() });
    }
    let estimates = test.rows().iter().map(|r| model.forward(&r.rssi)).collect::<Result<Vec<_>>>()?;
    localization_error_with_threshold(&estimates, &test.targets(), threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_estimates() {
        let p = [Position::new(1.0, 2.0), Position::new(-3.0, 0.5)];
        let r = localization_error(&p, &p).unwrap();
        assert_eq!((r.average_error, r.max_error, r.pct_below), (0.0, 0.0, 100.0));
    }

    #[test]
    fn three_four_five() {
        let r = localization_error(&[Position::new(4.0, 5.0)], &[Position::new(1.0, 1.0)]).unwrap();
        assert_eq!((r.average_error, r.max_error, r.pct_below), (5.0, 5.0, 0.0));
    }

    #[test]
    fn mean_of_two() {
        let est = [Position::new(3.0, 0.0), Position::new(0.0, 5.0)];
        let truth = [Position::new(0.0, 0.0), Position::new(0.0, 0.0)];
        assert_eq!(localization_error(&est, &truth).unwrap().average_error, 4.0);
    }

    #[test]
    fn length_mismatch() {
        let r = localization_error(&[Position::default()], &[]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
