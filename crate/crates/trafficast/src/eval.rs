//! MAPE scoring and rolling-origin cross-validation splits.

use std::ops::Range;

use crate::error::{Error, Result};

/// Mean absolute percentage error:
/// `(1/n) * sum |(p_i - o_i) / o_i| * 100`.
///
/// A zero actual value makes the metric undefined and is an error, never
/// silently skipped.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.is_empty() {
        return Err(Error::Empty("MAPE needs at least one observation"));
    }
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let mut sum = 0.0;
    for (i, (&o, &p)) in actual.iter().zip(predicted).enumerate() {
        if o == 0.0 {
            return Err(Error::ZeroActual(i));
        }
        sum += ((p - o) / o).abs();
    }
    Ok(sum / actual.len() as f64 * 100.0)
}

/// Error reduction from outlier adjustment, as a percentage of the raw
/// error: `(raw - adjusted) / raw * 100`.
pub fn improvement_pct(raw_mape: f64, adjusted_mape: f64) -> Result<f64> {
    if raw_mape == 0.0 {
        return Err(Error::InvalidParam(
            "improvement is undefined for zero raw MAPE".into(),
        ));
    }
    Ok((raw_mape - adjusted_mape) / raw_mape * 100.0)
}

/// One cross-validation fold: train on a prefix, test on the block that
/// immediately follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// Rolling-origin plan over `n_samples` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub n_samples: usize,
    pub k: usize,
}

/// Splits `[0, n)` into `k + 1` consecutive blocks of
/// `floor(n / (k + 1))` samples, the first block absorbing any remainder.
/// Fold `i` trains on everything before block `i + 1` and tests on it.
pub fn rolling_splits(n_samples: usize, k: usize) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::InvalidParam("fold count k must be at least 1".into()));
    }
    let test_size = n_samples / (k + 1);
    if test_size == 0 {
        return Err(Error::InvalidParam(format!(
            "{n_samples} samples cannot supply {k} folds plus an initial train block"
        )));
    }
    let mut folds = Vec::with_capacity(k);
    for i in 1..=k {
        let test_start = n_samples - (k - i + 1) * test_size;
        let test_end = n_samples - (k - i) * test_size;
        folds.push(Fold {
            train: 0..test_start,
            test: test_start..test_end,
        });
    }
    Ok(FoldPlan {
        folds,
        n_samples,
        k,
    })
}
