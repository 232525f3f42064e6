//! Outlier detection (Three-Sigma rule and Isolation Forest) and repair by
//! backward filling.

mod iforest;

pub use iforest::{average_path_c, build_isolation_forest, iforest_scores, IsolationForestModel};

use crate::error::{Error, Result};
use crate::series::{TimePoint, TimeSeries};

/// How a mask was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskMethod {
    ThreeSigma { k: f64 },
    IsolationForest { trees: usize, subsample: usize, threshold: f64, seed: u64 },
}

/// Per-index anomaly flags plus the method and parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierMask {
    flags: Vec<bool>,
    method: MaskMethod,
}

impl OutlierMask {
    /// Rejects a mask that flags every index; such a mask leaves nothing to
    /// fill from.
    pub fn new(flags: Vec<bool>, method: MaskMethod) -> Result<Self> {
        if flags.is_empty() {
            return Err(Error::Empty("outlier mask must cover at least one index"));
        }
        if flags.iter().all(|&f| f) {
            return Err(Error::AllFlagged);
        }
        Ok(OutlierMask { flags, method })
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn method(&self) -> &MaskMethod {
        &self.method
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Population (1/n) mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Flags points farther than `k` population standard deviations from the
/// mean of the whole vector (strict inequality).
pub fn three_sigma_mask(values: &[f64], k: f64) -> Result<OutlierMask> {
    if values.len() < 2 {
        return Err(Error::InvalidParam(
            "three-sigma rule needs at least 2 values".into(),
        ));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::InvalidParam(format!("sigma multiplier k={k} must be positive")));
    }
    let (mean, std) = mean_std(values);
    if std == 0.0 {
        return Err(Error::ConstantSeries("three-sigma rule on zero variance"));
    }
    let flags = values.iter().map(|v| (v - mean).abs() > k * std).collect();
    OutlierMask::new(flags, MaskMethod::ThreeSigma { k })
}

/// Absolute z-scores against the full-vector mean and population std, the
/// score column reported alongside three-sigma flags.
pub fn z_scores(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidParam("z-scores need at least 2 values".into()));
    }
    let (mean, std) = mean_std(values);
    if std == 0.0 {
        return Err(Error::ConstantSeries("z-scores on zero variance"));
    }
    Ok(values.iter().map(|v| (v - mean).abs() / std).collect())
}

/// Thresholds isolation-forest scores into a mask (`score > threshold`).
pub fn iforest_mask(scores: &[f64], threshold: f64, params: MaskMethod) -> Result<OutlierMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParam(format!(
            "score threshold {threshold} must lie in (0, 1)"
        )));
    }
    if scores.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err(Error::InvalidParam(
            "isolation-forest scores must lie in (0, 1)".into(),
        ));
    }
    let flags = scores.iter().map(|&s| s > threshold).collect();
    OutlierMask::new(flags, params)
}

/// Replaces each flagged value with the nearest later unflagged value; a
/// flagged run at the very end falls back to the nearest earlier unflagged
/// value so the operation stays total. Timestamps are unchanged and every
/// filled value already occurs unflagged in the original series.
pub fn backward_fill_outliers(series: &TimeSeries, mask: &OutlierMask) -> Result<TimeSeries> {
    if mask.len() != series.len() {
        return Err(Error::MaskLengthMismatch {
            mask: mask.len(),
            series: series.len(),
        });
    }
    let values = series.dense_values()?;
    let flags = mask.flags();
    let n = values.len();

    // next_valid[i] = value of the nearest unflagged index >= i.
    let mut next_valid = vec![None; n];
    let mut carry = None;
    for i in (0..n).rev() {
        if !flags[i] {
            carry = Some(values[i]);
        }
        next_valid[i] = carry;
    }
    // Trailing fallback scans backward from the end.
    let last_valid = (0..n).rev().find(|&i| !flags[i]).ok_or(Error::AllFlagged)?;

    let points = series
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let value = if flags[i] {
                next_valid[i].unwrap_or(values[last_valid])
            } else {
                values[i]
            };
            TimePoint {
                timestamp: p.timestamp,
                value: Some(value),
            }
        })
        .collect();
    TimeSeries::new(points, series.interval_s(), series.unit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Unit;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::from_values(0, 300, Unit::Gbps, values.iter().map(|&v| Some(v)).collect())
            .unwrap()
    }

    #[test]
    fn three_sigma_flags_single_spike() {
        let mut values = vec![0.0; 99];
        values.push(50.0);
        let mask = three_sigma_mask(&values, 3.0).unwrap();
        // Independent oracle: mean 0.5, population std sqrt(24.75) ~ 4.975.
        let mean = 0.5;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 100.0).sqrt();
        assert!((std - 4.975).abs() < 1e-3);
        assert_eq!(mask.flagged_indices(), vec![99]);
    }

    #[test]
    fn three_sigma_rare_on_gaussian_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let mask = three_sigma_mask(&values, 3.0).unwrap();
        // ~0.27% expected for a standard normal; assert well under 1%.
        assert!(mask.flagged_count() < 100, "flagged {}", mask.flagged_count());
    }

    #[test]
    fn three_sigma_rejects_constant() {
        assert!(matches!(
            three_sigma_mask(&[5.0, 5.0, 5.0, 5.0], 3.0),
            Err(Error::ConstantSeries(_))
        ));
    }

    #[test]
    fn mask_rejects_all_flagged() {
        assert!(matches!(
            OutlierMask::new(vec![true, true], MaskMethod::ThreeSigma { k: 3.0 }),
            Err(Error::AllFlagged)
        ));
    }

    #[test]
    fn backward_fill_replaces_with_next_valid() {
        let s = series(&[1.0, 100.0, 3.0]);
        let mask = OutlierMask::new(
            vec![false, true, false],
            MaskMethod::ThreeSigma { k: 3.0 },
        )
        .unwrap();
        let filled = backward_fill_outliers(&s, &mask).unwrap();
        assert_eq!(filled.dense_values().unwrap(), vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn backward_fill_no_op_without_flags() {
        let s = series(&[1.0, 2.0, 3.0]);
        let mask =
            OutlierMask::new(vec![false; 3], MaskMethod::ThreeSigma { k: 3.0 }).unwrap();
        assert_eq!(backward_fill_outliers(&s, &mask).unwrap(), s);
    }

    #[test]
    fn backward_fill_trailing_fallback() {
        let s = series(&[1.0, 2.0, 99.0]);
        let mask = OutlierMask::new(
            vec![false, false, true],
            MaskMethod::ThreeSigma { k: 3.0 },
        )
        .unwrap();
        let filled = backward_fill_outliers(&s, &mask).unwrap();
        assert_eq!(filled.dense_values().unwrap(), vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn backward_fill_idempotent_and_conservative() {
        let s = series(&[1.0, 9.0, 9.0, 4.0, 9.0]);
        let mask = OutlierMask::new(
            vec![false, true, true, false, true],
            MaskMethod::ThreeSigma { k: 3.0 },
        )
        .unwrap();
        let once = backward_fill_outliers(&s, &mask).unwrap();
        let twice = backward_fill_outliers(&once, &mask).unwrap();
        assert_eq!(once, twice);
        let original = s.dense_values().unwrap();
        for v in once.dense_values().unwrap() {
            assert!(original.contains(&v));
        }
    }

    proptest! {
        #[test]
        fn three_sigma_affine_invariant(a in prop_oneof![-20.0f64..-0.1, 0.1f64..20.0], b in -50.0f64..50.0) {
            let values = vec![1.0, 2.0, 1.5, 40.0, 1.8, 2.2, 1.1, 0.9, 1.4, 2.1];
            let transformed: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            let m1 = three_sigma_mask(&values, 3.0);
            let m2 = three_sigma_mask(&transformed, 3.0);
            match (m1, m2) {
                (Ok(m1), Ok(m2)) => prop_assert_eq!(m1.flags(), m2.flags()),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "affine transform changed feasibility"),
            }
        }
    }
}
