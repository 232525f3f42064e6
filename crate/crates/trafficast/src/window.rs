//! Min-max scaling and the sliding-window supervised transform.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Affine min-max scaler mapping `[lo, hi]` onto `[0, 1]`.
///
/// Out-of-range inputs pass through unclamped, so holdout values beyond the
/// training range map outside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    lo: f64,
    hi: f64,
}

impl Scaler {
    /// Fits on raw values; rejects constant input (`hi == lo`).
    pub fn fit(values: &[f64]) -> Result<Scaler> {
        if values.is_empty() {
            return Err(Error::Empty("cannot fit a scaler on no values"));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("scaler fit input".into()));
        }
        if hi <= lo {
            return Err(Error::ConstantSeries("min-max scaling needs hi > lo"));
        }
        Ok(Scaler { lo, hi })
    }

    /// The identity scaler (`[0, 1] -> [0, 1]`), for callers that window
    /// unscaled values.
    pub fn identity() -> Scaler {
        Scaler { lo: 0.0, hi: 1.0 }
    }

    pub fn from_bounds(lo: f64, hi: f64) -> Result<Scaler> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidParam(format!(
                "scaler bounds must be finite with hi > lo, got lo={lo}, hi={hi}"
            )));
        }
        Ok(Scaler { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.lo + y * (self.hi - self.lo)
    }

    pub fn apply_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_slice(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}

/// Fits a min-max scaler on a complete series. Fit this on training data
/// only; fitting on the holdout leaks its range into the model inputs.
pub fn fit_scaler(series: &TimeSeries) -> Result<Scaler> {
    Scaler::fit(&series.dense_values()?)
}

/// Supervised single-step dataset: each row of `features` holds `w`
/// consecutive values and the target is the value that follows them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    features: Vec<f64>, // row-major, n_samples x window_w
    targets: Vec<f64>,
    window_w: usize,
    scaler: Scaler,
}

impl WindowedDataset {
    /// Windows a value vector. The values are stored as given; pass the
    /// scaler the values were produced with (or [`Scaler::identity`]).
    pub fn from_values(values: &[f64], window_w: usize, scaler: Scaler) -> Result<Self> {
        if window_w == 0 {
            return Err(Error::InvalidParam("window_w must be at least 1".into()));
        }
        if values.len() <= window_w {
            return Err(Error::InvalidParam(format!(
                "series length {} must exceed window size {}",
                values.len(),
                window_w
            )));
        }
        let n = values.len() - window_w;
        let mut features = Vec::with_capacity(n * window_w);
        let mut targets = Vec::with_capacity(n);
        for i in 0..n {
            features.extend_from_slice(&values[i..i + window_w]);
            targets.push(values[i + window_w]);
        }
        Ok(WindowedDataset {
            features,
            targets,
            window_w,
            scaler,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn window_w(&self) -> usize {
        self.window_w
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.window_w..(i + 1) * self.window_w]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Row subset `[range.start, range.end)`, preserving order.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> WindowedDataset {
        WindowedDataset {
            features: self.features[range.start * self.window_w..range.end * self.window_w]
                .to_vec(),
            targets: self.targets[range.clone()].to_vec(),
            window_w: self.window_w,
            scaler: self.scaler.clone(),
        }
    }
}

/// Windows a complete series into `(w features, next value)` rows.
pub fn make_windows(series: &TimeSeries, window_w: usize) -> Result<WindowedDataset> {
    let values = series.dense_values()?;
    WindowedDataset::from_values(&values, window_w, Scaler::identity())
}
