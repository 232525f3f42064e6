//! Sample autocorrelation, partial autocorrelation, and window-size
//! suggestion for the supervised transform.

use crate::error::{Error, Result};

/// ACF and PACF over lags `0..=max_lag`, plus the 95% significance band.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelogramResult {
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub band: f64,
}

impl CorrelogramResult {
    pub fn max_lag(&self) -> usize {
        self.acf.len() - 1
    }

    /// `lag,acf,pacf,band` CSV for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,acf,pacf,band\n");
        for (lag, (a, p)) in self.acf.iter().zip(self.pacf.iter()).enumerate() {
            out.push_str(&format!("{lag},{a},{p},{}\n", self.band));
        }
        out
    }
}

/// Sample autocorrelation with the biased (1/n) normalization:
/// `r_k = sum_t (x_t - mean)(x_{t+k} - mean) / sum_t (x_t - mean)^2`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::InvalidParam(format!(
            "series length {} must exceed max_lag {}",
            series.len(),
            max_lag
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::ConstantSeries("autocorrelation of a constant series"));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let num: f64 = series[..n - k]
            .iter()
            .zip(&series[k..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum();
        out.push(num / denom);
    }
    Ok(out)
}

/// Partial autocorrelation via the Durbin-Levinson recursion on the sample
/// ACF. `pacf[0] = 1` by convention and `pacf[1] = acf[1]`.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(series, max_lag)?;
    pacf_from_acf(&r)
}

/// Durbin-Levinson on precomputed autocorrelations `r[0..=max_lag]`.
pub fn pacf_from_acf(r: &[f64]) -> Result<Vec<f64>> {
    let max_lag = r.len() - 1;
    let mut out = vec![1.0];
    if max_lag == 0 {
        return Ok(out);
    }
    // phi holds the AR coefficients of the current order.
    let mut phi = vec![r[1]];
    out.push(r[1]);
    for k in 2..=max_lag {
        let num = r[k] - phi.iter().zip(r[1..k].iter().rev()).map(|(p, rj)| p * rj).sum::<f64>();
        let den = 1.0 - phi.iter().zip(r[1..k].iter()).map(|(p, rj)| p * rj).sum::<f64>();
        if den.abs() < 1e-12 {
            return Err(Error::Singular(format!(
                "Durbin-Levinson denominator at lag {k}"
            )));
        }
        let phi_kk = num / den;
        let prev = phi.clone();
        for (j, p) in phi.iter_mut().enumerate() {
            *p = prev[j] - phi_kk * prev[k - 2 - j];
        }
        phi.push(phi_kk);
        out.push(phi_kk);
    }
    Ok(out)
}

/// Half-width of the 95% correlogram significance band, `1.96 / sqrt(n)`.
pub fn significance_band(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParam("band requires n > 0".into()));
    }
    Ok(1.96 / (n as f64).sqrt())
}

/// Computes ACF, PACF, and the significance band in one pass.
pub fn correlogram(series: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let acf = acf(series, max_lag)?;
    let pacf = pacf_from_acf(&acf)?;
    let band = significance_band(series.len())?;
    Ok(CorrelogramResult { acf, pacf, band })
}

/// Longest initial run of significant PACF lags: the largest `k` such that
/// `|pacf[j]| > band` for every `1 <= j <= k`. Floors at 1 when even the
/// first lag is insignificant.
pub fn suggest_window(corr: &CorrelogramResult) -> usize {
    let mut k = 0;
    for p in &corr.pacf[1..] {
        if p.abs() > corr.band {
            k += 1;
        } else {
            break;
        }
    }
    k.max(1)
}
