use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::RunRecord;

/// Least-squares line `log y = intercept + slope · log t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// Standard error of the slope; zero with two points.
    pub slope_stderr: f64,
    pub points: usize,
}

/// Fits over the points with `lo <= t <= hi`, `t > 0` and `y > 0`.
pub fn fit_loglog(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<RateFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|&(&t, &y)| t >= lo && t <= hi && t > 0.0 && y > 0.0 && y.is_finite())
        .map(|(t, y)| (t.ln(), y.ln()))
        .unzip();
    let n = xs.len();
    if n < 2 {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(RateFit {
        slope,
        intercept,
        residual: (sse / nf).sqrt(),
        slope_stderr,
        points: n,
    })
}

/// Log-log slope of the mean `d²` curve over `[lo, hi]`.
pub fn rate_fit(record: &RunRecord, lo: f64, hi: f64) -> Result<RateFit> {
    let t: Vec<f64> = record.t.iter().map(|&t| t as f64).collect();
    fit_loglog(&t, &record.mean_d2, lo, hi)
}
