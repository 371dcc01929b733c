//! Least-squares lines and sample summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the data have no spread in y.
    pub r_squared: f64,
    /// sqrt(SSR / (n - 2)); zero for two points.
    pub residual_se: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit("x and y lengths differ".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data".into()));
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ssr / syy).clamp(0.0, 1.0) };
    let residual_se = if xs.len() > 2 { (ssr / (n - 2.0)).sqrt() } else { 0.0 };
    Ok(ScalingFit {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        slope,
        intercept,
        r_squared,
        residual_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance, zero for a single sample.
    pub variance: f64,
    pub stderr: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

/// Nearest-rank percentile of sorted data: element `ceil(p/100 * n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("summarize needs at least one sample"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        n: samples.len(),
        mean,
        variance,
        stderr: (variance / n).sqrt(),
        p50: nearest_rank(&sorted, 50.0),
        p90: nearest_rank(&sorted, 90.0),
        p99: nearest_rank(&sorted, 99.0),
        max: sorted[sorted.len() - 1],
    })
}
