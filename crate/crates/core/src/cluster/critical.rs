use rayon::prelude::*;
use serde::Serialize;

use super::scaling::run_cluster_trial;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Fraction of configurations with a vacant left-to-right crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpanningRow {
    pub nu: f64,
    pub side: f64,
    pub trials: usize,
    pub spanning: usize,
    pub probability: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCrossing {
    pub side_small: f64,
    pub side_large: f64,
    pub nu_cross: Option<f64>,
    pub uncertainty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercolationEstimate {
    pub nu_grid: Vec<f64>,
    pub sides: Vec<f64>,
    /// Row-major over `nu_grid`, then `sides`.
    pub rows: Vec<SpanningRow>,
    pub pairs: Vec<PairCrossing>,
    pub nu_c: Option<f64>,
    pub uncertainty: Option<f64>,
    pub warnings: Vec<String>,
}

impl PercolationEstimate {
    pub fn row(&self, nu_index: usize, side_index: usize) -> &SpanningRow {
        &self.rows[nu_index * self.sides.len() + side_index]
    }
}

pub fn spanning_probability(params: &ModelParams, trials: usize, seed: u64, stream_base: u64) -> Result<SpanningRow> {
    let spans: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_cluster_trial(params, seed, stream_base | t).map(|r| r.spans))
        .collect::<Result<_>>()?;
    let spanning = spans.iter().filter(|&&s| s).count();
    let p = spanning as f64 / trials as f64;
    Ok(SpanningRow {
        nu: params.nu,
        side: params.side,
        trials,
        spanning,
        probability: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// Crossing of `P_small(nu) - P_large(nu)` from negative to positive.
/// Among several sign changes the one with mean probability nearest 1/2 wins.
fn crossing(nu: &[f64], small: &[SpanningRow], large: &[SpanningRow]) -> Option<(f64, f64)> {
    let diff: Vec<f64> = small
        .iter()
        .zip(large)
        .map(|(a, b)| a.probability - b.probability)
        .collect();
    let nonzero: Vec<usize> = (0..diff.len()).filter(|&k| diff[k] != 0.0).collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if !(diff[i] < 0.0 && diff[j] > 0.0) {
            continue;
        }
        let t = -diff[i] / (diff[j] - diff[i]);
        let at = nu[i] + t * (nu[j] - nu[i]);
        let level = (small[i].probability + large[i].probability + small[j].probability + large[j].probability) / 4.0;
        let slope = (diff[j] - diff[i]) / (nu[j] - nu[i]);
        let se = ((small[i].stderr.powi(2) + large[i].stderr.powi(2) + small[j].stderr.powi(2) + large[j].stderr.powi(2)) / 2.0).sqrt();
        let unc = (se / slope).hypot((nu[j] - nu[i]) / 4.0);
        let score = (level - 0.5).abs();
        if best.is_none_or(|(s, _, _)| score < s) {
            best = Some((score, at, unc));
        }
    }
    best.map(|(_, at, unc)| (at, unc))
}

/// Finite-size estimate of the critical intensity from crossings of the
/// spanning-probability curves of successive box sides.
pub fn estimate_critical_intensity(
    d: usize,
    radius: f64,
    sides: &[f64],
    nu_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<PercolationEstimate> {
    if sides.len() < 2 {
        return Err(Error::param("sides", "need at least two box sides"));
    }
    if sides.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("sides", "must be strictly increasing"));
    }
    if nu_grid.len() < 2 || nu_grid.windows(2).any(|w| w[1] <= w[0]) || nu_grid[0] < 0.0 {
        return Err(Error::param("nu_grid", "need two or more increasing non-negative values"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(nu_grid.len() * sides.len());
    for (ni, &nu) in nu_grid.iter().enumerate() {
        for (li, &side) in sides.iter().enumerate() {
            let params = ModelParams::new(d, nu, radius, side, 1)?;
            let base = ((li as u64) << 48) | ((ni as u64) << 32);
            rows.push(spanning_probability(&params, trials, seed, base)?);
        }
    }
    let column = |li: usize| -> Vec<SpanningRow> { (0..nu_grid.len()).map(|ni| rows[ni * sides.len() + li]).collect() };
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for li in 0..sides.len() - 1 {
        let c = crossing(nu_grid, &column(li), &column(li + 1));
        if c.is_none() {
            warnings.push(format!(
                "spanning curves for L = {} and L = {} do not cross within nu_grid",
                sides[li],
                sides[li + 1]
            ));
        }
        pairs.push(PairCrossing {
            side_small: sides[li],
            side_large: sides[li + 1],
            nu_cross: c.map(|x| x.0),
            uncertainty: c.map(|x| x.1),
        });
    }
    let found: Vec<(f64, f64)> = pairs
        .iter()
        .filter_map(|p| p.nu_cross.zip(p.uncertainty))
        .collect();
    let (nu_c, uncertainty) = if found.is_empty() {
        (None, None)
    } else {
        let n = found.len() as f64;
        let mean = found.iter().map(|f| f.0).sum::<f64>() / n;
        let unc = found.iter().map(|f| f.1).sum::<f64>() / n;
        let lo = found.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
        let hi = found.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(unc.max((hi - lo) / 2.0)))
    };
    Ok(PercolationEstimate {
        nu_grid: nu_grid.to_vec(),
        sides: sides.to_vec(),
        rows,
        pairs,
        nu_c,
        uncertainty,
        warnings,
    })
}
