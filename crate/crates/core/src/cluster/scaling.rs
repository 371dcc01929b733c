use rayon::prelude::*;
use serde::Serialize;

use super::{cluster_size_at, label_components, largest_cluster};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::trial_seed;
use crate::sampler::sample_configuration;
use crate::stats::{fit_linear, summarize, ScalingFit, Summary};
use crate::vacancy::discretize;

/// One configuration's lattice statistics; one CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterTrial {
    pub seed: u64,
    pub side: f64,
    pub nu: f64,
    pub radius: f64,
    pub n_vacant: usize,
    pub n_clusters: usize,
    pub a_n: usize,
    pub origin_size: usize,
    pub spans: bool,
}

pub fn run_cluster_trial(params: &ModelParams, seed: u64, trial_id: u64) -> Result<ClusterTrial> {
    let ps = sample_configuration(params, seed, trial_id)?;
    let grid = discretize(&ps, params, None)?;
    let labeling = label_components(&grid);
    let origin = vec![0i64; params.d];
    Ok(ClusterTrial {
        seed: trial_seed(seed, trial_id),
        side: params.side,
        nu: params.nu,
        radius: params.radius,
        n_vacant: labeling.n_vacant(),
        n_clusters: labeling.n_clusters(),
        a_n: largest_cluster(&labeling).a_n,
        origin_size: cluster_size_at(&labeling, &origin)?,
        spans: labeling.spans(0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub side: f64,
    pub ln_side: f64,
    pub a_n: Summary,
}

/// Growth of the largest vacant cluster with the box side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// 99th-percentile `A_N` against `ln L`.
    pub fit_p99: ScalingFit,
    /// Maximum `A_N` against `ln L`.
    pub fit_max: ScalingFit,
    /// `max_L (max A_N / ln L)` divided by its value at the largest `L`.
    pub ratio_spread: f64,
    #[serde(skip)]
    pub trials: Vec<ClusterTrial>,
}

/// Trial ids are `(index of L) << 32 | trial`, so every side has its own
/// independent streams.
pub fn scaling_study(base: &ModelParams, sides: &[f64], trials: usize, seed: u64) -> Result<ScalingStudy> {
    if sides.len() < 2 {
        return Err(Error::param("sides", "need at least two box sides"));
    }
    if sides.windows(2).any(|w| w[1] <= w[0]) || sides[0] <= 1.0 {
        return Err(Error::param("sides", "must be increasing and above 1"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(sides.len());
    let mut all = Vec::with_capacity(sides.len() * trials);
    for (li, &side) in sides.iter().enumerate() {
        let params = base.with_side(side);
        let runs: Vec<ClusterTrial> = (0..trials as u64)
            .into_par_iter()
            .map(|t| run_cluster_trial(&params, seed, ((li as u64) << 32) | t))
            .collect::<Result<_>>()?;
        let a: Vec<f64> = runs.iter().map(|r| r.a_n as f64).collect();
        rows.push(ScalingRow {
            side,
            ln_side: side.ln(),
            a_n: summarize(&a)?,
        });
        all.extend(runs);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.ln_side).collect();
    let p99: Vec<f64> = rows.iter().map(|r| r.a_n.p99).collect();
    let max: Vec<f64> = rows.iter().map(|r| r.a_n.max).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.a_n.max / r.ln_side).collect();
    let last = *ratios.last().expect("at least two sides");
    let top = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio_spread = if last > 0.0 {
        top / last
    } else if top == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(ScalingStudy {
        fit_p99: fit_linear(&xs, &p99)?,
        fit_max: fit_linear(&xs, &max)?,
        rows,
        ratio_spread,
        trials: all,
    })
}
