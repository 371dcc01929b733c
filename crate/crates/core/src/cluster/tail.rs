use rayon::prelude::*;
use serde::Serialize;

use super::scaling::{run_cluster_trial, ClusterTrial};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::stats::fit_linear;

/// Straight-line fit of `ln P(#W(0) >= n)` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub n_values: Vec<usize>,
    pub empirical_log_tail: Vec<f64>,
    /// Estimate of `-C2`.
    pub slope: f64,
    /// Estimate of `ln C1`.
    pub intercept: f64,
    pub r_squared: f64,
    /// Full empirical survival function, `survival[n - 1] = P(size >= n)`.
    pub survival: Vec<f64>,
}

impl TailFit {
    pub fn is_subcritical(&self) -> bool {
        self.slope < 0.0
    }
}

/// Empirical `P(size >= n)` for `n = 1..=n_max`.
pub fn survival_from_sizes(sizes: &[usize], n_max: usize) -> Vec<f64> {
    let total = sizes.len() as f64;
    let mut counts = vec![0usize; n_max + 2];
    for &s in sizes {
        counts[s.min(n_max + 1)] += 1;
    }
    let mut out = vec![0.0; n_max];
    let mut at_least = 0usize;
    for n in (1..=n_max + 1).rev() {
        at_least += counts[n];
        if n <= n_max {
            out[n - 1] = at_least as f64 / total;
        }
    }
    out
}

/// Fits the log-survival on every `n` with `P(size >= n) > min_prob`.
pub fn fit_log_tail(survival: &[f64], min_prob: f64) -> Result<TailFit> {
    let (n_values, logs): (Vec<usize>, Vec<f64>) = survival
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > min_prob && p > 0.0)
        .map(|(i, &p)| (i + 1, p.ln()))
        .unzip();
    if n_values.len() < 4 {
        return Err(Error::InsufficientTail { found: n_values.len() });
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let fit = fit_linear(&xs, &logs)?;
    Ok(TailFit {
        n_values,
        empirical_log_tail: logs,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        survival: survival.to_vec(),
    })
}

/// Size of the origin cluster in each of `trials` independent configurations.
pub fn origin_cluster_trials(params: &ModelParams, trials: usize, seed: u64) -> Result<Vec<ClusterTrial>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_cluster_trial(params, seed, t))
        .collect()
}

/// Exponential-tail fit of the origin cluster size. Refuses non-decaying
/// tails, which signal a percolating (supercritical) vacancy.
pub fn fit_cluster_tail(params: &ModelParams, trials: usize, n_max: usize, seed: u64) -> Result<TailFit> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let runs = origin_cluster_trials(params, trials, seed)?;
    let sizes: Vec<usize> = runs.iter().map(|r| r.origin_size).collect();
    fit_tail_sizes(&sizes, n_max, params.nu)
}

/// Tail fit from simulated origin-cluster sizes, with the same refusal of
/// non-decaying tails as [`fit_cluster_tail`].
pub fn fit_tail_sizes(sizes: &[usize], n_max: usize, nu: f64) -> Result<TailFit> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("origin cluster sizes"));
    }
    let fit = fit_log_tail(&survival_from_sizes(sizes, n_max), 5.0 / sizes.len() as f64)?;
    if !fit.is_subcritical() {
        return Err(Error::Regime(format!(
            "origin-cluster tail does not decay (slope {}); nu = {nu} looks supercritical",
            fit.slope
        )));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Purpose};
    use rand::Rng;

    #[test]
    fn exact_geometric_tail() {
        let survival: Vec<f64> = (1..=20).map(|n| 0.5f64.powi(n)).collect();
        let fit = fit_log_tail(&survival, 1e-9).unwrap();
        assert!((fit.slope - 0.5f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_geometric_tail() {
        // P(size >= n) = 0.5^n for n >= 1, size 0 with probability 1/2
        let mut rng = rng::stream(9, 0, Purpose::Test);
        let sizes: Vec<usize> = (0..200_000)
            .map(|_| {
                let mut k = 0;
                while rng.random::<f64>() < 0.5 {
                    k += 1;
                }
                k
            })
            .collect();
        let survival = survival_from_sizes(&sizes, 30);
        let fit = fit_log_tail(&survival, 5.0 / sizes.len() as f64 * 20.0).unwrap();
        assert!((fit.slope / 0.5f64.ln() - 1.0).abs() < 0.02, "slope {}", fit.slope);
    }

    #[test]
    fn survival_counts() {
        let s = survival_from_sizes(&[0, 1, 3, 10], 4);
        assert_eq!(s, vec![0.75, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn too_few_points_refused() {
        assert!(matches!(
            fit_log_tail(&[0.5, 0.25, 0.0, 0.0], 0.0),
            Err(Error::InsufficientTail { found: 2 })
        ));
    }

    #[test]
    fn supercritical_is_refused() {
        let p = ModelParams::new(2, 0.01, 1.0, 20.0, 1).unwrap();
        let err = fit_cluster_tail(&p, 200, 40, 1).unwrap_err();
        assert!(matches!(err, Error::Regime(_) | Error::InsufficientTail { .. }), "{err}");
    }

    #[test]
    fn tail_normalization() {
        // P(#W(0) >= 1) is the void probability of the origin box.
        let p = ModelParams::new(2, 1.6, 1.0, 20.0, 1).unwrap();
        let trials = 2000;
        let fit = fit_cluster_tail(&p, trials, 50, 17).unwrap();
        let s = p.lattice_spacing();
        let q = (-p.nu * s * s).exp();
        let se = (q * (1.0 - q) / trials as f64).sqrt();
        assert!((fit.survival[0] - q).abs() < 4.0 * se, "{} vs {q}", fit.survival[0]);
        assert!(fit.slope < 0.0);
    }
}
