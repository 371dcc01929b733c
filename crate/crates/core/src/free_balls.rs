//! Census of Poisson-free unit-diameter balls on the integer lattice, and a
//! search for the largest obstacle-free ball inside the simulation box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, MAX_DIM};
use crate::rng::{self, Purpose};
use crate::spatial::SpatialIndex;

/// Outcome of the free-ball census of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBallReport {
    pub d: usize,
    pub side: f64,
    /// `(2 floor(L/2) - 1)^d` integer centres with the ball inside the box.
    pub candidates: usize,
    /// Number of those balls containing no Poisson point, `B_N`.
    pub b_n: usize,
    /// Centres of the free balls, flat, `d` per ball, in lexicographic order
    /// with axis 0 fastest.
    #[serde(skip)]
    pub free_centers: Vec<i64>,
    /// Void probability of one ball, `exp(-nu pi^(d/2) 2^-d / Gamma(d/2 + 1))`.
    pub c_theory: f64,
    pub free_ball_threshold: Option<f64>,
}

impl FreeBallReport {
    pub fn fraction(&self) -> f64 {
        self.b_n as f64 / self.candidates as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.free_centers.chunks_exact(self.d)
    }
}

/// Void probability of a ball of diameter 1.
pub fn unit_ball_void_probability(d: usize, nu: f64) -> f64 {
    (-nu * crate::params::unit_ball_volume(d) * 0.5f64.powi(d as i32)).exp()
}

/// Counts the balls of radius 1/2 around `j in Z^d`, `|j_k| <= floor(L/2) - 1`,
/// that hold no Poisson point. A point at distance exactly 1/2 counts as inside.
pub fn count_free_unit_balls(idx: &SpatialIndex, params: &ModelParams) -> Result<FreeBallReport> {
    if params.side < 2.0 {
        return Err(Error::param("side", format!("must be at least 2, got {}", params.side)));
    }
    let d = params.d;
    let m = (params.side / 2.0).floor() as i64 - 1;
    let per_axis = (2 * m + 1) as usize;
    let candidates = per_axis.pow(d as u32);
    let mut free_centers = Vec::new();
    let mut j = [-m; MAX_DIM];
    let mut x = [0.0f64; MAX_DIM];
    for _ in 0..candidates {
        for k in 0..d {
            x[k] = j[k] as f64;
        }
        if !idx.any_within(&x[..d], 0.5) {
            free_centers.extend_from_slice(&j[..d]);
        }
        for k in 0..d {
            if j[k] < m {
                j[k] += 1;
                break;
            }
            j[k] = -m;
        }
    }
    Ok(FreeBallReport {
        d,
        side: params.side,
        candidates,
        b_n: free_centers.len() / d,
        free_centers,
        c_theory: unit_ball_void_probability(d, params.nu),
        free_ball_threshold: None,
    })
}

/// Divergent sequence `c_N` in the free-ball lower bound `L^d / (c_N ln N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CnRule {
    /// `c_N = ln N`.
    #[default]
    Ln,
    /// `c_N = (ln N)^p`.
    LnPower(f64),
    /// `c_N = N^p`.
    Power(f64),
}

impl CnRule {
    pub fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            CnRule::Ln => nf.ln(),
            CnRule::LnPower(p) => nf.ln().powf(p),
            CnRule::Power(p) => nf.powf(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CnRule::LnPower(p) | CnRule::Power(p) if !(p > 0.0 && p.is_finite()) => {
                Err(Error::param("c_n", format!("exponent must be positive, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// `L^d / (c_N ln N)`.
pub fn free_ball_threshold(side: f64, d: usize, c_n: f64, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("N", "needs N >= 2 so that ln N > 0"));
    }
    if !(c_n > 0.0 && c_n.is_finite()) {
        return Err(Error::param("c_n", format!("must be positive, got {c_n}")));
    }
    Ok(side.powi(d as i32) / (c_n * (n as f64).ln()))
}

/// Whether `B_N >= L^d / (c_N ln N)`; records the threshold in the report.
pub fn check_free_ball_threshold(report: &mut FreeBallReport, c_n: f64, n: u64) -> Result<bool> {
    let t = free_ball_threshold(report.side, report.d, c_n, n)?;
    report.free_ball_threshold = Some(t);
    Ok(report.b_n as f64 >= t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClearingBall {
    pub center: Vec<f64>,
    /// Exact clearance of `center`: a lower bound on the largest free ball.
    pub radius: f64,
    /// `(d / (nu omega_d) * ln L)^(1/d)`.
    pub theory_radius: f64,
}

pub fn clearing_theory_radius(params: &ModelParams) -> f64 {
    if params.nu == 0.0 {
        return f64::INFINITY;
    }
    let d = params.d as f64;
    (d / (params.nu * params.omega_d()) * params.side.ln()).powf(1.0 / d)
}

/// Radius of the largest obstacle-free ball centred at `x` that fits in the box.
pub fn clearance(idx: &SpatialIndex, half_side: f64, x: &[f64]) -> f64 {
    let wall = x
        .iter()
        .map(|v| half_side - v.abs())
        .fold(f64::INFINITY, f64::min);
    if wall <= 0.0 {
        return wall.max(0.0);
    }
    wall.min(idx.nearest_distance(x))
}

/// Multi-start pattern-search ascent on the clearance field. `probe_budget`
/// uniform probes are scored; the best eighth (at least one) are climbed with
/// axis and random directions and step halving.
pub fn largest_clearing_ball(
    idx: &SpatialIndex,
    params: &ModelParams,
    probe_budget: usize,
    seed: u64,
) -> Result<ClearingBall> {
    if probe_budget == 0 {
        return Err(Error::param("probe_budget", "must be at least 1"));
    }
    let d = params.d;
    let half = params.side / 2.0;
    let mut rng = rng::trial_stream(seed, Purpose::ClearingProbes);
    let mut probes: Vec<(f64, Vec<f64>)> = (0..probe_budget)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-half..half)).collect();
            (clearance(idx, half, &x), x)
        })
        .collect();
    // stable sort keeps probe order among ties
    probes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let starts = probe_budget.div_ceil(8);
    let min_step = params.side * 1e-10;
    let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
    let mut trial = vec![0.0; d];
    let mut dir = vec![0.0; d];
    for (mut value, mut x) in probes.into_iter().take(starts) {
        let mut step = value.max(params.side * 1e-3) / 2.0;
        let mut iterations = 0;
        while step > min_step && iterations < 5000 {
            iterations += 1;
            let mut improved = false;
            for probe in 0..4 * d {
                if probe < 2 * d {
                    dir.fill(0.0);
                    dir[probe / 2] = if probe % 2 == 0 { 1.0 } else { -1.0 };
                } else {
                    for v in dir.iter_mut() {
                        *v = rng.random_range(-1.0..1.0);
                    }
                    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        continue;
                    }
                    dir.iter_mut().for_each(|v| *v /= norm);
                }
                for k in 0..d {
                    trial[k] = x[k] + step * dir[k];
                }
                let v = clearance(idx, half, &trial);
                if v > value {
                    value = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        if value > best.0 {
            best = (value, x);
        }
    }
    Ok(ClearingBall {
        radius: best.0,
        center: best.1,
        theory_radius: clearing_theory_radius(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{padded_box, sample_poisson, PointSet};

    fn params(nu: f64, side: f64) -> ModelParams {
        ModelParams::new(2, nu, 0.5, side, 1).unwrap()
    }

    #[test]
    fn void_probability_closed_form() {
        assert!((unit_ball_void_probability(2, 1.0) - (-std::f64::consts::PI / 4.0).exp()).abs() < 1e-15);
        let c = unit_ball_void_probability(2, 1.0);
        assert!((c - 0.4559381).abs() < 1e-6);
    }

    #[test]
    fn empty_configuration_frees_every_ball() {
        let p = params(1.0, 9.5);
        let idx = SpatialIndex::new(&PointSet::empty(padded_box(&p)), 0.5).unwrap();
        let r = count_free_unit_balls(&idx, &p).unwrap();
        assert_eq!(r.candidates, 49);
        assert_eq!(r.b_n, 49);
        assert!(count_free_unit_balls(&idx, &params(1.0, 1.5)).is_err());
    }

    #[test]
    fn point_at_a_centre_removes_only_that_ball() {
        let p = params(1.0, 10.0);
        let ps = PointSet::from_coords(padded_box(&p), vec![1.0, 2.0]).unwrap();
        let idx = SpatialIndex::new(&ps, 0.5).unwrap();
        let r = count_free_unit_balls(&idx, &p).unwrap();
        assert_eq!(r.b_n, r.candidates - 1);
        assert!(r.centers().all(|c| c != [1, 2]));
    }

    #[test]
    fn census_matches_linear_scan() {
        let p = params(1.0, 12.0);
        for t in 0..20 {
            let ps = sample_poisson(&p, 6, t).unwrap();
            let idx = SpatialIndex::new(&ps, 0.5).unwrap();
            let r = count_free_unit_balls(&idx, &p).unwrap();
            for c in r.centers() {
                let free = ps.iter().all(|q| {
                    ((q[0] - c[0] as f64).powi(2) + (q[1] - c[1] as f64).powi(2)).sqrt() > 0.5
                });
                assert!(free);
            }
            let brute = (-5..=5)
                .flat_map(|a| (-5..=5).map(move |b| (a, b)))
                .filter(|&(a, b)| {
                    ps.iter().all(|q| ((q[0] - a as f64).powi(2) + (q[1] - b as f64).powi(2)).sqrt() > 0.5)
                })
                .count();
            assert_eq!(r.b_n, brute);
        }
    }

    #[test]
    fn adding_points_never_frees_balls() {
        let p = params(2.0, 14.0);
        for t in 0..10 {
            let dense = sample_poisson(&p, 3, t).unwrap();
            let sparse = dense.thin(0.5).unwrap();
            let b = |ps: &PointSet| count_free_unit_balls(&SpatialIndex::new(ps, 0.5).unwrap(), &p).unwrap().b_n;
            assert!(b(&dense) <= b(&sparse));
        }
    }

    #[test]
    fn free_ball_threshold_edges() {
        let p = params(1.0, 10.0);
        let idx = SpatialIndex::new(&PointSet::empty(padded_box(&p)), 0.5).unwrap();
        let mut r = count_free_unit_balls(&idx, &p).unwrap();
        assert!(check_free_ball_threshold(&mut r, CnRule::Ln.eval(100), 100).unwrap());
        r.b_n = 0;
        assert!(!check_free_ball_threshold(&mut r, 1.0, 100).unwrap());
        assert!(check_free_ball_threshold(&mut r, 1.0, 1).is_err());
        assert!(check_free_ball_threshold(&mut r, 0.0, 10).is_err());
    }

    #[test]
    fn empty_box_clearing_ball_is_the_inscribed_ball() {
        let p = params(1.0, 10.0);
        let idx = SpatialIndex::new(&PointSet::empty(padded_box(&p)), 0.5).unwrap();
        let b = largest_clearing_ball(&idx, &p, 64, 1).unwrap();
        assert!((b.radius - 5.0).abs() < 1e-6, "{}", b.radius);
        assert!(b.center.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn single_point_matches_dense_grid() {
        let p = params(1.0, 10.0);
        let ps = PointSet::from_coords(padded_box(&p), vec![0.0, 0.0]).unwrap();
        let idx = SpatialIndex::new(&ps, 0.5).unwrap();
        let b = largest_clearing_ball(&idx, &p, 256, 2).unwrap();
        let mut oracle: f64 = 0.0;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let x = [-5.0 + 0.01 * i as f64, -5.0 + 0.01 * j as f64];
                let wall = 5.0 - x[0].abs().max(x[1].abs());
                oracle = oracle.max(wall.min(x[0].hypot(x[1])));
            }
        }
        let exact = 5.0 * 2f64.sqrt() / (1.0 + 2f64.sqrt());
        assert!(b.radius >= oracle - 1e-6, "{} < {oracle}", b.radius);
        assert!(b.radius <= exact + 1e-12);
        assert!(b.center[0].abs() > 1.5 && b.center[1].abs() > 1.5);
        assert!((clearance(&idx, 5.0, &b.center) - b.radius).abs() == 0.0);
    }

    #[test]
    fn clearance_shrinks_when_points_are_added() {
        let p = params(2.0, 20.0);
        let dense = sample_poisson(&p, 4, 0).unwrap();
        let sparse = dense.thin(0.3).unwrap();
        let si = SpatialIndex::new(&sparse, 0.5).unwrap();
        let di = SpatialIndex::new(&dense, 0.5).unwrap();
        let ball = largest_clearing_ball(&si, &p, 200, 3).unwrap();
        assert!(clearance(&di, 10.0, &ball.center) <= ball.radius);
        assert!(!si.any_within(&ball.center, ball.radius * (1.0 - 1e-12)));
    }

    #[test]
    fn theory_radius_value() {
        let p = ModelParams::new(2, 4.0, 0.5, 100.0, 1).unwrap();
        assert!((clearing_theory_radius(&p) - 0.8561).abs() < 1e-3);
    }
}
