//! Product trial state built from bumps on the free unit balls, and its
//! energy per volume.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_balls::FreeBallReport;
use crate::params::unit_sphere_area;

use super::quadrature::{piecewise, Estimate, GaussLegendre};

/// Relative quadrature error above which a report is flagged.
pub const QUADRATURE_TOL: f64 = 1e-6;

const RULE_POINTS: usize = 20;
const INNER_PANELS: usize = 4;
const LINE_PANELS: usize = 2;

/// `1` on `[0, 1/4]`, `cos^2(pi (4r - 1) / 2)` on `(1/4, 1/2)`, `0` beyond.
pub fn bump_profile(r: f64) -> f64 {
    if r <= 0.25 {
        1.0
    } else if r < 0.5 {
        (PI * (4.0 * r - 1.0) / 2.0).cos().powi(2)
    } else {
        0.0
    }
}

pub fn bump_derivative(r: f64) -> f64 {
    if r <= 0.25 || r >= 0.5 {
        0.0
    } else {
        -2.0 * PI * (PI * (4.0 * r - 1.0)).sin()
    }
}

fn bump_sq(r: f64) -> f64 {
    bump_profile(r).powi(2)
}

/// `int f^2` and `int |grad f|^2` over `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpConstants {
    pub mass_per_bump: f64,
    pub kinetic_per_bump: f64,
}

pub fn bump_constants(d: usize) -> BumpConstants {
    let rule = GaussLegendre::new(RULE_POINTS);
    let area = unit_sphere_area(d);
    let rd = |r: f64| r.powi(d as i32 - 1);
    let core = 0.25f64.powi(d as i32) / d as f64;
    let shell = piecewise(&rule, &[0.25, 0.5], 1e-15, 64, |r| bump_sq(r) * rd(r));
    let kin = piecewise(&rule, &[0.25, 0.5], 1e-15, 64, |r| bump_derivative(r).powi(2) * rd(r));
    BumpConstants {
        mass_per_bump: area * (core + shell.value),
        kinetic_per_bump: area * kin.value,
    }
}

/// Radial pair potential shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `b` on `[0, a]`.
    #[default]
    Indicator,
    /// `b (2 - (x/a)^2)` on `[0, a]`.
    ParabolicCap,
}

/// Pair potential `w`, zero beyond `a` and at least `b` on `[0, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub profile: Profile,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec {
            a: 0.5,
            b: 1.0,
            profile: Profile::Indicator,
        }
    }
}

impl InteractionSpec {
    pub fn new(a: f64, b: f64, profile: Profile) -> Result<Self> {
        let s = InteractionSpec { a, b, profile };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::param("b", format!("must be positive, got {}", self.b)));
        }
        Ok(())
    }

    pub fn w(&self, x: f64) -> f64 {
        if x > self.a {
            return 0.0;
        }
        match self.profile {
            Profile::Indicator => self.b,
            Profile::ParabolicCap => self.b * (2.0 - (x / self.a).powi(2)),
        }
    }

    /// `int_{R^d} w(|x|) dx`.
    pub fn l1_norm(&self, d: usize) -> f64 {
        let ad = self.a.powi(d as i32);
        let df = d as f64;
        let radial = match self.profile {
            Profile::Indicator => ad / df,
            Profile::ParabolicCap => ad * (2.0 / df - 1.0 / (df + 2.0)),
        };
        self.b * unit_sphere_area(d) * radial
    }
}

/// Overlap `C(rho) = int f^2(|v|) f^2(|v + rho e|) dv` of two bumps whose
/// centres are `rho` apart.
pub fn bump_autocorrelation(rule: &GaussLegendre, d: usize, rho: f64) -> f64 {
    if rho >= 1.0 {
        return 0.0;
    }
    let smax = (0.25 - rho * rho / 4.0).sqrt();
    let mut sbreaks = vec![0.0];
    if smax > 0.25 {
        sbreaks.push(0.25);
    }
    sbreaks.push(smax);
    let mut tb = Vec::with_capacity(8);
    let inner = |s: f64, tb: &mut Vec<f64>| -> f64 {
        let q = (0.25 - s * s).max(0.0).sqrt();
        let (lo, hi) = (-q, q - rho);
        if hi <= lo {
            return 0.0;
        }
        tb.clear();
        tb.push(lo);
        if s < 0.25 {
            let k = (0.0625 - s * s).sqrt();
            for t in [-k, k, -rho - k, -rho + k] {
                if t > lo && t < hi {
                    tb.push(t);
                }
            }
        }
        tb.push(hi);
        tb.sort_by(f64::total_cmp);
        tb.windows(2)
            .map(|w| {
                rule.clustered(w[0], w[1], LINE_PANELS, |t| {
                    bump_sq((t * t + s * s).sqrt()) * bump_sq(((t + rho).powi(2) + s * s).sqrt())
                })
            })
            .sum()
    };
    let total: f64 = sbreaks
        .windows(2)
        .map(|w| {
            rule.clustered(w[0], w[1], INNER_PANELS, |s| {
                s.powi(d as i32 - 2) * inner(s, &mut tb)
            })
        })
        .sum();
    unit_sphere_area(d - 1) * total
}

/// `int_0^pi w(|z + delta|) sin^(d-2)(theta) dtheta` for `|z| = rho`, `|delta| = delta`.
fn angular(rule: &GaussLegendre, w: &InteractionSpec, d: usize, rho: f64, delta: f64) -> f64 {
    let full = unit_sphere_area(d) / unit_sphere_area(d - 1);
    if rho == 0.0 || delta == 0.0 {
        return w.w(rho + delta) * full;
    }
    let c = (w.a * w.a - rho * rho - delta * delta) / (2.0 * rho * delta);
    if c <= -1.0 {
        return 0.0;
    }
    let theta0 = if c >= 1.0 { 0.0 } else { c.acos() };
    rule.clustered(theta0, PI, 2, |th| {
        let r2 = (rho * rho + delta * delta + 2.0 * rho * delta * th.cos()).max(0.0);
        w.w(r2.sqrt().min(w.a)) * th.sin().powi(d as i32 - 2)
    })
}

/// `J(delta) = int int w(|x - y|) f^2(|x|) f^2(|y - delta|) dx dy`.
pub fn pair_integral(d: usize, w: &InteractionSpec, delta: f64) -> Estimate {
    let rule = GaussLegendre::new(RULE_POINTS);
    if delta >= 1.0 + w.a {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let mut breaks = vec![0.0, 1.0];
    for b in [(w.a - delta).abs(), w.a + delta] {
        if b > 0.0 && b < 1.0 {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let est = piecewise(&rule, &breaks, 1e-10, 64, |rho| {
        rho.powi(d as i32 - 1) * bump_autocorrelation(&rule, d, rho) * angular(&rule, w, d, rho, delta)
    });
    let k = unit_sphere_area(d - 1);
    Estimate {
        value: k * est.value,
        error: k * est.error,
    }
}

/// Pair integrals `J` for every squared centre distance `k` on `Z^d` with
/// `sqrt(k) <= 1 + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairKernel {
    d: usize,
    spec: Option<InteractionSpec>,
    values: BTreeMap<u64, Estimate>,
}

impl PairKernel {
    pub fn new(spec: &InteractionSpec, d: usize) -> Result<Self> {
        spec.validate()?;
        if d < 2 {
            return Err(Error::param("d", "needs d >= 2"));
        }
        let reach = 1.0 + spec.a;
        let kmax = (reach * reach).floor() as u64;
        let m = reach.floor() as i64;
        let mut keys = BTreeSet::new();
        let mut o = vec![-m; d];
        loop {
            let k: i64 = o.iter().map(|v| v * v).sum();
            if k as u64 <= kmax {
                keys.insert(k as u64);
            }
            let mut axis = 0;
            while axis < d && o[axis] == m {
                o[axis] = -m;
                axis += 1;
            }
            if axis == d {
                break;
            }
            o[axis] += 1;
        }
        let values = keys
            .into_iter()
            .map(|k| (k, pair_integral(d, spec, (k as f64).sqrt())))
            .collect();
        Ok(PairKernel {
            d,
            spec: Some(*spec),
            values,
        })
    }

    /// Kernel of `w = 0`.
    pub fn zero(d: usize) -> Self {
        PairKernel {
            d,
            spec: None,
            values: BTreeMap::new(),
        }
    }

    /// Same kernel for the floor `b`; every integral is linear in `b`.
    pub fn with_floor(&self, b: f64) -> Result<Self> {
        let Some(old) = self.spec else {
            return Ok(self.clone());
        };
        let spec = InteractionSpec::new(old.a, b, old.profile)?;
        let k = b / old.b;
        let values = self
            .values
            .iter()
            .map(|(&key, e)| {
                (
                    key,
                    Estimate {
                        value: e.value * k,
                        error: e.error * k,
                    },
                )
            })
            .collect();
        Ok(PairKernel {
            d: self.d,
            spec: Some(spec),
            values,
        })
    }

    pub fn spec(&self) -> Option<&InteractionSpec> {
        self.spec.as_ref()
    }

    pub fn value(&self, k: u64) -> f64 {
        self.values.get(&k).map_or(0.0, |e| e.value)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.values
            .values()
            .map(Estimate::relative_error)
            .fold(0.0, f64::max)
    }

    fn reach_sq(&self) -> u64 {
        self.spec.map_or(0, |s| ((1.0 + s.a) * (1.0 + s.a)).floor() as u64)
    }
}

/// Sum of bumps on the free-ball centres. Centres are integer points, so the
/// bumps have disjoint supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialState {
    pub d: usize,
    #[serde(skip)]
    pub centers: Vec<i64>,
    pub mass_per_bump: f64,
    pub kinetic_per_bump: f64,
}

pub fn build_trial_state(report: &FreeBallReport) -> Result<TrialState> {
    if report.b_n == 0 {
        return Err(Error::EmptyInput("free balls"));
    }
    TrialState::from_centers(report.d, report.free_centers.clone())
}

impl TrialState {
    pub fn from_centers(d: usize, centers: Vec<i64>) -> Result<Self> {
        if d < 2 || centers.is_empty() || !centers.len().is_multiple_of(d) {
            return Err(Error::param("centers", "need at least one centre of dimension >= 2"));
        }
        let unique: BTreeSet<&[i64]> = centers.chunks_exact(d).collect();
        if unique.len() * d != centers.len() {
            return Err(Error::param("centers", "centres must be distinct"));
        }
        let c = bump_constants(d);
        Ok(TrialState {
            d,
            centers,
            mass_per_bump: c.mass_per_bump,
            kinetic_per_bump: c.kinetic_per_bump,
        })
    }

    pub fn n_bumps(&self) -> usize {
        self.centers.len() / self.d
    }

    pub fn norm_sq(&self) -> f64 {
        self.n_bumps() as f64 * self.mass_per_bump
    }

    pub fn kinetic_total(&self) -> f64 {
        self.n_bumps() as f64 * self.kinetic_per_bump
    }

    /// `psi(x)`; only the bump at the nearest integer point can be nonzero.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let c: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
        if !self.centers.chunks_exact(self.d).any(|z| z == c.as_slice()) {
            return 0.0;
        }
        let r = x
            .iter()
            .zip(&c)
            .map(|(v, z)| (v - *z as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        bump_profile(r)
    }

    /// Ordered centre pairs (including each centre with itself) grouped by
    /// squared distance, up to `kmax`.
    pub fn pair_counts(&self, kmax: u64) -> BTreeMap<u64, u64> {
        let d = self.d;
        let set: BTreeSet<&[i64]> = self.centers.chunks_exact(d).collect();
        let m = (kmax as f64).sqrt().floor() as i64;
        let mut counts = BTreeMap::new();
        counts.insert(0, self.n_bumps() as u64);
        let mut probe = vec![0i64; d];
        let mut o = vec![-m; d];
        loop {
            let k: i64 = o.iter().map(|v| v * v).sum();
            if k > 0 && k as u64 <= kmax {
                let hits = self
                    .centers
                    .chunks_exact(d)
                    .filter(|c| {
                        for i in 0..d {
                            probe[i] = c[i] + o[i];
                        }
                        set.contains(probe.as_slice())
                    })
                    .count() as u64;
                if hits > 0 {
                    *counts.entry(k as u64).or_insert(0) += hits;
                }
            }
            let mut axis = 0;
            while axis < d && o[axis] == m {
                o[axis] = -m;
                axis += 1;
            }
            if axis == d {
                break;
            }
            o[axis] += 1;
        }
        counts
    }

    /// `int int w(|x - y|) psi^2(x) psi^2(y) dx dy`.
    pub fn interaction_integral(&self, kernel: &PairKernel) -> f64 {
        if kernel.spec.is_none() {
            return 0.0;
        }
        self.pair_counts(kernel.reach_sq())
            .iter()
            .map(|(&k, &n)| n as f64 * kernel.value(k))
            .sum()
    }
}

/// Trial-state energy per volume and its inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub side: f64,
    pub beta: f64,
    pub b_n: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub w_l1: f64,
    /// `beta N int|grad psi|^2 / (|psi|^2 L^d)`.
    pub kinetic_density: f64,
    /// `beta C(N,2) I / (|psi|^4 L^d)`.
    pub interaction_density: f64,
    /// Sum of the two terms above.
    pub energy_density: f64,
    pub quadrature_error: f64,
    pub quadrature_flag: bool,
}

pub fn trial_energy_density(
    ts: &TrialState,
    kernel: &PairKernel,
    n: u64,
    side: f64,
    beta: f64,
) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::param("N", format!("must be at least 2, got {n}")));
    }
    if kernel.d != ts.d {
        return Err(Error::param("kernel", "dimension mismatch"));
    }
    if !(side > 0.0 && beta > 0.0) {
        return Err(Error::param("side", "side and beta must be positive"));
    }
    let vol = side.powi(ts.d as i32);
    let nf = n as f64;
    let norm = ts.norm_sq();
    let kinetic = beta * nf * ts.kinetic_total() / norm / vol;
    let interaction = beta * nf * (nf - 1.0) / 2.0 * ts.interaction_integral(kernel) / (norm * norm) / vol;
    let err = kernel.max_relative_error();
    Ok(BoundReport {
        n,
        side,
        beta,
        b_n: ts.n_bumps(),
        a: kernel.spec.map(|s| s.a),
        b: kernel.spec.map(|s| s.b),
        w_l1: kernel.spec.map_or(0.0, |s| s.l1_norm(ts.d)),
        kinetic_density: kinetic,
        interaction_density: interaction,
        energy_density: kinetic + interaction,
        quadrature_error: err,
        quadrature_flag: err > QUADRATURE_TOL,
    })
}
