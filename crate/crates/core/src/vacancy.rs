//! The vacancy set: the exact continuum predicate and its lattice
//! discretization into boxes of side `s`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{ModelParams, MAX_DIM};
use crate::rng::{self, Purpose};
use crate::sampler::PointSet;
use crate::spatial::SpatialIndex;

/// Grids above this many boxes are refused (also bounds the export parser).
pub const MAX_GRID_BOXES: usize = 1 << 26;

/// `x` lies in the vacancy set iff it is farther than `radius` from every
/// obstacle centre; obstacle balls are closed.
pub fn is_vacant_point(idx: &SpatialIndex, x: &[f64], radius: f64) -> bool {
    !idx.any_within(x, radius)
}

/// Index of the half-open box `[j s - s/2, j s + s/2)` holding `v`.
pub fn box_index(v: f64, spacing: f64) -> i64 {
    (v / spacing + 0.5).floor() as i64
}

/// Boxes of side `spacing` centred on `spacing * Z^d`, restricted to those
/// whose closure meets the simulation box. A box is occupied iff it holds at
/// least one Poisson point.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    d: usize,
    spacing: f64,
    lo: [i64; MAX_DIM],
    dims: [usize; MAX_DIM],
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// Grid over index ranges `extent[k] = (lo, hi)`, everything vacant.
    pub fn vacant(spacing: f64, extent: &[(i64, i64)]) -> Result<Self> {
        let d = extent.len();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::param("d", format!("must lie in 2..={MAX_DIM}, got {d}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("spacing", format!("must be positive, got {spacing}")));
        }
        let mut lo = [0i64; MAX_DIM];
        let mut dims = [1usize; MAX_DIM];
        let mut total: usize = 1;
        for (k, &(a, b)) in extent.iter().enumerate() {
            if a > b {
                return Err(Error::param("extent", format!("empty range {a}..={b}")));
            }
            lo[k] = a;
            let n = b.checked_sub(a).and_then(|w| usize::try_from(w).ok()).and_then(|w| w.checked_add(1));
            dims[k] = n.ok_or_else(|| Error::param("extent", "range too wide"))?;
            total = total.saturating_mul(dims[k]);
        }
        if total > MAX_GRID_BOXES {
            return Err(Error::param("extent", format!("{total} boxes exceed {MAX_GRID_BOXES}")));
        }
        Ok(OccupancyGrid {
            d,
            spacing,
            lo,
            dims,
            occupied: vec![false; total],
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Inclusive index range per axis.
    pub fn extent(&self) -> Vec<(i64, i64)> {
        (0..self.d)
            .map(|k| (self.lo[k], self.lo[k] + self.dims[k] as i64 - 1))
            .collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.dims[..self.d]
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn n_occupied(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn n_vacant(&self) -> usize {
        self.len() - self.n_occupied()
    }

    /// Linear index of vertex `j`; axis 0 varies fastest.
    pub fn linear(&self, j: &[i64]) -> Option<usize> {
        if j.len() != self.d {
            return None;
        }
        let mut idx = 0usize;
        let mut stride = 1usize;
        for k in 0..self.d {
            let off = j[k].checked_sub(self.lo[k])?;
            if off < 0 || off as usize >= self.dims[k] {
                return None;
            }
            idx += off as usize * stride;
            stride *= self.dims[k];
        }
        Some(idx)
    }

    pub fn vertex(&self, mut linear: usize) -> Vec<i64> {
        let mut j = vec![0i64; self.d];
        for k in 0..self.d {
            j[k] = self.lo[k] + (linear % self.dims[k]) as i64;
            linear /= self.dims[k];
        }
        j
    }

    pub fn is_occupied(&self, j: &[i64]) -> Result<bool> {
        self.linear(j)
            .map(|i| self.occupied[i])
            .ok_or_else(|| Error::OutOfExtent(j.to_vec()))
    }

    pub fn set_occupied(&mut self, j: &[i64], value: bool) -> Result<()> {
        let i = self.linear(j).ok_or_else(|| Error::OutOfExtent(j.to_vec()))?;
        self.occupied[i] = value;
        Ok(())
    }

    /// Box of the point `x`, if it is on the grid.
    pub fn box_of(&self, x: &[f64]) -> Option<usize> {
        let mut j = [0i64; MAX_DIM];
        for k in 0..self.d {
            j[k] = box_index(x[k], self.spacing);
        }
        self.linear(&j[..self.d])
    }

    /// Lower corner and upper corner of box `j`.
    pub fn box_bounds(&self, j: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.spacing;
        let lo = j.iter().map(|&v| v as f64 * s - s / 2.0).collect();
        let hi = j.iter().map(|&v| v as f64 * s + s / 2.0).collect();
        (lo, hi)
    }

    /// Text export: header `d s lo_1:hi_1 ... lo_d:hi_d`, then one line of
    /// run lengths over the linear order, alternating vacant / occupied and
    /// starting with a (possibly zero) vacant run.
    pub fn to_export(&self) -> String {
        let mut out = format!("{} {}", self.d, self.spacing);
        for (a, b) in self.extent() {
            out.push_str(&format!(" {a}:{b}"));
        }
        out.push('\n');
        let mut runs = Vec::new();
        let mut state = false;
        let mut run = 0usize;
        for &o in &self.occupied {
            if o == state {
                run += 1;
            } else {
                runs.push(run.to_string());
                state = o;
                run = 1;
            }
        }
        runs.push(run.to_string());
        out.push_str(&runs.join(" "));
        out.push('\n');
        out
    }

    pub fn parse_export(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let mut tok = header.split_whitespace();
        let d: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(1, "bad dimension"))?;
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::parse(1, format!("unsupported dimension {d}")));
        }
        let spacing: f64 = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(1, "bad spacing"))?;
        let mut extent = Vec::with_capacity(d);
        for _ in 0..d {
            let t = tok.next().ok_or_else(|| Error::parse(1, "missing extent"))?;
            let (a, b) = t.split_once(':').ok_or_else(|| Error::parse(1, "extent must be lo:hi"))?;
            let a: i64 = a.parse().map_err(|_| Error::parse(1, "bad extent bound"))?;
            let b: i64 = b.parse().map_err(|_| Error::parse(1, "bad extent bound"))?;
            extent.push((a, b));
        }
        if tok.next().is_some() {
            return Err(Error::parse(1, "trailing header tokens"));
        }
        let mut grid = OccupancyGrid::vacant(spacing, &extent).map_err(|e| Error::parse(1, e.to_string()))?;
        let body = lines.next().unwrap_or("");
        let mut pos = 0usize;
        let mut state = false;
        for (i, t) in body.split_whitespace().enumerate() {
            let run: usize = t.parse().map_err(|_| Error::parse(2, format!("bad run `{t}`")))?;
            if run == 0 && i > 0 {
                return Err(Error::parse(2, "only the first run may be empty"));
            }
            let end = pos
                .checked_add(run)
                .filter(|&e| e <= grid.len())
                .ok_or_else(|| Error::parse(2, "runs overflow the grid"))?;
            grid.occupied[pos..end].fill(state);
            pos = end;
            state = !state;
        }
        if pos != grid.len() {
            return Err(Error::parse(2, format!("runs cover {pos} of {} boxes", grid.len())));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::parse(3, "trailing content"));
        }
        Ok(grid)
    }
}

/// Index range `-m..=m` of boxes whose closure meets `(-L/2, L/2)`.
fn covering_half_range(side: f64, spacing: f64) -> i64 {
    (side / (2.0 * spacing) + 0.5).ceil() as i64 - 1
}

/// Discretizes a configuration. `spacing` defaults to `R / sqrt(d)`, the
/// spacing for which an occupied box is covered by one obstacle ball.
pub fn discretize(ps: &PointSet, params: &ModelParams, spacing: Option<f64>) -> Result<OccupancyGrid> {
    let s = spacing.unwrap_or_else(|| params.lattice_spacing());
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param("spacing", format!("must be positive, got {s}")));
    }
    if ps.dim() != params.d {
        return Err(Error::param("d", "point set and params disagree on dimension"));
    }
    let m = covering_half_range(params.side, s);
    let extent = vec![(-m, m); params.d];
    let mut grid = OccupancyGrid::vacant(s, &extent)?;
    for p in ps.iter() {
        if let Some(i) = grid.box_of(p) {
            grid.occupied[i] = true;
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacancyEstimate {
    pub fraction: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Share of `n_samples` uniform points of the simulation box that are vacant.
pub fn estimate_vacancy_fraction(
    idx: &SpatialIndex,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
) -> Result<VacancyEstimate> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let half = params.side / 2.0;
    let mut rng = rng::trial_stream(seed, Purpose::VacancySamples);
    let mut x = [0.0f64; MAX_DIM];
    let mut vacant = 0usize;
    for _ in 0..n_samples {
        for v in x[..params.d].iter_mut() {
            *v = rng.random_range(-half..half);
        }
        if is_vacant_point(idx, &x[..params.d], params.radius) {
            vacant += 1;
        }
    }
    let n = n_samples as f64;
    let fraction = vacant as f64 / n;
    Ok(VacancyEstimate {
        fraction,
        stderr: (fraction * (1.0 - fraction) / n).sqrt(),
        n_samples,
    })
}

/// Hardcore admissibility of an N-particle configuration (flat coordinates):
/// every particle vacant and all pair distances strictly above `a`.
pub fn is_admissible_configuration(xs: &[f64], a: f64, idx: &SpatialIndex, radius: f64) -> bool {
    let d = idx.dim();
    if xs.chunks_exact(d).any(|x| !is_vacant_point(idx, x, radius)) {
        return false;
    }
    let cell = if a > 0.0 { a } else { 1.0 };
    let Ok(pairs) = SpatialIndex::from_coords(d, xs, cell) else {
        return false;
    };
    !xs.chunks_exact(d)
        .enumerate()
        .any(|(i, x)| pairs.visit_within(x, a, |j, _| j != i))
}
