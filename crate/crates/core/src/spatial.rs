//! Uniform-grid bucket index with exact nearest-distance queries.

use crate::error::{Error, Result};
use crate::params::MAX_DIM;
use crate::sampler::PointSet;

/// Dense grids above this many cells are refused.
const MAX_CELLS: usize = 1 << 26;

/// Bucket index over a fixed point set. Bucket coordinates are
/// `floor(coordinate / cell_size)` per axis; buckets are stored densely over
/// the bounding range of occupied buckets, points reordered bucket by bucket.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    d: usize,
    cell_size: f64,
    min_cell: [i64; MAX_DIM],
    dims: [i64; MAX_DIM],
    /// `cell_start[c]..cell_start[c + 1]` indexes `coords`/`ids` for cell `c`.
    cell_start: Vec<u32>,
    coords: Vec<f64>,
    ids: Vec<u32>,
    n_buckets: usize,
}

fn cell_of(v: f64, cell_size: f64) -> i64 {
    (v / cell_size).floor() as i64
}

impl SpatialIndex {
    pub fn new(ps: &PointSet, cell_size: f64) -> Result<Self> {
        Self::from_coords(ps.dim(), ps.coords(), cell_size)
    }

    pub fn from_coords(d: usize, coords: &[f64], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::param("cell_size", format!("must be positive, got {cell_size}")));
        }
        if d == 0 || d > MAX_DIM || !coords.len().is_multiple_of(d) {
            return Err(Error::param("coords", "bad dimension or ragged coordinates"));
        }
        let n = coords.len() / d;
        if n > u32::MAX as usize {
            return Err(Error::param("coords", "too many points"));
        }
        let mut min_cell = [0i64; MAX_DIM];
        let mut dims = [1i64; MAX_DIM];
        if n == 0 {
            return Ok(SpatialIndex {
                d,
                cell_size,
                min_cell,
                dims,
                cell_start: vec![0, 0],
                coords: Vec::new(),
                ids: Vec::new(),
                n_buckets: 0,
            });
        }
        let mut max_cell = [i64::MIN; MAX_DIM];
        min_cell[..d].fill(i64::MAX);
        for p in coords.chunks_exact(d) {
            for k in 0..d {
                if !p[k].is_finite() {
                    return Err(Error::param("coords", "non-finite coordinate"));
                }
                let c = cell_of(p[k], cell_size);
                min_cell[k] = min_cell[k].min(c);
                max_cell[k] = max_cell[k].max(c);
            }
        }
        let mut total: usize = 1;
        for k in 0..d {
            dims[k] = max_cell[k] - min_cell[k] + 1;
            total = total.saturating_mul(dims[k] as usize);
        }
        if total > MAX_CELLS {
            return Err(Error::param(
                "cell_size",
                format!("{cell_size} yields {total} cells, more than {MAX_CELLS}"),
            ));
        }
        let mut index = SpatialIndex {
            d,
            cell_size,
            min_cell,
            dims,
            cell_start: Vec::new(),
            coords: Vec::with_capacity(coords.len()),
            ids: Vec::with_capacity(n),
            n_buckets: 0,
        };
        let cell_ids: Vec<usize> = coords
            .chunks_exact(d)
            .map(|p| {
                let mut c = [0i64; MAX_DIM];
                for k in 0..d {
                    c[k] = cell_of(p[k], cell_size);
                }
                index.linear(&c).expect("point cell inside its own bounds")
            })
            .collect();
        // counting sort by cell
        let mut start = vec![0u32; total + 1];
        for &c in &cell_ids {
            start[c + 1] += 1;
        }
        index.n_buckets = start.iter().filter(|&&c| c > 0).count();
        for c in 0..total {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut order = vec![0u32; n];
        for (i, &c) in cell_ids.iter().enumerate() {
            order[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        for &i in &order {
            let i = i as usize;
            index.coords.extend_from_slice(&coords[i * d..(i + 1) * d]);
            index.ids.push(i as u32);
        }
        index.cell_start = start;
        Ok(index)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of non-empty buckets.
    pub fn n_buckets(&self) -> usize {
        self.n_buckets
    }

    /// Bucket coordinate and original point ids of every non-empty bucket.
    pub fn buckets(&self) -> Vec<(Vec<i64>, Vec<usize>)> {
        let mut out = Vec::with_capacity(self.n_buckets);
        for c in 0..self.cell_start.len() - 1 {
            let (a, b) = (self.cell_start[c] as usize, self.cell_start[c + 1] as usize);
            if a == b {
                continue;
            }
            let mut rem = c as i64;
            let mut coord = vec![0i64; self.d];
            for k in 0..self.d {
                coord[k] = self.min_cell[k] + rem % self.dims[k];
                rem /= self.dims[k];
            }
            out.push((coord, self.ids[a..b].iter().map(|&i| i as usize).collect()));
        }
        out
    }

    fn linear(&self, c: &[i64; MAX_DIM]) -> Option<usize> {
        let mut idx = 0i64;
        let mut stride = 1i64;
        for k in 0..self.d {
            let off = c[k] - self.min_cell[k];
            if off < 0 || off >= self.dims[k] {
                return None;
            }
            idx += off * stride;
            stride *= self.dims[k];
        }
        Some(idx as usize)
    }

    /// Visits every cell in the clamped box `lo..=hi`; returns early when `f`
    /// returns `true`.
    fn scan_box(
        &self,
        lo: &[i64; MAX_DIM],
        hi: &[i64; MAX_DIM],
        f: &mut impl FnMut(usize, usize) -> bool,
    ) -> bool {
        let d = self.d;
        let mut a = [0i64; MAX_DIM];
        let mut b = [0i64; MAX_DIM];
        for k in 0..d {
            a[k] = lo[k].max(self.min_cell[k]);
            b[k] = hi[k].min(self.min_cell[k] + self.dims[k] - 1);
            if a[k] > b[k] {
                return false;
            }
        }
        let mut cur = a;
        loop {
            let c = self.linear(&cur).expect("clamped");
            let (s, e) = (self.cell_start[c] as usize, self.cell_start[c + 1] as usize);
            for slot in s..e {
                if f(slot, c) {
                    return true;
                }
            }
            let mut k = 0;
            loop {
                if k == d {
                    return false;
                }
                if cur[k] < b[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = a[k];
                k += 1;
            }
        }
    }

    fn dist(&self, slot: usize, x: &[f64]) -> f64 {
        let p = &self.coords[slot * self.d..(slot + 1) * self.d];
        p.iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Calls `f(point_id, distance)` for every point with `distance <= r`.
    /// Stops early and returns `true` when `f` returns `true`.
    pub fn visit_within(&self, x: &[f64], r: f64, mut f: impl FnMut(usize, f64) -> bool) -> bool {
        if self.is_empty() || r < 0.0 {
            return false;
        }
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for k in 0..self.d {
            // widened by a hair so rounding in x +- r never drops a cell
            lo[k] = ((x[k] - r) / self.cell_size - 1e-9).floor() as i64;
            hi[k] = ((x[k] + r) / self.cell_size + 1e-9).floor() as i64;
        }
        self.scan_box(&lo, &hi, &mut |slot, _| {
            let dist = self.dist(slot, x);
            dist <= r && f(self.ids[slot] as usize, dist)
        })
    }

    /// Whether some point lies in the closed ball of radius `r` around `x`.
    /// Equivalent to `nearest_distance(x) <= r`.
    pub fn any_within(&self, x: &[f64], r: f64) -> bool {
        self.visit_within(x, r, |_, _| true)
    }

    /// Exact Euclidean distance from `x` to the closest point, `+inf` when the
    /// index is empty.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        self.nearest(x).map_or(f64::INFINITY, |(_, dist)| dist)
    }

    /// Closest point id and its distance.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let d = self.d;
        let mut q = [0i64; MAX_DIM];
        let mut reach = 0i64;
        for k in 0..d {
            q[k] = cell_of(x[k], self.cell_size);
            let lo = self.min_cell[k];
            let hi = lo + self.dims[k] - 1;
            reach = reach.max((q[k] - lo).abs()).max((hi - q[k]).abs());
        }
        let mut best: Option<(usize, f64)> = None;
        for k in 0..=reach {
            // Faces of the Chebyshev shell at radius k: axis `a` pinned to
            // q[a] +- k, earlier axes strictly inside the shell.
            for a in 0..d {
                for side in [-1i64, 1] {
                    if k == 0 && side == 1 {
                        continue;
                    }
                    let mut lo = [0i64; MAX_DIM];
                    let mut hi = [0i64; MAX_DIM];
                    for b in 0..d {
                        if b == a {
                            lo[b] = q[b] + side * k;
                            hi[b] = lo[b];
                        } else if b < a {
                            lo[b] = q[b] - k + 1;
                            hi[b] = q[b] + k - 1;
                        } else {
                            lo[b] = q[b] - k;
                            hi[b] = q[b] + k;
                        }
                    }
                    self.scan_box(&lo, &hi, &mut |slot, _| {
                        let dist = self.dist(slot, x);
                        let id = self.ids[slot] as usize;
                        match best {
                            Some((bid, bd)) if dist > bd || (dist == bd && id > bid) => {}
                            _ => best = Some((id, dist)),
                        }
                        false
                    });
                }
                if k == 0 {
                    break;
                }
            }
            // Unvisited points sit in shells >= k + 1, at distance >= k * cell_size.
            if let Some((_, bd)) = best {
                if bd <= k as f64 * self.cell_size * (1.0 - 1e-12) {
                    break;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::rng::{self, Purpose};
    use crate::sampler::{padded_box, sample_poisson};
    use rand::Rng;

    fn linear_scan(coords: &[f64], d: usize, x: &[f64]) -> f64 {
        coords
            .chunks_exact(d)
            .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn empty_index() {
        let idx = SpatialIndex::from_coords(2, &[], 1.0).unwrap();
        assert_eq!(idx.n_buckets(), 0);
        assert_eq!(idx.nearest_distance(&[0.0, 0.0]), f64::INFINITY);
        assert!(!idx.any_within(&[0.0, 0.0], 100.0));
    }

    #[test]
    fn pythagorean_and_unit_distance() {
        let idx = SpatialIndex::from_coords(2, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(idx.nearest_distance(&[3.0, 4.0]), 5.0);
        let idx = SpatialIndex::from_coords(2, &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(idx.nearest_distance(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn rejects_bad_cell_size() {
        assert!(SpatialIndex::from_coords(2, &[0.0, 0.0], 0.0).is_err());
        assert!(SpatialIndex::from_coords(2, &[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn buckets_partition_points() {
        let p = ModelParams::new(3, 2.0, 0.7, 6.0, 1).unwrap();
        let ps = sample_poisson(&p, 1, 1).unwrap();
        let idx = SpatialIndex::new(&ps, 0.7).unwrap();
        let mut seen = vec![0usize; ps.len()];
        for (coord, ids) in idx.buckets() {
            for i in ids {
                seen[i] += 1;
                for k in 0..3 {
                    assert_eq!(coord[k], (ps.point(i)[k] / 0.7).floor() as i64);
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn nearest_matches_linear_scan_on_random_configs() {
        let mut rng = rng::stream(5, 0, Purpose::Test);
        for trial in 0..200 {
            let d = 2 + (trial % 2) as usize;
            let n = 1 + rng.random_range(0..100);
            let coords: Vec<f64> = (0..n * d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let cell = rng.random_range(0.2..3.0);
            let idx = SpatialIndex::from_coords(d, &coords, cell).unwrap();
            for _ in 0..5 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-9.0..9.0)).collect();
                let want = linear_scan(&coords, d, &x);
                let got = idx.nearest_distance(&x);
                assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
                assert!(idx.any_within(&x, want));
            }
        }
    }

    #[test]
    fn hundred_points_thousand_queries() {
        let p = ModelParams::new(2, 1.0, 0.5, 8.0, 1).unwrap();
        let ps = sample_poisson(&p, 77, 0).unwrap();
        let bx = padded_box(&p);
        let idx = SpatialIndex::new(&ps, p.radius).unwrap();
        let mut rng = rng::stream(77, 1, Purpose::Test);
        for _ in 0..1000 {
            let x = [rng.random_range(bx.lo[0]..bx.hi[0]), rng.random_range(bx.lo[1]..bx.hi[1])];
            let want = linear_scan(ps.coords(), 2, &x);
            assert!((idx.nearest_distance(&x) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}
