//! Vacant-cluster decomposition of the occupancy lattice and the
//! statistics built on it: largest cluster, origin-cluster tail, `ln L`
//! scaling, and the spanning-probability estimate of the critical intensity.

mod critical;
mod scaling;
mod tail;

pub use critical::{estimate_critical_intensity, spanning_probability, PercolationEstimate, SpanningRow};
pub use scaling::{run_cluster_trial, scaling_study, ClusterTrial, ScalingRow, ScalingStudy};
pub use tail::{fit_cluster_tail, fit_log_tail, fit_tail_sizes, origin_cluster_trials, survival_from_sizes, TailFit};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;
use crate::vacancy::OccupancyGrid;

/// Lattice adjacency used for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjacency {
    /// 2d nearest neighbours at distance `s`.
    #[default]
    Nearest,
    /// All 3^d - 1 neighbours, for sensitivity checks.
    Full,
}

const OCCUPIED: u32 = u32::MAX;

/// Vacant clusters of an occupancy grid. Cluster ids are the smallest linear
/// vertex index in the cluster.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    grid: OccupancyGrid,
    /// Cluster id per vertex, `u32::MAX` for occupied vertices.
    root: Vec<u32>,
    /// Vertex count, stored at the cluster id.
    sizes: Vec<u32>,
    n_clusters: usize,
    n_vacant: usize,
}

fn neighbour_offsets(grid: &OccupancyGrid, adjacency: Adjacency) -> Vec<Vec<i64>> {
    let d = grid.dim();
    match adjacency {
        Adjacency::Nearest => (0..d)
            .map(|k| {
                let mut o = vec![0i64; d];
                o[k] = -1;
                o
            })
            .collect(),
        Adjacency::Full => {
            // offsets lexicographically before zero cover each pair once
            let mut out = Vec::new();
            let n = 3usize.pow(d as u32);
            for code in 0..n / 2 {
                let mut c = code;
                let mut o = vec![0i64; d];
                for v in o.iter_mut().rev() {
                    *v = (c % 3) as i64 - 1;
                    c /= 3;
                }
                out.push(o);
            }
            out
        }
    }
}

pub fn label_components(grid: &OccupancyGrid) -> ClusterLabeling {
    label_components_with(grid, Adjacency::Nearest)
}

pub fn label_components_with(grid: &OccupancyGrid, adjacency: Adjacency) -> ClusterLabeling {
    let n = grid.len();
    let occ = grid.occupied();
    let shape = grid.shape().to_vec();
    let d = shape.len();
    let mut strides = vec![1usize; d];
    for k in 1..d {
        strides[k] = strides[k - 1] * shape[k - 1];
    }
    let offsets = neighbour_offsets(grid, adjacency);
    let mut uf = UnionFind::new(n);
    let mut pos = vec![0usize; d];
    for v in 0..n {
        if !occ[v] {
            'next: for off in &offsets {
                let mut u = v as isize;
                for k in 0..d {
                    let c = pos[k] as i64 + off[k];
                    if c < 0 || c >= shape[k] as i64 {
                        continue 'next;
                    }
                    u += off[k] as isize * strides[k] as isize;
                }
                let u = u as usize;
                if !occ[u] {
                    uf.union(v as u32, u as u32);
                }
            }
        }
        for k in 0..d {
            pos[k] += 1;
            if pos[k] < shape[k] {
                break;
            }
            pos[k] = 0;
        }
    }
    let mut root = vec![OCCUPIED; n];
    let mut sizes = vec![0u32; n];
    let mut n_clusters = 0;
    let mut n_vacant = 0;
    for v in 0..n {
        if occ[v] {
            continue;
        }
        let r = uf.find(v as u32);
        root[v] = r;
        if sizes[r as usize] == 0 {
            n_clusters += 1;
        }
        sizes[r as usize] += 1;
        n_vacant += 1;
    }
    ClusterLabeling {
        grid: grid.clone(),
        root,
        sizes,
        n_clusters,
        n_vacant,
    }
}

impl ClusterLabeling {
    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_vacant(&self) -> usize {
        self.n_vacant
    }

    /// Cluster id of a linear vertex index, `None` when occupied.
    pub fn cluster_of(&self, linear: usize) -> Option<u32> {
        match self.root[linear] {
            OCCUPIED => None,
            r => Some(r),
        }
    }

    pub fn cluster_sizes(&self) -> BTreeMap<u32, usize> {
        self.sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(i, &s)| (i as u32, s as usize))
            .collect()
    }

    pub fn size_of_cluster(&self, id: u32) -> usize {
        self.sizes.get(id as usize).copied().unwrap_or(0) as usize
    }

    /// Vertices of one cluster, as linear indices in increasing order.
    pub fn members(&self, id: u32) -> Vec<usize> {
        (0..self.root.len()).filter(|&v| self.root[v] == id).collect()
    }

    /// Id of the largest cluster; ties go to the smaller id.
    pub fn largest_id(&self) -> Option<u32> {
        let mut best: Option<(u32, u32)> = None;
        for (i, &s) in self.sizes.iter().enumerate() {
            if s > 0 && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((i as u32, s));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Whether some vacant cluster touches both faces of the grid
    /// perpendicular to `axis`.
    pub fn spans(&self, axis: usize) -> bool {
        let shape = self.grid.shape();
        let n = self.root.len();
        let stride: usize = shape[..axis].iter().product();
        let width = shape[axis];
        let at = |v: usize| (v / stride) % width;
        let mut left = vec![false; n];
        for v in 0..n {
            if at(v) == 0 && self.root[v] != OCCUPIED {
                left[self.root[v] as usize] = true;
            }
        }
        (0..n).any(|v| at(v) == width - 1 && self.root[v] != OCCUPIED && left[self.root[v] as usize])
    }
}

/// Size of the vacant cluster containing vertex `v`; `0` when `v` is occupied.
pub fn cluster_size_at(labeling: &ClusterLabeling, v: &[i64]) -> Result<usize> {
    let i = labeling
        .grid
        .linear(v)
        .ok_or_else(|| Error::OutOfExtent(v.to_vec()))?;
    Ok(labeling.cluster_of(i).map_or(0, |id| labeling.size_of_cluster(id)))
}

/// Largest vacant cluster of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    /// Vertex count of the largest vacant cluster, `A_N`.
    pub a_n: usize,
    /// `s^d * A_N`, an upper proxy for the volume of the largest component.
    pub volume_upper: f64,
    /// Monte Carlo vacant volume inside the boxes of the largest cluster.
    pub volume_refined: Option<f64>,
    pub seed: u64,
}

/// Every grid box meets the simulation box, so `A_N` is the largest cluster.
pub fn largest_cluster(labeling: &ClusterLabeling) -> ClusterStats {
    let a_n = labeling.largest_id().map_or(0, |id| labeling.size_of_cluster(id));
    let s = labeling.grid.spacing();
    ClusterStats {
        a_n,
        volume_upper: s.powi(labeling.grid.dim() as i32) * a_n as f64,
        volume_refined: None,
        seed: 0,
    }
}

/// Fills `volume_refined` by sampling `samples_per_box` uniform points in each
/// box of the largest cluster, clipped to the simulation box, and counting the
/// vacant ones.
pub fn refine_largest_volume(
    stats: &mut ClusterStats,
    labeling: &ClusterLabeling,
    idx: &crate::spatial::SpatialIndex,
    params: &crate::params::ModelParams,
    samples_per_box: usize,
    seed: u64,
) {
    use rand::Rng;
    let Some(id) = labeling.largest_id() else {
        stats.volume_refined = Some(0.0);
        return;
    };
    let half = params.side / 2.0;
    let mut rng = crate::rng::trial_stream(seed, crate::rng::Purpose::VacancySamples);
    let mut volume = 0.0;
    let mut x = vec![0.0; params.d];
    for v in labeling.members(id) {
        let (mut lo, mut hi) = labeling.grid.box_bounds(&labeling.grid.vertex(v));
        for k in 0..params.d {
            lo[k] = lo[k].max(-half);
            hi[k] = hi[k].min(half);
        }
        let clipped: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        if clipped <= 0.0 || samples_per_box == 0 {
            continue;
        }
        let mut hits = 0usize;
        for _ in 0..samples_per_box {
            for k in 0..params.d {
                x[k] = rng.random_range(lo[k]..hi[k]);
            }
            if crate::vacancy::is_vacant_point(idx, &x, params.radius) {
                hits += 1;
            }
        }
        volume += clipped * hits as f64 / samples_per_box as f64;
    }
    stats.volume_refined = Some(volume);
}
