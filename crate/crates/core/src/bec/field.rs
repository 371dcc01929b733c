//! One-particle states sampled on a grid, and the cell-partition occupation
//! bounds built from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterLabeling;
use crate::error::{Error, Result};
use crate::spatial::SpatialIndex;
use crate::vacancy::{box_index, is_vacant_point};

use super::trial::bump_profile;

/// Relative tolerance on `h^d sum(v^2) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Function samples at the centres of a regular grid of cells of side `h`;
/// zero outside the support box.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    d: usize,
    h: f64,
    lo: Vec<f64>,
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn(
        h: f64,
        lo: &[f64],
        dims: &[usize],
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        let d = lo.len();
        if d == 0 || dims.len() != d {
            return Err(Error::param("dims", "dimension mismatch"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", format!("must be positive, got {h}")));
        }
        let n: usize = dims.iter().product();
        if n == 0 {
            return Err(Error::EmptyInput("field grid"));
        }
        let mut field = ScalarField {
            d,
            h,
            lo: lo.to_vec(),
            dims: dims.to_vec(),
            values: Vec::with_capacity(n),
        };
        let mut x = vec![0.0; d];
        for i in 0..n {
            field.center_into(i, &mut x);
            field.values.push(f(&x));
        }
        Ok(field)
    }

    /// Indicator of the vacant part of one cluster's boxes, normalized. Cells
    /// have side `s / subdivision`; a cell belongs to the support when its
    /// centre lies in a box of the cluster and is vacant.
    pub fn uniform_on_cluster(
        labeling: &ClusterLabeling,
        cluster: u32,
        idx: &SpatialIndex,
        radius: f64,
        subdivision: usize,
    ) -> Result<Self> {
        if subdivision == 0 {
            return Err(Error::param("subdivision", "must be at least 1"));
        }
        let grid = labeling.grid();
        let members = labeling.members(cluster);
        if members.is_empty() {
            return Err(Error::EmptyInput("cluster"));
        }
        let d = grid.dim();
        let s = grid.spacing();
        let mut jmin = vec![i64::MAX; d];
        let mut jmax = vec![i64::MIN; d];
        for &m in &members {
            for (k, v) in grid.vertex(m).into_iter().enumerate() {
                jmin[k] = jmin[k].min(v);
                jmax[k] = jmax[k].max(v);
            }
        }
        let lo: Vec<f64> = jmin.iter().map(|&j| (j as f64 - 0.5) * s).collect();
        let dims: Vec<usize> = (0..d)
            .map(|k| (jmax[k] - jmin[k] + 1) as usize * subdivision)
            .collect();
        let mut j = vec![0i64; d];
        let mut field = ScalarField::from_fn(s / subdivision as f64, &lo, &dims, |x| {
            for k in 0..d {
                j[k] = box_index(x[k], s);
            }
            let inside = grid
                .linear(&j)
                .is_some_and(|v| labeling.cluster_of(v) == Some(cluster));
            if inside && is_vacant_point(idx, x, radius) {
                1.0
            } else {
                0.0
            }
        })?;
        field.normalize()?;
        Ok(field)
    }

    /// Normalized radial bump of radius 1/2 around `center`.
    pub fn single_bump(center: &[f64], h: f64) -> Result<Self> {
        let n = (1.0 / h).ceil() as usize;
        let lo: Vec<f64> = center.iter().map(|c| c - n as f64 * h / 2.0).collect();
        let dims = vec![n; center.len()];
        let mut field = ScalarField::from_fn(h, &lo, &dims, |x| {
            let r = x
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            bump_profile(r)
        })?;
        field.normalize()?;
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn grid_step(&self) -> f64 {
        self.h
    }

    pub fn support_lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// `h^d sum(v^2)`.
    pub fn mass(&self) -> f64 {
        self.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        (self.mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn normalize(&mut self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Unnormalized { mass: m });
        }
        let k = m.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= k);
        Ok(())
    }

    /// Centre of cell `i` (axis 0 fastest).
    pub fn center_into(&self, mut i: usize, x: &mut [f64]) {
        for k in 0..self.d {
            let c = i % self.dims[k];
            i /= self.dims[k];
            x[k] = self.lo[k] + (c as f64 + 0.5) * self.h;
        }
    }

    /// Number of cells with a nonzero value.
    pub fn support_len(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Partition of space into half-open cubes
/// `offset_k + r n_k <= x_k < offset_k + r (n_k + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub cell_side: f64,
    #[serde(default)]
    pub offset: Vec<f64>,
}

impl PartitionSpec {
    pub fn new(cell_side: f64) -> Self {
        PartitionSpec {
            cell_side,
            offset: Vec::new(),
        }
    }

    /// Largest cell that holds at most one hard ball of radius `a`, `a / sqrt(d)`.
    pub fn hardcore(a: f64, d: usize) -> Self {
        PartitionSpec::new(a / (d as f64).sqrt())
    }

    fn check(&self, d: usize) -> Result<()> {
        if !(self.cell_side > 0.0 && self.cell_side.is_finite()) {
            return Err(Error::param("cell_side", format!("must be positive, got {}", self.cell_side)));
        }
        if !self.offset.is_empty() && self.offset.len() != d {
            return Err(Error::param("offset", "length must match the dimension"));
        }
        Ok(())
    }

    pub fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| {
                let o = self.offset.get(k).copied().unwrap_or(0.0);
                ((v - o) / self.cell_side).floor() as i64
            })
            .collect()
    }
}

/// Mass of `phi^2` per partition cell, attributing each grid cell by its centre.
/// Cells with zero mass are omitted.
pub fn cell_masses(phi: &ScalarField, part: &PartitionSpec) -> Result<BTreeMap<Vec<i64>, f64>> {
    part.check(phi.d)?;
    let vol = phi.cell_volume();
    let mut out = BTreeMap::new();
    let mut x = vec![0.0; phi.d];
    for (i, v) in phi.values.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        phi.center_into(i, &mut x);
        *out.entry(part.cell_of(&x)).or_insert(0.0) += vol * v * v;
    }
    Ok(out)
}

/// `(1 / L^d) (sum_n sqrt(m_n))^2` over the partition cells.
pub fn partition_occupation_bound(phi: &ScalarField, part: &PartitionSpec, side: f64) -> Result<f64> {
    if !phi.is_normalized() {
        return Err(Error::Unnormalized { mass: phi.mass() });
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::param("side", format!("must be positive, got {side}")));
    }
    let roots: f64 = cell_masses(phi, part)?.values().map(|m| m.sqrt()).sum();
    Ok(roots * roots / side.powi(phi.d as i32))
}

/// Number of partition cells carrying positive mass.
pub fn support_cell_count(phi: &ScalarField, part: &PartitionSpec) -> Result<usize> {
    Ok(cell_masses(phi, part)?.len())
}

/// Cells of side `r` that can meet a union of `boxes` lattice boxes of side
/// `s`: each box meets at most `floor(s / r) + 2` cells per axis.
pub fn geometric_cell_bound(boxes: usize, s: f64, r: f64, d: usize) -> f64 {
    boxes as f64 * ((s / r).floor() + 2.0).powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::label_components;
    use crate::params::ModelParams;
    use crate::sampler::sample_poisson;
    use crate::vacancy::discretize;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn kahan(xs: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for x in xs {
            let y = x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    #[test]
    fn single_cell_gives_inverse_volume() {
        let phi = {
            let mut f = ScalarField::from_fn(0.1, &[0.0, 0.0], &[10, 10], |x| x[0] + x[1]).unwrap();
            f.normalize().unwrap();
            f
        };
        let b = partition_occupation_bound(&phi, &PartitionSpec::new(1.0), 20.0).unwrap();
        assert!((b - 1.0 / 400.0).abs() < 1e-15);
        assert_eq!(support_cell_count(&phi, &PartitionSpec::new(1.0)).unwrap(), 1);
    }

    #[test]
    fn uniform_over_m_cells_is_exact() {
        for m in [1usize, 2, 3, 7, 50] {
            // m unit cells along axis 0, each with the same mass
            let mut phi = ScalarField::from_fn(0.25, &[0.0, 0.0], &[4 * m, 4], |_| 1.0).unwrap();
            phi.normalize().unwrap();
            let b = partition_occupation_bound(&phi, &PartitionSpec::new(1.0), 10.0).unwrap();
            assert!((b - m as f64 / 100.0).abs() <= 1e-12 * (m as f64 / 100.0), "m={m}");
            assert_eq!(support_cell_count(&phi, &PartitionSpec::new(1.0)).unwrap(), m);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let phi = ScalarField::from_fn(0.5, &[0.0], &[4], |_| 1.0).unwrap();
        assert!(matches!(
            partition_occupation_bound(&phi, &PartitionSpec::new(1.0), 5.0),
            Err(Error::Unnormalized { .. })
        ));
        let mut ok = phi.clone();
        ok.normalize().unwrap();
        assert!(partition_occupation_bound(&ok, &PartitionSpec::new(0.0), 5.0).is_err());
    }

    fn sparse_field(seed: u64, density: f64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = ScalarField::from_fn(0.13, &[-1.7, 0.4], &[37, 23], |_| {
            if rng.random::<f64>() < density {
                rng.random_range(-2.0..2.0)
            } else {
                0.0
            }
        })
        .unwrap();
        f.normalize().unwrap();
        f
    }

    fn oracle(phi: &ScalarField, r: f64, side: f64) -> (f64, usize) {
        let mut masses: HashMap<(i64, i64), f64> = HashMap::new();
        let (nx, ny) = (phi.shape()[0], phi.shape()[1]);
        let h = phi.grid_step();
        for iy in 0..ny {
            for ix in 0..nx {
                let v = phi.values()[iy * nx + ix];
                if v != 0.0 {
                    let x = phi.support_lo()[0] + (ix as f64 + 0.5) * h;
                    let y = phi.support_lo()[1] + (iy as f64 + 0.5) * h;
                    let key = ((x / r).floor() as i64, (y / r).floor() as i64);
                    *masses.entry(key).or_default() += h * h * v * v;
                }
            }
        }
        let mut ms: Vec<f64> = masses.values().copied().collect();
        ms.sort_by(f64::total_cmp);
        let s = kahan(ms.iter().map(|m| m.sqrt()));
        (s * s / (side * side), ms.len())
    }

    #[test]
    fn random_sparse_fields_match_kahan_oracle() {
        for seed in 0..40 {
            let phi = sparse_field(seed, 0.05 + 0.02 * seed as f64);
            for r in [0.2, 0.5, 1.3] {
                let (want, count) = oracle(&phi, r, 12.0);
                let got = partition_occupation_bound(&phi, &PartitionSpec::new(r), 12.0).unwrap();
                assert!((got - want).abs() <= 1e-12 * want, "seed={seed} r={r}");
                assert_eq!(support_cell_count(&phi, &PartitionSpec::new(r)).unwrap(), count);
            }
        }
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_and_refinement(seed in 0u64..1000, r in 0.1f64..2.0) {
            let phi = sparse_field(seed, 0.3);
            let side = 9.0;
            let coarse = PartitionSpec::new(r);
            let fine = PartitionSpec::new(r / 2.0);
            let bc = partition_occupation_bound(&phi, &coarse, side).unwrap();
            let bf = partition_occupation_bound(&phi, &fine, side).unwrap();
            let mc = support_cell_count(&phi, &coarse).unwrap();
            let mf = support_cell_count(&phi, &fine).unwrap();
            prop_assert!(bc >= (1.0 - 1e-12) / (side * side));
            prop_assert!(bf >= bc * (1.0 - 1e-12));
            prop_assert!(mf >= mc);
            prop_assert!(bc <= (mc * mc) as f64 / (side * side) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cluster_state_obeys_the_bound_chain() {
        let p = ModelParams::new(2, 1.2, 0.5, 16.0, 1).unwrap();
        for t in 0..5 {
            let ps = sample_poisson(&p, 11, t).unwrap();
            let idx = SpatialIndex::new(&ps, 0.5).unwrap();
            let grid = discretize(&ps, &p, None).unwrap();
            let lab = label_components(&grid);
            let id = lab.largest_id().unwrap();
            let phi = ScalarField::uniform_on_cluster(&lab, id, &idx, 0.5, 8).unwrap();
            assert!(phi.is_normalized());
            let part = PartitionSpec::hardcore(0.3, 2);
            let bound = partition_occupation_bound(&phi, &part, p.side).unwrap();
            let cells = support_cell_count(&phi, &part).unwrap();
            assert!(bound <= (cells * cells) as f64 / p.volume() * (1.0 + 1e-12));
            let geo = geometric_cell_bound(lab.size_of_cluster(id), grid.spacing(), part.cell_side, 2);
            assert!(cells as f64 <= geo);
        }
    }

    #[test]
    fn bump_state_is_normalized_and_local() {
        let phi = ScalarField::single_bump(&[0.3, -0.2], 0.01).unwrap();
        assert!(phi.is_normalized());
        assert!(support_cell_count(&phi, &PartitionSpec::new(2.0)).unwrap() <= 4);
    }
}
