//! Poisson point configurations on the R-padded simulation box.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::params::{ModelParams, MAX_DIM};
use crate::rng::{self, Purpose};

/// Axis-aligned box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn cube(d: usize, half_side: f64) -> Self {
        Aabb {
            lo: vec![-half_side; d],
            hi: vec![half_side; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l && v < h)
    }
}

/// Sampling box for a model: the simulation box `[-L/2, L/2]^d` padded by `R`
/// on every side, so obstacles centred just outside still cover the box.
pub fn padded_box(params: &ModelParams) -> Aabb {
    Aabb::cube(params.d, params.side / 2.0 + params.radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
    pub sample_box: Aabb,
    pub nu: f64,
    pub seed: u64,
    pub trial_id: u64,
}

impl PointSet {
    /// The zero-intensity configuration.
    pub fn empty(sample_box: Aabb) -> Self {
        PointSet {
            d: sample_box.dim(),
            coords: Vec::new(),
            sample_box,
            nu: 0.0,
            seed: 0,
            trial_id: 0,
        }
    }

    /// Wraps explicit coordinates (flat, `d` per point). Every point must lie
    /// in `sample_box`.
    pub fn from_coords(sample_box: Aabb, coords: Vec<f64>) -> Result<Self> {
        let d = sample_box.dim();
        if d == 0 || d > MAX_DIM {
            return Err(Error::param("d", format!("unsupported dimension {d}")));
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::param("coords", "length is not a multiple of d"));
        }
        if let Some(bad) = coords.chunks_exact(d).position(|p| !sample_box.contains(p)) {
            return Err(Error::param("coords", format!("point {bad} lies outside the sample box")));
        }
        Ok(PointSet {
            d,
            coords,
            sample_box,
            nu: 0.0,
            seed: 0,
            trial_id: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Independent thinning: keeps each point with probability `keep`.
    /// The result is a Poisson configuration of intensity `keep * nu` and a
    /// subset of `self`, which couples configurations across intensities.
    pub fn thin(&self, keep: f64) -> Result<PointSet> {
        if !(0.0..=1.0).contains(&keep) {
            return Err(Error::param("keep", format!("must lie in [0, 1], got {keep}")));
        }
        let mut rng = rng::trial_stream(rng::trial_seed(self.seed, self.trial_id), Purpose::Thinning);
        let mut coords = Vec::new();
        for p in self.iter() {
            if rng.random::<f64>() < keep {
                coords.extend_from_slice(p);
            }
        }
        Ok(PointSet {
            coords,
            nu: self.nu * keep,
            ..self.clone()
        })
    }

    /// One point per line, `d` whitespace-separated decimal coordinates.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for p in self.iter() {
            let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses the point dump format. Blank lines are skipped; every other line
/// must carry the same number of finite coordinates. Returns `(d, coords)`.
pub fn parse_point_dump(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut d = None;
    let mut coords = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = coords.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad coordinate `{tok}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(i + 1, "coordinate is not finite"));
            }
            coords.push(v);
        }
        let n = coords.len() - start;
        match d {
            None if n == 0 || n > MAX_DIM => {
                return Err(Error::parse(i + 1, format!("unsupported dimension {n}")))
            }
            None => d = Some(n),
            Some(k) if k != n => {
                return Err(Error::parse(i + 1, format!("expected {k} coordinates, found {n}")))
            }
            _ => {}
        }
    }
    Ok((d.unwrap_or(0), coords))
}

/// Homogeneous Poisson configuration on the padded box of `params`,
/// reproducible from `(seed, trial_id)`.
pub fn sample_poisson(params: &ModelParams, seed: u64, trial_id: u64) -> Result<PointSet> {
    params.validate()?;
    if params.nu <= 0.0 {
        return Err(Error::param(
            "nu",
            "sample_poisson needs nu > 0; use PointSet::empty for the void configuration",
        ));
    }
    let sample_box = padded_box(params);
    let mean = params.nu * sample_box.volume();
    let mut rng = rng::stream(seed, trial_id, Purpose::Points);
    let count = Poisson::new(mean)
        .map_err(|e| Error::param("nu", format!("poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let d = params.d;
    let mut coords = Vec::with_capacity(count * d);
    for _ in 0..count {
        for k in 0..d {
            coords.push(rng.random_range(sample_box.lo[k]..sample_box.hi[k]));
        }
    }
    Ok(PointSet {
        d,
        coords,
        sample_box,
        nu: params.nu,
        seed,
        trial_id,
    })
}

/// Like [`sample_poisson`] but returns the empty configuration at `nu == 0`.
pub fn sample_configuration(params: &ModelParams, seed: u64, trial_id: u64) -> Result<PointSet> {
    params.validate()?;
    if params.nu == 0.0 {
        let mut ps = PointSet::empty(padded_box(params));
        ps.seed = seed;
        ps.trial_id = trial_id;
        return Ok(ps);
    }
    sample_poisson(params, seed, trial_id)
}
