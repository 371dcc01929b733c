//! Model parameters of the hard-obstacle Boolean model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension. Grid and index code keep per-axis state on the
/// stack.
pub const MAX_DIM: usize = 8;

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(d/2 + 1)`.
///
/// Evaluated with the two-step recursion `omega_d = 2 pi / d * omega_{d-2}`,
/// which is exact in closed form for integer `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Surface area of the unit sphere in `R^d`, `d * omega_d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Dimension, obstacle intensity and radius, box side, and particle number.
///
/// The density is always derived as `N / L^d`. When the box is built from a
/// density (`from_density`), `L = (N / rho)^(1/d)` and the stored density
/// reproduces the requested one up to floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d: usize,
    pub nu: f64,
    pub radius: f64,
    pub side: f64,
    pub particles: u64,
}

impl Default for ModelParams {
    /// Planar model with `nu = 1`, `R = 1/2`, `L = 20` and density 1.
    fn default() -> Self {
        ModelParams {
            d: 2,
            nu: 1.0,
            radius: 0.5,
            side: 20.0,
            particles: 400,
        }
    }
}

impl ModelParams {
    pub fn new(d: usize, nu: f64, radius: f64, side: f64, particles: u64) -> Result<Self> {
        let p = ModelParams {
            d,
            nu,
            radius,
            side,
            particles,
        };
        p.validate()?;
        Ok(p)
    }

    /// Box side chosen so that `N / L^d = rho`.
    pub fn from_density(d: usize, nu: f64, radius: f64, particles: u64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param("rho", format!("must be positive, got {rho}")));
        }
        if d == 0 {
            return Err(Error::param("d", "must be at least 2"));
        }
        let side = (particles as f64 / rho).powf(1.0 / d as f64);
        Self::new(d, nu, radius, side, particles)
    }

    /// Checks every field. Intensity zero is allowed here (it is the empty
    /// configuration); `sample_poisson` applies the stricter `nu > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.d > MAX_DIM {
            return Err(Error::param(
                "d",
                format!("must lie in 2..={MAX_DIM}, got {}", self.d),
            ));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::param("nu", format!("must be non-negative, got {}", self.nu)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {}", self.radius)));
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(Error::param("side", format!("must be positive, got {}", self.side)));
        }
        if self.particles < 1 {
            return Err(Error::param("particles", "must be at least 1"));
        }
        Ok(())
    }

    pub fn omega_d(&self) -> f64 {
        unit_ball_volume(self.d)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    pub fn rho(&self) -> f64 {
        self.particles as f64 / self.volume()
    }

    /// Lattice spacing `R / sqrt(d)`: every box of this side has diagonal `R`.
    pub fn lattice_spacing(&self) -> f64 {
        self.radius / (self.d as f64).sqrt()
    }

    /// Limiting vacancy fraction `exp(-nu omega_d R^d)`.
    pub fn vacancy_fraction_limit(&self) -> f64 {
        (-self.nu * self.omega_d() * self.radius.powi(self.d as i32)).exp()
    }

    pub fn with_side(&self, side: f64) -> Self {
        ModelParams { side, ..*self }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        ModelParams { nu, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_closed_forms() {
        assert_eq!(unit_ball_volume(2), PI);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn density_round_trip() {
        let p = ModelParams::from_density(2, 1.0, 1.0, 10_000, 1.0).unwrap();
        assert!((p.side - 100.0).abs() < 1e-12);
        assert!((p.rho() - 1.0).abs() < 1e-12);
        let q = ModelParams::from_density(3, 1.0, 1.0, 1000, 0.125).unwrap();
        assert!((q.rho() * q.volume() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn vacancy_limits_match_closed_form() {
        let p = ModelParams::new(2, 0.5, 0.5, 40.0, 1).unwrap();
        assert!((p.vacancy_fraction_limit() - 0.675_231_9).abs() < 1e-6);
        let q = ModelParams::new(3, 1.0, 0.5, 10.0, 1).unwrap();
        assert!((q.vacancy_fraction_limit() - 0.592_384_8).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(ModelParams::new(1, 1.0, 1.0, 1.0, 1).is_err());
        assert!(ModelParams::new(2, -1.0, 1.0, 1.0, 1).is_err());
        assert!(ModelParams::new(2, 1.0, 0.0, 1.0, 1).is_err());
        assert!(ModelParams::new(2, 1.0, 1.0, -3.0, 1).is_err());
        assert!(ModelParams::new(2, 1.0, 1.0, 1.0, 0).is_err());
    }
}
