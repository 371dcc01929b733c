//! Simulation of the Poisson hard-obstacle model and numerical evaluation of
//! the occupation and energy bounds for a Bose gas living in its vacancy set.

pub mod bec;
pub mod cluster;
pub mod error;
pub mod experiment;
pub mod free_balls;
pub mod params;
pub mod rng;
pub mod sampler;
pub mod spatial;
pub mod stats;
pub mod unionfind;
pub mod vacancy;

pub use error::{Error, ErrorKind, Result};
pub use params::{unit_ball_volume, ModelParams};
pub use sampler::{sample_poisson, PointSet};
pub use spatial::SpatialIndex;
