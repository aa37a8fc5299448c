//! Simulation laboratory for Euclidean first-passage percolation.
//!
//! A rate-one Poisson process is built box by box from Bernoulli and uniform
//! tapes ([`point_process`]); passage times under the power cost `t^alpha` and
//! its linearized variant are computed exactly by [`geodesic`]; [`estimators`]
//! turns replicates into variances, influences, derivative sums and tail
//! summaries; [`animals`] handles greedy lattice animals.

pub mod animals;
pub mod error;
pub mod estimators;
pub mod geodesic;
pub mod geometry;
pub mod point_process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
