//! Monte Carlo estimators over replicate environments and exact checks of
//! the discrete functional inequalities on small spaces.
//!
//! Each estimator has a per-replicate function (pure in `(config, n,
//! replicate)`) and a reducer that combines replicate results in index order,
//! so results do not depend on how replicates are scheduled.

mod config;
mod derivatives;
mod entropy;
mod influence;
mod tails;
mod variance;

pub use config::{Estimator, ExperimentConfig, Target};
pub use derivatives::{derivative_sums, replicate_derivatives, DerivativeReport, DerivativeSample};
pub use entropy::{
    entropy_plugin, fs_check_exact, logsobolev_hypercube_check, FSReport, LogSobolevReport, ProductSpace,
    MAX_FACTORS, MAX_FACTOR_SIZE, MAX_HYPERCUBE_DIM,
};
pub use influence::{estimate_influences, replicate_influences, InfluenceReport, InfluenceSample};
pub use tails::{calibrate_c1, tail_fit, TailReport, MIN_TAIL_SAMPLES};
pub use variance::{
    equality_rate, estimate_variance, replicate_equality, replicate_targets, target_samples, variance_from_samples,
    EqualityReport, VarianceEstimate, EQUALITY_TOL,
};

use crate::error::Result;
use crate::geodesic::{EnvironmentView, LabeledGeodesic};
use crate::point_process::Environment;
use crate::rng::mix64;

/// Replicate key of replicate `r` at scale `n`; distinct scales get independent environments.
pub fn replicate_key(n: f64, r: u64) -> u64 {
    mix64(n.to_bits() ^ mix64(r.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Raw and thinned environments of one replicate.
pub struct ReplicateEnv {
    pub raw: Environment,
    pub thinned: Environment,
}

pub fn sample_replicate(config: &ExperimentConfig, n: f64, r: u64) -> Result<ReplicateEnv> {
    let raw = Environment::sample(config.grid()?, config.window(n)?, config.seed, replicate_key(n, r))?;
    let thinned = raw.thin(&config.thinning(n)?);
    Ok(ReplicateEnv { raw, thinned })
}

pub(crate) fn segment(dim: usize, z: &[i64], n: f64) -> (Vec<f64>, Vec<f64>) {
    let a: Vec<f64> = (0..dim).map(|i| z.get(i).copied().unwrap_or(0) as f64).collect();
    let mut b = a.clone();
    b[0] += n;
    (a, b)
}

/// Labeled `T''` geodesics from `z` to `z + n e1` for every `z` in `Gamma_n`.
pub(crate) fn gamma_geodesics<'a>(
    config: &ExperimentConfig,
    thinned: &'a Environment,
    n: f64,
) -> Result<Vec<LabeledGeodesic<'a>>> {
    let view = EnvironmentView::phi(thinned, config.phi_params(n)?);
    config
        .gamma(n)
        .iter()
        .map(|z| {
            let (a, b) = segment(config.dim, z, n);
            LabeledGeodesic::compute(&view, &a, &b)
        })
        .collect()
}
