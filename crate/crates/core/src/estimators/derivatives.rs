use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::config::ExperimentConfig;
use crate::estimators::influence::influence_region;
use crate::estimators::{sample_replicate, segment};
use crate::geodesic::{grad_wrt_point, EnvironmentView, LabeledGeodesic, VertexRef};
use crate::stats::{mean, pairwise_sum, standard_error_of_mean};

/// Derivative sums of `T''(0, n e1)` on one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSample {
    /// Sum over process points of the squared gradient norm.
    pub gradient_sum: f64,
    /// Sum over boxes and bit positions up to the stabilization depth of
    /// `(T''(bit = 1) - T''(bit = 0))^2`.
    pub bit_sum: f64,
}

pub fn replicate_derivatives(config: &ExperimentConfig, n: f64, r: u64) -> Result<DerivativeSample> {
    let envs = sample_replicate(config, n, r)?;
    let env = &envs.thinned;
    let view = EnvironmentView::phi(env, config.phi_params(n)?);
    let (a, b) = segment(config.dim, &[], n);
    let geo = LabeledGeodesic::compute(&view, &a, &b)?;

    let mut grads = Vec::new();
    for r in &geo.path().refs {
        if let VertexRef::Point { bx, k } = r {
            let g = grad_wrt_point(&view, geo.path(), bx, *k)?;
            grads.push(g.iter().map(|x| x * x).sum::<f64>());
        }
    }

    let region = influence_region(std::slice::from_ref(&geo), env.grid(), env.window(), config.influence_radius);
    let mut bits = Vec::new();
    for bx in &region {
        let tape = env.tape(bx)?;
        for j in 1..=tape.depth() {
            let current = tape.bit(j);
            let other = geo.time_with_bit(bx, j, !current)?;
            let diff = other - geo.passage_time();
            bits.push(diff * diff);
        }
    }
    Ok(DerivativeSample { gradient_sum: pairwise_sum(&grads), bit_sum: pairwise_sum(&bits) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub n: f64,
    pub gradient_mean: f64,
    pub gradient_stderr: f64,
    pub bit_mean: f64,
    pub bit_stderr: f64,
    pub replicates: usize,
}

impl DerivativeReport {
    pub fn from_samples(n: f64, samples: &[DerivativeSample]) -> Self {
        let g: Vec<f64> = samples.iter().map(|s| s.gradient_sum).collect();
        let b: Vec<f64> = samples.iter().map(|s| s.bit_sum).collect();
        Self {
            n,
            gradient_mean: mean(&g),
            gradient_stderr: standard_error_of_mean(&g),
            bit_mean: mean(&b),
            bit_stderr: standard_error_of_mean(&b),
            replicates: samples.len(),
        }
    }
}

pub fn derivative_sums(config: &ExperimentConfig, n: f64) -> Result<DerivativeReport> {
    let samples: Vec<DerivativeSample> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| replicate_derivatives(config, n, r))
        .collect::<Result<_>>()?;
    Ok(DerivativeReport::from_samples(n, &samples))
}
