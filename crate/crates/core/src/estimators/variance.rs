use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::config::{ExperimentConfig, Target};
use crate::estimators::{gamma_geodesics, sample_replicate, segment};
use crate::geodesic::{passage_time, EnvironmentView};
use crate::stats::{jackknife_variance_stderr, mean, pairwise_sum, sample_variance};

/// `T'` and `T''` count as equal within this relative tolerance.
pub const EQUALITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub mean: f64,
    /// Unbiased (`M - 1`) sample variance.
    pub variance: f64,
    /// Jackknife standard error of `variance`.
    pub stderr: f64,
    pub samples: usize,
}

pub fn variance_from_samples(xs: &[f64]) -> Result<VarianceEstimate> {
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: xs.len() });
    }
    let stderr = if xs.len() >= 3 { jackknife_variance_stderr(xs) } else { f64::NAN };
    Ok(VarianceEstimate { mean: mean(xs), variance: sample_variance(xs).max(0.0), stderr, samples: xs.len() })
}

/// Values of `targets` (in the given order) on replicate `r` at scale `n`.
pub fn replicate_targets(config: &ExperimentConfig, n: f64, r: u64, targets: &[Target]) -> Result<Vec<f64>> {
    let envs = sample_replicate(config, n, r)?;
    let (a, b) = segment(config.dim, &[], n);
    let params = config.phi_params(n)?;
    targets
        .iter()
        .map(|t| match t {
            Target::T => Ok(passage_time(&EnvironmentView::power(&envs.raw, config.alpha)?, &a, &b)?.passage_time),
            Target::TPrime => {
                Ok(passage_time(&EnvironmentView::power_inserted(&envs.raw, config.alpha)?, &a, &b)?.passage_time)
            }
            Target::TPP => Ok(passage_time(&EnvironmentView::phi(&envs.thinned, params), &a, &b)?.passage_time),
            Target::Fn => {
                let ts: Vec<f64> =
                    gamma_geodesics(config, &envs.thinned, n)?.iter().map(|g| g.passage_time()).collect();
                Ok(pairwise_sum(&ts) / ts.len() as f64)
            }
        })
        .collect()
}

/// `M` replicate values of one target, in replicate order.
pub fn target_samples(config: &ExperimentConfig, target: Target, n: f64) -> Result<Vec<f64>> {
    (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| replicate_targets(config, n, r, &[target]).map(|v| v[0]))
        .collect()
}

pub fn estimate_variance(config: &ExperimentConfig, target: Target, n: f64) -> Result<VarianceEstimate> {
    if config.replicates < 2 {
        return Err(Error::TooFewSamples { need: 2, got: config.replicates });
    }
    variance_from_samples(&target_samples(config, target, n)?)
}

/// Whether `T'(0, n e1)` and `T''(0, n e1)` agree on replicate `r`.
pub fn replicate_equality(config: &ExperimentConfig, n: f64, r: u64) -> Result<bool> {
    let v = replicate_targets(config, n, r, &[Target::TPrime, Target::TPP])?;
    Ok((v[0] - v[1]).abs() <= EQUALITY_TOL * v[0].abs().max(v[1].abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub stderr: f64,
    pub samples: usize,
}

impl EqualityReport {
    pub fn from_flags(flags: &[bool]) -> Self {
        let m = flags.len();
        let rate = flags.iter().filter(|&&f| f).count() as f64 / m.max(1) as f64;
        Self { rate, stderr: (rate * (1.0 - rate) / m.max(1) as f64).sqrt(), samples: m }
    }
}

pub fn equality_rate(config: &ExperimentConfig, n: f64) -> Result<EqualityReport> {
    let flags: Vec<bool> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| replicate_equality(config, n, r))
        .collect::<Result<_>>()?;
    Ok(EqualityReport::from_flags(&flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_variance() {
        let v = variance_from_samples(&[3.5; 10]).unwrap();
        assert_eq!(v.variance, 0.0);
        assert_eq!(v.stderr, 0.0);
    }

    #[test]
    fn two_samples() {
        let v = variance_from_samples(&[0.0, 2.0]).unwrap();
        assert_eq!(v.variance, 2.0);
        assert_eq!(v.mean, 1.0);
        assert!(variance_from_samples(&[1.0]).is_err());
    }
}
