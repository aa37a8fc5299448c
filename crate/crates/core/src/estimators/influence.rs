use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::config::ExperimentConfig;
use crate::estimators::{gamma_geodesics, sample_replicate};
use crate::geodesic::{geodesic_stats, LabeledGeodesic};
use crate::geometry::{BoxIndex, GridSpec, Window};
use crate::stats::{mean, pairwise_sum, standard_error_of_mean};

/// Boxes within `radius` (L-infinity) of a box touched by one of the geodesics, clipped to the window.
pub(crate) fn influence_region(
    geodesics: &[LabeledGeodesic],
    grid: &GridSpec,
    window: &Window,
    radius: i64,
) -> Vec<BoxIndex> {
    let mut region = BTreeSet::new();
    let d = grid.dim;
    let side = (2 * radius + 1) as usize;
    for g in geodesics {
        for b in geodesic_stats(g.path(), grid).boxes_touched {
            for mut i in 0..side.pow(d as u32) {
                let coords: Vec<i64> = (0..d)
                    .map(|a| {
                        let off = (i % side) as i64 - radius;
                        i /= side;
                        b.coords()[a] + off
                    })
                    .collect();
                let nb = BoxIndex::new(&coords);
                if window.contains_box(&nb) {
                    region.insert(nb);
                }
            }
        }
    }
    region.into_iter().collect()
}

/// `|F~_{n,B} - F_n|` on one replicate for every box of its influence region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceSample {
    pub per_box: Vec<(BoxIndex, f64)>,
}

/// Resampling tag used for influence replicates.
const RESAMPLE_TAG: u64 = 0;

pub fn replicate_influences(config: &ExperimentConfig, n: f64, r: u64) -> Result<InfluenceSample> {
    let envs = sample_replicate(config, n, r)?;
    let geos = gamma_geodesics(config, &envs.thinned, n)?;
    let base: Vec<f64> = geos.iter().map(|g| g.passage_time()).collect();
    let f = pairwise_sum(&base) / base.len() as f64;
    let region = influence_region(&geos, envs.thinned.grid(), envs.thinned.window(), config.influence_radius);
    let per_box = region
        .into_iter()
        .map(|bx| {
            let ts = geos
                .iter()
                .map(|g| g.time_with_resampled_box(&bx, config.seed, RESAMPLE_TAG))
                .collect::<Result<Vec<f64>>>()?;
            let ft = pairwise_sum(&ts) / ts.len() as f64;
            Ok((bx, (ft - f).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InfluenceSample { per_box })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub n: f64,
    pub replicates: usize,
    /// Mean of `|F~ - F|` per box over all replicates (zero where a box was outside a replicate's region).
    pub per_box: Vec<(BoxIndex, f64)>,
    /// Number of replicates in which each box was evaluated.
    pub counts: Vec<usize>,
    pub sum: f64,
    pub sum_stderr: f64,
    pub max: f64,
    pub max_stderr: f64,
    pub argmax: Option<BoxIndex>,
}

impl InfluenceReport {
    pub fn from_samples(n: f64, samples: &[InfluenceSample]) -> Self {
        let m = samples.len();
        let mut cols: BTreeMap<BoxIndex, Vec<f64>> = BTreeMap::new();
        for (r, s) in samples.iter().enumerate() {
            for (b, v) in &s.per_box {
                cols.entry(b.clone()).or_insert_with(|| vec![0.0; m])[r] = *v;
            }
        }
        let mut counts = vec![0usize; cols.len()];
        let mut per_box = Vec::with_capacity(cols.len());
        for (i, (b, col)) in cols.iter().enumerate() {
            counts[i] = samples.iter().filter(|s| s.per_box.iter().any(|(x, _)| x == b)).count();
            per_box.push((b.clone(), mean(col)));
        }
        let totals: Vec<f64> = samples
            .iter()
            .map(|s| pairwise_sum(&s.per_box.iter().map(|(_, v)| *v).collect::<Vec<_>>()))
            .collect();
        let mut max = 0.0;
        let mut argmax = None;
        for (b, v) in &per_box {
            if *v > max {
                max = *v;
                argmax = Some(b.clone());
            }
        }
        let max_stderr = argmax.as_ref().map_or(0.0, |b| standard_error_of_mean(&cols[b]));
        Self {
            n,
            replicates: m,
            sum: mean(&totals),
            sum_stderr: standard_error_of_mean(&totals),
            per_box,
            counts,
            max,
            max_stderr,
            argmax,
        }
    }
}

pub fn estimate_influences(config: &ExperimentConfig, n: f64) -> Result<InfluenceReport> {
    let samples: Vec<InfluenceSample> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| replicate_influences(config, n, r))
        .collect::<Result<_>>()?;
    Ok(InfluenceReport::from_samples(n, &samples))
}
