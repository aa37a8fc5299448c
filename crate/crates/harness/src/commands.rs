//! Single-instance subcommands: environment snapshots and one geodesic.

use eucfpp_core::estimators::{sample_replicate, Target};
use eucfpp_core::geodesic::{geodesic_stats, passage_time, EnvironmentView, GeodesicStats, PathResult};
use eucfpp_core::point_process::export_snapshot;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;

/// Snapshot of replicate `r` at scale `n`, raw or thinned.
pub fn sample_snapshot(cfg: &RunConfig, n: f64, r: u64, thinned: bool) -> Result<String> {
    let envs = sample_replicate(&cfg.experiment, n, r)?;
    Ok(export_snapshot(if thinned { &envs.thinned } else { &envs.raw }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub n: f64,
    pub replicate: u64,
    pub target: String,
    pub path: PathResult,
    pub stats: GeodesicStats,
}

/// Geodesic from `0` to `n e1` of replicate `r`; `F_N` is not a single path and falls back to `T_PP`.
pub fn geodesic_report(cfg: &RunConfig, n: f64, r: u64, target: Target) -> Result<GeodesicReport> {
    let exp = &cfg.experiment;
    let envs = sample_replicate(exp, n, r)?;
    let a = vec![0.0; exp.dim];
    let mut b = a.clone();
    b[0] = n;
    let (target, path) = match target {
        Target::T => (target, passage_time(&EnvironmentView::power(&envs.raw, exp.alpha)?, &a, &b)?),
        Target::TPrime => (target, passage_time(&EnvironmentView::power_inserted(&envs.raw, exp.alpha)?, &a, &b)?),
        Target::TPP | Target::Fn => {
            (Target::TPP, passage_time(&EnvironmentView::phi(&envs.thinned, exp.phi_params(n)?), &a, &b)?)
        }
    };
    let stats = geodesic_stats(&path, envs.raw.grid());
    Ok(GeodesicReport { n, replicate: r, target: target.name().into(), path, stats })
}

impl GeodesicReport {
    /// Human-readable summary: one line per vertex, then the box statistics.
    pub fn text(&self) -> String {
        let mut s = format!(
            "{} from 0 to {} e1 (replicate {}): passage time {}, {} vertices, longest segment {}\n",
            self.target,
            self.n,
            self.replicate,
            self.path.passage_time,
            self.path.vertices.len(),
            self.path.l_max
        );
        for (i, v) in self.path.vertices.iter().enumerate() {
            let coords: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
            let cost = if i == 0 { String::new() } else { format!("  cost {:.6}", self.path.segment_costs[i - 1]) };
            s.push_str(&format!("  {i:>4}  ({}){cost}\n", coords.join(", ")));
        }
        s.push_str(&format!(
            "boxes touched {}, boxes used {}\n",
            self.stats.count,
            self.stats.boxes_used.len()
        ));
        s
    }
}
