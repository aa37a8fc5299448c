//! Deterministic parallel execution of a configured run.
//!
//! Work items are `(n, replicate)` pairs. Each finished item is appended to
//! `replicates.jsonl` as soon as it completes, so an interrupted run can be
//! resumed; the reduction to result rows always walks replicates in index
//! order, so the rows do not depend on the worker count or on completion
//! order.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use eucfpp_core::animals::{animal_greedy_trace, animal_max_exact, PoissonWeights, MAX_EXACT_SIZE};
use eucfpp_core::estimators::{
    calibrate_c1, replicate_derivatives, replicate_influences, replicate_targets, tail_fit, variance_from_samples,
    DerivativeReport, DerivativeSample, EqualityReport, Estimator, ExperimentConfig, InfluenceReport,
    InfluenceSample, Target, EQUALITY_TOL,
};
use eucfpp_core::stats::{mean, standard_error_of_mean};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::manifest::{code_version, unix_now, ReplicateRange, RunManifest};
use crate::results::{write_results, ResultRow};

pub const REPLICATES_FILE: &str = "replicates.jsonl";

/// Largest animal size that also gets an exact maximum.
pub const ANIMAL_EXACT_LIMIT: usize = 6;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub workers: usize,
    pub out: PathBuf,
    pub resume: bool,
    /// Recorded in the manifest.
    pub command: String,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { workers: 1, out: out.into(), resume: false, command: "run".into() }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub manifest: RunManifest,
    /// Work items computed by this invocation (the rest came from disk).
    pub computed: usize,
}

/// Everything one replicate contributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: f64,
    pub replicate: u64,
    /// Values of [`needed_targets`] in that order.
    pub targets: Vec<f64>,
    pub influence: Option<InfluenceSample>,
    pub derivatives: Option<DerivativeSample>,
}

/// Targets sampled per replicate: the variance targets plus whatever the
/// equality and tail estimators read, in canonical order.
pub fn needed_targets(cfg: &ExperimentConfig) -> Vec<Target> {
    let has = |e| cfg.estimators.contains(&e);
    Target::ALL
        .into_iter()
        .filter(|t| {
            (has(Estimator::Variance) && cfg.targets.contains(t))
                || (has(Estimator::Equality) && matches!(t, Target::TPrime | Target::TPP))
                || (has(Estimator::Tails) && *t == Target::TPP)
        })
        .collect()
}

pub fn compute_record(cfg: &ExperimentConfig, n: f64, r: u64) -> eucfpp_core::Result<ReplicateRecord> {
    let needed = needed_targets(cfg);
    let targets = if needed.is_empty() { Vec::new() } else { replicate_targets(cfg, n, r, &needed)? };
    let has = |e| cfg.estimators.contains(&e);
    let influence = if has(Estimator::Influence) { Some(replicate_influences(cfg, n, r)?) } else { None };
    let derivatives = if has(Estimator::Derivatives) { Some(replicate_derivatives(cfg, n, r)?) } else { None };
    Ok(ReplicateRecord { n, replicate: r, targets, influence, derivatives })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Other(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Records already on disk; a torn last line is dropped and the file trimmed to the valid prefix.
fn load_records(path: &Path) -> Result<Vec<ReplicateRecord>> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let mut records = Vec::new();
    let mut valid = 0u64;
    for line in BufReader::new(f).split(b'\n') {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        match serde_json::from_slice::<ReplicateRecord>(&line) {
            Ok(r) => {
                records.push(r);
                valid += line.len() as u64 + 1;
            }
            Err(_) => break,
        }
    }
    let f = OpenOptions::new().write(true).open(path).map_err(|e| HarnessError::io(path, e))?;
    f.set_len(valid).map_err(|e| HarnessError::io(path, e))?;
    Ok(records)
}

fn ranges(cfg: &ExperimentConfig, done: &BTreeMap<(u64, u64), ReplicateRecord>) -> Vec<ReplicateRange> {
    cfg.n_values
        .iter()
        .map(|&n| ReplicateRange {
            n,
            start: 0,
            end: cfg.replicates as u64,
            completed: done.keys().filter(|(b, _)| *b == n.to_bits()).count() as u64,
        })
        .collect()
}

/// Runs the configured Monte Carlo estimators and writes every output into `opts.out`.
pub fn run_experiment(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let exp = &cfg.experiment;
    create_dir(&opts.out)?;
    let rec_path = opts.out.join(REPLICATES_FILE);
    let hash = cfg.hash();

    let mut done: BTreeMap<(u64, u64), ReplicateRecord> = BTreeMap::new();
    if opts.resume {
        match RunManifest::read(&opts.out)? {
            Some(m) if m.config_hash != hash => {
                return Err(HarnessError::Resume(format!(
                    "{} was written for config {}, current config is {}",
                    opts.out.display(),
                    m.config_hash,
                    hash
                )))
            }
            Some(_) => {
                let wanted: Vec<u64> = exp.n_values.iter().map(|n| n.to_bits()).collect();
                for r in load_records(&rec_path)? {
                    if wanted.contains(&r.n.to_bits()) && (r.replicate as usize) < exp.replicates {
                        done.entry((r.n.to_bits(), r.replicate)).or_insert(r);
                    }
                }
            }
            None if rec_path.exists() => {
                return Err(HarnessError::Resume(format!("{} has no manifest", opts.out.display())))
            }
            None => {}
        }
    }
    if !opts.resume || done.is_empty() {
        File::create(&rec_path).map_err(|e| HarnessError::io(&rec_path, e))?;
    }

    let started = Instant::now();
    let mut manifest = RunManifest {
        command: opts.command.clone(),
        config_hash: hash,
        config: cfg.canonical(),
        code_version: code_version(),
        seed: exp.seed.0,
        status: "running".into(),
        workers: opts.workers.max(1),
        replicate_ranges: ranges(exp, &done),
        outputs: vec![REPLICATES_FILE.into()],
        started_unix: unix_now(),
        finished_unix: None,
        elapsed_seconds: 0.0,
    };
    manifest.write(&opts.out)?;

    let pending: Vec<(f64, u64)> = exp
        .n_values
        .iter()
        .flat_map(|&n| (0..exp.replicates as u64).map(move |r| (n, r)))
        .filter(|(n, r)| !done.contains_key(&(n.to_bits(), *r)))
        .collect();
    let computed = pending.len();

    let sink = Mutex::new(
        OpenOptions::new().append(true).open(&rec_path).map_err(|e| HarnessError::io(&rec_path, e))?,
    );
    let fresh = Mutex::new(Vec::with_capacity(pending.len()));
    let pool = thread_pool(opts.workers)?;
    let status = pool.install(|| {
        pending.par_iter().try_for_each(|&(n, r)| -> Result<()> {
            let rec = compute_record(exp, n, r)?;
            let mut line = serde_json::to_string(&rec).expect("records serialize");
            line.push('\n');
            {
                let mut f = sink.lock().expect("record sink poisoned");
                f.write_all(line.as_bytes()).and_then(|_| f.flush()).map_err(|e| HarnessError::io(&rec_path, e))?;
            }
            fresh.lock().expect("record buffer poisoned").push(rec);
            Ok(())
        })
    });
    for r in fresh.into_inner().expect("record buffer poisoned") {
        done.insert((r.n.to_bits(), r.replicate), r);
    }
    manifest.replicate_ranges = ranges(exp, &done);
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    if let Err(e) = status {
        manifest.status = "failed".into();
        manifest.write(&opts.out)?;
        return Err(e);
    }

    let rows = reduce(exp, &done)?;
    write_results(&opts.out, &rows)?;
    manifest.outputs.extend(["results.csv".into(), "results.jsonl".into()]);
    manifest.status = "complete".into();
    manifest.finished_unix = Some(unix_now());
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    manifest.write(&opts.out)?;
    Ok(RunOutcome { rows, manifest, computed })
}

/// Order-statistic standard error of the `q`-quantile of sorted samples.
fn quantile_stderr(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len() as f64;
    let k = (m * q * (1.0 - q)).sqrt().max(1.0);
    let at = |x: f64| sorted[(x.round().max(0.0) as usize).min(sorted.len() - 1)];
    (at(q * m + k) - at(q * m - k)) / 2.0
}

/// Maximum number of survival points per scale written as rows.
const SURVIVAL_POINTS: usize = 40;

/// Result rows from complete replicate records, scale by scale in config order.
pub fn reduce(cfg: &ExperimentConfig, done: &BTreeMap<(u64, u64), ReplicateRecord>) -> Result<Vec<ResultRow>> {
    let needed = needed_targets(cfg);
    let has = |e| cfg.estimators.contains(&e);
    let m = cfg.replicates;
    let per_n: Vec<Vec<&ReplicateRecord>> = cfg
        .n_values
        .iter()
        .map(|&n| {
            (0..m as u64)
                .map(|r| {
                    done.get(&(n.to_bits(), r))
                        .ok_or_else(|| HarnessError::Other(format!("replicate {r} at n = {n} is missing")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let column = |recs: &[&ReplicateRecord], t: Target| -> Vec<f64> {
        let i = needed.iter().position(|x| *x == t).expect("target sampled");
        recs.iter().map(|r| r.targets[i]).collect()
    };

    let c1 = if has(Estimator::Tails) {
        match cfg.tail_c1 {
            Some(c) => Some((c, false)),
            None => {
                let (i, n0) = cfg
                    .n_values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("n_values is non-empty");
                Some((calibrate_c1(&column(&per_n[i], Target::TPP), *n0)?, true))
            }
        }
    } else {
        None
    };

    let mut rows = Vec::new();
    for (&n, recs) in cfg.n_values.iter().zip(&per_n) {
        if has(Estimator::Variance) {
            for &t in &cfg.targets {
                let xs = column(recs, t);
                let v = variance_from_samples(&xs)?;
                rows.push(ResultRow::new(n, format!("mean_{t}"), v.mean, Some(standard_error_of_mean(&xs)), m).tag("target", t));
                rows.push(ResultRow::new(n, format!("var_{t}"), v.variance, Some(v.stderr), m).tag("target", t));
                rows.push(
                    ResultRow::new(n, format!("var_over_n_{t}"), v.variance / n, Some(v.stderr / n), m).tag("target", t),
                );
            }
        }
        if has(Estimator::Equality) {
            let a = column(recs, Target::TPrime);
            let b = column(recs, Target::TPP);
            let flags: Vec<bool> =
                a.iter().zip(&b).map(|(x, y)| (x - y).abs() <= EQUALITY_TOL * x.abs().max(y.abs())).collect();
            let e = EqualityReport::from_flags(&flags);
            rows.push(ResultRow::new(n, "equality_rate", e.rate, Some(e.stderr), m));
        }
        if has(Estimator::Influence) {
            let samples: Vec<InfluenceSample> =
                recs.iter().map(|r| r.influence.clone().expect("influence recorded")).collect();
            let rep = InfluenceReport::from_samples(n, &samples);
            rows.push(ResultRow::new(n, "influence_sum", rep.sum, Some(rep.sum_stderr), m));
            let mut max = ResultRow::new(n, "influence_max", rep.max, Some(rep.max_stderr), m);
            if let Some(b) = &rep.argmax {
                max = max.tag("box", b.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
            }
            rows.push(max);
            rows.push(ResultRow::new(n, "influence_boxes", rep.per_box.len() as f64, None, m));
        }
        if has(Estimator::Derivatives) {
            let samples: Vec<DerivativeSample> =
                recs.iter().map(|r| r.derivatives.clone().expect("derivatives recorded")).collect();
            let rep = DerivativeReport::from_samples(n, &samples);
            rows.push(ResultRow::new(n, "gradient_sum", rep.gradient_mean, Some(rep.gradient_stderr), m));
            rows.push(ResultRow::new(n, "bit_sum", rep.bit_mean, Some(rep.bit_stderr), m));
        }
        if let Some((c1, calibrated)) = c1 {
            let xs = column(recs, Target::TPP);
            let rep = tail_fit(&xs, n, cfg.dim, cfg.alpha, c1)?;
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            rows.push(ResultRow::new(n, "tail_p999", rep.p999, Some(quantile_stderr(&sorted, 0.999)), m));
            rows.push(ResultRow::new(n, "tail_c1", c1, None, m).tag("calibrated", calibrated));
            rows.push(ResultRow::new(n, "tail_c2", rep.c2, Some(rep.c2_stderr), m).tag("kappa", rep.kappa));
            rows.push(ResultRow::new(n, "tail_exceeds", if rep.exceeds { 1.0 } else { 0.0 }, None, m));
            let s = &rep.survival;
            let step = s.len().div_ceil(SURVIVAL_POINTS).max(1);
            for &(x, p) in s.iter().step_by(step) {
                let se = (p * (1.0 - p) / m as f64).sqrt();
                rows.push(ResultRow::new(n, "tail_survival", p, Some(se), m).tag("x", x));
            }
        }
    }
    Ok(rows)
}

/// Greedy (and, for small sizes, exact) animal maxima under Poisson(1) box weights.
pub fn run_animals(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    create_dir(&opts.out)?;
    let started = Instant::now();
    let exp = &cfg.experiment;
    let reps = cfg.animal_replicates;
    let max_m = *cfg.animal_sizes.iter().max().expect("validated non-empty");
    let exact_m = ANIMAL_EXACT_LIMIT.min(MAX_EXACT_SIZE);
    let pool = thread_pool(opts.workers)?;
    type PerReplicate = (Vec<f64>, Vec<Option<f64>>);
    let per_rep: Vec<PerReplicate> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| -> Result<PerReplicate> {
                let w = PoissonWeights { seed: exp.seed, replicate: r };
                let (trace, _) = animal_greedy_trace(&w, max_m, exp.dim)?;
                let exact = cfg
                    .animal_sizes
                    .iter()
                    .map(|&m| {
                        if exp.dim == 2 && m <= exact_m {
                            animal_max_exact(&w, m, 2).map(|(v, _)| Some(v))
                        } else {
                            Ok(None)
                        }
                    })
                    .collect::<eucfpp_core::Result<Vec<_>>>()?;
                Ok((trace, exact))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    for (i, &m) in cfg.animal_sizes.iter().enumerate() {
        let mf = m as f64;
        let greedy: Vec<f64> = per_rep.iter().map(|(t, _)| t[m - 1] / mf).collect();
        rows.push(
            ResultRow::new(mf, "animal_greedy_per_m", mean(&greedy), Some(standard_error_of_mean(&greedy)), reps)
                .tag("d", exp.dim),
        );
        let exact: Option<Vec<f64>> = per_rep.iter().map(|(_, e)| e[i]).collect();
        if let Some(exact) = exact {
            let per_m: Vec<f64> = exact.iter().map(|v| v / mf).collect();
            rows.push(
                ResultRow::new(mf, "animal_exact_per_m", mean(&per_m), Some(standard_error_of_mean(&per_m)), reps)
                    .tag("d", exp.dim),
            );
            let floor = per_rep
                .iter()
                .zip(&exact)
                .map(|((t, _), e)| if *e > 0.0 { t[m - 1] / e } else { 1.0 })
                .fold(f64::INFINITY, f64::min);
            rows.push(ResultRow::new(mf, "animal_greedy_exact_floor", floor, None, reps).tag("d", exp.dim));
        }
    }
    write_results(&opts.out, &rows)?;
    let manifest = RunManifest {
        command: opts.command.clone(),
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        code_version: code_version(),
        seed: exp.seed.0,
        status: "complete".into(),
        workers: opts.workers.max(1),
        replicate_ranges: cfg
            .animal_sizes
            .iter()
            .map(|&m| ReplicateRange { n: m as f64, start: 0, end: reps as u64, completed: reps as u64 })
            .collect(),
        outputs: vec!["results.csv".into(), "results.jsonl".into()],
        started_unix: unix_now(),
        finished_unix: Some(unix_now()),
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&opts.out)?;
    Ok(RunOutcome { rows, manifest, computed: reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needed_targets_cover_the_estimators() {
        let mut c = ExperimentConfig { estimators: vec![Estimator::Variance], targets: vec![Target::Fn, Target::T], ..Default::default() };
        assert_eq!(needed_targets(&c), vec![Target::T, Target::Fn]);
        c.estimators = vec![Estimator::Equality, Estimator::Tails];
        assert_eq!(needed_targets(&c), vec![Target::TPrime, Target::TPP]);
        c.estimators = vec![Estimator::Influence];
        assert!(needed_targets(&c).is_empty());
    }

    #[test]
    fn quantile_stderr_of_a_uniform_grid() {
        let xs: Vec<f64> = (0..10000).map(|i| i as f64).collect();
        let se = quantile_stderr(&xs, 0.5);
        assert!((se - 50.0).abs() <= 1.0, "{se}");
    }
}
