//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! `cargo test --release -p eucfpp --test acceptance -- 7 11` runs only the listed criteria.

use std::time::{Duration, Instant};

use eucfpp::results::{csv_string, ResultRow};
use eucfpp::verify::{
    check_animals_exact, check_animals_greedy, check_e_regions, check_fs, check_gradients, check_logsobolev,
    check_monotonicity, check_oracle, check_phi_inequalities, check_poisson_encoding, check_w_dimensions, CheckResult,
};
use eucfpp::{run_experiment, verify_suite, RunConfig, RunOptions, VerifySizes};
use eucfpp_core::estimators::{Estimator, Target};
use eucfpp_core::rng::MasterSeed;

const SEED: u64 = 1;

struct Outcome {
    ok: bool,
    detail: String,
}

/// All checks pass and their combined runtime stays under `budget` seconds.
fn from_checks(checks: &[CheckResult], budget: f64) -> Outcome {
    let seconds: f64 = checks.iter().map(|c| c.seconds).sum();
    Outcome {
        ok: checks.iter().all(|c| c.ok) && seconds < budget,
        detail: checks.iter().map(|c| format!("{} {}/{} {}", c.name, c.passed, c.total, c.detail)).collect::<Vec<_>>().join("; "),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cfg: &RunConfig, workers: usize) -> (Vec<ResultRow>, tempfile::TempDir) {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut opts = RunOptions::new(dir.path());
    opts.workers = workers;
    opts.command = "acceptance".into();
    let outcome = run_experiment(cfg, &opts).expect("experiment runs");
    (outcome.rows, dir)
}

fn series(rows: &[ResultRow], statistic: &str) -> Vec<(f64, f64, f64)> {
    let mut s: Vec<_> =
        rows.iter().filter(|r| r.statistic == statistic).map(|r| (r.n, r.value, r.stderr.unwrap_or(0.0))).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s
}

fn experiment(n_values: &[f64], replicates: usize, estimators: &[Estimator], targets: &[Target]) -> RunConfig {
    let mut cfg = RunConfig::default();
    let e = &mut cfg.experiment;
    e.n_values = n_values.to_vec();
    e.replicates = replicates;
    e.estimators = estimators.to_vec();
    e.targets = targets.to_vec();
    e.seed = MasterSeed(SEED);
    cfg
}

fn criterion_1() -> Outcome {
    from_checks(&[check_oracle(1000, SEED)], 30.0)
}

fn criterion_2() -> Outcome {
    from_checks(&[check_gradients(200, SEED, None)], 30.0)
}

fn criterion_3() -> Outcome {
    from_checks(&[check_phi_inequalities(100_000, SEED), check_fs(200, SEED), check_logsobolev(1000, SEED)], 60.0)
}

fn criterion_4() -> Outcome {
    from_checks(&[check_w_dimensions(), check_e_regions()], f64::INFINITY)
}

fn criterion_5() -> Outcome {
    from_checks(&[check_monotonicity(10_000, SEED)], f64::INFINITY)
}

fn criterion_6() -> Outcome {
    from_checks(&[check_poisson_encoding(100_000, SEED)], f64::INFINITY)
}

/// T' and T'' agree on at least 99% of replicates at every scale.
fn criterion_7() -> Outcome {
    let cfg = experiment(&[8.0, 16.0, 32.0], 500, &[Estimator::Equality], &[Target::TPP]);
    let (rows, _dir) = run(&cfg, workers());
    let s = series(&rows, "equality_rate");
    let ok = s.len() == 3 && s.iter().all(|&(_, rate, _)| rate >= 0.99);
    let detail = s.iter().map(|(n, r, _)| format!("n={n}: {r:.4}")).collect::<Vec<_>>().join(", ");
    Outcome { ok, detail }
}

/// Within `k` combined standard errors of non-increasing.
fn non_increasing(s: &[(f64, f64, f64)], k: f64) -> bool {
    s.windows(2).all(|w| w[1].1 <= w[0].1 + k * w[0].2.hypot(w[1].2))
}

fn ratios_below(s: &[(f64, f64, f64)], bound: f64) -> (bool, Vec<f64>) {
    let r: Vec<f64> = s.windows(2).map(|w| w[1].1 / w[0].1).collect();
    (r.iter().all(|&x| x <= bound), r)
}

fn criterion_8() -> Outcome {
    let cfg = experiment(
        &[8.0, 16.0, 32.0, 64.0],
        200,
        &[Estimator::Variance, Estimator::Influence, Estimator::Derivatives],
        &[Target::T],
    );
    let start = Instant::now();
    let (rows, _dir) = run(&cfg, workers());
    let elapsed = start.elapsed();
    let var = series(&rows, "var_over_n_T");
    let a = var.len() == 4 && non_increasing(&var, 2.0);
    let (b, rb) = ratios_below(&series(&rows, "influence_sum"), 2.5);
    let imax = series(&rows, "influence_max");
    let c = non_increasing(&imax, 2.0);
    let (d1, rg) = ratios_below(&series(&rows, "gradient_sum"), 2.5);
    let (d2, rbit) = ratios_below(&series(&rows, "bit_sum"), 2.5);
    let within_budget = elapsed < Duration::from_secs(20 * 60);
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let detail = format!(
        "(a) {} Var T/n [{}]; (b) {} influence-sum ratios [{}]; (c) {} influence max [{}]; (d) {} ratios gradient [{}] bit [{}]; {:.0}s on {} workers",
        pass(a),
        var.iter().map(|(_, v, s)| format!("{v:.4}+-{s:.4}")).collect::<Vec<_>>().join(" "),
        pass(b),
        fmt(&rb),
        pass(c),
        imax.iter().map(|(_, v, s)| format!("{v:.4}+-{s:.4}")).collect::<Vec<_>>().join(" "),
        pass(d1 && d2),
        fmt(&rg),
        fmt(&rbit),
        elapsed.as_secs_f64(),
        workers(),
    );
    Outcome { ok: a && b && c && d1 && d2 && within_budget, detail }
}

/// Doubling the window margins moves Var T'' by less than two combined standard errors.
fn criterion_9() -> Outcome {
    let base = experiment(&[16.0], 400, &[Estimator::Variance], &[Target::TPP]);
    let mut wide = base.clone();
    wide.experiment.margin_scale = 2.0;
    wide.experiment.seed = MasterSeed(SEED + 1);
    let v = |cfg: &RunConfig| series(&run(cfg, workers()).0, "var_T_PP")[0];
    let (_, v1, s1) = v(&base);
    let (_, v2, s2) = v(&wide);
    let bound = 2.0 * s1.hypot(s2);
    Outcome {
        ok: (v1 - v2).abs() < bound,
        detail: format!("margin x1 {v1:.4}+-{s1:.4}, x2 {v2:.4}+-{s2:.4}, |diff| {:.4} < {bound:.4}", (v1 - v2).abs()),
    }
}

fn criterion_10() -> Outcome {
    from_checks(&[check_animals_exact(200, SEED), check_animals_greedy(200, SEED)], f64::INFINITY)
}

/// Identical CSV bytes across reruns and worker counts.
fn criterion_11() -> Outcome {
    let mut cfg = experiment(
        &[8.0, 16.0],
        12,
        &[Estimator::Variance, Estimator::Influence, Estimator::Derivatives, Estimator::Equality],
        &[Target::T, Target::TPrime, Target::TPP, Target::Fn],
    );
    cfg.experiment.seed = MasterSeed(7);
    let bytes: Vec<String> = [1, 1, 2, 4]
        .into_iter()
        .map(|w| {
            let (rows, dir) = run(&cfg, w);
            let on_disk = std::fs::read_to_string(dir.path().join("results.csv")).expect("results.csv");
            assert_eq!(on_disk, csv_string(&rows).expect("csv"));
            on_disk
        })
        .collect();
    Outcome {
        ok: bytes.windows(2).all(|w| w[0] == w[1]),
        detail: format!("workers 1, 1, 2, 4; {} bytes each", bytes[0].len()),
    }
}

fn criterion_12() -> Outcome {
    let report = verify_suite(&VerifySizes::full(), SEED, None);
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect();
    Outcome {
        ok: report.ok() && report.seconds < 300.0,
        detail: format!("{} checks, failed {:?}, {:.1}s", report.checks.len(), failed, report.seconds),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        if !o.ok {
            failed += 1;
        }
        println!("{} criterion {id:>2} ({:.1}s): {}", pass(o.ok), start.elapsed().as_secs_f64(), o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
