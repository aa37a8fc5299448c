//! Deterministic and oracle-backed checks, one line each.

use std::collections::HashSet;
use std::time::Instant;

use eucfpp_core::animals::{animal_greedy_trace, animal_max_exact, animal_max_greedy, enumerate_animals, AnimalWeights, PoissonWeights};
use eucfpp_core::estimators::{
    fs_check_exact, logsobolev_hypercube_check, replicate_targets, sample_replicate, ExperimentConfig, ProductSpace,
    Target,
};
use eucfpp_core::geodesic::{
    brute_force_passage_time, grad_wrt_point_with, passage_time, EnvironmentView, LabeledGeodesic, PathResult,
    VertexRef,
};
use eucfpp_core::geometry::{
    check_lemma_e_regions, check_lemma_w_dimensions, distance, phi_cost, phi_derivative, traverse_segment, BoxIndex,
    GridSpec, PhiParams, Window,
};
use eucfpp_core::point_process::{decode_poisson_count, export_snapshot, import_snapshot, leading_ones, BoxTape, Environment, ThinningSpec};
use eucfpp_core::rng::{MasterSeed, Substream};
use eucfpp_core::stats::{chi_square_critical, chi_square_statistic};
use serde::{Deserialize, Serialize};

/// Instance counts of every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySizes {
    pub oracle_instances: usize,
    pub gradient_vertices: usize,
    pub phi_triples: usize,
    pub fs_spaces: usize,
    pub logsobolev_functions: usize,
    pub monotonicity_trials: usize,
    pub poisson_tapes: usize,
    pub animal_instances: usize,
    pub animal_fields: usize,
    pub traversal_segments: usize,
    pub derivative_points: usize,
    pub snapshot_envs: usize,
    pub incremental_replicates: usize,
    pub fn_replicates: usize,
}

impl VerifySizes {
    pub fn full() -> Self {
        Self {
            oracle_instances: 1000,
            gradient_vertices: 200,
            phi_triples: 100_000,
            fs_spaces: 200,
            logsobolev_functions: 1000,
            monotonicity_trials: 10_000,
            poisson_tapes: 100_000,
            animal_instances: 200,
            animal_fields: 200,
            traversal_segments: 10_000,
            derivative_points: 10_000,
            snapshot_envs: 20,
            incremental_replicates: 2,
            fn_replicates: 5,
        }
    }

    /// Small counts for smoke tests; statistical checks keep enough samples to be meaningful.
    pub fn quick() -> Self {
        Self {
            oracle_instances: 50,
            gradient_vertices: 20,
            phi_triples: 2000,
            fs_spaces: 20,
            logsobolev_functions: 50,
            monotonicity_trials: 200,
            poisson_tapes: 20_000,
            animal_instances: 10,
            animal_fields: 60,
            traversal_segments: 500,
            derivative_points: 500,
            snapshot_envs: 3,
            incremental_replicates: 1,
            fn_replicates: 1,
        }
    }
}

/// Deliberate defects for checking that the suite notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Negates the cost derivative used by the analytic gradient.
    PhiDerivativeSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    pub ok: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<22} {:>7}/{:<7} {:>7.2}s  {}",
            if self.ok { "PASS" } else { "FAIL" },
            self.name,
            self.passed,
            self.total,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Uniform draws from a labeled substream.
pub(crate) struct Draw {
    s: Substream,
    i: u64,
}

impl Draw {
    pub(crate) fn new(seed: u64, label: u64) -> Self {
        Self { s: Substream::from_labels(MasterSeed(seed), &[label]), i: 0 }
    }
    pub(crate) fn unit(&mut self) -> f64 {
        self.i += 1;
        self.s.unit(self.i)
    }
    pub(crate) fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
    pub(crate) fn below(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }
    fn normal(&mut self) -> f64 {
        let u = self.unit().max(1e-300);
        let v = self.unit();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn timed(name: &str, f: impl FnOnce() -> (usize, usize, String)) -> CheckResult {
    let t = Instant::now();
    let (passed, total, detail) = f();
    CheckResult { name: name.into(), passed, total, ok: passed == total && total > 0, detail, seconds: t.elapsed().as_secs_f64() }
}

fn small_window() -> Window {
    Window::new(BoxIndex::new(&[0, -1]), BoxIndex::new(&[3, 1])).expect("static window")
}

fn random_point(r: &mut Draw) -> Vec<f64> {
    vec![r.range(-0.5, 3.5), r.range(-1.5, 1.5)]
}

fn random_env(r: &mut Draw, k: usize) -> Environment {
    let pts: Vec<Vec<f64>> = (0..k).map(|_| random_point(r)).collect();
    Environment::from_points(GridSpec::new(2).expect("d = 2"), small_window(), &pts).expect("points inside window")
}

fn same_path(a: &PathResult, b: &PathResult) -> bool {
    rel(a.passage_time, b.passage_time) <= 1e-12 && a.vertices == b.vertices
}

/// Fast search against exhaustive enumeration on instances with at most 7 points.
pub fn check_oracle(count: usize, seed: u64) -> CheckResult {
    timed("oracle_equivalence", || {
        let mut r = Draw::new(seed, 1);
        let mut passed = 0;
        let mut first_bad = String::new();
        for i in 0..count {
            let k = 1 + r.below(7);
            let env = random_env(&mut r, k);
            let alpha = [1.5, 2.0, 3.0][i % 3];
            let (a, b) = (random_point(&mut r), random_point(&mut r));
            let params = PhiParams::new(alpha, 1.0, 1.0, 0.0).expect("valid phi");
            let views = [
                EnvironmentView::power(&env, alpha).expect("alpha > 1"),
                EnvironmentView::power_inserted(&env, alpha).expect("alpha > 1"),
                EnvironmentView::phi(&env, params),
            ];
            let ok = views.iter().all(|v| match (passage_time(v, &a, &b), brute_force_passage_time(v, &a, &b)) {
                (Ok(x), Ok(y)) => same_path(&x, &y),
                _ => false,
            });
            if ok {
                passed += 1;
            } else if first_bad.is_empty() {
                first_bad = format!("first mismatch at instance {i}");
            }
        }
        (passed, count, if first_bad.is_empty() { "T, T', T'' match exhaustive search".into() } else { first_bad })
    })
}

/// Analytic gradients of `T''` against central differences (step `1e-5`, tolerance `1e-6` relative).
pub fn check_gradients(count: usize, seed: u64, mutation: Option<Mutation>) -> CheckResult {
    timed("gradient", || {
        let grid = GridSpec::new(2).expect("d = 2");
        let n = 12.0;
        let window = Window::around_segment(2, n, 3, 3).expect("window");
        let (a, b) = (vec![0.0, 0.0], vec![n, 0.0]);
        let h = 1e-5;
        let mut checked = 0;
        let mut passed = 0;
        let mut worst: f64 = 0.0;
        'reps: for rep in 0..1000u64 {
            let alpha = [2.0, 1.5, 3.0][rep as usize % 3];
            let params = PhiParams::new(alpha, 1.0, 1.0, n).expect("valid phi");
            let env = Environment::sample(grid, window.clone(), MasterSeed(seed), rep).expect("sample");
            let view = EnvironmentView::phi(&env, params);
            let Ok(p) = passage_time(&view, &a, &b) else { continue };
            for (i, (v, r)) in p.vertices.iter().zip(&p.refs).enumerate() {
                if checked == count {
                    break 'reps;
                }
                let VertexRef::Point { bx, k } = r else { continue };
                let near_kink = [i.checked_sub(1), Some(i + 1)]
                    .into_iter()
                    .flatten()
                    .filter_map(|j| p.vertices.get(j))
                    .any(|q| (distance(v, q) - params.h_n()).abs() < 1e-3);
                if near_kink {
                    continue;
                }
                let slope = |t: f64| {
                    let s = params.slope(t);
                    match mutation {
                        Some(Mutation::PhiDerivativeSign) => -s,
                        None => s,
                    }
                };
                let Ok(g) = grad_wrt_point_with(&view, &p, bx, *k, slope) else { continue };
                let mut fd = [0.0; 2];
                let mut usable = true;
                for axis in 0..2 {
                    let mut plus = v.clone();
                    plus[axis] += h;
                    let mut minus = v.clone();
                    minus[axis] -= h;
                    if grid.box_of(&plus) != *bx || grid.box_of(&minus) != *bx {
                        usable = false;
                        break;
                    }
                    let run = |pt: &[f64]| {
                        let moved = env.move_point(bx, *k, pt).ok()?;
                        let q = passage_time(&EnvironmentView::phi(&moved, params), &a, &b).ok()?;
                        (q.refs == p.refs).then_some(q.passage_time)
                    };
                    match (run(&plus), run(&minus)) {
                        (Some(tp), Some(tm)) => fd[axis] = (tp - tm) / (2.0 * h),
                        _ => {
                            usable = false;
                            break;
                        }
                    }
                }
                if !usable {
                    continue;
                }
                checked += 1;
                let err = (fd[0] - g[0]).hypot(fd[1] - g[1]) / g[0].hypot(g[1]).max(1e-6);
                worst = worst.max(err);
                if err <= 1e-6 {
                    passed += 1;
                }
            }
        }
        (passed, count.max(checked), format!("worst relative error {worst:.2e}"))
    })
}

/// Both parts of the `phi` triangle inequalities on random triples.
pub fn check_phi_inequalities(count: usize, seed: u64) -> CheckResult {
    timed("phi_inequalities", || {
        let mut r = Draw::new(seed, 3);
        let mut passed = 0;
        for i in 0..count {
            let alpha = [1.5, 2.0, 3.0][i % 3];
            let h0 = r.range(1.0, 4.0);
            let params = PhiParams::new(alpha, h0, h0 * r.range(1.0, 2.0), r.range(1.0, 256.0)).expect("valid phi");
            let scale = [1.0, 5.0, 40.0][r.below(3)];
            let mut pt = || vec![r.range(-scale, scale), r.range(-scale, scale)];
            let (a, b, c) = (pt(), pt(), pt());
            let f = |p: &[f64], q: &[f64]| phi_cost(&params, distance(p, q)).expect("non-negative length");
            let (ac, ab, bc) = (f(&a, &c), f(&a, &b), f(&b, &c));
            let part1 = ac * ac <= 2f64.powf(2.0 * alpha) * (ab * ab + bc * bc) * (1.0 + 1e-12);
            let part2 = ac - ab - bc <= 2f64.powf(alpha) * params.h_n().powf(alpha) * (1.0 + 1e-12);
            if part1 && part2 {
                passed += 1;
            }
        }
        (passed, count, "squared and additive forms".into())
    })
}

fn random_probabilities(r: &mut Draw, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| r.range(0.05, 1.0)).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    let rest: f64 = p[1..].iter().sum();
    p[0] = 1.0 - rest;
    p
}

/// The martingale entropy inequality on random finite product spaces.
pub fn check_fs(count: usize, seed: u64) -> CheckResult {
    timed("fs_exact", || {
        let mut r = Draw::new(seed, 4);
        let mut passed = 0;
        let mut min_slack = f64::INFINITY;
        for i in 0..count {
            let sizes: Vec<usize> =
                if i % 2 == 0 { vec![3, 3, 3] } else { (0..1 + r.below(4)).map(|_| 1 + r.below(4)).collect() };
            let factors: Vec<Vec<f64>> = sizes.iter().map(|&k| random_probabilities(&mut r, k)).collect();
            let space = ProductSpace::new(factors).expect("valid factors");
            let levels = 1 + r.below(5);
            let z: Vec<f64> = (0..space.num_outcomes())
                .map(|_| if i % 3 == 0 { r.below(levels) as f64 } else { r.normal() })
                .collect();
            if let Ok(rep) = fs_check_exact(&space, &z) {
                if let Some(s) = rep.slack {
                    min_slack = min_slack.min(s);
                }
                if rep.holds {
                    passed += 1;
                }
            }
        }
        (passed, count, format!("min slack {min_slack:.3e}"))
    })
}

/// The hypercube log-Sobolev inequality on random tables at `m = 6`.
pub fn check_logsobolev(count: usize, seed: u64) -> CheckResult {
    timed("log_sobolev", || {
        let mut r = Draw::new(seed, 5);
        let m = 6;
        let mut passed = 0;
        let mut min_gap = f64::INFINITY;
        for i in 0..count {
            let f: Vec<f64> = (0..1usize << m)
                .map(|x| match i % 4 {
                    0 => r.normal(),
                    1 => r.range(0.0, 1.0),
                    2 => (x.count_ones() as f64) + 0.1 * r.normal(),
                    _ => {
                        if r.unit() < 0.1 {
                            r.range(1.0, 10.0)
                        } else {
                            0.0
                        }
                    }
                })
                .collect();
            if let Ok(rep) = logsobolev_hypercube_check(m, &f) {
                min_gap = min_gap.min(rep.rhs - rep.lhs);
                if rep.holds {
                    passed += 1;
                }
            }
        }
        (passed, count, format!("min rhs - lhs {min_gap:.3e}"))
    })
}

pub fn check_w_dimensions() -> CheckResult {
    timed("w_dimensions", || {
        let mut ells = vec![0.5];
        ells.extend((0..=10).map(|i| (1u32 << i) as f64));
        let mut total = 0;
        let mut passed = 0;
        for alpha in [1.5, 2.0, 3.0] {
            let params = PhiParams::new(alpha, 8.0, 8.0, 1.0).expect("valid phi");
            for &ell in &ells {
                total += 1;
                if check_lemma_w_dimensions(&params, ell, 0.05) {
                    passed += 1;
                }
            }
        }
        (passed, total, "c = 0.05, h0 = h1 = 8".into())
    })
}

/// For each `E`, the predicate over the scanned `k` must be false then true, never true then false.
pub fn check_e_regions() -> CheckResult {
    timed("e_regions", || {
        let params = PhiParams::new(2.0, 1000.0, 1000.0, 1.0).expect("valid phi");
        let ks: Vec<f64> = (1..=400).map(|i| i as f64 * 0.25).collect();
        let mut passed = 0;
        let mut thresholds = Vec::new();
        for e in [1.0, 2.0, 4.0] {
            let vals: Vec<bool> = ks.iter().map(|&k| check_lemma_e_regions(&params, e, k)).collect();
            match vals.iter().position(|v| *v) {
                Some(i) if vals[i..].iter().all(|v| *v) => {
                    passed += 1;
                    thresholds.push(format!("E={e}: k*={}", ks[i]));
                }
                _ => thresholds.push(format!("E={e}: no threshold")),
            }
        }
        (passed, 3, thresholds.join(", "))
    })
}

/// Box emptying/freeing order and point-addition monotonicity.
pub fn check_monotonicity(count: usize, seed: u64) -> CheckResult {
    timed("monotonicity", || {
        let mut r = Draw::new(seed, 6);
        let mut passed = 0;
        for i in 0..count {
            let k = r.below(12);
            let env = random_env(&mut r, k);
            let (a, b) = (random_point(&mut r), random_point(&mut r));
            let alpha = [1.5, 2.0, 3.0][i % 3];
            let params = PhiParams::new(alpha, 1.0, 1.0, r.range(0.0, 16.0)).expect("valid phi");
            let view = EnvironmentView::phi(&env, params);
            let bx = small_window().box_at(r.below(small_window().num_boxes()));
            let t = |v: EnvironmentView| passage_time(&v, &a, &b).map(|p| p.passage_time);
            let extra = random_point(&mut r);
            let (Ok(plain), Ok(empty), Ok(free), Ok(more)) = (
                t(view.clone()),
                t(view.clone().with_emptied_box(bx.clone())),
                t(view.clone().with_free_box(bx)),
                t(view.clone().with_extra_points(vec![extra])),
            ) else {
                continue;
            };
            let tol = 1.0 + 1e-12;
            if free <= plain * tol && plain <= empty * tol && more <= plain * tol {
                passed += 1;
            }
        }
        (passed, count, "T''_{B,inf} <= T'' <= T''_{B,0}, adding a point never hurts".into())
    })
}

/// Chi-square of decoded counts against Poisson(1) on `{0, ..., 5, >= 6}` and the leading-ones mean.
pub fn check_poisson_encoding(count: usize, seed: u64) -> CheckResult {
    timed("poisson_encoding", || {
        let mut observed = [0f64; 7];
        let mut ones = 0usize;
        let bx = BoxIndex::new(&[0, 0]);
        for rep in 0..count as u64 {
            let Ok(tape) = BoxTape::keyed(MasterSeed(seed), rep, &bx, 0) else { continue };
            let c = decode_poisson_count(&tape.bit_prefix()).unwrap_or(usize::MAX);
            observed[c.min(6)] += 1.0;
            ones += leading_ones(&tape);
        }
        let m = count as f64;
        let mut pmf = [0f64; 7];
        let mut term = (-1f64).exp();
        for (k, p) in pmf.iter_mut().enumerate().take(6) {
            if k > 0 {
                term /= k as f64;
            }
            *p = term;
        }
        pmf[6] = 1.0 - pmf[..6].iter().sum::<f64>();
        let expected: Vec<f64> = pmf.iter().map(|p| p * m).collect();
        let stat = chi_square_statistic(&observed, &expected);
        let crit = chi_square_critical(6, 1e-3);
        let mean_ones = ones as f64 / m;
        // leading ones of fair bits: P[L = k] = 2^-(k+1), mean 1, variance 2
        let sigma = (2.0 / m).sqrt();
        let chi_ok = stat <= crit;
        let ones_ok = (mean_ones - 1.0).abs() <= 3.0 * sigma;
        (
            chi_ok as usize + ones_ok as usize,
            2,
            format!("chi2 {stat:.2} (critical {crit:.2}), leading ones mean {mean_ones:.4} +- {:.4}", 3.0 * sigma),
        )
    })
}

/// Origin animals of each size by plain breadth-first growth with set deduplication.
pub(crate) fn count_animals_by_growth(m: usize) -> usize {
    let mut level: HashSet<Vec<(i64, i64)>> = HashSet::from([vec![(0, 0)]]);
    for _ in 1..m {
        let mut next = HashSet::new();
        for a in &level {
            for &(x, y) in a {
                for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                    if !a.contains(&nb) {
                        let mut b = a.clone();
                        b.push(nb);
                        b.sort_unstable();
                        next.insert(b);
                    }
                }
            }
        }
        level = next;
    }
    level.len()
}

/// Enumeration counts, exact maxima against a second scan, and greedy never above exact.
pub fn check_animals_exact(count: usize, seed: u64) -> CheckResult {
    timed("animals_exact", || {
        let mut total = 0;
        let mut passed = 0;
        for m in 1..=6 {
            total += 1;
            if enumerate_animals(2, m).map(|v| v.len()).ok() == Some(count_animals_by_growth(m)) {
                passed += 1;
            }
        }
        let mut r = Draw::new(seed, 7);
        for i in 0..count {
            let m = 1 + i % 6;
            let mut w = AnimalWeights::default();
            for x in -6..=6 {
                for y in -6..=6 {
                    let v = if r.unit() < 0.3 { 0.0 } else { (-r.unit().max(1e-300).ln()).floor() };
                    let _ = w.set(BoxIndex::new(&[x, y]), v);
                }
            }
            total += 1;
            let (Ok((exact, animal)), Ok((greedy, _)), Ok(all)) =
                (animal_max_exact(&w, m, 2), animal_max_greedy(&w, m, 2), enumerate_animals(2, m))
            else {
                continue;
            };
            let scan = all.iter().map(|a| a.weight(&w)).fold(f64::NEG_INFINITY, f64::max);
            if greedy <= exact && rel(scan, exact) <= 1e-12 && rel(animal.weight(&w), exact) <= 1e-12 {
                passed += 1;
            }
        }
        (passed, total, "counts 1, 4, 18, 76, 315, 1296; greedy <= exact".into())
    })
}

/// Mean greedy `M_m / m` under Poisson(1) weights within 20% of its `m = 64` value for every `m >= 16`.
pub fn check_animals_greedy(fields: usize, seed: u64) -> CheckResult {
    timed("animals_greedy", || {
        let sizes = [16usize, 24, 32, 40, 48, 56, 64];
        let mut sums = vec![0.0; sizes.len()];
        for rep in 0..fields as u64 {
            let w = PoissonWeights { seed: MasterSeed(seed), replicate: rep };
            let Ok((trace, _)) = animal_greedy_trace(&w, 64, 2) else { continue };
            for (s, &m) in sums.iter_mut().zip(&sizes) {
                *s += trace[m - 1] / m as f64;
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s / fields as f64).collect();
        let last = *means.last().expect("non-empty");
        let passed = means.iter().filter(|v| (*v - last).abs() <= 0.2 * last).count();
        let shown: Vec<String> = sizes.iter().zip(&means).map(|(m, v)| format!("{m}:{v:.3}")).collect();
        (passed, sizes.len(), shown.join(" "))
    })
}

/// Boxes of a segment from sorted plane crossings, or `None` when two crossings nearly coincide.
fn traversal_oracle(grid: &GridSpec, p: &[f64], q: &[f64]) -> Option<Vec<BoxIndex>> {
    let mut ts = vec![0.0, 1.0];
    for a in 0..2 {
        let (lo, hi) = if p[a] <= q[a] { (p[a], q[a]) } else { (q[a], p[a]) };
        let mut plane = (lo - 0.5).ceil() + 0.5;
        while plane <= hi {
            if plane > lo && q[a] != p[a] {
                ts.push((plane - p[a]) / (q[a] - p[a]));
            }
            plane += 1.0;
        }
    }
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[1] - w[0] < 1e-9) && ts.len() > 2 {
        return None;
    }
    let mut out: Vec<BoxIndex> = Vec::new();
    for w in ts.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let pt: Vec<f64> = (0..2).map(|a| p[a] + t * (q[a] - p[a])).collect();
        let b = grid.box_of(&pt);
        if out.last() != Some(&b) {
            out.push(b);
        }
    }
    Some(out)
}

pub fn check_traversal(count: usize, seed: u64) -> CheckResult {
    timed("traverse_segment", || {
        let grid = GridSpec::new(2).expect("d = 2");
        let mut r = Draw::new(seed, 8);
        let mut passed = 0;
        let mut total = 0;
        while total < count {
            let p = vec![r.range(-5.0, 5.0), r.range(-5.0, 5.0)];
            let q = vec![r.range(-5.0, 5.0), r.range(-5.0, 5.0)];
            let Some(want) = traversal_oracle(&grid, &p, &q) else { continue };
            total += 1;
            if traverse_segment(&grid, &p, &q) == want {
                passed += 1;
            }
        }
        (passed, count, "plane-crossing oracle".into())
    })
}

/// `phi_derivative` against central differences of `phi_cost` away from the kink.
pub fn check_phi_derivative(count: usize, seed: u64) -> CheckResult {
    timed("phi_derivative", || {
        let mut r = Draw::new(seed, 9);
        let mut passed = 0;
        for i in 0..count {
            let alpha = [1.5, 2.0, 3.0][i % 3];
            let params = PhiParams::new(alpha, 2.0, 2.0, r.range(1.0, 64.0)).expect("valid phi");
            let t = r.range(0.05, 3.0 * params.h_n());
            let h = 1e-6 * t.max(1.0);
            if (t - params.h_n()).abs() < 10.0 * h {
                passed += 1;
                continue;
            }
            let fd = (phi_cost(&params, t + h).expect("t > 0") - phi_cost(&params, t - h).expect("t > 0")) / (2.0 * h);
            let an = phi_derivative(&params, t).expect("t > 0");
            if rel(fd, an) <= 1e-8 {
                passed += 1;
            }
        }
        (passed, count, "central differences, step 1e-6 t".into())
    })
}

pub fn check_snapshots(count: usize, seed: u64) -> CheckResult {
    timed("snapshot_round_trip", || {
        let grid = GridSpec::new(2).expect("d = 2");
        let window = Window::around_segment(2, 6.0, 2, 2).expect("window");
        let mut passed = 0;
        for rep in 0..count as u64 {
            let Ok(env) = Environment::sample(grid, window.clone(), MasterSeed(seed), rep) else { continue };
            let text = export_snapshot(&env);
            let Ok(back) = import_snapshot(&text) else { continue };
            if export_snapshot(&back) == text && back.all_points() == env.all_points() {
                passed += 1;
            }
        }
        (passed, count, "export, import, export".into())
    })
}

/// One-box updates of a stored geodesic against full recomputation.
pub fn check_incremental(replicates: usize, seed: u64) -> CheckResult {
    timed("incremental_updates", || {
        let grid = GridSpec::new(2).expect("d = 2");
        let n = 10.0;
        let window = Window::around_segment(2, n, 3, 3).expect("window");
        let spec = ThinningSpec::new(1, n).expect("thinning");
        let params = PhiParams::new(2.0, 8.0, 8.0, n).expect("valid phi");
        let (a, b) = (vec![0.0, 0.0], vec![n, 0.0]);
        let mut passed = 0;
        let mut total = 0;
        for rep in 0..replicates as u64 {
            let Ok(raw) = Environment::sample(grid, window.clone(), MasterSeed(seed), rep) else { continue };
            let env = raw.thin(&spec);
            let view = EnvironmentView::phi(&env, params);
            let Ok(lg) = LabeledGeodesic::compute(&view, &a, &b) else { continue };
            let slow = |e: &Environment| passage_time(&EnvironmentView::phi(e, params), &a, &b).map(|p| p.passage_time);
            for bx in window.boxes() {
                total += 1;
                let fast = lg.time_with_resampled_box(&bx, MasterSeed(seed), 1);
                let moved = env.resample_box(&bx, MasterSeed(seed), 1).map_err(|e| e.to_string());
                if let (Ok(f), Ok(m)) = (fast, moved) {
                    if slow(&m).is_ok_and(|s| rel(f, s) <= 1e-12) {
                        passed += 1;
                    }
                }
                let depth = env.tape(&bx).map_or(0, |t| t.depth());
                for j in 1..=depth {
                    total += 1;
                    let Ok(cur) = env.tape(&bx).map(|t| t.bit(j)) else { continue };
                    let fast = lg.time_with_bit(&bx, j, !cur);
                    let flipped = env.flip_bit(&bx, j, !cur);
                    if let (Ok(f), Ok(m)) = (fast, flipped) {
                        if slow(&m).is_ok_and(|s| rel(f, s) <= 1e-12) {
                            passed += 1;
                        }
                    }
                }
            }
        }
        (passed, total, "resampled boxes and flipped bits".into())
    })
}

/// `F_n` replicate values against a direct average of `T''` over the `Gamma_n` translates.
pub fn check_fn_identity(replicates: usize, seed: u64) -> CheckResult {
    timed("fn_identity", || {
        let cfg = ExperimentConfig { seed: MasterSeed(seed), replicates: 2, ..Default::default() };
        let n = 8.0;
        let mut passed = 0;
        for r in 0..replicates as u64 {
            let (Ok(v), Ok(envs), Ok(params)) =
                (replicate_targets(&cfg, n, r, &[Target::Fn]), sample_replicate(&cfg, n, r), cfg.phi_params(n))
            else {
                continue;
            };
            let view = EnvironmentView::phi(&envs.thinned, params);
            let gamma = cfg.gamma(n);
            let ts: Option<Vec<f64>> = gamma
                .iter()
                .map(|z| {
                    let a: Vec<f64> = z.iter().map(|c| *c as f64).collect();
                    let mut b = a.clone();
                    b[0] += n;
                    passage_time(&view, &a, &b).ok().map(|p| p.passage_time)
                })
                .collect();
            if let Some(ts) = ts {
                let direct = ts.iter().sum::<f64>() / ts.len() as f64;
                if rel(direct, v[0]) <= 1e-12 {
                    passed += 1;
                }
            }
        }
        (passed, replicates, format!("|Gamma_8| = {}", cfg.gamma(n).len()))
    })
}

/// Every check in a fixed order.
pub fn verify_suite(sizes: &VerifySizes, seed: u64, mutation: Option<Mutation>) -> VerifyReport {
    let t = Instant::now();
    let checks = vec![
        check_oracle(sizes.oracle_instances, seed),
        check_gradients(sizes.gradient_vertices, seed, mutation),
        check_phi_inequalities(sizes.phi_triples, seed),
        check_phi_derivative(sizes.derivative_points, seed),
        check_fs(sizes.fs_spaces, seed),
        check_logsobolev(sizes.logsobolev_functions, seed),
        check_w_dimensions(),
        check_e_regions(),
        check_monotonicity(sizes.monotonicity_trials, seed),
        check_poisson_encoding(sizes.poisson_tapes, seed),
        check_traversal(sizes.traversal_segments, seed),
        check_snapshots(sizes.snapshot_envs, seed),
        check_incremental(sizes.incremental_replicates, seed),
        check_fn_identity(sizes.fn_replicates, seed),
        check_animals_exact(sizes.animal_instances, seed),
        check_animals_greedy(sizes.animal_fields, seed),
    ];
    VerifyReport { checks, seconds: t.elapsed().as_secs_f64() }
}
