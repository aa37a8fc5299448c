use std::path::Path;
use std::process::{Command, Output};

use eucfpp::results::{csv_string, read_csv, ResultRow};

fn eucfpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eucfpp")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    path(&p).to_string()
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "alpha = 0.5\nreplicates = 1\nfoo = 2\nn_values = 8, x\n");
    let out = eucfpp(&["variance", "--config", &cfg, "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["alpha must be > 1", "replicates must be >= 2", "unknown key \"foo\"", "line 4: n_values"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
}

#[test]
fn minimal_variance_run_gives_rows_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_values = 8\nreplicates = 2\ntargets = T, T_PP\n");
    let out = eucfpp(&["variance", "--config", &cfg, "--out", path(dir.path()), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("results.csv")).unwrap();
    let stats: Vec<&str> = rows.iter().map(|r| r.statistic.as_str()).collect();
    assert_eq!(stats, ["mean_T", "var_T", "var_over_n_T", "mean_T_PP", "var_T_PP", "var_over_n_T_PP"]);
    assert!(rows.iter().all(|r| r.stderr.is_some() && r.samples == 2));
    let jsonl = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), rows.len());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_changes_results_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_values = 8\nreplicates = 4\ntargets = T\n");
    let run = |sub: &str, seed: &str| {
        let out_dir = dir.path().join(sub);
        let out = eucfpp(&["variance", "--config", &cfg, "--out", path(&out_dir), "--seed", seed]);
        assert!(out.status.success());
        std::fs::read(out_dir.join("results.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
}

#[test]
fn verify_quick_passes_and_mutation_fails() {
    let ok = eucfpp(&["verify", "--quick"]);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(ok.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 16);
    let bad = eucfpp(&["verify", "--quick", "--mutate", "phi-sign"]);
    assert!(!bad.status.success());
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL gradient")), "{text}");
}

#[test]
fn plot_of_empty_csv_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    std::fs::write(&csv, csv_string(&[]).unwrap()).unwrap();
    let out = eucfpp(&["plot", "--csv", path(&csv), "--out", path(dir.path())]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn plot_names_the_malformed_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    std::fs::write(&csv, "n,statistic,value,stderr,samples,tags\n8,var_T,1,0.1,5,\n16,var_T,abc,0.1,5,\n").unwrap();
    let out = eucfpp(&["plot", "--csv", path(&csv), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

type Xy = (f64, f64);

/// `(cx, cy)` pairs of the data markers and the first vertex of each reference curve.
fn svg_coordinates(svg: &str) -> (Vec<Xy>, Vec<Xy>) {
    let attr = |line: &str, key: &str| -> Option<String> {
        let start = line.find(&format!(" {key}=\""))? + key.len() + 3;
        Some(line[start..].split('"').next()?.to_string())
    };
    let mut data = Vec::new();
    let mut refs = Vec::new();
    for line in svg.lines() {
        if line.starts_with("<circle class=\"data\"") {
            let x = attr(line, "cx").unwrap().parse().unwrap();
            let y = attr(line, "cy").unwrap().parse().unwrap();
            data.push((x, y));
        } else if line.starts_with("<polyline class=\"reference\"") {
            let pts = attr(line, "points").unwrap();
            let first = pts.split(' ').next().unwrap();
            let (x, y) = first.split_once(',').unwrap();
            refs.push((x.parse().unwrap(), y.parse().unwrap()));
        }
    }
    (data, refs)
}

#[test]
fn reference_curves_pass_through_the_first_point() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        ResultRow::new(32.0, "var_T", 5.5, Some(0.7), 100).tag("target", "T"),
        ResultRow::new(8.0, "var_T", 2.0, Some(0.3), 100).tag("target", "T"),
        ResultRow::new(16.0, "var_T", 3.1, Some(0.4), 100).tag("target", "T"),
    ];
    let csv = dir.path().join("results.csv");
    std::fs::write(&csv, csv_string(&rows).unwrap()).unwrap();
    let out = eucfpp(&["plot", "--csv", path(&csv), "--out", path(dir.path())]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("variance_T.svg")).unwrap();
    let (data, refs) = svg_coordinates(&svg);
    assert_eq!(data.len(), 3);
    assert_eq!(refs.len(), 2);
    for r in refs {
        assert_eq!(r, data[0]);
    }
}

#[test]
fn single_scale_gives_a_single_point_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    std::fs::write(&csv, csv_string(&[ResultRow::new(8.0, "influence_max", 0.3, Some(0.01), 10)]).unwrap()).unwrap();
    let out = eucfpp(&["plot", "--csv", path(&csv), "--out", path(dir.path())]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("influence_max.svg")).unwrap();
    assert_eq!(svg_coordinates(&svg).0.len(), 1);
}

#[test]
fn sample_and_geodesic_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = eucfpp(&["sample", "--n", "8", "--replicate", "3", "--thinned", "--out", path(dir.path())]);
    assert!(out.status.success());
    let snap = std::fs::read_to_string(dir.path().join("snapshot_n8_r3_thinned.txt")).unwrap();
    let env = eucfpp_core::point_process::import_snapshot(&snap).unwrap();
    assert!(env.num_points() > 0);

    let out = eucfpp(&["geodesic", "--n", "8", "--target", "t", "--out", path(dir.path())]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("T from 0 to 8 e1"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("geodesic.json")).unwrap()).unwrap();
    assert!(report["path"]["passage_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn animals_subcommand_reports_greedy_and_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "animal_sizes = 2, 5, 12\nanimal_replicates = 8\n");
    let out = eucfpp(&["animals", "--config", &cfg, "--out", path(dir.path())]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("results.csv")).unwrap();
    let get = |stat: &str, m: f64| rows.iter().find(|r| r.statistic == stat && r.n == m).map(|r| r.value);
    for m in [2.0, 5.0] {
        assert!(get("animal_greedy_per_m", m).unwrap() <= get("animal_exact_per_m", m).unwrap());
        assert!(get("animal_greedy_exact_floor", m).unwrap() <= 1.0);
    }
    assert!(get("animal_exact_per_m", 12.0).is_none());
    assert!(get("animal_greedy_per_m", 12.0).is_some());
}

#[test]
fn resume_after_a_torn_write_matches_a_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_values = 8, 12\nreplicates = 4\ntargets = T_PP\n");
    let fresh = dir.path().join("fresh");
    let torn = dir.path().join("torn");
    for out in [&fresh, &torn] {
        assert!(eucfpp(&["variance", "--config", &cfg, "--out", path(out)]).status.success());
    }
    let records = torn.join("replicates.jsonl");
    let text = std::fs::read_to_string(&records).unwrap();
    let kept: Vec<&str> = text.lines().take(3).collect();
    let partial = &text.lines().nth(3).unwrap()[..10];
    std::fs::write(&records, format!("{}\n{partial}", kept.join("\n"))).unwrap();
    std::fs::remove_file(torn.join("results.csv")).unwrap();

    let out = eucfpp(&["variance", "--config", &cfg, "--out", path(&torn), "--resume"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5 replicates computed"));
    assert_eq!(std::fs::read(fresh.join("results.csv")).unwrap(), std::fs::read(torn.join("results.csv")).unwrap());

    let other = write_config(dir.path(), "n_values = 8, 12\nreplicates = 5\ntargets = T_PP\n");
    let out = eucfpp(&["variance", "--config", &other, "--out", path(&torn), "--resume"]);
    assert_eq!(out.status.code(), Some(2));
}
