//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! dim = 2
//! n_values = 8, 16, 32
//! alpha = 2
//! estimators = variance, influence
//! targets = T, T_PP
//! replicates = 200
//! seed = 1
//! ```
//!
//! Unset keys keep their defaults. Lists are comma separated. Parsing never
//! stops at the first problem: every bad line and every violated constraint
//! is reported together.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use eucfpp_core::estimators::{Estimator, ExperimentConfig, MIN_TAIL_SAMPLES};
use eucfpp_core::rng::MasterSeed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const KEYS: [&str; 17] = [
    "dim",
    "n_values",
    "alpha",
    "h0",
    "h1",
    "epsilon_k",
    "replicates",
    "seed",
    "estimators",
    "targets",
    "margin_min",
    "width_min",
    "margin_scale",
    "influence_radius",
    "tail_c1",
    "animal_sizes",
    "animal_replicates",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Animal sizes `m` evaluated by the `animals` subcommand.
    pub animal_sizes: Vec<usize>,
    /// Independent Poisson weight fields averaged per animal size.
    pub animal_replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            animal_sizes: vec![4, 8, 16, 32, 64],
            animal_replicates: 50,
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("{value:?}: {e}"))
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {lineno}: expected key = value, got {line:?}"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                errors.push(format!("line {lineno}: unknown key {key:?}"));
                continue;
            };
            if seen.contains(&known) {
                errors.push(format!("line {lineno}: duplicate key {key:?}"));
                continue;
            }
            seen.push(known);
            if let Err(e) = cfg.set(known, value) {
                errors.push(format!("line {lineno}: {key}: {e}"));
            }
        }
        errors.extend(cfg.violations());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(HarnessError::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let e = &mut self.experiment;
        match key {
            "dim" => e.dim = parse_one(value)?,
            "n_values" => e.n_values = parse_list(value)?,
            "alpha" => e.alpha = parse_one(value)?,
            "h0" => e.h0 = parse_one(value)?,
            "h1" => e.h1 = parse_one(value)?,
            "epsilon_k" => e.epsilon_k = parse_one(value)?,
            "replicates" => e.replicates = parse_one(value)?,
            "seed" => e.seed = MasterSeed(parse_one(value)?),
            "estimators" => e.estimators = parse_list(value)?,
            "targets" => e.targets = parse_list(value)?,
            "margin_min" => e.margin_min = parse_one(value)?,
            "width_min" => e.width_min = parse_one(value)?,
            "margin_scale" => e.margin_scale = parse_one(value)?,
            "influence_radius" => e.influence_radius = parse_one(value)?,
            "tail_c1" => {
                e.tail_c1 = match value {
                    "" | "none" | "auto" => None,
                    v => Some(parse_one(v)?),
                }
            }
            "animal_sizes" => self.animal_sizes = parse_list(value)?,
            "animal_replicates" => self.animal_replicates = parse_one(value)?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Every violated constraint of the parsed values.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.experiment.violations();
        let e = &self.experiment;
        if e.estimators.contains(&Estimator::Tails) && e.replicates < MIN_TAIL_SAMPLES {
            v.push(format!("the tails estimator needs replicates >= {MIN_TAIL_SAMPLES}, got {}", e.replicates));
        }
        let mut ns = e.n_values.clone();
        ns.sort_by(f64::total_cmp);
        if ns.windows(2).any(|w| w[0] == w[1]) {
            v.push("n_values must be distinct".into());
        }
        if self.animal_sizes.is_empty() || self.animal_sizes.contains(&0) {
            v.push("animal_sizes must list sizes >= 1".into());
        }
        if self.animal_replicates == 0 {
            v.push("animal_replicates must be >= 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(v))
        }
    }

    /// Every key in a fixed order; parsing this text gives back `self`.
    pub fn canonical(&self) -> String {
        let e = &self.experiment;
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", e.dim);
        let _ = writeln!(s, "n_values = {}", join(&e.n_values));
        let _ = writeln!(s, "alpha = {}", e.alpha);
        let _ = writeln!(s, "h0 = {}", e.h0);
        let _ = writeln!(s, "h1 = {}", e.h1);
        let _ = writeln!(s, "epsilon_k = {}", e.epsilon_k);
        let _ = writeln!(s, "replicates = {}", e.replicates);
        let _ = writeln!(s, "seed = {}", e.seed.0);
        let _ = writeln!(s, "estimators = {}", join(&e.estimators));
        let _ = writeln!(s, "targets = {}", join(&e.targets));
        let _ = writeln!(s, "margin_min = {}", e.margin_min);
        let _ = writeln!(s, "width_min = {}", e.width_min);
        let _ = writeln!(s, "margin_scale = {}", e.margin_scale);
        let _ = writeln!(s, "influence_radius = {}", e.influence_radius);
        let _ = writeln!(s, "tail_c1 = {}", e.tail_c1.map_or("auto".to_string(), |c| c.to_string()));
        let _ = writeln!(s, "animal_sizes = {}", join(&self.animal_sizes));
        let _ = writeln!(s, "animal_replicates = {}", self.animal_replicates);
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use eucfpp_core::estimators::Target;

    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse("# run\n\nn_values = 8, 16\nalpha = 3 # cubic\ntargets = t_pp\n").unwrap();
        assert_eq!(c.experiment.n_values, vec![8.0, 16.0]);
        assert_eq!(c.experiment.alpha, 3.0);
        assert_eq!(c.experiment.targets, vec![Target::TPP]);
        assert_eq!(c.experiment.dim, 2);
    }

    #[test]
    fn canonical_round_trips() {
        let c = RunConfig::parse("tail_c1 = 2.5\nseed = 99\nestimators = variance, equality\n").unwrap();
        assert_eq!(RunConfig::parse(&c.canonical()).unwrap(), c);
        assert_eq!(c.hash().len(), 64);
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn reports_every_problem() {
        let text = "alpha = 1\nreplicates = one\nbogus = 3\nno equals sign\nseed = 1\nseed = 2\n";
        let Err(HarnessError::Config(errs)) = RunConfig::parse(text) else { panic!("expected config error") };
        assert_eq!(errs.len(), 5, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("alpha must be > 1")));
        assert!(errs.iter().any(|e| e.contains("line 2: replicates")));
        assert!(errs.iter().any(|e| e.contains("unknown key \"bogus\"")));
        assert!(errs.iter().any(|e| e.contains("line 4")));
        assert!(errs.iter().any(|e| e.contains("duplicate key")));
    }

    #[test]
    fn tails_need_many_replicates() {
        let errs = RunConfig::parse("estimators = tails\nreplicates = 10\n").unwrap_err().to_string();
        assert!(errs.contains("tails estimator needs replicates >= 1000"), "{errs}");
    }
}
