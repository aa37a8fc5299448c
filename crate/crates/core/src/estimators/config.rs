use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, PhiParams, Window};
use crate::point_process::ThinningSpec;
use crate::rng::MasterSeed;

/// Passage-time statistic sampled per replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// `T(0, n e1)`: power cost between the nearest process points.
    T,
    /// `T'(0, n e1)`: power cost with the endpoints inserted.
    TPrime,
    /// `T''(0, n e1)`: linearized cost over the thinned process.
    TPP,
    /// `F_n`: mean of `T''(z, z + n e1)` over `z` in `Gamma_n`.
    Fn,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::T, Target::TPrime, Target::TPP, Target::Fn];

    pub fn name(&self) -> &'static str {
        match self {
            Target::T => "T",
            Target::TPrime => "T_PRIME",
            Target::TPP => "T_PP",
            Target::Fn => "F_N",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown target {s:?} (expected T, T_PRIME, T_PP or F_N)")))
    }
}

/// Monte Carlo estimator selectable in a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    Variance,
    Influence,
    Derivatives,
    Tails,
    Equality,
}

impl Estimator {
    pub const ALL: [Estimator; 5] =
        [Estimator::Variance, Estimator::Influence, Estimator::Derivatives, Estimator::Tails, Estimator::Equality];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Variance => "variance",
            Estimator::Influence => "influence",
            Estimator::Derivatives => "derivatives",
            Estimator::Tails => "tails",
            Estimator::Equality => "equality",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL.into_iter().find(|e| e.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown estimator {s:?} (expected variance, influence, derivatives, tails or equality)"
            ))
        })
    }
}

/// Everything a run depends on besides the code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n_values: Vec<f64>,
    pub alpha: f64,
    pub h0: f64,
    pub h1: f64,
    /// Thinning cells have side `1 / (epsilon_k 3^floor(n))`; must be odd.
    pub epsilon_k: u64,
    pub replicates: usize,
    pub seed: MasterSeed,
    pub estimators: Vec<Estimator>,
    pub targets: Vec<Target>,
    /// Window margin along e1 is `max(margin_min, n / 4) * margin_scale` boxes.
    pub margin_min: f64,
    /// Transverse half-width is `max(width_min, n / 2) * margin_scale` boxes.
    pub width_min: f64,
    pub margin_scale: f64,
    /// Influences and bit derivatives are evaluated on boxes within this
    /// L-infinity distance of a box touched by a base geodesic.
    pub influence_radius: i64,
    /// Constant of the tail envelope `C1 n`; calibrated at the smallest `n` when absent.
    pub tail_c1: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n_values: vec![8.0, 16.0, 32.0],
            alpha: 2.0,
            h0: 8.0,
            h1: 8.0,
            epsilon_k: 1,
            replicates: 200,
            seed: MasterSeed(1),
            estimators: vec![Estimator::Variance],
            targets: vec![Target::T, Target::TPP],
            margin_min: 10.0,
            width_min: 10.0,
            margin_scale: 1.0,
            influence_radius: 2,
            tail_c1: None,
        }
    }
}

impl ExperimentConfig {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.dim < 2 {
            v.push(format!("dim must be >= 2, got {}", self.dim));
        }
        if self.n_values.is_empty() {
            v.push("n_values must list at least one n".into());
        }
        for &n in &self.n_values {
            if !(n >= 1.0 && n.is_finite()) {
                v.push(format!("every n must be >= 1, got {n}"));
            }
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            v.push(format!("alpha must be > 1, got {}", self.alpha));
        }
        if !(self.h0 >= 1.0) {
            v.push(format!("h0 must be >= 1, got {}", self.h0));
        }
        if !(self.h1 >= self.h0) {
            v.push(format!("h1 must be >= h0, got h1 = {} and h0 = {}", self.h1, self.h0));
        }
        if self.epsilon_k == 0 || self.epsilon_k.is_multiple_of(2) {
            v.push(format!("epsilon_k must be odd, got {}", self.epsilon_k));
        }
        if self.replicates < 2 {
            v.push(format!("replicates must be >= 2, got {}", self.replicates));
        }
        if self.estimators.is_empty() {
            v.push("estimators must select at least one estimator".into());
        }
        if self.estimators.contains(&Estimator::Variance) && self.targets.is_empty() {
            v.push("targets must list at least one target when the variance estimator is selected".into());
        }
        if !(self.margin_min >= 0.0) || !(self.width_min >= 0.0) {
            v.push("margin_min and width_min must be >= 0".into());
        }
        if !(self.margin_scale > 0.0 && self.margin_scale.is_finite()) {
            v.push(format!("margin_scale must be > 0, got {}", self.margin_scale));
        }
        if self.influence_radius < 0 {
            v.push(format!("influence_radius must be >= 0, got {}", self.influence_radius));
        }
        if let Some(c) = self.tail_c1 {
            if !(c > 0.0) {
                v.push(format!("tail_c1 must be > 0, got {c}"));
            }
        }
        if v.is_empty() {
            for &n in &self.n_values {
                let g = self.gamma_radius(n);
                let (m, w) = self.margins(n);
                if m <= g || w <= g {
                    v.push(format!(
                        "window at n = {n} (margin {m}, width {w}) does not cover the Gamma_n translates (radius {g})"
                    ));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim)
    }

    fn margins(&self, n: f64) -> (i64, i64) {
        let m = (self.margin_min.max(n / 4.0) * self.margin_scale).ceil() as i64;
        let w = (self.width_min.max(n / 2.0) * self.margin_scale).ceil() as i64;
        (m, w)
    }

    pub fn window(&self, n: f64) -> Result<Window> {
        let (m, w) = self.margins(n);
        Window::around_segment(self.dim, n, m, w)
    }

    pub fn phi_params(&self, n: f64) -> Result<PhiParams> {
        PhiParams::new(self.alpha, self.h0, self.h1, n)
    }

    pub fn thinning(&self, n: f64) -> Result<ThinningSpec> {
        ThinningSpec::new(self.epsilon_k, n)
    }

    /// Largest integer `g` with `g <= n^(1/(4 alpha))`.
    pub fn gamma_radius(&self, n: f64) -> i64 {
        let r = n.powf(1.0 / (4.0 * self.alpha));
        let mut g = r.floor() as i64;
        // guard against powf landing just below an integer
        while ((g + 1) as f64) <= r {
            g += 1;
        }
        g
    }

    /// `Gamma_n` in lexicographic order.
    pub fn gamma(&self, n: f64) -> Vec<Vec<i64>> {
        let g = self.gamma_radius(n);
        let side = (2 * g + 1) as usize;
        let total = side.pow(self.dim as u32);
        (0..total)
            .map(|mut i| {
                let mut z = vec![0i64; self.dim];
                for a in (0..self.dim).rev() {
                    z[a] = (i % side) as i64 - g;
                    i /= side;
                }
                z
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_is_the_integer_cube() {
        let c = ExperimentConfig::default();
        assert_eq!(c.gamma_radius(8.0), 1);
        assert_eq!(c.gamma(8.0).len(), 9);
        assert_eq!(c.gamma(8.0)[0], vec![-1, -1]);
        assert_eq!(c.gamma_radius(256.0), 2);
        let c = ExperimentConfig { alpha: 3.0, ..c };
        assert_eq!(c.gamma_radius(1.0), 1);
    }

    #[test]
    fn collects_every_violation() {
        let c = ExperimentConfig { dim: 1, alpha: 1.0, replicates: 1, epsilon_k: 2, ..Default::default() };
        let v = c.violations();
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn names_round_trip() {
        for t in Target::ALL {
            assert_eq!(t.name().parse::<Target>().unwrap(), t);
        }
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
    }

    #[test]
    fn default_windows() {
        let c = ExperimentConfig::default();
        let w = c.window(64.0).unwrap();
        assert_eq!(w.lo.coords(), &[-16, -32]);
        assert_eq!(w.hi.coords(), &[80, 32]);
    }
}
