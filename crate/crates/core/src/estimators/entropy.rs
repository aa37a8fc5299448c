use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

pub const MAX_FACTORS: usize = 4;
pub const MAX_FACTOR_SIZE: usize = 4;
pub const MAX_HYPERCUBE_DIM: usize = 12;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Plug-in `E[X log X] - E[X] log E[X]` with equal weights.
pub fn entropy_plugin(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    if let Some(x) = samples.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("entropy needs finite non-negative samples, got {x}")));
    }
    let w = vec![1.0 / samples.len() as f64; samples.len()];
    Ok(weighted_entropy(&w, samples))
}

fn weighted_entropy(w: &[f64], x: &[f64]) -> f64 {
    let m = pairwise_sum(&w.iter().zip(x).map(|(p, v)| p * v).collect::<Vec<_>>());
    let e = pairwise_sum(&w.iter().zip(x).map(|(p, v)| p * xlogx(*v)).collect::<Vec<_>>());
    e - xlogx(m)
}

/// Finite product of independent factors, each a probability vector.
///
/// Outcomes are indexed row-major with the last factor fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpace {
    factors: Vec<Vec<f64>>,
}

impl ProductSpace {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_FACTORS {
            return Err(Error::InvalidParameter(format!(
                "product space needs 1..={MAX_FACTORS} factors, got {}",
                factors.len()
            )));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.is_empty() || f.len() > MAX_FACTOR_SIZE {
                return Err(Error::InvalidParameter(format!(
                    "factor {i} has {} outcomes, expected 1..={MAX_FACTOR_SIZE}",
                    f.len()
                )));
            }
            if f.iter().any(|p| !(*p >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("factor {i} is not a probability vector: {f:?}")));
            }
        }
        Ok(Self { factors })
    }

    /// Uniform measure on each factor.
    pub fn uniform(sizes: &[usize]) -> Result<Self> {
        Self::new(sizes.iter().map(|&s| vec![1.0 / s.max(1) as f64; s]).collect())
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn num_outcomes(&self) -> usize {
        self.factors.iter().map(Vec::len).product()
    }

    fn probabilities(&self) -> Vec<f64> {
        let mut p = vec![1.0];
        for f in &self.factors {
            p = p.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        p
    }

    /// `E[Z | first i factors]` as a table over all outcomes.
    fn conditional(&self, z: &[f64], i: usize) -> Vec<f64> {
        let tail: usize = self.factors[i..].iter().map(Vec::len).product();
        let tail_p = ProductSpace { factors: self.factors[i..].to_vec() }.probabilities();
        let mut out = vec![0.0; z.len()];
        for (block, chunk) in z.chunks(tail).enumerate() {
            let e = pairwise_sum(&chunk.iter().zip(&tail_p).map(|(v, p)| v * p).collect::<Vec<_>>());
            out[block * tail..(block + 1) * tail].fill(e);
        }
        out
    }
}

/// Both sides of `Var Z log(Var Z / sum_i (E|V_i|)^2) <= sum_i Ent V_i^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FSReport {
    pub var_z: f64,
    pub sum_abs_sq: f64,
    pub sum_ent: f64,
    /// Right side minus left side; `None` when the left side is undefined.
    pub slack: Option<f64>,
    pub vacuous: bool,
    pub holds: bool,
}

/// Evaluates the martingale-difference inequality exactly on `space` with `z` tabulated in outcome order.
pub fn fs_check_exact(space: &ProductSpace, z: &[f64]) -> Result<FSReport> {
    if z.len() != space.num_outcomes() {
        return Err(Error::Malformed(format!(
            "table has {} entries, product space has {} outcomes",
            z.len(),
            space.num_outcomes()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Malformed("table entries must be finite".into()));
    }
    let p = space.probabilities();
    let expect = |v: &[f64]| pairwise_sum(&v.iter().zip(&p).map(|(a, b)| a * b).collect::<Vec<_>>());
    let mu = expect(z);
    let var_z = expect(&z.iter().map(|v| (v - mu) * (v - mu)).collect::<Vec<_>>());
    let mut sum_abs_sq = 0.0;
    let mut sum_ent = 0.0;
    let mut prev = space.conditional(z, 0);
    for i in 1..=space.factors.len() {
        let cur = space.conditional(z, i);
        let v: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let abs = expect(&v.iter().map(|x| x.abs()).collect::<Vec<_>>());
        sum_abs_sq += abs * abs;
        sum_ent += weighted_entropy(&p, &v.iter().map(|x| x * x).collect::<Vec<_>>());
        prev = cur;
    }
    let vacuous = var_z <= 0.0 || sum_abs_sq <= 0.0;
    let slack = (!vacuous).then(|| sum_ent - var_z * (var_z / sum_abs_sq).ln());
    let scale = sum_ent.abs().max(var_z).max(1.0);
    let holds = slack.is_none_or(|s| s >= -1e-12 * scale);
    Ok(FSReport { var_z, sum_abs_sq, sum_ent, slack, vacuous, holds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevReport {
    /// `Ent(f^2)` under the uniform measure.
    pub lhs: f64,
    /// `E sum_i (f(x_i^+) - f(x_i^-))^2`.
    pub rhs: f64,
    pub holds: bool,
}

/// Exact check on `{-1, 1}^m`; bit `i` of the table index set means `x_i = +1`.
pub fn logsobolev_hypercube_check(m: usize, f: &[f64]) -> Result<LogSobolevReport> {
    if m > MAX_HYPERCUBE_DIM {
        return Err(Error::InvalidParameter(format!("hypercube dimension {m} exceeds {MAX_HYPERCUBE_DIM}")));
    }
    if f.len() != 1 << m {
        return Err(Error::Malformed(format!("table has {} entries, expected {}", f.len(), 1usize << m)));
    }
    let w = vec![1.0 / f.len() as f64; f.len()];
    let lhs = weighted_entropy(&w, &f.iter().map(|x| x * x).collect::<Vec<_>>());
    let terms: Vec<f64> = (0..f.len())
        .map(|x| {
            (0..m)
                .map(|i| {
                    let d = f[x | (1 << i)] - f[x & !(1 << i)];
                    d * d
                })
                .sum::<f64>()
        })
        .collect();
    let rhs = pairwise_sum(&terms) / f.len() as f64;
    let holds = lhs <= rhs + 1e-12 * lhs.abs().max(1.0);
    Ok(LogSobolevReport { lhs, rhs, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plugin_examples() {
        assert!(entropy_plugin(&[2.0; 5]).unwrap().abs() < 1e-15);
        assert_eq!(entropy_plugin(&[0.0, 0.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let want = e / 2.0 - (1.0 + e) / 2.0 * ((1.0 + e) / 2.0).ln();
        assert!((entropy_plugin(&[1.0, e]).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.206).abs() < 1e-3);
        assert!(entropy_plugin(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn sum_of_two_bits() {
        let space = ProductSpace::uniform(&[2, 2]).unwrap();
        let r = fs_check_exact(&space, &[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((r.var_z - 0.5).abs() < 1e-15);
        assert!((r.sum_abs_sq - 0.5).abs() < 1e-15);
        assert!(r.sum_ent.abs() < 1e-15);
        assert!(r.slack.unwrap().abs() < 1e-15);
        let c = fs_check_exact(&space, &[3.0; 4]).unwrap();
        assert!(c.vacuous && c.holds && c.slack.is_none());
        assert!(fs_check_exact(&space, &[0.0; 3]).is_err());
    }

    #[test]
    fn hypercube_examples() {
        let r = logsobolev_hypercube_check(1, &[-1.0, 1.0]).unwrap();
        assert!(r.lhs.abs() < 1e-15);
        assert_eq!(r.rhs, 4.0);
        let c = logsobolev_hypercube_check(3, &[1.5; 8]).unwrap();
        assert!(c.holds && c.rhs == 0.0);
        assert!(logsobolev_hypercube_check(13, &[]).is_err());
    }
}
