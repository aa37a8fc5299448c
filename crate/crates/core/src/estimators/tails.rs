use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile;

pub const MIN_TAIL_SAMPLES: usize = 1000;

/// Empirical tail of passage-time samples at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: f64,
    /// Stretch exponent `min(1, d / alpha)` of the reference envelope.
    pub kappa: f64,
    pub p999: f64,
    /// `(x, P[S > x])` at every distinct sample value with positive survival.
    pub survival: Vec<(f64, f64)>,
    /// Least-squares `c2` in `log P[S > x] = log C - c2 x^kappa` over the upper half of the samples.
    pub c2: f64,
    /// Standard error of the fitted slope; infinite with fewer than three fit points.
    pub c2_stderr: f64,
    pub log_intercept: f64,
    pub c1: f64,
    /// Whether `p999 > c1 n`.
    pub exceeds: bool,
}

fn checked_sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_TAIL_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("tail samples must be finite".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Envelope constant `p999 / n` at a calibration scale.
pub fn calibrate_c1(samples: &[f64], n: f64) -> Result<f64> {
    let s = checked_sorted(samples)?;
    Ok(quantile(&s, 0.999) / n)
}

pub fn tail_fit(samples: &[f64], n: f64, dim: usize, alpha: f64, c1: f64) -> Result<TailReport> {
    let s = checked_sorted(samples)?;
    let kappa = (dim as f64 / alpha).min(1.0);
    let m = s.len() as f64;
    let mut survival = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        if i + 1 < s.len() && s[i + 1] == x {
            continue;
        }
        let above = (s.len() - i - 1) as f64;
        if above > 0.0 {
            survival.push((x, above / m));
        }
    }
    let upper: Vec<(f64, f64)> =
        survival.iter().filter(|(x, _)| *x >= s[s.len() / 2]).map(|(x, p)| (x.powf(kappa), p.ln())).collect();
    let (c2, c2_stderr, log_intercept) = if upper.len() >= 2 {
        let k = upper.len() as f64;
        let mx = upper.iter().map(|p| p.0).sum::<f64>() / k;
        let my = upper.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = upper.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = upper.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mx;
        let se = if upper.len() >= 3 && sxx > 0.0 {
            let rss: f64 = upper.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
            (rss / (k - 2.0) / sxx).sqrt()
        } else {
            f64::INFINITY
        };
        (-slope, se, intercept)
    } else {
        (f64::INFINITY, f64::INFINITY, 0.0)
    };
    let p999 = quantile(&s, 0.999);
    Ok(TailReport { n, kappa, p999, survival, c2, c2_stderr, log_intercept, c1, exceeds: p999 > c1 * n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_are_degenerate() {
        let r = tail_fit(&[4.0; 1000], 8.0, 2, 2.0, 1.0).unwrap();
        assert!(r.survival.is_empty());
        assert!(!r.exceeds);
        assert_eq!(r.p999, 4.0);
    }

    #[test]
    fn kappa_and_sample_floor() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(tail_fit(&xs, 8.0, 2, 1.5, 1e9).unwrap().kappa, 1.0);
        assert_eq!(tail_fit(&xs, 8.0, 2, 4.0, 1e9).unwrap().kappa, 0.5);
        assert!(tail_fit(&xs[..999], 8.0, 2, 2.0, 1.0).is_err());
    }

    #[test]
    fn exponential_tail_recovers_rate() {
        let xs: Vec<f64> = (0..20000).map(|i| -(1.0 - (i as f64 + 0.5) / 20000.0).ln() / 3.0).collect();
        let r = tail_fit(&xs, 1.0, 2, 1.0, 100.0).unwrap();
        assert!((r.c2 - 3.0).abs() < 0.1, "{}", r.c2);
    }
}
