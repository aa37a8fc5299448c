//! Small numerical helpers shared by the estimators.

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased (M - 1 denominator) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

pub fn standard_error_of_mean(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Jackknife standard error of the unbiased sample variance.
pub fn jackknife_variance_stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return f64::NAN;
    }
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let s1 = pairwise_sum(&dev);
    let sq: Vec<f64> = dev.iter().map(|d| d * d).collect();
    let s2 = pairwise_sum(&sq);
    let nf = n as f64;
    // Leave-one-out variances from centered running sums.
    let loo: Vec<f64> = dev
        .iter()
        .map(|&d| {
            let r1 = s1 - d;
            let r2 = s2 - d * d;
            (r2 - r1 * r1 / (nf - 1.0)) / (nf - 2.0)
        })
        .collect();
    let loo_mean = mean(&loo);
    let spread: Vec<f64> = loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).collect();
    ((nf - 1.0) / nf * pairwise_sum(&spread)).sqrt()
}

/// Pearson chi-square statistic.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

/// Upper critical value of the chi-square distribution at the given significance.
pub fn chi_square_critical(df: usize, significance: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df as f64).expect("df > 0").inverse_cdf(1.0 - significance)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_of_two_samples() {
        assert_eq!(sample_variance(&[0.0, 2.0]), 2.0);
        assert_eq!(sample_variance(&[3.0, 3.0, 3.0]), 0.0);
    }

    #[test]
    fn jackknife_matches_direct_leave_one_out() {
        let xs = [1.0, 4.0, 2.5, 7.0, 3.0, 3.5, 9.0];
        let n = xs.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let rest: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
                sample_variance(&rest)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / n as f64;
        let direct = ((n as f64 - 1.0) / n as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt();
        assert!((jackknife_variance_stderr(&xs) - direct).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn chi_square_critical_value() {
        // tabulated 0.999 quantile for 6 degrees of freedom
        assert!((chi_square_critical(6, 1e-3) - 22.458).abs() < 1e-2);
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&s, 0.5), 1.5);
        assert_eq!(quantile(&s, 1.0), 3.0);
    }
}
