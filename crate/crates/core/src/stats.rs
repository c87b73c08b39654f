//! Order-stable summary statistics.
//!
//! Sums use pairwise reduction over the slice in index order, so a batch gives
//! the same bits whether its samples were produced sequentially or in parallel.

#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
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

/// Unbiased sample variance (two-pass).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut acc = alloc::vec::Vec::with_capacity(n);
    acc.extend(xs.iter().map(|&x| (x - m) * (x - m)));
    pairwise_sum(&acc) / (n - 1) as f64
}

/// Mean and its standard error `std / sqrt(n)`.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let se = (variance(xs) / xs.len() as f64).sqrt();
    (m, se)
}

/// Ordinary least squares `y = intercept + slope * x` with classical standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Unbiased residual variance (n - 2 degrees of freedom).
    pub residual_variance: f64,
}

pub fn regress(x: &[f64], y: &[f64]) -> Regression {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let dx: alloc::vec::Vec<f64> = x.iter().map(|&v| v - mx).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<alloc::vec::Vec<_>>());
    let sxy = pairwise_sum(&dx.iter().zip(y).map(|(d, &v)| d * (v - my)).collect::<alloc::vec::Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: alloc::vec::Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .collect();
    let residual_variance = pairwise_sum(&resid) / (n - 2.0);
    let slope_se = (residual_variance / sxx).sqrt();
    let intercept_se = (residual_variance * (1.0 / n + mx * mx / sxx)).sqrt();
    Regression { slope, intercept, slope_se, intercept_se, residual_variance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn regression_recovers_exact_line() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let r = regress(&x, &y);
        assert!((r.slope + 0.5).abs() < 1e-12);
        assert!((r.intercept - 2.0).abs() < 1e-12);
        assert!(r.residual_variance < 1e-20);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(variance(&[3.0; 10]), 0.0);
    }
}
