//! Small statistical helpers shared by the Monte-Carlo checks.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { estimate: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { estimate: mean, stderr: (var / n as f64).sqrt(), n }
    }

    /// Standardized distance to `expected`; zero when both sides agree exactly.
    pub fn z(&self, expected: f64) -> f64 {
        z_score(self.estimate - expected, self.stderr)
    }
}

/// `diff / se`, with `0/0 = 0`.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Two-sided normal threshold at family level `level` split over `m` comparisons.
pub fn bonferroni_z(level: f64, m: usize) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(1.0 - level / (2.0 * m.max(1) as f64))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return domain("KS needs two nonempty samples");
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return domain("KS samples contain NaN");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic KS critical value at level 0.001.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.9495 * ((n + m) / (n * m)).sqrt()
}

/// Fixed-edge histogram of a sample, normalized as a density estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: usize,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, xs: &[f64]) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("histogram edges must be strictly increasing with at least two entries");
        }
        let mut counts = vec![0u64; edges.len() - 1];
        for &x in xs {
            if x < edges[0] || x >= edges[edges.len() - 1] {
                continue;
            }
            let k = edges.partition_point(|&e| e <= x) - 1;
            counts[k] += 1;
        }
        Ok(Self { edges, counts, n: xs.len() })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Probability of bin `k` and its binomial standard error.
    pub fn prob(&self, k: usize) -> (f64, f64) {
        let p = self.counts[k] as f64 / self.n as f64;
        (p, (p * (1.0 - p) / self.n as f64).sqrt())
    }

    /// Density estimate on bin `k` and its standard error.
    pub fn density(&self, k: usize) -> (f64, f64) {
        let w = self.edges[k + 1] - self.edges[k];
        let (p, se) = self.prob(k);
        (p / w, se / w)
    }

    /// Fraction of the sample that fell outside the edges.
    pub fn outside(&self) -> f64 {
        1.0 - self.counts.iter().sum::<u64>() as f64 / self.n as f64
    }
}

/// `count` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mc_estimate_of_constants() {
        let e = McEstimate::from_samples(&[1.0; 10]);
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        assert_eq!(e.z(1.0), 0.0);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((ks_critical_001(100_000, 100_000) - 0.008718).abs() < 1e-5);
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni_z(0.0027, 1) - 3.0).abs() < 1e-3);
        assert!(bonferroni_z(0.0027, 27) > 3.0);
    }

    #[test]
    fn histogram_examples() {
        let h = Histogram::new(vec![0.0, 1.0, 2.0], &[0.5, 1.5, 1.7, 2.5]).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.density(1).0, 0.5);
        assert_eq!(h.outside(), 0.25);
    }
}
