use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::stats::{bonferroni_z, McEstimate};

/// A named parameter value in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Uint(u64),
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Real(x)
    }
}

impl From<usize> for ParamValue {
    fn from(x: usize) -> Self {
        ParamValue::Uint(x as u64)
    }
}

impl From<u64> for ParamValue {
    fn from(x: u64) -> Self {
        ParamValue::Uint(x)
    }
}

impl From<&str> for ParamValue {
    fn from(x: &str) -> Self {
        ParamValue::Text(x.to_string())
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Uint(x) => write!(f, "{x}"),
            ParamValue::Int(x) => write!(f, "{x}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Text(x) => write!(f, "{x}"),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// Builds a parameter map from `(name, value)` pairs.
pub fn params<const N: usize>(items: [(&str, ParamValue); N]) -> Params {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// How a report decides `pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `|z| ≤ threshold` with `z = (statistic - expected) / stderr`.
    MonteCarlo,
    /// Binned comparison: `z` is the standard normal quantile matching the
    /// χ² upper tail of the statistic; every bin must also stay within the
    /// per-bin threshold in `details`.
    Histogram,
    /// Two-sample Kolmogorov-Smirnov: `z = D / critical`, threshold 1.
    KolmogorovSmirnov,
    /// Deterministic: `z = (statistic - expected) / tolerance`, threshold 1.
    Quadrature,
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub params: Params,
    #[serde(deserialize_with = "nan_from_null")]
    pub statistic: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub expected: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub stderr: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub z_score: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    pub method: Method,
    #[serde(deserialize_with = "nan_from_null")]
    pub threshold: f64,
    /// Multiple-comparison policy applied to `threshold`.
    pub policy: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reads back the `null` that serde_json writes for a NaN.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Family-wise error level of a `3σ` two-sided test.
pub const FAMILY_LEVEL: f64 = 0.0026997960632601866;

impl VerificationReport {
    fn base(name: &str, params: Params, method: Method) -> Self {
        Self {
            check_name: name.to_string(),
            params,
            statistic: f64::NAN,
            expected: f64::NAN,
            stderr: f64::NAN,
            z_score: f64::NAN,
            pass: false,
            runtime_ms: 0,
            method,
            threshold: f64::NAN,
            policy: String::new(),
            details: BTreeMap::new(),
            error: None,
        }
    }

    /// Monte-Carlo estimate against a closed form, one cell of a family of
    /// `family` cells.
    pub fn monte_carlo(name: &str, params: Params, est: McEstimate, expected: f64, family: usize) -> Self {
        Self::monte_carlo_diff(name, params, est.estimate, expected, est.stderr, family)
    }

    /// Two estimates or an estimate and a value, with a combined standard error.
    pub fn monte_carlo_diff(name: &str, params: Params, stat: f64, expected: f64, se: f64, family: usize) -> Self {
        let threshold = bonferroni_z(FAMILY_LEVEL, family);
        let z = crate::stats::z_score(stat - expected, se);
        Self {
            statistic: stat,
            expected,
            stderr: se,
            z_score: z,
            pass: z.abs() <= threshold,
            threshold,
            policy: bonferroni_policy(family),
            ..Self::base(name, params, Method::MonteCarlo)
        }
    }

    /// Observed bin counts against expected bin probabilities.
    pub fn histogram(name: &str, params: Params, counts: &[u64], probs: &[f64], n: usize, family: usize) -> Self {
        let nf = n as f64;
        let mut chi2 = 0.0;
        let mut bins = 0usize;
        let mut worst: f64 = 0.0;
        for (&c, &p) in counts.iter().zip(probs) {
            if c == 0 && p <= 0.0 {
                continue;
            }
            let se = (p.max(1.0 / nf) * (1.0 - p).max(1.0 / nf) / nf).sqrt();
            let z = (c as f64 / nf - p) / se;
            chi2 += z * z;
            worst = worst.max(z.abs());
            bins += 1;
        }
        let dof = bins.saturating_sub(1).max(1) as f64;
        let threshold = bonferroni_z(FAMILY_LEVEL, family);
        let bin_threshold = bonferroni_z(FAMILY_LEVEL, family * bins.max(1));
        let z = chi2_normal_equivalent(chi2, dof);
        let mut r = Self {
            statistic: chi2,
            expected: dof,
            stderr: (2.0 * dof).sqrt(),
            z_score: z,
            pass: z <= threshold && worst <= bin_threshold,
            threshold,
            policy: format!("{}; per-bin bonferroni over {bins} occupied bins", bonferroni_policy(family)),
            ..Self::base(name, params, Method::Histogram)
        };
        r.details.insert("bins".into(), bins as f64);
        r.details.insert("max_bin_z".into(), worst);
        r.details.insert("bin_threshold".into(), bin_threshold);
        r
    }

    /// Two-sample KS statistic against the 0.1% critical value.
    pub fn ks(name: &str, params: Params, d: f64, n: usize, m: usize) -> Self {
        let crit = crate::stats::ks_critical_001(n, m);
        Self {
            statistic: d,
            expected: 0.0,
            stderr: crit,
            z_score: d / crit,
            pass: d <= crit,
            threshold: 1.0,
            policy: "two-sample KS at level 0.001 per cell".into(),
            ..Self::base(name, params, Method::KolmogorovSmirnov)
        }
    }

    /// Deterministic value against its target within an absolute tolerance.
    pub fn quadrature(name: &str, params: Params, stat: f64, expected: f64, tol: f64) -> Self {
        let z = crate::stats::z_score(stat - expected, tol);
        Self {
            statistic: stat,
            expected,
            stderr: 0.0,
            z_score: z,
            pass: z.abs() <= 1.0,
            threshold: 1.0,
            policy: format!("absolute tolerance {tol:e}"),
            ..Self::base(name, params, Method::Quadrature)
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, params: Params, method: Method, err: impl fmt::Display) -> Self {
        Self { error: Some(err.to_string()), ..Self::base(name, params, method) }
    }

    /// Wraps a check evaluated against a deliberately wrong closed form: the
    /// control passes when the underlying check rejects.
    pub fn control(mut self) -> Self {
        self.check_name = format!("control/{}", self.check_name);
        self.pass = self.error.is_none() && !self.pass;
        self.policy = format!("negative control, passes when rejected; {}", self.policy);
        self
    }

    /// Sort key: name, then the parameter map.
    pub fn sort_key(&self) -> (String, String) {
        let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        (self.check_name.clone(), p.join(","))
    }
}

fn bonferroni_policy(family: usize) -> String {
    format!("bonferroni over {family} cells at family level {FAMILY_LEVEL:.4} (3 sigma)")
}

/// Standard normal quantile at the chi-square CDF of `stat`, taken from the
/// upper tail. Where that tail underflows the Wilson-Hilferty cube-root
/// transform stands in.
fn chi2_normal_equivalent(stat: f64, dof: f64) -> f64 {
    let tail = ChiSquared::new(dof).expect("dof is positive").sf(stat);
    if tail > 1e-300 {
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        return -std.inverse_cdf(tail);
    }
    let v = 2.0 / (9.0 * dof);
    ((stat / dof).cbrt() - (1.0 - v)) / v.sqrt()
}
