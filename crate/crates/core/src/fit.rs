//! Heuristic fit of `(α, r)` to ranked positive data by log-log regression
//! of weight on rank after trimming the `r` largest weights.
//!
//! The normalized jumps of a stable subordinator decay like `i^{-1/α}`, so a
//! rank-size plot is asymptotically a line of slope `-1/α`. A few dominant
//! entries bend the head of the plot; trimming them is what `r` models.

use serde::Serialize;

use crate::error::{domain, PdError, Result};
use crate::levy::{sample_pd, StableParams};
use crate::rng::{try_par_draws, Stream};

/// Longest rank window used by default.
pub const DEFAULT_WINDOW: usize = 500;
/// Default penalty per trimmed rank, as a fraction of the residual scale.
pub const DEFAULT_PENALTY_FRACTION: f64 = 0.05;
/// Clip range of the index estimate.
pub const ALPHA_CLIP: (f64, f64) = (0.02, 0.98);
/// Enumeration threshold used by the bootstrap.
const BOOT_EPS: f64 = 1e-6;

/// Positive weights in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedData {
    pub weights: Vec<f64>,
    pub label: String,
}

impl RankedData {
    /// Validates already ranked weights.
    pub fn new(weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return domain(format!("weights must be positive and finite, got {w}"));
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return domain("weights must be sorted nonincreasing");
        }
        Ok(Self { weights, label: label.into() })
    }

    /// Sorts the weights into nonincreasing order first.
    pub fn from_unsorted(mut weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        weights.sort_by(|a, b| b.total_cmp(a));
        Self::new(weights, label)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Window used when none is given: ranks `r+1` to `min(len, r + 500)`.
    pub fn default_window(&self, r: usize) -> usize {
        self.len().saturating_sub(r).min(DEFAULT_WINDOW)
    }
}

/// One row of the `r` profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub r: usize,
    pub alpha: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub r_hat: usize,
    pub alpha_hat: f64,
    /// Mean squared log-log deviation at `r_hat`.
    pub residual: f64,
    /// Penalty per trimmed rank used for the selection.
    pub penalty: f64,
    /// Every `r` that could be fitted.
    pub per_r_profile: Vec<ProfilePoint>,
}

/// Least-squares line through `(ln i, ln w_i)` for ranks `r+1..=r+window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogLine {
    pub slope: f64,
    pub intercept: f64,
    pub mse: f64,
}

impl LogLogLine {
    pub fn at(&self, rank: f64) -> f64 {
        (self.intercept + self.slope * rank.ln()).exp()
    }
}

/// Fits the log-log line on ranks `r+1..=r+window`.
pub fn log_log_line(data: &RankedData, r: usize, window: usize) -> Result<LogLogLine> {
    if window < 3 {
        return domain(format!("rank window must be at least 3, got {window}"));
    }
    if r + window > data.len() {
        return domain(format!("r + window = {} exceeds the {} data points", r + window, data.len()));
    }
    let w = &data.weights[r..r + window];
    // logs relative to the first weight in the window keep the fit invariant
    // under rescaling of the data
    let top = w[0];
    let xs: Vec<f64> = (r + 1..=r + window).map(|i| (i as f64).ln()).collect();
    let ys: Vec<f64> = w.iter().map(|&v| (v / top).ln()).collect();
    let n = window as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let mse = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / n;
    Ok(LogLogLine { slope, intercept: icpt + top.ln(), mse })
}

/// `α̂ = -1/slope` of the log-log fit after trimming `r`, clipped to
/// [`ALPHA_CLIP`], with the mean squared residual.
pub fn fit_alpha_given_r(data: &RankedData, r: usize, window: Option<usize>) -> Result<(f64, f64)> {
    let window = window.unwrap_or_else(|| data.default_window(r));
    let line = log_log_line(data, r, window)?;
    if !(line.slope < 0.0) {
        return Err(PdError::FitFailure(format!(
            "log-log slope {} is not negative after trimming {r}; data are not heavy-tailed",
            line.slope
        )));
    }
    Ok(((-1.0 / line.slope).clamp(ALPHA_CLIP.0, ALPHA_CLIP.1), line.mse))
}

/// Fits every `r ≤ r_max` and selects the minimizer of
/// `residual + penalty · r`. Without an explicit penalty it is
/// [`DEFAULT_PENALTY_FRACTION`] times the residual scale, the untrimmed
/// residual.
pub fn select_r(data: &RankedData, r_max: usize, penalty: Option<f64>) -> Result<FitResult> {
    if r_max + 3 > data.len() {
        return domain(format!("r_max + 3 = {} exceeds the {} data points", r_max + 3, data.len()));
    }
    if let Some(p) = penalty {
        if !(p >= 0.0 && p.is_finite()) {
            return domain(format!("penalty must be nonnegative, got {p}"));
        }
    }
    let mut profile = Vec::new();
    let mut last_err = None;
    for r in 0..=r_max {
        match fit_alpha_given_r(data, r, None) {
            Ok((alpha, residual)) => profile.push(ProfilePoint { r, alpha, residual }),
            Err(e) => last_err = Some(e),
        }
    }
    if profile.is_empty() {
        return Err(PdError::FitFailure(format!(
            "no r in 0..={r_max} could be fitted: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        )));
    }
    let penalty = penalty.unwrap_or_else(|| DEFAULT_PENALTY_FRACTION * residual_scale(&profile));
    let best = profile
        .iter()
        .min_by(|a, b| {
            let fa = a.residual + penalty * a.r as f64;
            let fb = b.residual + penalty * b.r as f64;
            fa.total_cmp(&fb)
        })
        .copied()
        .expect("profile is nonempty");
    Ok(FitResult { r_hat: best.r, alpha_hat: best.alpha, residual: best.residual, penalty, per_r_profile: profile })
}

/// Untrimmed residual, floored so that an exact power law, whose residuals
/// are pure rounding, still prefers `r = 0`.
fn residual_scale(profile: &[ProfilePoint]) -> f64 {
    profile[0].residual.max(1e-20)
}

/// Bootstrap envelope of normalized rank-size curves under the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub label: String,
    pub r_hat: usize,
    pub alpha_hat: f64,
    pub n_boot: usize,
    /// Fraction of observed points inside the 95% envelope.
    pub coverage: f64,
    pub rows: Vec<EnvelopeRow>,
}

/// Values at one rank of the trimmed data, each normalized by the sum of the
/// first `rows.len()` trimmed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub rank: usize,
    pub observed: f64,
    pub fitted: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl GoodnessReport {
    /// `rank,observed,fitted,lower,median,upper` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,observed,fitted,lower,median,upper\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.rank, r.observed, r.fitted, r.lower, r.median, r.upper
            ));
        }
        s
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Parametric bootstrap: `n_boot` draws of `PD_α̂^{(r̂)}` to the depth of
/// the trimmed data, each renormalized over that depth, give pointwise 2.5%,
/// 50% and 97.5% curves.
pub fn goodness_report(data: &RankedData, fit: &FitResult, n_boot: usize, stream: Stream) -> Result<GoodnessReport> {
    if n_boot < 2 {
        return domain("n_boot must be at least 2");
    }
    let r = fit.r_hat;
    if r + 3 > data.len() {
        return domain("fit trims too many points");
    }
    let depth = data.len() - r;
    let params = StableParams::new(fit.alpha_hat, 1.0)?;
    let curves: Vec<Vec<f64>> = try_par_draws(stream, n_boot, |rng| {
        let s = sample_pd(&params, r, depth, BOOT_EPS, rng)?;
        let sum: f64 = s.values.iter().sum();
        Ok::<_, PdError>(s.values.iter().map(|v| v / sum).collect())
    })?;
    let obs = &data.weights[r..];
    let obs_sum: f64 = obs.iter().sum();
    let line = log_log_line(data, r, data.default_window(r))?;
    let mut rows = Vec::with_capacity(depth);
    let mut inside = 0usize;
    let mut col = vec![0.0; n_boot];
    for k in 0..depth {
        for (c, v) in col.iter_mut().zip(&curves) {
            *c = v[k];
        }
        col.sort_by(f64::total_cmp);
        let row = EnvelopeRow {
            rank: r + k + 1,
            observed: obs[k] / obs_sum,
            fitted: line.at((r + k + 1) as f64) / obs_sum,
            lower: quantile(&col, 0.025),
            median: quantile(&col, 0.5),
            upper: quantile(&col, 0.975),
        };
        if row.observed >= row.lower && row.observed <= row.upper {
            inside += 1;
        }
        rows.push(row);
    }
    Ok(GoodnessReport {
        label: data.label.clone(),
        r_hat: r,
        alpha_hat: fit.alpha_hat,
        n_boot,
        coverage: inside as f64 / depth as f64,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_law(n: usize) -> RankedData {
        RankedData::new((1..=n).map(|i| (i as f64).powi(-2)).collect(), "pl").unwrap()
    }

    #[test]
    fn exact_power_law() {
        let d = power_law(100);
        let (a, res) = fit_alpha_given_r(&d, 0, None).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && res < 1e-25, "{a} {res}");
        let f = select_r(&d, 5, None).unwrap();
        assert_eq!(f.r_hat, 0);
        assert!((f.alpha_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        let d = power_law(10);
        assert!(fit_alpha_given_r(&d, 0, Some(2)).is_err());
        assert!(fit_alpha_given_r(&d, 8, Some(3)).is_err());
        assert!(select_r(&d, 8, None).is_err());
        assert!(RankedData::new(vec![1.0, 2.0], "x").is_err());
        assert!(RankedData::new(vec![1.0, 0.0], "x").is_err());
        let flat = RankedData::new(vec![1.0; 10], "flat").unwrap();
        assert!(matches!(fit_alpha_given_r(&flat, 0, None), Err(PdError::FitFailure(_))));
        assert!(matches!(select_r(&flat, 3, None), Err(PdError::FitFailure(_))));
    }

    #[test]
    fn envelope_is_monotone_and_seeded() {
        let d = power_law(200);
        let f = select_r(&d, 3, None).unwrap();
        let g = goodness_report(&d, &f, 50, Stream::new(1)).unwrap();
        assert_eq!(g.rows.len(), 200);
        for w in g.rows.windows(2) {
            assert!(w[1].lower <= w[0].lower && w[1].median <= w[0].median && w[1].upper <= w[0].upper);
        }
        assert_eq!(g, goodness_report(&d, &f, 50, Stream::new(1)).unwrap());
    }
}
