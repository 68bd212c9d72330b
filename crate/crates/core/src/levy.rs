//! Stable subordinator primitives: Lévy measure `cαx^{-α-1}dx`, its tail and
//! inverse, the Laplace exponents, ordered-jump simulation and trimming.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{domain, PdError, Result};
use crate::quad::gauss_kronrod;

/// Range of α accepted by the samplers. Outside it the number of enumerated
/// jumps needed for a given truncation level explodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEnvelope {
    pub lo: f64,
    pub hi: f64,
}

impl Default for AlphaEnvelope {
    fn default() -> Self {
        Self { lo: 0.02, hi: 0.98 }
    }
}

impl AlphaEnvelope {
    pub fn check(&self, alpha: f64) -> Result<()> {
        if alpha <= self.lo || alpha >= self.hi {
            return domain(format!(
                "alpha = {alpha} outside the sampler envelope ({}, {})",
                self.lo, self.hi
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie strictly inside (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Index and scale of the stable subordinator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub c: f64,
    pub envelope: AlphaEnvelope,
}

impl StableParams {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("scale c must be positive, got {c}"));
        }
        Ok(Self { alpha, c, envelope: AlphaEnvelope::default() })
    }

    /// Same parameters with a different sampler envelope.
    pub fn with_envelope(mut self, envelope: AlphaEnvelope) -> Self {
        self.envelope = envelope;
        self
    }
}

/// Descending prefix of the jumps of `S` on `[0, t]` plus the mean of the
/// unenumerated remainder.
///
/// Jumps are stored as `scale · unit` with `scale = (ct)^{1/α}`, so that
/// every ratio of jumps is computed from `unit` alone and does not depend on
/// `c` or `t` down to the last bit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedJumpSet {
    pub t: f64,
    pub jumps: Vec<f64>,
    pub tail_cutoff: f64,
    pub tail_mean: f64,
    scale: f64,
    unit: Vec<f64>,
    unit_cutoff: f64,
    unit_tail_mean: f64,
    alpha: Option<f64>,
}

impl OrderedJumpSet {
    /// Wraps an explicit strictly decreasing jump list (scale 1, horizon 1).
    /// The cutoff is the smallest jump; the tail mean is taken as given.
    pub fn from_jumps(jumps: Vec<f64>, tail_mean: f64) -> Result<Self> {
        if jumps.is_empty() {
            return domain("jump list is empty");
        }
        if jumps.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return domain("jumps must be positive and finite");
        }
        if jumps.windows(2).any(|w| w[0] <= w[1]) {
            return domain("jumps must be strictly decreasing");
        }
        if !(tail_mean >= 0.0) {
            return domain("tail mean must be nonnegative");
        }
        let cutoff = *jumps.last().unwrap();
        Ok(Self {
            t: 1.0,
            tail_cutoff: cutoff,
            tail_mean,
            scale: 1.0,
            unit: jumps.clone(),
            jumps,
            unit_cutoff: cutoff,
            unit_tail_mean: tail_mean,
            alpha: None,
        })
    }

    fn from_unit(params: &StableParams, t: f64, unit: Vec<f64>, unit_cutoff: f64) -> Result<Self> {
        if unit.windows(2).any(|w| w[0] <= w[1]) {
            return Err(PdError::Numeric("tied jumps after floating-point rounding".into()));
        }
        let a = params.alpha;
        let scale = (params.c * t).powf(1.0 / a);
        let unit_tail_mean = a * unit_cutoff.powf(1.0 - a) / (1.0 - a);
        Ok(Self {
            t,
            jumps: unit.iter().map(|u| scale * u).collect(),
            tail_cutoff: scale * unit_cutoff,
            tail_mean: scale * unit_tail_mean,
            scale,
            unit,
            unit_cutoff,
            unit_tail_mean,
            alpha: Some(a),
        })
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// `(ct)^{1/α}` for simulated sets, 1 for explicit ones.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Index of the simulating subordinator; `None` for explicit jump lists.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Jumps divided by [`scale`](Self::scale).
    pub fn unit_jumps(&self) -> &[f64] {
        &self.unit
    }

    pub(crate) fn unit_cutoff(&self) -> f64 {
        self.unit_cutoff
    }

    pub(crate) fn unit_tail_mean(&self) -> f64 {
        self.unit_tail_mean
    }

    /// Unscaled trimmed sum: `Σ unit[r..] + unit tail mean`.
    pub(crate) fn unit_trimmed_sum(&self, r: usize) -> Result<f64> {
        if r >= self.unit.len() {
            return Err(PdError::InsufficientEnumeration { required: r + 1, available: self.unit.len() });
        }
        // smallest first keeps the rounding error of long sums down
        Ok(self.unit[r..].iter().rev().sum::<f64>() + self.unit_tail_mean)
    }
}

/// Normalized values `V_1..V_k` after removing the `r` largest jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdSample {
    pub r: usize,
    pub values: Vec<f64>,
    pub tail_fraction: f64,
}

/// `Λ̄(x) = c x^{-α}`.
pub fn levy_tail(params: &StableParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("levy_tail needs x > 0, got {x}"));
    }
    Ok(params.c * x.powf(-params.alpha))
}

/// `Λ̄^←(y) = c^{1/α} y^{-1/α}`.
pub fn levy_tail_inverse(params: &StableParams, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return domain(format!("levy_tail_inverse needs y > 0, got {y}"));
    }
    Ok((params.c / y).powf(1.0 / params.alpha))
}

/// `ψ̃(λ) = ∫₀¹ (1 - e^{-λx}) α x^{-α-1} dx` for `Re λ ≥ 0`.
pub fn normalized_exponent(alpha: f64, lambda: Complex64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if lambda.re < 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return domain(format!("normalized_exponent needs Re(lambda) >= 0, got {lambda}"));
    }
    psi_tilde(alpha, lambda)
}

/// Real-argument convenience wrapper around [`normalized_exponent`].
pub fn normalized_exponent_real(alpha: f64, lambda: f64) -> Result<f64> {
    Ok(normalized_exponent(alpha, Complex64::new(lambda, 0.0))?.re)
}

/// `ψ̃` continued to the whole complex plane (it is entire). Contour
/// inversion needs it at points with negative real part.
pub(crate) fn psi_tilde(alpha: f64, lambda: Complex64) -> Result<Complex64> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Ok(lambda);
    }
    // λ ∫₀¹ e^{-λx} x^{-α} dx - (1 - e^{-λ}); with x = s^{1/(1-α)} the first
    // integral becomes (1/(1-α)) ∫₀¹ exp(-λ s^{1/(1-α)}) ds.
    let p = 1.0 / (1.0 - alpha);
    let scale = (-lambda.re).max(0.0).exp();
    let inner: Complex64 = gauss_kronrod(|s: f64| (-lambda * s.powf(p)).exp(), 0.0, 1.0, 1e-14 * scale, 1e-13)?;
    Ok(lambda * inner * p - (1.0 - (-lambda).exp()))
}

/// `Ψ(λ) = c ψ̃(λ)`, the exponent of the jumps below 1.
pub fn laplace_exponent(params: &StableParams, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("laplace_exponent needs lambda >= 0, got {lambda}"));
    }
    Ok(params.c * normalized_exponent_real(params.alpha, lambda)?)
}

/// First `n_points` jumps of `S` on `[0, t]`, as `Λ̄^←(Γ_i / t)`.
pub fn sample_ordered_jumps<R: Rng + ?Sized>(
    params: &StableParams,
    t: f64,
    n_points: usize,
    rng: &mut R,
) -> Result<OrderedJumpSet> {
    params.envelope.check(params.alpha)?;
    if n_points == 0 {
        return domain("n_points must be at least 1");
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("horizon t must be positive, got {t}"));
    }
    let inv = -1.0 / params.alpha;
    let mut gamma = 0.0;
    let mut unit = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let e: f64 = Exp1.sample(rng);
        gamma += e;
        unit.push(gamma.powf(inv));
    }
    let cutoff = *unit.last().unwrap();
    OrderedJumpSet::from_unit(params, t, unit, cutoff)
}

/// Enumerates jumps until one falls below `eps` times the `r`-th largest and
/// at least `max(min_points, r + 1)` are kept. The first jump below the level is dropped
/// and the remainder is compensated at exactly `eps · ΔS^{(r)}`, so the ratio
/// measure seen from the `r`-th jump has threshold exactly `eps`.
pub fn sample_ordered_jumps_to_level<R: Rng + ?Sized>(
    params: &StableParams,
    t: f64,
    r: usize,
    eps: f64,
    min_points: usize,
    rng: &mut R,
) -> Result<OrderedJumpSet> {
    params.envelope.check(params.alpha)?;
    if r == 0 {
        return domain("relative truncation needs r >= 1");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in (0, 1), got {eps}"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("horizon t must be positive, got {t}"));
    }
    let inv = -1.0 / params.alpha;
    let mut gamma = 0.0;
    let mut unit: Vec<f64> = Vec::new();
    let mut level = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        gamma += e;
        let u = gamma.powf(inv);
        if unit.len() == r {
            level = eps * unit[r - 1];
        }
        if unit.len() >= r && u < level && unit.len() >= min_points.max(r + 1) {
            break;
        }
        unit.push(u);
    }
    // when min_points forced enumeration past the level, compensate below the
    // last kept jump instead
    let cutoff = level.min(*unit.last().unwrap());
    OrderedJumpSet::from_unit(params, t, unit, cutoff)
}

/// `^{(r)}S_t`: sum of the jumps after the `r` largest, plus the tail mean.
pub fn trimmed_sum(jumps: &OrderedJumpSet, r: usize) -> Result<f64> {
    Ok(jumps.scale * jumps.unit_trimmed_sum(r)?)
}

/// The first `depth` values of the `PD_α^{(r)}` vector.
pub fn pd_sample(jumps: &OrderedJumpSet, r: usize, depth: usize) -> Result<PdSample> {
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    if r + depth > jumps.len() {
        return Err(PdError::InsufficientEnumeration { required: r + depth, available: jumps.len() });
    }
    let total = jumps.unit_trimmed_sum(r)?;
    let values: Vec<f64> = jumps.unit[r..r + depth].iter().map(|u| u / total).collect();
    let tail_fraction = (1.0 - values.iter().sum::<f64>()).max(0.0);
    Ok(PdSample { r, values, tail_fraction })
}

/// Draws a `PD_α^{(r)}` sample of the given depth, enumerating jumps down to
/// `eps` times the `r`-th largest (for `r = 0`, down to `eps` times the
/// largest).
pub fn sample_pd<R: Rng + ?Sized>(
    params: &StableParams,
    r: usize,
    depth: usize,
    eps: f64,
    rng: &mut R,
) -> Result<PdSample> {
    let js = sample_ordered_jumps_to_level(params, 1.0, r.max(1), eps, r + depth, rng)?;
    pd_sample(&js, r, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn p(a: f64, c: f64) -> StableParams {
        StableParams::new(a, c).unwrap()
    }

    #[test]
    fn tail_and_inverse_examples() {
        assert_eq!(levy_tail(&p(0.5, 1.0), 4.0).unwrap(), 0.5);
        assert_eq!(levy_tail(&p(0.5, 2.0), 1.0).unwrap(), 2.0);
        assert!((levy_tail_inverse(&p(0.5, 1.0), 0.5).unwrap() - 4.0).abs() < 1e-15);
        assert!((levy_tail_inverse(&p(0.5, 1.0), 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(levy_tail(&p(0.5, 1.0), 0.0).is_err());
        assert!(levy_tail_inverse(&p(0.5, 1.0), -1.0).is_err());
        let big = [1e2, 1e4, 1e8].map(|x| levy_tail(&p(0.5, 1.0), x).unwrap());
        assert!(big[0] > big[1] && big[1] > big[2] && big[2] < 1e-3);
    }

    #[test]
    fn params_reject_boundaries() {
        assert!(StableParams::new(0.0, 1.0).is_err());
        assert!(StableParams::new(1.0, 1.0).is_err());
        assert!(StableParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(normalized_exponent_real(0.5, 0.0).unwrap(), 0.0);
        let v = normalized_exponent_real(0.5, 1.0).unwrap();
        assert!((v - 0.86153).abs() < 5e-6, "{v}");
        let v = normalized_exponent_real(0.5, 100.0).unwrap();
        assert!((v - 16.7245).abs() < 1e-4, "{v}");
        assert!(normalized_exponent(0.5, Complex64::new(-1.0, 0.0)).is_err());
        let l = laplace_exponent(&p(0.5, 3.0), 1.0).unwrap();
        assert!((l - 2.58459).abs() < 2e-5, "{l}");
    }

    #[test]
    fn psi_matches_incomplete_gamma_form() {
        use statrs::function::gamma::{gamma, gamma_lr};
        for &a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &l in &[0.01, 0.5, 3.0, 40.0] {
                let lower = gamma_lr(1.0 - a, l) * gamma(1.0 - a);
                let oracle = l.powf(a) * lower - (1.0 - (-l).exp());
                let v = normalized_exponent_real(a, l).unwrap();
                assert!((v - oracle).abs() < 1e-10 * oracle.max(1.0), "a={a} l={l} {v} {oracle}");
            }
        }
    }

    #[test]
    fn psi_slope_at_zero() {
        for &a in &[0.2, 0.5, 0.8] {
            let h = 1e-7;
            let d = normalized_exponent_real(a, h).unwrap() / h;
            assert!((d - a / (1.0 - a)).abs() < 1e-6, "{a}: {d}");
        }
    }

    #[test]
    fn trimmed_sum_examples() {
        let js = OrderedJumpSet::from_jumps(vec![3.0, 2.0, 1.0], 0.0).unwrap();
        assert_eq!(trimmed_sum(&js, 1).unwrap(), 3.0);
        assert_eq!(trimmed_sum(&js, 0).unwrap(), 6.0);
        assert!(matches!(trimmed_sum(&js, 3), Err(PdError::InsufficientEnumeration { .. })));
    }

    #[test]
    fn pd_sample_example() {
        let js = OrderedJumpSet::from_jumps(vec![0.5, 0.3, 0.2], 0.0).unwrap();
        let s = pd_sample(&js, 1, 2).unwrap();
        assert!((s.values[0] - 0.6).abs() < 1e-15 && (s.values[1] - 0.4).abs() < 1e-15);
        assert!(s.tail_fraction >= 0.0 && s.tail_fraction < 1e-15);
        assert_eq!(
            pd_sample(&js, 2, 2),
            Err(PdError::InsufficientEnumeration { required: 4, available: 3 })
        );
    }

    #[test]
    fn sampled_set_invariants() {
        let params = p(0.6, 1.7);
        let mut rng = Stream::new(3).rng();
        let js = sample_ordered_jumps(&params, 2.0, 500, &mut rng).unwrap();
        assert!(js.jumps.windows(2).all(|w| w[0] > w[1]));
        assert!(js.jumps.iter().all(|&j| j >= js.tail_cutoff));
        let want = params.c * params.alpha * js.tail_cutoff.powf(1.0 - params.alpha) * js.t / (1.0 - params.alpha);
        assert!((js.tail_mean - want).abs() < 1e-12 * want);
        let again = sample_ordered_jumps(&params, 2.0, 500, &mut Stream::new(3).rng()).unwrap();
        assert_eq!(js, again);
    }

    #[test]
    fn scale_equivariance_is_exact() {
        let a = p(0.4, 1.0);
        let b = p(0.4, 3.0);
        let ja = sample_ordered_jumps(&a, 1.0, 200, &mut Stream::new(9).rng()).unwrap();
        let jb = sample_ordered_jumps(&b, 1.0, 200, &mut Stream::new(9).rng()).unwrap();
        let k = 3f64.powf(1.0 / 0.4);
        for (x, y) in ja.jumps.iter().zip(&jb.jumps) {
            assert!((y / x - k).abs() < 1e-12 * k);
        }
        assert_eq!(pd_sample(&ja, 2, 20).unwrap(), pd_sample(&jb, 2, 20).unwrap());
    }

    #[test]
    fn level_truncation_puts_cutoff_at_eps_times_rth_jump() {
        let params = p(0.5, 1.0);
        let js = sample_ordered_jumps_to_level(&params, 1.0, 2, 1e-3, 0, &mut Stream::new(5).rng()).unwrap();
        assert!((js.tail_cutoff - 1e-3 * js.jumps[1]).abs() < 1e-15 * js.jumps[1]);
        assert!(js.jumps.iter().all(|&j| j >= js.tail_cutoff));
        let s = sample_pd(&params, 2, 40, 1e-3, &mut Stream::new(5).rng()).unwrap();
        assert_eq!(s.values.len(), 40);
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn envelope_rejects_extreme_alpha() {
        let params = p(0.99, 1.0);
        assert!(sample_ordered_jumps(&params, 1.0, 10, &mut Stream::new(1).rng()).is_err());
        let relaxed = params.with_envelope(AlphaEnvelope { lo: 0.0, hi: 1.0 });
        assert!(sample_ordered_jumps(&relaxed, 1.0, 10, &mut Stream::new(1).rng()).is_ok());
    }
}
