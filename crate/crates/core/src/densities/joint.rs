use rand_distr::{Beta, Distribution};
use serde::Serialize;

use super::constants::{ascending_factorial, beta_density, d_min, k_n, theta};
use super::gr::{GrFamily, PowerCdf};
use crate::error::{domain, PdError, Result};
use crate::quad::{gauss_kronrod, tanh_sinh};
use crate::rng::{par_draws, Stream};
use crate::stats::McEstimate;

/// Value of a joint density together with its support diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointEval {
    pub value: f64,
    pub in_support: bool,
    /// Smallest margin by which the support constraints hold; negative when
    /// one fails.
    pub constraint_slack: f64,
}

impl JointEval {
    fn outside(slack: f64) -> Self {
        Self { value: 0.0, in_support: false, constraint_slack: slack }
    }
}

/// Joint density of `(T_0, …, T_n)`:
/// `r^{(n)} g_{r+n}(t_n) ∏_{i<n} Θ(t_i - t_{i+1}) / t_i`.
pub fn joint_t_density(fam: &GrFamily, totals: &[f64]) -> Result<JointEval> {
    if totals.len() < 2 {
        return domain("joint_t_density needs t_0 and at least one later total");
    }
    let n = totals.len() - 1;
    let g = fam.get(n)?;
    let mut slack = *totals.last().unwrap();
    for w in totals.windows(2) {
        let gap = w[0] - w[1];
        slack = slack.min(gap).min(1.0 - gap);
    }
    if slack <= 0.0 {
        return Ok(JointEval::outside(slack));
    }
    let mut v = ascending_factorial(fam.r, n) * g.pdf(totals[n]);
    for w in totals.windows(2) {
        v *= theta(fam.alpha, w[0] - w[1]) / w[0];
    }
    Ok(JointEval { value: v, in_support: true, constraint_slack: slack })
}

/// Markov kernel `κ(t_n → s) = (r+n) Θ(t_n - s)/t_n · g_{r+n+1}(s) / g_{r+n}(t_n)`.
pub fn transition_density(fam: &GrFamily, n: usize, t_n: f64, t_next: f64) -> Result<JointEval> {
    if !(t_n > 0.0) {
        return domain(format!("transition_density needs t_n > 0, got {t_n}"));
    }
    let from = fam.get(n)?.pdf(t_n);
    if from < 1e-300 {
        return Err(PdError::Numeric(format!(
            "g_{}({t_n}) = {from:e}: cannot condition on a negligible-density state",
            fam.r + n as f64
        )));
    }
    let gap = t_n - t_next;
    let slack = t_next.min(gap).min(1.0 - gap);
    if slack <= 0.0 {
        return Ok(JointEval::outside(slack));
    }
    let to = fam.get(n + 1)?.pdf(t_next);
    let v = (fam.r + n as f64) * theta(fam.alpha, gap) / t_n * to / from;
    Ok(JointEval { value: v, in_support: true, constraint_slack: slack })
}

/// `∫_a^b κ(t_n → s) ds`, with `(a, b)` clipped to the kernel support.
pub fn transition_mass(fam: &GrFamily, n: usize, t_n: f64, a: f64, b: f64) -> Result<f64> {
    let from = fam.get(n)?.pdf(t_n);
    if from < 1e-300 {
        return Err(PdError::Numeric(format!("g({t_n}) is negligible; kernel undefined")));
    }
    let lo = a.max(t_n - 1.0).max(0.0);
    let hi = b.min(t_n);
    if hi <= lo {
        return Ok(0.0);
    }
    let g = fam.get(n + 1)?;
    let alpha = fam.alpha;
    let scale = (fam.r + n as f64) / (t_n * from);
    // the gap t_n - s is measured from the right endpoint only when hi = t_n
    let v = tanh_sinh(
        |s, _, db| {
            let gap = if hi == t_n { db } else { t_n - s };
            alpha * gap.powf(-alpha) * g.pdf(s)
        },
        lo,
        hi,
        1e-11,
    )?;
    Ok(scale * v)
}

/// Joint density of `(T_n, U_1, …, U_n)`.
pub fn joint_u_t_density(fam: &GrFamily, t_n: f64, u: &[f64]) -> Result<JointEval> {
    let n = u.len();
    if n == 0 {
        return domain("joint_u_t_density needs at least one fraction");
    }
    if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) || !(t_n > 0.0) {
        return domain("fractions must lie in (0, 1) and t_n must be positive");
    }
    let alpha = fam.alpha;
    let d = d_min(u)?;
    let slack = d - t_n;
    if slack <= 0.0 {
        return Ok(JointEval::outside(slack));
    }
    let g = fam.get(n)?;
    let mut v = ascending_factorial(fam.r, n) / k_n(alpha, n)? * g.pdf(t_n) * t_n.powf(-(n as f64) * alpha);
    for (i, &ui) in u.iter().enumerate() {
        v *= beta_density((i + 1) as f64 * alpha, 1.0 - alpha, ui)?;
    }
    Ok(JointEval { value: v, in_support: true, constraint_slack: slack })
}

/// Joint density of the first `n` size-biased values `Ṽ_1..Ṽ_n` and `T`.
pub fn sb_joint_density(fam: &GrFamily, v: &[f64], t: f64) -> Result<JointEval> {
    let n = v.len();
    if n == 0 {
        return domain("sb_joint_density needs at least one value");
    }
    if v.iter().any(|&x| !(x > 0.0 && x < 1.0)) || !(t > 0.0) {
        return domain("values must lie in (0, 1) and t must be positive");
    }
    let sum: f64 = v.iter().sum();
    if sum >= 1.0 {
        return domain(format!("values sum to {sum} >= 1"));
    }
    let alpha = fam.alpha;
    let slack = v.iter().fold(f64::INFINITY, |m, &x| m.min(1.0 / t - x));
    if slack <= 0.0 {
        return Ok(JointEval::outside(slack));
    }
    let mut val = ascending_factorial(fam.r, n) * alpha.powi(n as i32) * t.powf(-(n as f64) * alpha);
    let mut rest = 1.0;
    for &x in v {
        val *= x.powf(-alpha) / rest;
        rest -= x;
    }
    val *= fam.get(n)?.pdf(t * rest);
    Ok(JointEval { value: val, in_support: true, constraint_slack: slack })
}

/// `∫∫ f(t_0, t_1) dt_0 dt_1` for the `n = 1` joint density of totals.
pub fn joint_t_mass(fam: &GrFamily) -> Result<f64> {
    let alpha = fam.alpha;
    let g1 = fam.get(1)?;
    // ∫ Θ(t_0 - t_1)/t_0 dt_0 = α/(1-α) ∫₀¹ dy / (t_1 + y^{1/(1-α)})
    let p = 1.0 / (1.0 - alpha);
    let inner = |t1: f64| -> f64 {
        gauss_kronrod(|y: f64| 1.0 / (t1 + y.powf(p)), 0.0, 1.0, 1e-14, 1e-11).unwrap_or(f64::NAN) * alpha / (1.0 - alpha)
    };
    let v = g1.integrate(|t1| fam.r * inner(t1))?;
    if !v.is_finite() {
        return Err(PdError::Numeric("inner quadrature failed in joint_t_mass".into()));
    }
    Ok(v)
}

/// `∫ f(t_0, t_1) dt_1`, to compare with `g_r(t_0)`.
pub fn joint_t_marginal(fam: &GrFamily, t0: f64) -> Result<f64> {
    let alpha = fam.alpha;
    let g1 = fam.get(1)?;
    let lo = (t0 - 1.0).max(0.0);
    let v = tanh_sinh(|_, _, db| alpha * db.powf(-alpha) * g1.pdf(t0 - db), lo, t0, 1e-11)?;
    Ok(fam.r * v / t0)
}

/// `∫∫ p(v_1, t) dv_1 dt` for the `n = 1` size-biased joint density.
pub fn sb_joint_mass(fam: &GrFamily) -> Result<f64> {
    let alpha = fam.alpha;
    let g1 = fam.get(1)?;
    let r = fam.r;
    let inner = |t: f64| -> f64 {
        let hi = (1.0 / t).min(1.0);
        // g_{r+1}(t(1-v)) vanishes once t(1-v) passes t_max
        let lo = (1.0 - g1.t_max / t).max(0.0);
        if hi <= lo {
            return 0.0;
        }
        let v = tanh_sinh(
            |v, dv, dc| {
                let rest = if hi == 1.0 { dc } else { 1.0 - v };
                v.powf(-alpha) * g1.pdf(t * rest) * if lo == 0.0 { (dv / v).min(1.0) } else { 1.0 }
            },
            lo,
            hi,
            1e-10,
        )
        .unwrap_or(f64::NAN);
        r * alpha * t.powf(-alpha) * v
    };
    let head = tanh_sinh(|t, _, _| inner(t), 0.0, 1.0, 1e-9)?;
    let mut tail = 0.0;
    let end = g1.t_max + 1.0;
    let mut a = 1.0;
    while a < end {
        let b = (a + 1.0).min(end);
        tail += gauss_kronrod(inner, a, b, 1e-13, 1e-9)?;
        a = b;
    }
    let total = head + tail;
    if !total.is_finite() {
        return Err(PdError::Numeric("inner quadrature failed in sb_joint_mass".into()));
    }
    Ok(total)
}

/// `∫∫ h(t_1, u_1) dt_1 du_1` for the `n = 1` joint density of `(T_1, U_1)`.
pub fn joint_u_t_mass(fam: &GrFamily) -> Result<f64> {
    let alpha = fam.alpha;
    let g1 = fam.get(1)?;
    let cdf = PowerCdf::new(g1, -alpha)?;
    let v = tanh_sinh(
        |u, du, dc| {
            let d = du / dc;
            beta_density(alpha, 1.0 - alpha, u).unwrap_or(0.0) * cdf.eval(d).unwrap_or(f64::NAN)
        },
        0.0,
        1.0,
        1e-10,
    )?;
    Ok(fam.r / k_n(alpha, 1)? * v)
}

/// Monte-Carlo estimate of `r^{(n)} E ∫₀^{d(U)} t^{-nα} g_{r+n}(t) dt` over
/// independent `U_i ~ Beta(iα, 1-α)`; its expectation is `K_n`.
pub fn depen_check(fam: &GrFamily, n: usize, budget: usize, stream: Stream) -> Result<(McEstimate, f64)> {
    if !(1..=2).contains(&n) {
        return domain("depen_check supports n in {1, 2}");
    }
    if budget < 2 {
        return domain("depen_check needs a budget of at least 2");
    }
    let alpha = fam.alpha;
    let g = fam.get(n)?;
    let cdf = PowerCdf::new(g, -(n as f64) * alpha)?;
    let betas: Vec<Beta<f64>> = (1..=n)
        .map(|i| Beta::new(i as f64 * alpha, 1.0 - alpha).map_err(|e| PdError::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let rf = ascending_factorial(fam.r, n);
    let draws: Vec<Result<f64>> = par_draws(stream, budget, |rng| {
        let u: Vec<f64> = betas
            .iter()
            .map(|b| b.sample(rng).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            .collect();
        Ok(rf * cdf.eval(d_min(&u)?)?)
    });
    let xs: Vec<f64> = draws.into_iter().collect::<Result<_>>()?;
    Ok((McEstimate::from_samples(&xs), k_n(alpha, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam() -> GrFamily {
        GrFamily::new(0.5, 1.0, 3).unwrap()
    }

    #[test]
    fn support_rules() {
        let f = fam();
        assert!(!joint_t_density(&f, &[2.5, 1.2]).unwrap().in_support);
        assert_eq!(joint_t_density(&f, &[1.0, 1.5]).unwrap().value, 0.0);
        assert!(joint_t_density(&f, &[1.0, 0.5]).unwrap().value > 0.0);
        assert_eq!(transition_density(&f, 0, 2.0, 0.9).unwrap().value, 0.0);
        assert_eq!(transition_density(&f, 0, 2.0, 2.1).unwrap().value, 0.0);
        // u = 0.5 needs t_1 < 1
        assert!(joint_u_t_density(&f, 0.99, &[0.5]).unwrap().in_support);
        assert!(!joint_u_t_density(&f, 1.01, &[0.5]).unwrap().in_support);
        assert!(!sb_joint_density(&f, &[0.6], 2.0).unwrap().in_support);
        assert!(sb_joint_density(&f, &[0.6, 0.5], 1.0).is_err());
    }

    #[test]
    fn factorization_through_the_kernel() {
        let f = fam();
        let (t0, t1, t2) = (2.3, 1.9, 1.2);
        let joint = joint_t_density(&f, &[t0, t1, t2]).unwrap().value;
        let chain = f.get(0).unwrap().pdf(t0)
            * transition_density(&f, 0, t0, t1).unwrap().value
            * transition_density(&f, 1, t1, t2).unwrap().value;
        assert!((joint - chain).abs() < 1e-12 * joint);
    }

    #[test]
    fn kernel_normalizes() {
        let f = fam();
        for &t0 in &[0.5, 1.0, 3.0] {
            let m = transition_mass(&f, 0, t0, 0.0, t0).unwrap();
            assert!((m - 1.0).abs() < 1e-3, "t0={t0}: {m}");
            let marg = joint_t_marginal(&f, t0).unwrap();
            let g = f.get(0).unwrap().pdf(t0);
            assert!((marg - g).abs() < 1e-3 * g);
        }
    }

    #[test]
    fn n1_masses_are_one() {
        let f = fam();
        for m in [joint_t_mass(&f).unwrap(), sb_joint_mass(&f).unwrap(), joint_u_t_mass(&f).unwrap()] {
            assert!((m - 1.0).abs() < 1e-3, "{m}");
        }
    }

    #[test]
    fn depen_matches_k1() {
        let f = fam();
        let (est, k) = depen_check(&f, 1, 20_000, Stream::new(11)).unwrap();
        assert!((est.estimate - k).abs() < 4.0 * est.stderr, "{est:?} vs {k}");
    }
}
