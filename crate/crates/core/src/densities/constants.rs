use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, PdError, Result};
use crate::levy::check_alpha;
use crate::quad::tanh_sinh_half_line;

/// `Θ(x) = α x^{-α}` on `(0, 1)`, zero elsewhere.
pub fn theta(alpha: f64, x: f64) -> f64 {
    if x > 0.0 && x < 1.0 {
        alpha * x.powf(-alpha)
    } else {
        0.0
    }
}

/// Beta(a, b) density, zero off `(0, 1)`.
pub fn beta_density(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("beta parameters must be positive, got ({a}, {b})"));
    }
    if !(x > 0.0 && x < 1.0) {
        return Ok(0.0);
    }
    let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    Ok((ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()).exp())
}

/// `r^{(n)} = r (r + 1) ⋯ (r + n - 1)`.
pub fn ascending_factorial(r: f64, n: usize) -> f64 {
    (0..n).map(|i| r + i as f64).product()
}

/// `ln K_n = ln Γ(n+1) - n ln Γ(1-α) - ln Γ(nα+1)`.
pub fn ln_k_n(alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    ln_gamma(nf + 1.0) - nf * ln_gamma(1.0 - alpha) - ln_gamma(nf * alpha + 1.0)
}

/// The product form `∏_{i<n} Γ(1+iα) / (αⁿ Γⁿ(1-α) ∏_{i≤n} Γ(iα))`, in logs.
pub fn ln_k_n_product(alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    let num: f64 = (0..n).map(|i| ln_gamma(1.0 + i as f64 * alpha)).sum();
    let den: f64 = (1..=n).map(|i| ln_gamma(i as f64 * alpha)).sum();
    num - nf * alpha.ln() - nf * ln_gamma(1.0 - alpha) - den
}

/// `K_n = E S_1^{-nα}` (with `c = Γ(1-α)`), cross-checked against its product form.
pub fn k_n(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return domain("k_n needs n >= 1");
    }
    let a = ln_k_n(alpha, n);
    let b = ln_k_n_product(alpha, n);
    // relative agreement of the values is |e^{a-b} - 1| ≈ |a - b|
    if (a - b).abs() > 1e-10 {
        return Err(PdError::Consistency(format!(
            "K_{n} closed forms disagree at alpha = {alpha}: {} vs {}",
            a.exp(),
            b.exp()
        )));
    }
    Ok(a.exp())
}

/// `C_a = Γ(1-α)^a Γ(αa)`, the normalizer of `t^{αa-1}` in the small-`t` law.
pub(crate) fn ln_c(alpha: f64, a: f64) -> f64 {
    a * ln_gamma(1.0 - alpha) + ln_gamma(alpha * a)
}

/// Relative deviation of
/// `(1/Γ(nα)) ∫₀^∞ t^{nα-1} (1 + Γ(1-α) t^α)^{-r-n} dt` from `K_n / r^{(n)}`.
pub fn kn_integral_check(alpha: f64, r: f64, n: usize) -> Result<f64> {
    kn_integral_check_tol(alpha, r, n, 1e-13)
}

/// [`kn_integral_check`] at an explicit quadrature tolerance.
pub fn kn_integral_check_tol(alpha: f64, r: f64, n: usize, tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(r > 0.0) || n == 0 {
        return domain("kn_integral_check needs r > 0 and n >= 1");
    }
    let na = n as f64 * alpha;
    let g1 = gamma(1.0 - alpha);
    let integral = tanh_sinh_half_line(
        |t| {
            if t <= 0.0 || !t.is_finite() {
                return 0.0;
            }
            ((na - 1.0) * t.ln() - (r + n as f64) * (g1 * t.powf(alpha)).ln_1p()).exp()
        },
        tol,
    )?;
    let lhs = integral / gamma(na);
    let rhs = k_n(alpha, n)? / ascending_factorial(r, n);
    Ok((lhs - rhs).abs() / rhs)
}

/// `d(u) = min_i ∏_{j≥i} u_j / ū_i`.
pub fn d_min(u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return domain("d_min needs at least one fraction");
    }
    if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return domain("fractions must lie in (0, 1)");
    }
    let mut prod = 1.0;
    let mut best = f64::INFINITY;
    for &ui in u.iter().rev() {
        prod *= ui;
        best = best.min(prod / (1.0 - ui));
    }
    Ok(best)
}
