//! The negative binomial point process `BN(r, Λ̃)` on `(0, 1)` with
//! `Λ̃(dx) = α x^{-α-1} dx`, realized either from ratios of ordered stable
//! jumps or as a Gamma-mixed Poisson process.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use crate::error::{domain, PdError, Result};
use crate::levy::{check_alpha, OrderedJumpSet};
use crate::stats::McEstimate;

/// Shape `r` and index `α` of `BN(r, Λ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NBParams {
    pub alpha: f64,
    pub r: f64,
}

impl NBParams {
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("shape r must be positive, got {r}"));
        }
        Ok(Self { alpha, r })
    }

    /// `Λ̃((a, b)) = a^{-α} - b^{-α}`.
    pub fn intensity(&self, a: f64, b: f64) -> f64 {
        a.powf(-self.alpha) - b.powf(-self.alpha)
    }
}

/// Finite realization of a point measure on `(0, 1)`: the enumerated points
/// at or above `epsilon`, and the expected total of the points below it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMeasure {
    pub points: Vec<f64>,
    pub epsilon: f64,
    pub small_point_mean: f64,
    /// Index of the intensity `Λ̃` when the measure comes from it. Needed
    /// to draw the size of a pick that lands in the small-point mass.
    pub alpha: Option<f64>,
}

impl PointMeasure {
    /// An explicit measure; every point must lie in `[epsilon, 1)`.
    pub fn new(points: Vec<f64>, epsilon: f64, small_point_mean: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return domain(format!("epsilon must lie in [0, 1), got {epsilon}"));
        }
        if !(small_point_mean >= 0.0 && small_point_mean.is_finite()) {
            return domain("small_point_mean must be nonnegative and finite");
        }
        if let Some(x) = points.iter().find(|&&x| !(x >= epsilon && x < 1.0 && x > 0.0)) {
            return domain(format!("point {x} is outside [epsilon, 1)"));
        }
        Ok(Self { points, epsilon, small_point_mean, alpha: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of enumerated points in `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.points.iter().filter(|&&x| x > a && x <= b).count()
    }

    /// Points in decreasing order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut p = self.points.clone();
        p.sort_by(|a, b| b.total_cmp(a));
        p
    }
}

/// `{ΔS^{(r+i)} / ΔS^{(r)} : i ≥ 1}` from an enumerated jump set.
pub fn ratios_from_jumps(jumps: &OrderedJumpSet, r: usize) -> Result<PointMeasure> {
    if r == 0 {
        return domain("the ratio measure is undefined for r = 0");
    }
    if r >= jumps.len() {
        return Err(PdError::InsufficientEnumeration { required: r + 1, available: jumps.len() });
    }
    let unit = jumps.unit_jumps();
    let top = unit[r - 1];
    Ok(PointMeasure {
        points: unit[r..].iter().map(|u| u / top).collect(),
        epsilon: jumps.unit_cutoff() / top,
        small_point_mean: jumps.unit_tail_mean() / top,
        alpha: jumps.alpha(),
    })
}

/// Draws `BN(r, Λ̃)` restricted to `[eps, 1)`: a Poisson process with
/// intensity `Y Λ̃` for `Y ~ Gamma(r, 1)`. The points below `eps` are
/// replaced by their conditional mean `Y α eps^{1-α} / (1-α)`.
pub fn sample_nb<R: Rng + ?Sized>(params: &NBParams, eps: f64, rng: &mut R) -> Result<PointMeasure> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    let a = params.alpha;
    let gamma = Gamma::new(params.r, 1.0).map_err(|e| PdError::Domain(e.to_string()))?;
    let y: f64 = gamma.sample(rng);
    let top = eps.powf(-a);
    let mass = y * (top - 1.0);
    let count = if mass > 0.0 {
        Poisson::new(mass).map_err(|e| PdError::Numeric(e.to_string()))?.sample(rng) as usize
    } else {
        0
    };
    let points = (0..count)
        .map(|_| {
            // inverse of the tail u ↦ (x^{-α} - 1)/(eps^{-α} - 1), u ∈ (0, 1]
            let u = 1.0 - rng.gen::<f64>();
            (1.0 + u * (top - 1.0)).powf(-1.0 / a).min(1.0 - f64::EPSILON / 2.0)
        })
        .collect();
    Ok(PointMeasure {
        points,
        epsilon: eps,
        small_point_mean: y * a * eps.powf(1.0 - a) / (1.0 - a),
        alpha: Some(a),
    })
}

/// `T(M)`: enumerated mass plus the small-point compensation.
pub fn total_mass(m: &PointMeasure) -> f64 {
    m.points.iter().sum::<f64>() + m.small_point_mean
}

/// A draw from the Palm version at `x`: `ξ + δ_x` with `ξ ~ BN(r+1, Λ̃)`.
/// The atom is kept even when `x < eps`.
pub fn palm_augment<R: Rng + ?Sized>(params: &NBParams, x: f64, eps: f64, rng: &mut R) -> Result<PointMeasure> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("Palm location must lie in (0, 1), got {x}"));
    }
    let shifted = NBParams { r: params.r + 1.0, ..*params };
    let mut m = sample_nb(&shifted, eps, rng)?;
    m.points.push(x);
    Ok(m)
}

/// `E BN(r, Λ̃)((a, b)) = r (a^{-α} - b^{-α})`.
pub fn mean_measure(params: &NBParams, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b && b <= 1.0) {
        return domain(format!("interval ({a}, {b}) is not inside (0, 1]"));
    }
    Ok(params.r * params.intensity(a, b))
}

/// Mean and standard error of `exp(-Σ_{x∈M} f(x))` over the samples. With
/// `slope_at_zero = Some(f'(0+))` the unenumerated points contribute
/// `exp(-f'(0+) · small_point_mean)`.
pub fn empirical_laplace_functional<F>(samples: &[PointMeasure], f: F, slope_at_zero: Option<f64>) -> Result<McEstimate>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return domain("no samples");
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|m| {
            let mut s: f64 = m.points.iter().map(|&x| f(x)).sum();
            if let Some(d) = slope_at_zero {
                s += d * m.small_point_mean;
            }
            (-s).exp()
        })
        .collect();
    Ok(McEstimate::from_samples(&xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{sample_ordered_jumps_to_level, StableParams};
    use crate::rng::Stream;

    #[test]
    fn ratio_examples() {
        let js = OrderedJumpSet::from_jumps(vec![8.0, 4.0, 2.0, 1.0], 0.0).unwrap();
        assert_eq!(ratios_from_jumps(&js, 1).unwrap().points, vec![0.5, 0.25, 0.125]);
        assert_eq!(ratios_from_jumps(&js, 2).unwrap().points, vec![0.5, 0.25]);
        assert!(ratios_from_jumps(&js, 0).is_err());
        assert!(matches!(ratios_from_jumps(&js, 4), Err(PdError::InsufficientEnumeration { .. })));
    }

    #[test]
    fn mass_and_measure_examples() {
        let m = PointMeasure::new(vec![0.5, 0.25], 0.0, 0.0).unwrap();
        assert_eq!(total_mass(&m), 0.75);
        assert_eq!(total_mass(&PointMeasure::new(vec![], 0.0, 0.0).unwrap()), 0.0);
        let p = NBParams::new(0.5, 1.0).unwrap();
        assert!((mean_measure(&p, 0.25, 0.64).unwrap() - 0.75).abs() < 1e-15);
        let p2 = NBParams::new(0.5, 2.0).unwrap();
        assert!((mean_measure(&p2, 0.25, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(mean_measure(&p, 0.5, 0.4).is_err());
        assert!(mean_measure(&p, 0.5, 1.5).is_err());
    }

    #[test]
    fn ratio_mass_is_the_normalized_trimmed_sum() {
        let params = StableParams::new(0.6, 1.7).unwrap();
        let mut rng = Stream::new(3).rng();
        let js = sample_ordered_jumps_to_level(&params, 1.0, 2, 1e-3, 0, &mut rng).unwrap();
        let m = ratios_from_jumps(&js, 2).unwrap();
        let direct = crate::levy::trimmed_sum(&js, 2).unwrap() / js.jumps[1];
        assert!((total_mass(&m) - direct).abs() < 1e-13 * direct);
        assert!(m.points.iter().all(|&x| x > 0.0 && x < 1.0 && x >= m.epsilon));
    }

    #[test]
    fn sample_nb_support_and_palm_atom() {
        let p = NBParams::new(0.5, 2.0).unwrap();
        let mut rng = Stream::new(5).rng();
        for _ in 0..200 {
            let m = sample_nb(&p, 0.01, &mut rng).unwrap();
            assert!(m.points.iter().all(|&x| (0.01..1.0).contains(&x)));
            let q = palm_augment(&p, 0.3, 0.01, &mut rng).unwrap();
            assert!(q.points.contains(&0.3));
        }
        assert!(sample_nb(&p, 0.0, &mut rng).is_err());
        assert!(palm_augment(&p, 1.0, 0.01, &mut rng).is_err());
    }

    #[test]
    fn laplace_functional_of_zero_is_one() {
        let p = NBParams::new(0.5, 1.0).unwrap();
        let mut rng = Stream::new(9).rng();
        let ms: Vec<_> = (0..10).map(|_| sample_nb(&p, 0.1, &mut rng).unwrap()).collect();
        let e = empirical_laplace_functional(&ms, |_| 0.0, Some(0.0)).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        assert!(empirical_laplace_functional(&[], |_| 0.0, None).is_err());
    }
}
