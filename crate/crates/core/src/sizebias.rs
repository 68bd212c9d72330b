//! Size-biased permutation of a point measure, residual totals and
//! fractions, the stick-breaking inverse, and the Markov chain of residual
//! totals driven by the transition kernel.

use rand::Rng;
use serde::Serialize;

use crate::densities::GrFamily;
use crate::error::{domain, PdError, Result};
use crate::nbproc::{sample_nb, total_mass, NBParams, PointMeasure};

/// The first `n` size-biased picks with residual totals and fractions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeBiasedDraw {
    pub picks: Vec<f64>,
    /// `T_0 > T_1 > … > T_n`, with `T_k = T_{k-1} - picks[k-1]`. Only an
    /// exhausted measure (every point picked, no compensation) ends at 0.
    pub totals: Vec<f64>,
    /// `U_k = T_k / T_{k-1}`.
    pub fractions: Vec<f64>,
}

impl SizeBiasedDraw {
    /// Builds totals and fractions from a starting total and the picks.
    pub fn from_picks(t0: f64, picks: Vec<f64>) -> Result<Self> {
        let mut totals = Vec::with_capacity(picks.len() + 1);
        totals.push(t0);
        let mut t = t0;
        for &j in &picks {
            // a last pick may equal the remainder up to rounding
            if !(j > 0.0 && j <= t * (1.0 + 1e-12)) {
                return domain(format!("pick {j} is not inside (0, {t}]"));
            }
            t = (t - j).max(0.0);
            totals.push(t);
        }
        let fractions = totals.windows(2).map(|w| w[1] / w[0]).collect();
        Ok(Self { picks, totals, fractions })
    }

    /// `Ṽ_k = J̃_k / T_0`.
    pub fn normalized_picks(&self) -> Vec<f64> {
        self.picks.iter().map(|j| j / self.totals[0]).collect()
    }
}

/// Draws the first `n` picks of a size-biased permutation of `m`.
///
/// Each pick takes a point with probability proportional to its size among
/// the remaining mass. When `m` records the index of its intensity, the
/// small-point compensation is itself pickable: with probability
/// `small / T` the pick is a point below `epsilon`, with size drawn from
/// the size-biased law `∝ x^{-α}` on `(0, epsilon)`, and is removed from the
/// compensation. Without the index the compensation only enters the
/// remaining total and picks are renormalized over the enumerated points.
/// Equal points are taken in index order.
pub fn size_biased_permutation<R: Rng + ?Sized>(m: &PointMeasure, n: usize, rng: &mut R) -> Result<SizeBiasedDraw> {
    if n == 0 {
        return domain("need at least one pick");
    }
    let small_pickable = m.alpha.is_some() && m.small_point_mean > 0.0;
    if n > m.len() && !small_pickable {
        return Err(PdError::InsufficientEnumeration { required: n, available: m.len() });
    }
    let t0 = total_mass(m);
    if !(t0 > 0.0) {
        return domain("total mass must be positive");
    }
    let mut left: Vec<f64> = m.points.clone();
    let mut small = m.small_point_mean;
    let mut picks = Vec::with_capacity(n);
    let mut total = t0;
    for _ in 0..n {
        let enumerated: f64 = left.iter().sum();
        let pickable = match m.alpha {
            Some(_) => enumerated + small,
            None => enumerated,
        };
        let u = rng.gen::<f64>() * pickable;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &x) in left.iter().enumerate() {
            acc += x;
            if u < acc {
                chosen = Some(i);
                break;
            }
        }
        let j = match (chosen, m.alpha) {
            (Some(i), _) => left.remove(i),
            (None, Some(a)) if small > 0.0 => {
                let x = (m.epsilon * (1.0 - rng.gen::<f64>()).powf(1.0 / (1.0 - a))).min(small);
                small -= x;
                x
            }
            // rounding pushed u past the last point
            _ => left.pop().ok_or(PdError::InsufficientEnumeration { required: n, available: m.len() })?,
        };
        if !(j > 0.0 && j <= total * (1.0 + 1e-12)) {
            return Err(PdError::Numeric(format!("pick {j} exceeds the remaining total {total}")));
        }
        total = (total - j).max(0.0);
        picks.push(j);
    }
    SizeBiasedDraw::from_picks(t0, picks)
}

/// `U_k = T_k / T_{k-1}` recomputed from the totals.
pub fn residual_fractions(draw: &SizeBiasedDraw) -> Vec<f64> {
    draw.totals.windows(2).map(|w| w[1] / w[0]).collect()
}

/// `Ṽ_n = (1 - U_n) ∏_{i<n} U_i`.
pub fn stick_reconstruct(u: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = u.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return domain(format!("fraction {x} is outside (0, 1)"));
    }
    let mut prod = 1.0;
    Ok(u.iter()
        .map(|&x| {
            let v = (1.0 - x) * prod;
            prod *= x;
            v
        })
        .collect())
}

/// Number of cells in the tabulated kernel CDF.
pub const KERNEL_CELLS: usize = 2048;
const KERNEL_TOL: f64 = 1e-3;

/// Tabulated CDF of the transition kernel out of one state.
///
/// The support `(max(0, t-1), t)` is split at its midpoint. The left half is
/// gridded in `v` with `s = mid · v^{1/β}`, `β = min(1, α(r+n+1))`, which
/// absorbs the power behaviour of `g_{r+n+1}` at zero; the right half in `w`
/// with `t - s = G w^{1/(1-α)}`, which absorbs the `Θ` singularity. Cell
/// masses use the midpoint rule in the graded variable.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub from: f64,
    /// Kernel mass before normalization; `1` up to discretization error.
    pub mass: f64,
    cdf: Vec<f64>,
    left: (f64, f64, f64, f64),
    right: (f64, f64, f64),
}

impl KernelTable {
    pub fn new(fam: &GrFamily, n: usize, t: f64) -> Result<Self> {
        let from = fam.get(n)?.pdf(t);
        if from < 1e-300 {
            return Err(PdError::Numeric(format!("g({t}) is negligible; kernel undefined")));
        }
        let g = fam.get(n + 1)?;
        let alpha = fam.alpha;
        let c = (fam.r + n as f64) / (t * from);
        let lo = (t - 1.0).max(0.0);
        let mid = 0.5 * (lo + t);
        let gw = t - mid;
        let beta = (alpha * (fam.r + n as f64 + 1.0)).min(1.0);
        let q = 1.0 / beta;
        let v0 = (lo / mid).powf(beta);
        let p = 1.0 / (1.0 - alpha);
        let half = KERNEL_CELLS / 2;
        let mut masses = Vec::with_capacity(KERNEL_CELLS);
        // left half in v ∈ (v0, 1), s = mid v^q
        let hv = (1.0 - v0) / half as f64;
        for i in 0..half {
            let v = v0 + (i as f64 + 0.5) * hv;
            let s = mid * v.powf(q);
            let ds = mid * q * v.powf(q - 1.0);
            masses.push(c * alpha * (t - s).powf(-alpha) * g.pdf(s) * ds * hv);
        }
        // right half in w ∈ (0, 1), t - s = gw w^p; Θ(gap) dgap = α gw^{1-α} p dw
        let hw = 1.0 / half as f64;
        let right: Vec<f64> = (0..half)
            .map(|i| {
                let w = (i as f64 + 0.5) * hw;
                let s = t - gw * w.powf(p);
                c * alpha * gw.powf(1.0 - alpha) * p * g.pdf(s) * hw
            })
            .collect();
        // right cells run from s = t downwards; store in increasing s
        masses.extend(right.into_iter().rev());
        let mut cdf = Vec::with_capacity(KERNEL_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for m in &masses {
            acc += m;
            cdf.push(acc);
        }
        let mass = acc;
        if !((mass - 1.0).abs() <= KERNEL_TOL) {
            return Err(PdError::Numeric(format!(
                "transition kernel out of t = {t} (step {n}) integrates to {mass}, outside 1 ± {KERNEL_TOL}"
            )));
        }
        for x in &mut cdf {
            *x /= mass;
        }
        Ok(Self { from: t, mass, cdf, left: (mid, q, v0, hv), right: (gw, p, hw) })
    }

    /// Maps a uniform `u ∈ [0, 1)` to the next state.
    pub fn invert(&self, u: f64) -> f64 {
        let k = (self.cdf.partition_point(|&c| c <= u).max(1) - 1).min(KERNEL_CELLS - 1);
        let (c0, c1) = (self.cdf[k], self.cdf[k + 1]);
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        let half = KERNEL_CELLS / 2;
        if k < half {
            let (mid, q, v0, hv) = self.left;
            let v = v0 + (k as f64 + frac) * hv;
            mid * v.powf(q)
        } else {
            let (gw, p, hw) = self.right;
            // cell k covers w from (KERNEL_CELLS - 1 - k) hw upwards, in decreasing s
            let w = (KERNEL_CELLS - k) as f64 * hw - frac * hw;
            self.from - gw * w.powf(p)
        }
    }

    /// Draws the next state, strictly inside the kernel support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lo = (self.from - 1.0).max(0.0);
        loop {
            let s = self.invert(rng.gen::<f64>());
            if s > lo && s < self.from {
                return s;
            }
        }
    }
}

/// Runs the chain of residual totals `T_0, …, T_n`. `T_0` is the total mass
/// of a `BN(r, Λ̃)` draw at threshold `eps`; each later state comes from the
/// tabulated kernel. `fam` must hold `g_r, …, g_{r+n}`.
pub fn markov_chain_sampler<R: Rng + ?Sized>(fam: &GrFamily, n: usize, eps: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return domain("the chain needs at least one step");
    }
    if fam.len() < n + 1 {
        return domain(format!("the chain needs g_r..g_(r+{n}), the family holds {} members", fam.len()));
    }
    let params = NBParams::new(fam.alpha, fam.r)?;
    let t0 = total_mass(&sample_nb(&params, eps, rng)?);
    let mut totals = Vec::with_capacity(n + 1);
    totals.push(t0);
    for k in 0..n {
        let table = KernelTable::new(fam, k, totals[k])?;
        totals.push(table.sample(rng));
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn explicit(points: Vec<f64>) -> PointMeasure {
        PointMeasure::new(points, 0.0, 0.0).unwrap()
    }

    #[test]
    fn permutation_and_first_pick() {
        let m = explicit(vec![0.6, 0.3, 0.1]);
        let mut rng = Stream::new(1).rng();
        let mut first = [0usize; 3];
        for _ in 0..20_000 {
            let d = size_biased_permutation(&m, 3, &mut rng).unwrap();
            let mut p = d.picks.clone();
            p.sort_by(f64::total_cmp);
            assert_eq!(p, vec![0.1, 0.3, 0.6]);
            first[[0.6, 0.3, 0.1].iter().position(|&x| x == d.picks[0]).unwrap()] += 1;
        }
        for (k, &p) in [0.6, 0.3, 0.1].iter().enumerate() {
            let f = first[k] as f64 / 20_000.0;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / 20_000.0f64).sqrt());
        }
        assert!(size_biased_permutation(&m, 4, &mut rng).is_err());
    }

    #[test]
    fn fraction_and_stick_examples() {
        let d = SizeBiasedDraw::from_picks(1.0, vec![0.5, 0.25]).unwrap();
        assert_eq!(residual_fractions(&d), vec![0.5, 0.5]);
        assert_eq!(stick_reconstruct(&[0.5, 0.5]).unwrap(), vec![0.5, 0.25]);
        assert!(stick_reconstruct(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn small_mass_is_pickable() {
        let mut m = PointMeasure::new(vec![0.5], 0.01, 0.5).unwrap();
        m.alpha = Some(0.5);
        let mut rng = Stream::new(2).rng();
        let small = (0..4000)
            .filter(|_| size_biased_permutation(&m, 1, &mut rng).unwrap().picks[0] < 0.01)
            .count();
        assert!((small as f64 / 4000.0 - 0.5).abs() < 0.04);
        // without the index the compensation is never picked
        m.alpha = None;
        for _ in 0..100 {
            let d = size_biased_permutation(&m, 1, &mut rng).unwrap();
            assert_eq!(d.picks[0], 0.5);
            assert_eq!(d.totals[1], 0.5);
        }
    }

    #[test]
    fn kernel_table_normalizes_and_stays_in_support() {
        let fam = GrFamily::new(0.5, 1.0, 2).unwrap();
        let mut rng = Stream::new(4).rng();
        for &t in &[0.05, 0.5, 1.0, 3.0, 7.0] {
            let k = KernelTable::new(&fam, 0, t).unwrap();
            assert!((k.mass - 1.0).abs() < 1e-4, "t={t}: {}", k.mass);
            for _ in 0..200 {
                let s = k.sample(&mut rng);
                assert!(s < t && s > (t - 1.0).max(0.0));
            }
        }
    }

    #[test]
    fn chain_is_decreasing_with_short_gaps() {
        let fam = GrFamily::new(0.5, 1.0, 3).unwrap();
        let mut rng = Stream::new(6).rng();
        for _ in 0..50 {
            let t = markov_chain_sampler(&fam, 2, 1e-3, &mut rng).unwrap();
            assert_eq!(t.len(), 3);
            assert!(t.windows(2).all(|w| w[1] < w[0] && w[0] - w[1] < 1.0));
        }
    }
}
