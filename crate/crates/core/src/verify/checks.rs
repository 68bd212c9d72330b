//! Sample generators and the individual identity checks.

use rand::Rng as _;
use serde::Serialize;

use super::report::{params, Method, Params, VerificationReport};
use crate::densities::{
    beta_density, joint_t_density, joint_t_marginal, joint_t_mass, joint_u_t_mass, k_n, kn_integral_check, sb_joint_mass,
    transition_density, transition_mass, GrFamily, PowerCdf,
};
use crate::error::{PdError, Result};
use crate::levy::{normalized_exponent_real, sample_ordered_jumps_to_level, StableParams};
use crate::nbproc::{palm_augment, ratios_from_jumps, sample_nb, total_mass, NBParams};
use crate::quad::tanh_sinh;
use crate::rng::{try_par_draws, Stream};
use crate::sizebias::{markov_chain_sampler, size_biased_permutation, KernelTable};
use crate::stats::{ks_two_sample, linspace, Histogram, McEstimate};

/// Intervals for the mean-measure check.
pub const MEASURE_INTERVALS: [(f64, f64); 5] = [(1e-3, 1e-2), (1e-2, 0.05), (0.05, 0.2), (0.2, 0.5), (0.5, 1.0)];
/// Level of the indicator in the Laplace-functional check.
pub const INDICATOR_LEVEL: f64 = 0.25;
/// Bin edges for the first size-biased pick.
pub const PICK_EDGES: [f64; 10] = [0.0, 1e-3, 1e-2, 0.03, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0];
/// States at which the transition kernel is checked.
pub const KERNEL_STATES: [f64; 3] = [0.5, 1.0, 3.0];

/// Default enumeration threshold for the Monte-Carlo checks at index `alpha`:
/// `min(1e-4, 10^{-3/α})`, so the chance that a draw enumerates no point of
/// `BN(r, Λ̃)` is at most `10^{-3r}`.
pub fn default_eps(alpha: f64) -> f64 {
    1e-4f64.min(10f64.powf(-3.0 / alpha))
}

/// Index used for negative controls: `α + 0.2`, or `α - 0.2` near the top.
pub fn control_alpha(alpha: f64) -> f64 {
    if alpha + 0.2 < 0.8 {
        alpha + 0.2
    } else {
        alpha - 0.2
    }
}

fn cell(alpha: f64, r: usize) -> Params {
    params([("alpha", alpha.into()), ("r", r.into())])
}

/// Per-draw summary of the jump-ratio pathway.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioDraw {
    /// `^{(r)}T`.
    pub t: f64,
    /// `Ṽ_1 = J̃_1 / T`.
    pub v1: f64,
    /// `T_1 = T - J̃_1`.
    pub t1: f64,
}

/// Draws `^{(r)}T` and a first size-biased pick from ratios of stable jumps.
pub fn ratio_draws(alpha: f64, r: usize, eps: f64, n: usize, stream: Stream) -> Result<Vec<RatioDraw>> {
    let p = StableParams::new(alpha, 1.0)?;
    try_par_draws(stream, n, |rng| {
        let js = sample_ordered_jumps_to_level(&p, 1.0, r, eps, r + 1, rng)?;
        let m = ratios_from_jumps(&js, r)?;
        let d = size_biased_permutation(&m, 1, rng)?;
        Ok(RatioDraw { t: d.totals[0], v1: d.picks[0] / d.totals[0], t1: d.totals[1] })
    })
}

/// Per-draw summary of the Gamma-mixed Poisson pathway.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NbDraw {
    pub t: f64,
    /// First size-biased pick `J̃_1`.
    pub pick: f64,
    pub counts: [u32; 5],
    /// Number of points above [`INDICATOR_LEVEL`].
    pub above: u32,
}

/// Draws `BN(r, Λ̃)` and summarizes each draw.
pub fn nb_draws(alpha: f64, r: usize, eps: f64, n: usize, stream: Stream) -> Result<Vec<NbDraw>> {
    let p = NBParams::new(alpha, r as f64)?;
    try_par_draws(stream, n, |rng| {
        let m = sample_nb(&p, eps, rng)?;
        let t = total_mass(&m);
        let mut counts = [0u32; 5];
        for (c, &(a, b)) in counts.iter_mut().zip(&MEASURE_INTERVALS) {
            *c = m.count_in(a, b) as u32;
        }
        let above = m.points.iter().filter(|&&x| x > INDICATOR_LEVEL).count() as u32;
        let pick = size_biased_permutation(&m, 1, rng)?.picks[0];
        Ok(NbDraw { t, pick, counts, above })
    })
}

/// `rα/(1-α) · e^{-T(ξ + δ_x)}` with `x ~ Beta(1-α, 1)` and `ξ ~ BN(r+1, Λ̃)`;
/// its mean is the Palm side of the Mecke identity for `φ(x, M) = x e^{-T(M)}`.
pub fn palm_draws(alpha: f64, r: usize, eps: f64, n: usize, stream: Stream) -> Result<Vec<f64>> {
    let p = NBParams::new(alpha, r as f64)?;
    let scale = r as f64 * alpha / (1.0 - alpha);
    try_par_draws(stream, n, |rng| {
        let x = (1.0 - rng.gen::<f64>()).powf(1.0 / (1.0 - alpha));
        let x = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        let m = palm_augment(&p, x, eps, rng)?;
        Ok(scale * (-total_mass(&m)).exp())
    })
}

/// `(T_0, T_1)` from one step of the chain of residual totals.
pub fn chain_draws(fam: &GrFamily, eps: f64, n: usize, stream: Stream) -> Result<Vec<(f64, f64)>> {
    try_par_draws(stream, n, |rng| {
        let t = markov_chain_sampler(fam, 1, eps, rng)?;
        Ok((t[0], t[1]))
    })
}

/// `(1 + ψ̃(λ))^{-r}`.
pub fn ratio_laplace(alpha: f64, r: f64, lambda: f64) -> Result<f64> {
    Ok((1.0 + normalized_exponent_real(alpha, lambda)?).powf(-r))
}

/// Laplace-transform identity for the ratio total, one report per `λ`.
pub fn laplace_reports(alpha: f64, expect_alpha: f64, r: usize, lambdas: &[f64], draws: &[RatioDraw], family: usize) -> Vec<VerificationReport> {
    lambdas
        .iter()
        .map(|&l| {
            let mut p = cell(alpha, r);
            p.insert("lambda".into(), l.into());
            let res = (|| -> Result<VerificationReport> {
                let expected = ratio_laplace(expect_alpha, r as f64, l)?;
                if l == 0.0 {
                    return Ok(VerificationReport::monte_carlo_diff("laplace_ratio", p.clone(), 1.0, expected, 0.0, family));
                }
                let xs: Vec<f64> = draws.iter().map(|d| (-l * d.t).exp()).collect();
                Ok(VerificationReport::monte_carlo("laplace_ratio", p.clone(), McEstimate::from_samples(&xs), expected, family))
            })();
            res.unwrap_or_else(|e| VerificationReport::failed("laplace_ratio", p, Method::MonteCarlo, e))
        })
        .collect()
}

/// MC check of `E e^{-λ ^{(r)}S_1/ΔS_1^{(r)}} = (1 + ψ̃(λ))^{-r}` on the
/// jump-ratio pathway.
pub fn verify_laplace_ratio(alpha: f64, r: usize, lambdas: &[f64], n_samples: usize, stream: Stream) -> Result<Vec<VerificationReport>> {
    let draws = ratio_draws(alpha, r, default_eps(alpha), n_samples, stream.child("ratio"))?;
    Ok(laplace_reports(alpha, alpha, r, lambdas, &draws, lambdas.len()))
}

/// KS between two samples of total mass.
pub fn equivalence_report(name: &str, p: Params, a: &[f64], b: &[f64]) -> VerificationReport {
    match ks_two_sample(a, b) {
        Ok(d) => VerificationReport::ks(name, p, d, a.len(), b.len()),
        Err(e) => VerificationReport::failed(name, p, Method::KolmogorovSmirnov, e),
    }
}

/// Two-sample KS between the total mass of the jump-ratio measure at
/// `alpha_ratio` and of `BN(r, Λ̃)` at `alpha_nb`, on independent streams.
pub fn verify_equivalence_between(alpha_ratio: f64, alpha_nb: f64, r: usize, n_samples: usize, stream: Stream) -> Result<VerificationReport> {
    let a: Vec<f64> = ratio_draws(alpha_ratio, r, default_eps(alpha_ratio), n_samples, stream.child("ratio"))?
        .iter()
        .map(|d| d.t)
        .collect();
    let b: Vec<f64> = nb_draws(alpha_nb, r, default_eps(alpha_nb), n_samples, stream.child("nb"))?
        .iter()
        .map(|d| d.t)
        .collect();
    let mut p = cell(alpha_ratio, r);
    if alpha_nb != alpha_ratio {
        p.insert("alpha_nb".into(), alpha_nb.into());
    }
    Ok(equivalence_report("nb_equivalence", p, &a, &b))
}

/// Jump-ratio versus Gamma-mixed Poisson construction of `BN(r, Λ̃)`.
pub fn verify_equivalence(alpha: f64, r: usize, n_samples: usize, stream: Stream) -> Result<VerificationReport> {
    verify_equivalence_between(alpha, alpha, r, n_samples, stream)
}

/// Mean counts on [`MEASURE_INTERVALS`] against `r Λ̃(A)`.
pub fn mean_measure_reports(alpha: f64, expect_alpha: f64, r: usize, eps: f64, draws: &[NbDraw], family: usize) -> Vec<VerificationReport> {
    let p = NBParams { alpha: expect_alpha, r: r as f64 };
    MEASURE_INTERVALS
        .iter()
        .enumerate()
        .filter(|(_, &(a, _))| a >= eps)
        .map(|(k, &(a, b))| {
            let mut ps = cell(alpha, r);
            ps.insert("a".into(), a.into());
            ps.insert("b".into(), b.into());
            let xs: Vec<f64> = draws.iter().map(|d| d.counts[k] as f64).collect();
            let expected = r as f64 * p.intensity(a, b);
            VerificationReport::monte_carlo("mean_measure", ps, McEstimate::from_samples(&xs), expected, family)
        })
        .collect()
}

/// Laplace functional of `BN(r, Λ̃)` at `f(u) = u` and `f = 1{u > 1/4}`.
pub fn laplace_functional_reports(alpha: f64, expect_alpha: f64, r: usize, draws: &[NbDraw], family: usize) -> Vec<VerificationReport> {
    let rf = r as f64;
    let mut out = Vec::new();
    let mut p = cell(alpha, r);
    p.insert("f".into(), "identity".into());
    // f(u) = u has slope 1 at 0, so the compensated functional is e^{-T}
    let xs: Vec<f64> = draws.iter().map(|d| (-d.t).exp()).collect();
    out.push(match ratio_laplace(expect_alpha, rf, 1.0) {
        Ok(e) => VerificationReport::monte_carlo("laplace_functional", p, McEstimate::from_samples(&xs), e, family),
        Err(e) => VerificationReport::failed("laplace_functional", p, Method::MonteCarlo, e),
    });
    let mut p = cell(alpha, r);
    p.insert("f".into(), "indicator".into());
    p.insert("a".into(), INDICATOR_LEVEL.into());
    let xs: Vec<f64> = draws.iter().map(|d| (-(d.above as f64)).exp()).collect();
    let lam = INDICATOR_LEVEL.powf(-expect_alpha) - 1.0;
    let expected = (1.0 + (1.0 - (-1.0f64).exp()) * lam).powf(-rf);
    out.push(VerificationReport::monte_carlo("laplace_functional", p, McEstimate::from_samples(&xs), expected, family));
    out
}

/// Both sides of the Mecke identity for `φ(x, M) = x e^{-T(M)}`.
pub fn palm_report(alpha: f64, r: usize, draws: &[NbDraw], palm: &[f64], family: usize) -> VerificationReport {
    let lhs = McEstimate::from_samples(&draws.iter().map(|d| d.t * (-d.t).exp()).collect::<Vec<_>>());
    let rhs = McEstimate::from_samples(palm);
    let se = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
    VerificationReport::monte_carlo_diff("palm_mecke", cell(alpha, r), lhs.estimate, rhs.estimate, se, family)
}

/// Bin probabilities of the first size-biased pick of `BN(r, Λ̃)`, whose
/// density is `r α x^{-α} ∫ g_{r+1}(t) / (t + x) dt`.
pub fn first_pick_probs(fam: &GrFamily, edges: &[f64]) -> Result<Vec<f64>> {
    let g = fam.get(1)?;
    let (alpha, r) = (fam.alpha, fam.r);
    edges
        .windows(2)
        .map(|w| {
            let v = tanh_sinh(
                |x, _, _| {
                    // mass of the pick law below 1e-100 is of order (1e-100)^{αr}
                    let x = x.max(1e-100);
                    let inner = g.integrate(|t| 1.0 / (t + x)).unwrap_or(f64::NAN);
                    r * alpha * x.powf(-alpha) * inner
                },
                w[0],
                w[1],
                1e-9,
            )?;
            if !v.is_finite() {
                return Err(PdError::Numeric(format!("first-pick probability on ({}, {}) did not converge", w[0], w[1])));
            }
            Ok(v)
        })
        .collect()
}

/// Histogram check of the first size-biased pick.
pub fn first_pick_report(alpha: f64, r: usize, fam: &GrFamily, picks: &[f64], family: usize) -> VerificationReport {
    let p = cell(alpha, r);
    let res = (|| -> Result<VerificationReport> {
        let probs = first_pick_probs(fam, &PICK_EDGES)?;
        let h = Histogram::new(PICK_EDGES.to_vec(), picks)?;
        let mut rep = VerificationReport::histogram("first_pick", p.clone(), &h.counts, &probs, picks.len(), family);
        let outside = picks.iter().filter(|&&x| !(x > 0.0 && x < 1.0)).count();
        rep.details.insert("outside_unit_interval".into(), outside as f64);
        rep.details.insert("probability_sum".into(), probs.iter().sum());
        rep.pass &= outside == 0;
        Ok(rep)
    })();
    res.unwrap_or_else(|e| VerificationReport::failed("first_pick", p, Method::Histogram, e))
}

/// Histogram of the first size-biased pick against its density.
pub fn verify_first_pick(alpha: f64, r: usize, n_samples: usize, stream: Stream) -> Result<VerificationReport> {
    let fam = GrFamily::new(alpha, r as f64, 2)?;
    let draws = nb_draws(alpha, r, default_eps(alpha), n_samples, stream.child("nb"))?;
    let picks: Vec<f64> = draws.iter().map(|d| d.pick).collect();
    Ok(first_pick_report(alpha, r, &fam, &picks, 1))
}

/// Quadrature masses of the `n = 1` joint laws of totals, of
/// `(Ṽ_1, T)` and of `(T_1, U_1)`.
pub fn verify_appendix(alpha: f64, r: usize) -> Result<Vec<VerificationReport>> {
    let fam = GrFamily::new(alpha, r as f64, 2)?;
    Ok(appendix_reports(alpha, r, &fam))
}

pub fn appendix_reports(alpha: f64, r: usize, fam: &GrFamily) -> Vec<VerificationReport> {
    type Moment = fn(&GrFamily) -> Result<f64>;
    let items: [(&str, Moment); 3] =
        [("appendix_joint_t", joint_t_mass), ("appendix_sb_joint", sb_joint_mass), ("appendix_joint_u_t", joint_u_t_mass)];
    items
        .iter()
        .map(|(name, f)| match f(fam) {
            Ok(v) => VerificationReport::quadrature(name, cell(alpha, r), v, 1.0, 1e-3),
            Err(e) => VerificationReport::failed(name, cell(alpha, r), Method::Quadrature, e),
        })
        .collect()
}

/// Certification of `g_r`: normalization, Laplace round trip, mean, variance.
pub fn density_reports(alpha: f64, r: usize, fam: &GrFamily) -> Vec<VerificationReport> {
    let g = match fam.get(0) {
        Ok(g) => g,
        Err(e) => return vec![VerificationReport::failed("g_normalization", cell(alpha, r), Method::Quadrature, e)],
    };
    let c = g.certification();
    let rf = r as f64;
    let mean = rf * alpha / (1.0 - alpha);
    let var = rf * (alpha / (2.0 - alpha) + (alpha / (1.0 - alpha)).powi(2));
    let mut out = vec![
        VerificationReport::quadrature("g_normalization", cell(alpha, r), c.normalization, 1.0, 1e-4),
        VerificationReport::quadrature("g_mean", cell(alpha, r), c.mean / mean - 1.0, 0.0, 1e-3),
        VerificationReport::quadrature("g_variance", cell(alpha, r), c.variance / var - 1.0, 0.0, 1e-3),
    ];
    for l in &c.laplace {
        let mut p = cell(alpha, r);
        p.insert("lambda".into(), l.lambda.into());
        out.push(VerificationReport::quadrature("g_laplace", p, l.value / l.expected - 1.0, 0.0, 1e-4));
    }
    out
}

/// Bin edges for the histogram of `^{(r)}T`.
pub fn total_edges(alpha: f64, r: usize) -> Vec<f64> {
    let rf = r as f64;
    let mean = rf * alpha / (1.0 - alpha);
    let sd = (rf * (alpha / (2.0 - alpha) + (alpha / (1.0 - alpha)).powi(2))).sqrt();
    linspace(0.0, mean + 6.0 * sd, 31)
}

/// MC histogram of total masses against bin integrals of `g_r`.
pub fn g_histogram_report(alpha: f64, r: usize, fam: &GrFamily, totals: &[f64], family: usize) -> VerificationReport {
    let p = cell(alpha, r);
    let res = (|| -> Result<VerificationReport> {
        let edges = total_edges(alpha, r);
        let g = fam.get(0)?;
        let probs: Vec<f64> = edges.windows(2).map(|w| g.integrate_between(|_| 1.0, w[0], w[1])).collect::<Result<_>>()?;
        let h = Histogram::new(edges, totals)?;
        Ok(VerificationReport::histogram("g_histogram", p.clone(), &h.counts, &probs, totals.len(), family))
    })();
    res.unwrap_or_else(|e| VerificationReport::failed("g_histogram", p, Method::Histogram, e))
}

/// Largest relative gap between the two closed forms of `K_n` over
/// `α ∈ {0.1, …, 0.9}`, `n ≤ 10`.
pub fn kn_dual_report() -> VerificationReport {
    let mut worst: f64 = 0.0;
    for i in 1..10 {
        let a = i as f64 / 10.0;
        for n in 1..=10 {
            let d = crate::densities::ln_k_n(a, n) - crate::densities::ln_k_n_product(a, n);
            worst = worst.max(d.exp_m1().abs());
        }
    }
    VerificationReport::quadrature("kn_dual_forms", params([("alpha_grid", "0.1..0.9".into()), ("n_max", 10usize.into())]), worst, 0.0, 1e-10)
}

pub fn kn_integral_report(alpha: f64, r: usize, n: usize) -> VerificationReport {
    let mut p = cell(alpha, r);
    p.insert("n".into(), n.into());
    match kn_integral_check(alpha, r as f64, n) {
        Ok(v) => VerificationReport::quadrature("kn_integral", p, v, 0.0, 1e-6),
        Err(e) => VerificationReport::failed("kn_integral", p, Method::Quadrature, e),
    }
}

/// MC of the `K_n` representation through independent Betas.
pub fn depen_report(alpha: f64, expect_alpha: f64, r: usize, n: usize, est: McEstimate, family: usize) -> VerificationReport {
    let mut p = cell(alpha, r);
    p.insert("n".into(), n.into());
    match k_n(expect_alpha, n) {
        Ok(k) => VerificationReport::monte_carlo("depen", p, est, k, family),
        Err(e) => VerificationReport::failed("depen", p, Method::MonteCarlo, e),
    }
}

/// Kernel normalization, marginal consistency and factorization.
pub fn kernel_reports(alpha: f64, r: usize, fam: &GrFamily, stream: Stream) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for &t0 in &KERNEL_STATES {
        let mut p = cell(alpha, r);
        p.insert("t0".into(), t0.into());
        out.push(match transition_mass(fam, 0, t0, 0.0, t0) {
            Ok(v) => VerificationReport::quadrature("kernel_normalization", p.clone(), v, 1.0, 1e-3),
            Err(e) => VerificationReport::failed("kernel_normalization", p.clone(), Method::Quadrature, e),
        });
        out.push(match KernelTable::new(fam, 0, t0) {
            Ok(k) => VerificationReport::quadrature("kernel_table_mass", p.clone(), k.mass, 1.0, 1e-3),
            Err(e) => VerificationReport::failed("kernel_table_mass", p.clone(), Method::Quadrature, e),
        });
        let marg = fam.get(0).and_then(|g| Ok((joint_t_marginal(fam, t0)?, g.pdf(t0))));
        out.push(match marg {
            Ok((m, g)) => VerificationReport::quadrature("kernel_marginal", p, m / g - 1.0, 0.0, 1e-3),
            Err(e) => VerificationReport::failed("kernel_marginal", p, Method::Quadrature, e),
        });
    }
    let p = cell(alpha, r);
    let res = (|| -> Result<f64> {
        let mut rng = stream.rng();
        let g = fam.get(0)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let t0 = 0.3 + 2.7 * rng.gen::<f64>();
            let t1 = t0 - t0.min(1.0) * (0.05 + 0.9 * rng.gen::<f64>());
            let t2 = t1 - t1.min(1.0) * (0.05 + 0.9 * rng.gen::<f64>());
            let joint = joint_t_density(fam, &[t0, t1, t2])?.value;
            let chain = g.pdf(t0) * transition_density(fam, 0, t0, t1)?.value * transition_density(fam, 1, t1, t2)?.value;
            if joint > 0.0 {
                worst = worst.max((joint - chain).abs() / joint);
            }
        }
        Ok(worst)
    })();
    out.push(match res {
        Ok(v) => VerificationReport::quadrature("kernel_factorization", p, v, 0.0, 1e-9),
        Err(e) => VerificationReport::failed("kernel_factorization", p, Method::Quadrature, e),
    });
    out
}

/// Grid for the `(T_1, U_1)` histogram.
pub fn joint_u_t_edges(alpha: f64, r: usize) -> (Vec<f64>, Vec<f64>) {
    let m = r as f64 * alpha / (1.0 - alpha);
    let t = [0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.5].iter().map(|x| x * m).chain([f64::INFINITY]).collect();
    let u = vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    (t, u)
}

/// Cell probabilities of `(T_1, U_1)`, from
/// `h(t, u) = r/K_1 · g_{r+1}(t) t^{-α} Beta(α, 1-α)(u) 1{t < u/(1-u)}`.
pub fn joint_u_t_probs(fam: &GrFamily, t_edges: &[f64], u_edges: &[f64]) -> Result<Vec<f64>> {
    let alpha = fam.alpha;
    let cdf = PowerCdf::new(fam.get(1)?, -alpha)?;
    let scale = fam.r / k_n(alpha, 1)?;
    let mut out = Vec::new();
    for tw in t_edges.windows(2) {
        for uw in u_edges.windows(2) {
            let v = tanh_sinh(
                |u, du, dc| {
                    let d = if uw[1] == 1.0 && dc < 0.5 { (1.0 - dc) / dc } else { u / (1.0 - u) };
                    let hi = cdf.eval(tw[1].min(d)).unwrap_or(f64::NAN);
                    let lo = cdf.eval(tw[0].min(d)).unwrap_or(f64::NAN);
                    let _ = du;
                    beta_density(alpha, 1.0 - alpha, u).unwrap_or(0.0) * (hi - lo).max(0.0)
                },
                uw[0],
                uw[1],
                1e-10,
            )?;
            if !v.is_finite() {
                return Err(PdError::Numeric("joint (T_1, U_1) cell probability did not converge".into()));
            }
            out.push(scale * v);
        }
    }
    Ok(out)
}

/// Histogram of `(T_1, U_1)` from direct draws against the joint density.
pub fn joint_u_t_report(alpha: f64, r: usize, fam: &GrFamily, draws: &[RatioDraw], family: usize) -> VerificationReport {
    let p = cell(alpha, r);
    let res = (|| -> Result<VerificationReport> {
        let (te, ue) = joint_u_t_edges(fam.alpha, r);
        let probs = joint_u_t_probs(fam, &te, &ue)?;
        let nu = ue.len() - 1;
        let mut counts = vec![0u64; probs.len()];
        for d in draws {
            let u = d.t1 / d.t;
            let i = te.partition_point(|&e| e <= d.t1).saturating_sub(1).min(te.len() - 2);
            let j = ue.partition_point(|&e| e <= u).saturating_sub(1).min(nu - 1);
            counts[i * nu + j] += 1;
        }
        let mut rep = VerificationReport::histogram("joint_u_t_histogram", p.clone(), &counts, &probs, draws.len(), family);
        rep.details.insert("probability_sum".into(), probs.iter().sum());
        Ok(rep)
    })();
    res.unwrap_or_else(|e| VerificationReport::failed("joint_u_t_histogram", p, Method::Histogram, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_and_control_rules() {
        assert_eq!(default_eps(0.7), 10f64.powf(-3.0 / 0.7));
        assert_eq!(default_eps(0.9), 1e-4);
        assert!((control_alpha(0.3) - 0.5).abs() < 1e-15);
        assert!((control_alpha(0.7) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn first_pick_probabilities_sum_to_one() {
        for (a, r) in [(0.5, 1.0), (0.3, 1.0), (0.3, 2.0), (0.7, 5.0)] {
            let fam = GrFamily::new(a, r, 2).unwrap();
            let p = first_pick_probs(&fam, &PICK_EDGES).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-4, "{a} {r} {p:?}");
        }
    }

    #[test]
    fn joint_u_t_probabilities_sum_to_one() {
        let fam = GrFamily::new(0.5, 1.0, 2).unwrap();
        let (t, u) = joint_u_t_edges(0.5, 1);
        let p = joint_u_t_probs(&fam, &t, &u).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-4, "{}", p.iter().sum::<f64>());
    }

    #[test]
    fn laplace_at_zero_is_exact() {
        let d = [RatioDraw { t: 1.0, v1: 0.5, t1: 0.5 }];
        let r = laplace_reports(0.5, 0.5, 1, &[0.0], &d, 1);
        assert_eq!((r[0].statistic, r[0].expected, r[0].pass), (1.0, 1.0, true));
    }
}
