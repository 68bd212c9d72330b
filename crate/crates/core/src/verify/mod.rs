//! Verification harness: Monte-Carlo, histogram, Kolmogorov-Smirnov and
//! quadrature checks of the distributional identities behind the samplers
//! and densities, with negative controls at a perturbed index.

mod checks;
mod report;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

pub use checks::*;
pub use report::*;

use crate::densities::{depen_check, GrFamily};
use crate::error::{PdError, Result};
use crate::rng::Stream;

/// Groups of checks that can be run separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Laplace,
    Equivalence,
    MeanMeasure,
    Palm,
    LaplaceFunctional,
    FirstPick,
    Appendix,
    Density,
    Kn,
    Kernel,
    Stick,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Laplace,
        Suite::Equivalence,
        Suite::MeanMeasure,
        Suite::Palm,
        Suite::LaplaceFunctional,
        Suite::FirstPick,
        Suite::Appendix,
        Suite::Density,
        Suite::Kn,
        Suite::Kernel,
        Suite::Stick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Laplace => "laplace",
            Suite::Equivalence => "equivalence",
            Suite::MeanMeasure => "mean-measure",
            Suite::Palm => "palm",
            Suite::LaplaceFunctional => "laplace-functional",
            Suite::FirstPick => "first-pick",
            Suite::Appendix => "appendix",
            Suite::Density => "density",
            Suite::Kn => "kn",
            Suite::Kernel => "kernel",
            Suite::Stick => "stick",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = PdError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| PdError::Domain(format!("unknown suite {s:?}")))
    }
}

/// Grid, budget and seed of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte-Carlo draws per cell.
    pub budget: usize,
    /// Enumeration threshold; `None` uses [`default_eps`] per index.
    pub eps: Option<f64>,
    pub alphas: Vec<f64>,
    pub rs: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Shapes for the stick-breaking and chain comparisons.
    pub stick_rs: Vec<usize>,
    /// Shapes for the Mecke identity.
    pub palm_rs: Vec<usize>,
    pub suites: Vec<Suite>,
    /// Emit negative controls at [`control_alpha`].
    pub controls: bool,
    /// Fill `runtime_ms`; otherwise it is 0 so that reports are reproducible.
    pub timing: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 100_000,
            eps: None,
            alphas: vec![0.3, 0.5, 0.7],
            rs: vec![1, 2, 5],
            lambdas: vec![0.5, 1.0, 2.0],
            stick_rs: vec![1],
            palm_rs: vec![1, 2],
            suites: Suite::ALL.to_vec(),
            controls: true,
            timing: false,
        }
    }
}

impl VerifyConfig {
    fn eps_for(&self, alpha: f64) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(alpha))
    }

    fn has(&self, s: Suite) -> bool {
        self.suites.contains(&s)
    }
}

type Key = (u64, usize);
type Cached<T> = std::result::Result<Arc<Vec<T>>, PdError>;

fn key(alpha: f64, r: usize) -> Key {
    (alpha.to_bits(), r)
}

/// Lazily generated draws shared between checks and controls.
struct Draws<'a> {
    cfg: &'a VerifyConfig,
    root: Stream,
    ratio: HashMap<Key, Cached<RatioDraw>>,
    nb: HashMap<Key, Cached<NbDraw>>,
    palm: HashMap<Key, Cached<f64>>,
    chain: HashMap<Key, Cached<(f64, f64)>>,
    fams: HashMap<Key, std::result::Result<Arc<GrFamily>, PdError>>,
}

impl<'a> Draws<'a> {
    fn new(cfg: &'a VerifyConfig) -> Self {
        Self {
            cfg,
            root: Stream::new(cfg.seed),
            ratio: HashMap::new(),
            nb: HashMap::new(),
            palm: HashMap::new(),
            chain: HashMap::new(),
            fams: HashMap::new(),
        }
    }

    fn stream(&self, kind: &str, alpha: f64, r: usize) -> Stream {
        self.root.child(&format!("{kind}/{alpha}/{r}"))
    }

    fn family(&mut self, alpha: f64, r: usize) -> Result<Arc<GrFamily>> {
        self.fams
            .entry(key(alpha, r))
            .or_insert_with(|| GrFamily::new(alpha, r as f64, 3).map(Arc::new))
            .clone()
    }

    fn ratio(&mut self, alpha: f64, r: usize) -> Cached<RatioDraw> {
        let (eps, n, s) = (self.cfg.eps_for(alpha), self.cfg.budget, self.stream("ratio", alpha, r));
        self.ratio.entry(key(alpha, r)).or_insert_with(|| ratio_draws(alpha, r, eps, n, s).map(Arc::new)).clone()
    }

    fn nb(&mut self, alpha: f64, r: usize) -> Cached<NbDraw> {
        let (eps, n, s) = (self.cfg.eps_for(alpha), self.cfg.budget, self.stream("nb", alpha, r));
        self.nb.entry(key(alpha, r)).or_insert_with(|| nb_draws(alpha, r, eps, n, s).map(Arc::new)).clone()
    }

    fn palm(&mut self, alpha: f64, r: usize) -> Cached<f64> {
        let (eps, n, s) = (self.cfg.eps_for(alpha), self.cfg.budget, self.stream("palm", alpha, r));
        self.palm.entry(key(alpha, r)).or_insert_with(|| palm_draws(alpha, r, eps, n, s).map(Arc::new)).clone()
    }

    fn chain(&mut self, alpha: f64, r: usize) -> Cached<(f64, f64)> {
        if let Some(c) = self.chain.get(&key(alpha, r)) {
            return c.clone();
        }
        let (eps, n, s) = (self.cfg.eps_for(alpha), self.cfg.budget, self.stream("chain", alpha, r));
        let c = self.family(alpha, r).and_then(|f| chain_draws(&f, eps, n, s)).map(Arc::new);
        self.chain.insert(key(alpha, r), c.clone());
        c
    }
}

fn cell(alpha: f64, r: usize) -> Params {
    params([("alpha", alpha.into()), ("r", r.into())])
}

/// Relabels reports whose reference side was evaluated at `reference_alpha`
/// as controls.
fn as_controls(reports: Vec<VerificationReport>, reference_alpha: f64) -> Vec<VerificationReport> {
    reports
        .into_iter()
        .map(|mut r| {
            r.params.insert("alpha_reference".into(), reference_alpha.into());
            r.control()
        })
        .collect()
}

fn fail_all(names: &[&str], p: Params, method: Method, e: &PdError) -> Vec<VerificationReport> {
    names.iter().map(|n| VerificationReport::failed(n, p.clone(), method, e)).collect()
}

struct Runner<'a> {
    cfg: &'a VerifyConfig,
    draws: Draws<'a>,
    out: Vec<VerificationReport>,
}

impl<'a> Runner<'a> {
    fn push(&mut self, started: Instant, reports: Vec<VerificationReport>) {
        let ms = if self.cfg.timing { started.elapsed().as_millis() as u64 } else { 0 };
        self.out.extend(reports.into_iter().map(|mut r| {
            r.runtime_ms = ms;
            r
        }));
    }

    /// Runs `f(sample_alpha, reference_alpha)` for the cell and, when enabled,
    /// for its control, where the closed form or the second pathway is taken
    /// at [`control_alpha`].
    fn with_control<F>(&mut self, alpha: f64, mut f: F)
    where
        F: FnMut(&mut Draws<'a>, f64, f64) -> Vec<VerificationReport>,
    {
        let t = Instant::now();
        let reps = f(&mut self.draws, alpha, alpha);
        self.push(t, reps);
        if self.cfg.controls {
            let t = Instant::now();
            let a2 = control_alpha(alpha);
            let reps = as_controls(f(&mut self.draws, alpha, a2), a2);
            self.push(t, reps);
        }
    }

    fn laplace(&mut self, alpha: f64, r: usize) {
        let lambdas = self.cfg.lambdas.clone();
        self.with_control(alpha, |d, sa, ea| match d.ratio(sa, r) {
            Ok(x) => laplace_reports(alpha, ea, r, &lambdas, &x, lambdas.len()),
            Err(e) => fail_all(&["laplace_ratio"], cell(alpha, r), Method::MonteCarlo, &e),
        });
    }

    fn equivalence(&mut self, alpha: f64, r: usize) {
        self.with_control(alpha, |d, sa, ea| {
            let p = cell(alpha, r);
            match (d.ratio(ea, r), d.nb(sa, r)) {
                (Ok(a), Ok(b)) => {
                    let ta: Vec<f64> = a.iter().map(|x| x.t).collect();
                    let tb: Vec<f64> = b.iter().map(|x| x.t).collect();
                    vec![equivalence_report("nb_equivalence", p, &ta, &tb)]
                }
                (Err(e), _) | (_, Err(e)) => fail_all(&["nb_equivalence"], p, Method::KolmogorovSmirnov, &e),
            }
        });
    }

    fn nb_based(&mut self, alpha: f64, r: usize, suite: Suite) {
        let cfg = self.cfg;
        self.with_control(alpha, |d, sa, ea| {
            let draws = match d.nb(sa, r) {
                Ok(x) => x,
                Err(e) => return fail_all(&[nb_check_name(suite)], cell(alpha, r), Method::MonteCarlo, &e),
            };
            match suite {
                Suite::MeanMeasure => {
                    let eps = cfg.eps_for(sa).max(cfg.eps_for(ea));
                    let fam = MEASURE_INTERVALS.iter().filter(|(a, _)| *a >= eps).count();
                    mean_measure_reports(alpha, ea, r, eps, &draws, fam)
                }
                Suite::LaplaceFunctional => laplace_functional_reports(alpha, ea, r, &draws, 2),
                Suite::FirstPick => match d.family(ea, r) {
                    Ok(fam) => {
                        let picks: Vec<f64> = draws.iter().map(|x| x.pick).collect();
                        vec![first_pick_report(alpha, r, &fam, &picks, 1)]
                    }
                    Err(e) => fail_all(&["first_pick"], cell(alpha, r), Method::Histogram, &e),
                },
                Suite::Density => match d.family(ea, r) {
                    Ok(fam) => {
                        let t: Vec<f64> = draws.iter().map(|x| x.t).collect();
                        vec![g_histogram_report(alpha, r, &fam, &t, 1)]
                    }
                    Err(e) => fail_all(&["g_histogram"], cell(alpha, r), Method::Histogram, &e),
                },
                _ => unreachable!("not a BN-based suite"),
            }
        });
    }

    fn palm(&mut self, alpha: f64, r: usize) {
        self.with_control(alpha, |d, sa, ea| match (d.nb(ea, r), d.palm(sa, r)) {
            (Ok(lhs), Ok(rhs)) => vec![palm_report(alpha, r, &lhs, &rhs, 1)],
            (Err(e), _) | (_, Err(e)) => fail_all(&["palm_mecke"], cell(alpha, r), Method::MonteCarlo, &e),
        });
    }

    fn deterministic(&mut self, alpha: f64, r: usize, suite: Suite) {
        let t = Instant::now();
        let fam = self.draws.family(alpha, r);
        let reps = match (suite, fam) {
            (Suite::Appendix, Ok(f)) => appendix_reports(alpha, r, &f),
            (Suite::Density, Ok(f)) => density_reports(alpha, r, &f),
            (Suite::Kernel, Ok(f)) => kernel_reports(alpha, r, &f, self.draws.stream("kernel", alpha, r)),
            (Suite::Kn, _) => (1..=3).map(|n| kn_integral_report(alpha, r, n)).collect(),
            (_, Err(e)) => fail_all(&[&format!("{suite}")], cell(alpha, r), Method::Quadrature, &e),
            _ => unreachable!("not a deterministic suite"),
        };
        self.push(t, reps);
    }

    fn depen(&mut self, alpha: f64, r: usize) {
        // one draw count per (r, n) pair with n = r, n ≤ 2
        if r > 2 {
            return;
        }
        let budget = self.cfg.budget;
        self.with_control(alpha, |d, sa, ea| {
            let s = d.stream("depen", sa, r);
            match d.family(sa, r).and_then(|f| depen_check(&f, r, budget, s)) {
                Ok((est, _)) => vec![depen_report(alpha, ea, r, r, est, 1)],
                Err(e) => fail_all(&["depen"], cell(alpha, r), Method::MonteCarlo, &e),
            }
        });
    }

    fn stick(&mut self, alpha: f64, r: usize) {
        self.with_control(alpha, |d, sa, ea| {
            let p = cell(alpha, r);
            let (ratio, chain) = match (d.ratio(ea, r), d.chain(sa, r)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    return fail_all(&["stick_v1_ks", "chain_t1_ks", "chain_t0_ks"], p, Method::KolmogorovSmirnov, &e)
                }
            };
            let v_ratio: Vec<f64> = ratio.iter().map(|x| x.v1).collect();
            let v_chain: Vec<f64> = chain.iter().map(|&(t0, t1)| 1.0 - t1 / t0).collect();
            let t1_ratio: Vec<f64> = ratio.iter().map(|x| x.t1).collect();
            let t1_chain: Vec<f64> = chain.iter().map(|x| x.1).collect();
            let t0_ratio: Vec<f64> = ratio.iter().map(|x| x.t).collect();
            let t0_chain: Vec<f64> = chain.iter().map(|x| x.0).collect();
            vec![
                equivalence_report("stick_v1_ks", p.clone(), &v_ratio, &v_chain),
                equivalence_report("chain_t1_ks", p.clone(), &t1_ratio, &t1_chain),
                equivalence_report("chain_t0_ks", p, &t0_ratio, &t0_chain),
            ]
        });
        self.with_control(alpha, |d, sa, ea| match (d.ratio(sa, r), d.family(ea, r)) {
            (Ok(x), Ok(fam)) => vec![joint_u_t_report(alpha, r, &fam, &x, 1)],
            (Err(e), _) | (_, Err(e)) => fail_all(&["joint_u_t_histogram"], cell(alpha, r), Method::Histogram, &e),
        });
    }
}

fn nb_check_name(suite: Suite) -> &'static str {
    match suite {
        Suite::MeanMeasure => "mean_measure",
        Suite::LaplaceFunctional => "laplace_functional",
        Suite::FirstPick => "first_pick",
        _ => "g_histogram",
    }
}

/// Runs every selected suite over the grid. Failures to evaluate a check are
/// reported in its `error` field rather than returned. Reports are sorted by
/// name and parameters.
pub fn verify_all(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    if cfg.budget < 100 {
        return Err(PdError::Domain(format!("budget must be at least 100, got {}", cfg.budget)));
    }
    for &a in &cfg.alphas {
        crate::levy::check_alpha(a)?;
    }
    if cfg.rs.iter().chain(&cfg.stick_rs).chain(&cfg.palm_rs).any(|&r| r == 0) {
        return Err(PdError::Domain("r must be at least 1".into()));
    }
    if let Some(e) = cfg.eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(PdError::Domain(format!("eps must lie in (0, 1), got {e}")));
        }
    }
    let mut run = Runner { cfg, draws: Draws::new(cfg), out: Vec::new() };
    if cfg.has(Suite::Kn) {
        run.out.push(kn_dual_report());
    }
    let mut shapes: Vec<usize> = cfg.rs.iter().chain(&cfg.stick_rs).chain(&cfg.palm_rs).copied().collect();
    shapes.sort_unstable();
    shapes.dedup();
    for &alpha in &cfg.alphas {
        for &r in &shapes {
            for &suite in &cfg.suites {
                let on_grid = cfg.rs.contains(&r);
                match suite {
                    Suite::Palm if cfg.palm_rs.contains(&r) => run.palm(alpha, r),
                    Suite::Stick if cfg.stick_rs.contains(&r) => run.stick(alpha, r),
                    Suite::Palm | Suite::Stick => {}
                    _ if !on_grid => {}
                    Suite::Laplace => run.laplace(alpha, r),
                    Suite::Equivalence => run.equivalence(alpha, r),
                    Suite::MeanMeasure | Suite::LaplaceFunctional | Suite::FirstPick => run.nb_based(alpha, r, suite),
                    Suite::Density => {
                        run.deterministic(alpha, r, suite);
                        run.nb_based(alpha, r, suite);
                    }
                    Suite::Appendix | Suite::Kernel => run.deterministic(alpha, r, suite),
                    Suite::Kn => {
                        run.deterministic(alpha, r, suite);
                        run.depen(alpha, r);
                    }
                }
            }
        }
    }
    let mut out = run.out;
    out.sort_by_key(|r| r.sort_key());
    Ok(out)
}
