//! Command-line front end: sampling, density tables, the verification suite
//! and the rank-size fitter. Every command is a pure function of its flags,
//! seed and input files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::densities::{joint_t_density, joint_u_t_density, k_n, sb_joint_density, transition_density, transition_mass, GrFamily};
use crate::error::PdError;
use crate::fit::{goodness_report, select_r, RankedData};
use crate::levy::{pd_sample, sample_ordered_jumps, sample_ordered_jumps_to_level, StableParams};
use crate::nbproc::ratios_from_jumps;
use crate::rng::{try_par_draws, Stream};
use crate::sizebias::{markov_chain_sampler, size_biased_permutation, SizeBiasedDraw};
use crate::verify::{verify_all, Suite, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RANGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Default enumeration threshold for the samplers.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "pdtrim", version, about = "Trimmed Poisson-Dirichlet samplers, densities, verification and fitting")]
pub struct Cli {
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "PDTRIM_THREADS")]
    pub threads: Option<usize>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Tabulate a density on a grid.
    #[command(subcommand)]
    Density(DensityCmd),
    /// Run verification checks and emit a JSON report array.
    Verify(VerifyArgs),
    /// Fit (alpha, r) to ranked positive data.
    Fit(FitArgs),
}

#[derive(Debug, Subcommand)]
pub enum SampleCmd {
    /// Normalized trimmed jumps `V_1..V_depth` and the tail fraction.
    Pd {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Size-biased values, residual fractions and the starting total.
    Sizebiased {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Number of picks per sample.
        #[arg(long, default_value_t = 3)]
        picks: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Raw ordered jumps of the subordinator on `[0, t]`.
    Jumps {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Size-biased permutation of the ratio point measure.
    Direct,
    /// Markov chain of residual totals.
    Chain,
}

#[derive(Debug, Subcommand)]
pub enum DensityCmd {
    /// `g_r(t)`.
    G {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t: Grid,
    },
    /// Transition kernel `T_{n+1} | T_n = t0` with cell masses.
    Transit {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long)]
        t0: f64,
        /// Step index of the chain.
        #[arg(long, default_value_t = 0)]
        n: usize,
        /// Grid of next states; defaults to 201 points across the support.
        #[arg(long)]
        t: Option<Grid>,
    },
    /// Joint density of `(T_0, T_1)` along `t1` at fixed `t0`.
    JointT {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t: Grid,
    },
    /// Joint density of `(T_1, U_1)` along `u` at fixed `t1`.
    #[command(name = "joint-u-t")]
    JointUT {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        u: Grid,
    },
    /// Joint density of `(Ṽ_1, T)` along `v` at fixed `t`.
    SbJoint {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        v: Grid,
    },
    /// The constants `K_1..K_nmax`.
    Kn {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A suite name or `all`.
    pub suite: String,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Shapes; also used for the stick and Palm checks when given.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    /// Enumeration threshold; by default chosen per index.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Skip the negative controls.
    #[arg(long)]
    pub no_controls: bool,
    /// Record wall-clock time in `runtime_ms`.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with one positive weight per line; a header line is detected.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub r_max: usize,
    /// Penalty per trimmed rank; by default 0.05 of the untrimmed residual.
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_boot: usize,
    /// Where to write the plot data CSV.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// `lo:hi:count` with inclusive endpoints, optionally prefixed by `log:` for
/// geometric spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub log: bool,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (log, body) = match s.strip_prefix("log:") {
            Some(b) => (true, b),
            None => (false, s),
        };
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {s:?} is not lo:hi:count"));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower end {:?}", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper end {:?}", parts[1]))?;
        let count: usize = parts[2].trim().parse().map_err(|_| format!("bad count {:?}", parts[2]))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("grid needs finite lo <= hi, got {lo}:{hi}"));
        }
        if count == 0 || (count == 1 && lo != hi) {
            return Err("grid needs count >= 2, or count 1 with lo == hi".into());
        }
        if log && !(lo > 0.0) {
            return Err("log grid needs lo > 0".into());
        }
        Ok(Self { lo, hi, count, log })
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (a, b) = if self.log { (self.lo.ln(), self.hi.ln()) } else { (self.lo, self.hi) };
        (0..self.count)
            .map(|i| {
                let x = if i + 1 == self.count { b } else { a + (b - a) * i as f64 / (self.count - 1) as f64 };
                if self.log {
                    if i == 0 {
                        self.lo
                    } else if i + 1 == self.count {
                        self.hi
                    } else {
                        x.exp()
                    }
                } else {
                    x
                }
            })
            .collect()
    }
}

/// Errors a command can end with, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Range(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Range(_) => EXIT_RANGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Failed(_) => EXIT_FAIL,
        }
    }
}

impl From<PdError> for CliError {
    fn from(e: PdError) -> Self {
        match e {
            PdError::Domain(_) => CliError::Usage(e.to_string()),
            PdError::Range { .. } => CliError::Range(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// `{:.16e}`: 17 significant digits.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Failed(e.to_string()))
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "pdtrim: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // a pool that is already set (for example by an earlier call in the
        // same process) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let stream = Stream::new(cli.seed);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Sample(s) => {
            let text = cmd_sample(s, cli.format, stream)?;
            write_text(out, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Density(d) => {
            let (text, all_flagged) = cmd_density(d, cli.format)?;
            write_text(out, &text, stdout)?;
            Ok(if all_flagged { EXIT_RANGE } else { EXIT_OK })
        }
        Command::Verify(v) => {
            let (text, pass) = cmd_verify(v, cli.seed)?;
            write_text(out, &text, stdout)?;
            Ok(if pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Fit(f) => {
            let (json, csv) = cmd_fit(f, stream)?;
            write_text(out, &json, stdout)?;
            if let Some(p) = &f.plot {
                write_text(Some(p), &csv, stdout)?;
            }
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct PdRow {
    sample_id: usize,
    values: Vec<f64>,
    tail_fraction: f64,
}

#[derive(Serialize)]
struct SbRow {
    sample_id: usize,
    vtilde: Vec<f64>,
    u: Vec<f64>,
    t0: f64,
}

#[derive(Serialize)]
struct JumpRow {
    sample_id: usize,
    jumps: Vec<f64>,
}

fn check_eps(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

fn cmd_sample(cmd: &SampleCmd, format: Format, stream: Stream) -> CliResult<String> {
    match *cmd {
        SampleCmd::Pd { alpha, r, depth, n, eps } => {
            check_eps(eps)?;
            let params = StableParams::new(alpha, 1.0)?;
            if depth == 0 || n == 0 {
                return Err(usage("--depth and --n must be positive"));
            }
            let rows: Vec<PdRow> = try_par_draws(stream.child("sample/pd"), n, |rng| {
                let js = sample_ordered_jumps_to_level(&params, 1.0, r.max(1), eps, r + depth, rng)?;
                pd_sample(&js, r, depth)
            })?
            .into_iter()
            .enumerate()
            .map(|(i, s)| PdRow { sample_id: i, values: s.values, tail_fraction: s.tail_fraction })
            .collect();
            if format == Format::Json {
                return to_json(&rows);
            }
            let mut s = String::new();
            csv_row(&mut s, std::iter::once("sample_id".into()).chain((1..=depth).map(|k| format!("v{k}"))).chain(["tail_fraction".into()]));
            for row in rows {
                csv_row(&mut s, std::iter::once(row.sample_id.to_string()).chain(row.values.iter().map(|&v| num(v))).chain([num(row.tail_fraction)]));
            }
            Ok(s)
        }
        SampleCmd::Sizebiased { alpha, r, picks, n, method, eps } => {
            check_eps(eps)?;
            if r == 0 {
                return Err(usage(
                    "sizebiased sampling needs --r >= 1: the point measure of ratios to the r-th largest jump is not defined for r = 0",
                ));
            }
            if picks == 0 || n == 0 {
                return Err(usage("--picks and --n must be positive"));
            }
            let params = StableParams::new(alpha, 1.0)?;
            let draws: Vec<SizeBiasedDraw> = match method {
                Method::Direct => try_par_draws(stream.child("sample/sizebiased/direct"), n, |rng| {
                    // enough enumerated points for every pick
                    let js = sample_ordered_jumps_to_level(&params, 1.0, r, eps, r + picks, rng)?;
                    let m = ratios_from_jumps(&js, r)?;
                    size_biased_permutation(&m, picks, rng)
                })?,
                Method::Chain => {
                    let fam = GrFamily::new(alpha, r as f64, picks + 1)?;
                    try_par_draws(stream.child("sample/sizebiased/chain"), n, |rng| {
                        let t = markov_chain_sampler(&fam, picks, eps, rng)?;
                        SizeBiasedDraw::from_picks(t[0], t.windows(2).map(|w| w[0] - w[1]).collect())
                    })?
                }
            };
            let rows: Vec<SbRow> = draws
                .into_iter()
                .enumerate()
                .map(|(i, d)| SbRow { sample_id: i, vtilde: d.normalized_picks(), u: d.fractions.clone(), t0: d.totals[0] })
                .collect();
            if format == Format::Json {
                return to_json(&rows);
            }
            let mut s = String::new();
            csv_row(
                &mut s,
                std::iter::once("sample_id".into())
                    .chain((1..=picks).map(|k| format!("vtilde{k}")))
                    .chain((1..=picks).map(|k| format!("u{k}")))
                    .chain(["t0".into()]),
            );
            for row in rows {
                csv_row(
                    &mut s,
                    std::iter::once(row.sample_id.to_string())
                        .chain(row.vtilde.iter().map(|&v| num(v)))
                        .chain(row.u.iter().map(|&v| num(v)))
                        .chain([num(row.t0)]),
                );
            }
            Ok(s)
        }
        SampleCmd::Jumps { alpha, c, t, points, n } => {
            if points == 0 || n == 0 {
                return Err(usage("--points and --n must be positive"));
            }
            let params = StableParams::new(alpha, c)?;
            let rows: Vec<JumpRow> = try_par_draws(stream.child("sample/jumps"), n, |rng| sample_ordered_jumps(&params, t, points, rng))?
                .into_iter()
                .enumerate()
                .map(|(i, j)| JumpRow { sample_id: i, jumps: j.jumps })
                .collect();
            if format == Format::Json {
                return to_json(&rows);
            }
            let mut s = String::new();
            csv_row(&mut s, std::iter::once("sample_id".into()).chain((1..=points).map(|k| format!("j{k}"))));
            for row in rows {
                csv_row(&mut s, std::iter::once(row.sample_id.to_string()).chain(row.jumps.iter().map(|&v| num(v))));
            }
            Ok(s)
        }
    }
}

/// A density table: named columns, a trailing `flag` per row, and comment
/// lines written above the header.
#[derive(Serialize)]
struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    flags: Vec<String>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { comments: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), flags: Vec::new() }
    }

    fn push(&mut self, row: Vec<f64>, flag: Result<(), PdError>) -> CliResult<()> {
        let flag = match flag {
            Ok(()) => "ok".to_string(),
            Err(PdError::Range { .. }) => "out_of_range".to_string(),
            Err(PdError::Domain(_)) => "outside_domain".to_string(),
            Err(e) => return Err(e.into()),
        };
        self.rows.push(row);
        self.flags.push(flag);
        Ok(())
    }

    fn all_flagged(&self) -> bool {
        !self.flags.is_empty() && self.flags.iter().all(|f| f != "ok")
    }

    fn render(&self, format: Format) -> CliResult<String> {
        if format == Format::Json {
            return to_json(self);
        }
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        csv_row(&mut s, self.columns.iter().cloned().chain(["flag".into()]));
        for (row, flag) in self.rows.iter().zip(&self.flags) {
            csv_row(&mut s, row.iter().map(|&v| num(v)).chain([flag.clone()]));
        }
        Ok(s)
    }
}

fn split<T>(r: Result<T, PdError>, fallback: T) -> (T, Result<(), PdError>) {
    match r {
        Ok(v) => (v, Ok(())),
        Err(e) => (fallback, Err(e)),
    }
}

fn certification_comment(fam: &GrFamily, k: usize) -> CliResult<String> {
    let g = fam.get(k)?;
    let c = g.certification();
    let worst = c.laplace.iter().map(|l| l.rel_err).fold(0.0, f64::max);
    Ok(format!(
        "g_r alpha={} r={} normalization={} laplace_max_rel_err={:e} mean={} variance={} t_range=({}, {})",
        g.alpha, g.r, num(c.normalization), worst, num(c.mean), num(c.variance), g.t_min, g.t_max
    ))
}

fn cmd_density(cmd: &DensityCmd, format: Format) -> CliResult<(String, bool)> {
    let table = match cmd {
        DensityCmd::G { alpha, r, t } => {
            let fam = GrFamily::new(*alpha, *r, 1)?;
            let g = fam.get(0)?;
            let mut tab = Table::new(&["t", "value"]);
            tab.comments.push(certification_comment(&fam, 0)?);
            let pts = t.points();
            for &x in &pts {
                let (v, f) = split(g.eval(x), f64::NAN);
                tab.push(vec![x, v], f)?;
            }
            let trap: f64 = pts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (g.pdf(w[0]) + g.pdf(w[1]))).sum();
            let below = g.integrate_between(|_| 1.0, 0.0, pts[0])?;
            let above = g.integrate_between(|_| 1.0, pts[pts.len() - 1], f64::INFINITY)?;
            tab.comments.push(format!(
                "trapezoid_sum_over_grid={} mass_below_grid={} mass_above_grid={}",
                num(trap),
                num(below),
                num(above)
            ));
            tab
        }
        DensityCmd::Transit { alpha, r, t0, n, t } => {
            if !(*t0 > 0.0) {
                return Err(usage("--t0 must be positive"));
            }
            let fam = GrFamily::new(*alpha, *r, n + 2)?;
            let lo = (t0 - 1.0).max(0.0);
            let pts = match t {
                Some(g) => g.points(),
                None => Grid { lo, hi: *t0, count: 201, log: false }.points(),
            };
            let mut tab = Table::new(&["t", "value", "cell_mass"]);
            tab.comments.push(format!("transition kernel alpha={alpha} r={r} n={n} t0={t0} support=({lo}, {t0})"));
            // each point owns the part of the support closer to it than to its
            // neighbours
            let mut edges = vec![lo];
            edges.extend(pts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            edges.push(*t0);
            let mut total = 0.0;
            for (i, &x) in pts.iter().enumerate() {
                let (v, f) = split(transition_density(&fam, *n, *t0, x).map(|e| e.value), f64::NAN);
                let (a, b) = (edges[i].clamp(lo, *t0), edges[i + 1].clamp(lo, *t0));
                let m = if b > a { transition_mass(&fam, *n, *t0, a, b)? } else { 0.0 };
                total += m;
                tab.push(vec![x, v, m], f)?;
            }
            tab.comments.push(format!("cell_mass_sum={}", num(total)));
            tab
        }
        DensityCmd::JointT { alpha, r, t0, t } => {
            let fam = GrFamily::new(*alpha, *r, 2)?;
            let mut tab = Table::new(&["t0", "t1", "value"]);
            tab.comments.push(certification_comment(&fam, 0)?);
            for x in t.points() {
                let (v, f) = split(joint_t_density(&fam, &[*t0, x]).map(|e| e.value), f64::NAN);
                tab.push(vec![*t0, x, v], f)?;
            }
            tab
        }
        DensityCmd::JointUT { alpha, r, t1, u } => {
            let fam = GrFamily::new(*alpha, *r, 2)?;
            let mut tab = Table::new(&["t1", "u1", "value"]);
            tab.comments.push(certification_comment(&fam, 1)?);
            for x in u.points() {
                let (v, f) = split(joint_u_t_density(&fam, *t1, &[x]).map(|e| e.value), f64::NAN);
                tab.push(vec![*t1, x, v], f)?;
            }
            tab
        }
        DensityCmd::SbJoint { alpha, r, t, v } => {
            let fam = GrFamily::new(*alpha, *r, 2)?;
            let mut tab = Table::new(&["t", "vtilde1", "value"]);
            tab.comments.push(certification_comment(&fam, 1)?);
            for x in v.points() {
                let (val, f) = split(sb_joint_density(&fam, &[x], *t).map(|e| e.value), f64::NAN);
                tab.push(vec![*t, x, val], f)?;
            }
            tab
        }
        DensityCmd::Kn { alpha, n_max } => {
            let mut tab = Table::new(&["n", "k_n"]);
            for n in 1..=*n_max {
                tab.push(vec![n as f64, k_n(*alpha, n)?], Ok(()))?;
            }
            tab
        }
    };
    Ok((table.render(format)?, table.all_flagged()))
}

fn cmd_verify(args: &VerifyArgs, seed: u64) -> CliResult<(String, bool)> {
    let mut cfg = VerifyConfig { seed, budget: args.budget, eps: args.eps, controls: !args.no_controls, timing: args.timing, ..Default::default() };
    if args.suite != "all" {
        let s: Suite = args.suite.parse().map_err(|_| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            usage(format!("unknown suite {:?}; expected all or one of {}", args.suite, names.join(", ")))
        })?;
        cfg.suites = vec![s];
    }
    if let Some(a) = &args.alpha {
        cfg.alphas = a.clone();
    }
    if let Some(r) = &args.r {
        cfg.rs = r.clone();
        cfg.stick_rs = r.clone();
        cfg.palm_rs = r.clone();
    }
    if let Some(l) = &args.lambda {
        cfg.lambdas = l.clone();
    }
    let reports = verify_all(&cfg)?;
    let pass = reports.iter().all(|r| r.pass);
    Ok((to_json(&reports)?, pass))
}

/// Reads one positive weight per line; the first line may be a header.
pub fn read_weights(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(usage(format!("{}:{}: {field:?} is not a number", path.display(), i + 1))),
        }
    }
    if out.is_empty() {
        return Err(CliError::Io(format!("{} holds no data", path.display())));
    }
    Ok(out)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    label: &'a str,
    n: usize,
    fit: &'a crate::fit::FitResult,
    coverage: f64,
    n_boot: usize,
}

fn cmd_fit(args: &FitArgs, stream: Stream) -> CliResult<(String, String)> {
    let weights = read_weights(&args.input)?;
    let label = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string();
    let data = RankedData::from_unsorted(weights, label)?;
    if data.len() < 5 {
        return Err(usage(format!("fitting needs at least 5 weights, got {}", data.len())));
    }
    let r_max = args.r_max.min(data.len() - 3);
    let fit = select_r(&data, r_max, args.penalty)?;
    let good = goodness_report(&data, &fit, args.n_boot, stream.child("fit/bootstrap"))?;
    let json = to_json(&FitOutput { label: &data.label, n: data.len(), fit: &fit, coverage: good.coverage, n_boot: args.n_boot })?;
    Ok((json, good.to_csv()))
}
