//! Command-line front end.
//!
//! Every subcommand writes a versioned header line first. Results go to
//! stdout or `--out`; exit codes: 0 success, 2 usage, 3 capability,
//! 4 integrity, 5 self-test failure, 1 I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::blocks::{moments_from_blocks, BlockDiagonalState};
use crate::error::{Error, Result};
use crate::schur::{build_schur_basis, SchurBasis};
use crate::sep::{
    default_k_set, default_theta_grid, sandwich_report, separable_ball_radius, upper_bound_full,
    upper_bound_simple, Certificate, EnsembleMember, FullOptions, UpperBoundReport,
};
use crate::ssi::{ssi_parameter_with, Symmetry};
use crate::sweep::{entanglement_threshold, lower_sweep, LowerRow, Scale, SweepSpec};
use crate::thermal::{gibbs_blocks, XxzParams};
use crate::DEFAULT_N_MAX;

pub mod reproduce;
pub mod selftest;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;
pub const EXIT_SELFTEST: i32 = 5;

/// `# squeezent v<semver> schema 1`.
pub fn schema_header() -> String {
    format!("# squeezent v{} schema 1", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Parser)]
#[command(
    name = "squeezent",
    version,
    about = "Lower and upper bounds to the best separable approximation of XXZ thermal states",
    args_override_self = true,
    allow_negative_numbers = true
)]
pub struct Cli {
    /// key=value file mirroring the long flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized steps; chosen from the clock and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Largest N for dense and Schur-basis computations.
    #[arg(long, global = true, default_value_t = DEFAULT_N_MAX)]
    pub n_max: u32,
    /// Omit the timestamp header line so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep temperature and print the spin-squeezing lower bound.
    Lower(LowerArgs),
    /// Upper bound from an explicit separable ensemble at one temperature.
    Upper(UpperArgs),
    /// Write figure data and gnuplot scripts.
    Reproduce(ReproduceArgs),
    /// Dump the spin-squeezing facet values of one state.
    Inequalities(InequalityArgs),
    /// Run the built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// g_z = g (default g_z when not given).
    Xxx,
    /// g_z = 0.
    Xx,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Particle number.
    #[arg(short = 'n', long = "n")]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// z coupling; defaults to g (xxx) or 0 (xx).
    #[arg(long = "gz")]
    pub g_z: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Model::Xxx)]
    pub model: Model,
}

impl ModelArgs {
    pub fn params(&self) -> Result<XxzParams> {
        let g_z = self.g_z.unwrap_or(match self.model {
            Model::Xxx => self.g,
            Model::Xx => 0.0,
        });
        XxzParams::new(self.g, g_z, self.h, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Linear,
    Log,
}

#[derive(Debug, Args)]
pub struct LowerArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.01)]
    pub t_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = ScaleArg::Log)]
    pub scale: ScaleArg,
    /// Prepend the T = 0 ground-state limit.
    #[arg(long)]
    pub ground: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ansatz {
    Simple,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct UpperArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Temperature (0 for the ground-state limit).
    #[arg(short = 't', long = "t")]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Ansatz::Full)]
    pub ansatz: Ansatz,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    /// Number of rotation angles in [0, pi] for the simple ansatz.
    #[arg(long, default_value_t = 32)]
    pub theta_points: usize,
    /// Skip the final linear-program re-weighting.
    #[arg(long)]
    pub no_polish: bool,
    /// Stop early once the separable-ball test certifies the target.
    #[arg(long)]
    pub ball: bool,
    /// Override the ball radius (Frobenius norm, normalized states).
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Certificate JSON whose ensemble seeds the full ansatz.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Also write the certificate JSON here.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig3,
    Fig4a,
    Fig4b,
    Thresholds,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub figure: Figure,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Coarser grids for a fast preview.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymmetryArg {
    Auto,
    General,
    Axial,
    Isotropic,
}

#[derive(Debug, Args)]
pub struct InequalityArgs {
    /// Gibbs state of this model (requires --t) unless --state is given.
    #[arg(short = 'n', long = "n")]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long = "gz")]
    pub g_z: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Model::Xxx)]
    pub model: Model,
    #[arg(short = 't', long = "t")]
    pub t: Option<f64>,
    /// Block-state JSON file instead of a Gibbs state.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Normalization family; auto uses the model's symmetry, or general for --state.
    #[arg(long, value_enum, default_value_t = SymmetryArg::Auto)]
    pub symmetry: SymmetryArg,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Divide every tolerance by this factor and flag checks that only pass loosely.
    #[arg(long, default_value_t = 1.0)]
    pub tighten: f64,
    /// Where the Schur-basis cache is written (default: a temporary directory).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Flip a byte of the cache before reloading it (fault injection).
    #[arg(long)]
    pub corrupt_cache: bool,
}

/// Shared output settings.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub seed_was_given: bool,
    pub n_max: u32,
    pub timestamp: bool,
}

impl Context {
    /// Header block for CSV-like outputs.
    pub fn header(&self, extra: &[String]) -> String {
        let mut s = schema_header();
        s.push('\n');
        if self.timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(s, "# generated unix={secs}");
        }
        for line in extra {
            let _ = writeln!(s, "# {line}");
        }
        s
    }
}

fn params_line(p: &XxzParams) -> String {
    format!("N={} g={} g_z={} h={}", p.n, p.g, p.g_z, p.h)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Reads `key=value` lines (`#` starts a comment).
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Domain(format!("config line {}: expected key=value", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Domain(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config entries into the argument list right after the subcommand
/// name, ahead of the user's own flags, so later (explicit) flags override.
/// Keys that belong to a different subcommand are ignored; keys unknown to
/// every subcommand are a usage error.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config_path = None;
    let mut i = 0;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config_path = args.get(i + 1).map(PathBuf::from);
            break;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
            break;
        }
        i += 1;
    }
    let Some(path) = config_path else {
        return Ok(args);
    };
    let entries = parse_config(&fs::read_to_string(&path)?)?;
    let cmd = Cli::command();
    let sub_names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = args
        .iter()
        .position(|a| sub_names.iter().any(|s| s.as_str() == a.to_string_lossy()))
    else {
        return Ok(args);
    };
    let sub_name = args[pos].to_string_lossy().to_string();
    let sub = cmd.find_subcommand(&sub_name).expect("known subcommand");
    let longs_of = |c: &clap::Command| -> Vec<(String, bool)> {
        c.get_arguments()
            .filter_map(|a| {
                a.get_long().map(|l| {
                    let flag = matches!(a.get_action(), clap::ArgAction::SetTrue);
                    (l.to_string(), flag)
                })
            })
            .collect()
    };
    let mut known = longs_of(&cmd);
    known.extend(longs_of(sub));
    let everywhere: Vec<String> = cmd
        .get_subcommands()
        .flat_map(|s| longs_of(s).into_iter().map(|(l, _)| l))
        .chain(longs_of(&cmd).into_iter().map(|(l, _)| l))
        .collect();
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        match known.iter().find(|(l, _)| *l == key) {
            Some((_, true)) => match value.as_str() {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                other => {
                    return Err(Error::Domain(format!("config key {key}: expected a boolean, got {other}")))
                }
            },
            Some((_, false)) => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
            None if everywhere.contains(&key) => {}
            None => return Err(Error::Domain(format!("unknown config key {key}"))),
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parses arguments (with config expansion), runs, and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_USAGE,
        Error::Capability(_) => EXIT_CAPABILITY,
        Error::Integrity(_) => EXIT_INTEGRITY,
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn auto_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

/// Runs a parsed command; returns the exit code for non-error outcomes.
pub fn run(cli: Cli) -> Result<i32> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Domain("--jobs must be positive".into()));
        }
        // a second call (e.g. from tests) keeps the first pool, which is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let ctx = Context {
        seed: cli.seed.unwrap_or_else(auto_seed),
        seed_was_given: cli.seed.is_some(),
        n_max: cli.n_max,
        timestamp: !cli.no_timestamp,
    };
    match cli.command {
        Command::Lower(a) => cmd_lower(&ctx, &a).map(|_| 0),
        Command::Upper(a) => cmd_upper(&ctx, &a).map(|_| 0),
        Command::Reproduce(a) => reproduce::cmd_reproduce(&ctx, &a).map(|_| 0),
        Command::Inequalities(a) => cmd_inequalities(&a).map(|_| 0),
        Command::Selftest(a) => selftest::cmd_selftest(&ctx, &a),
    }
}

pub const LOWER_COLUMNS: &str = "T,logZ,Jz,Jz2,Jx2,xi,K,lower_bound";

pub fn lower_csv_row(r: &LowerRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.temperature, r.log_z, r.jz, r.jz2, r.jx2, r.ssi.xi, r.ssi.k, r.ssi.lower_bound
    )
}

/// Threshold bisection width; the reported midpoint is then within 1e-6.
pub const THRESHOLD_TOL: f64 = 1e-7;

pub fn threshold_line(params: &XxzParams, t_lo: f64, t_hi: f64) -> Result<String> {
    Ok(match entanglement_threshold(params, t_lo, t_hi, THRESHOLD_TOL) {
        Ok(Some(th)) => format!(
            "threshold T*={:.7} bracket=[{:.9},{:.9}]",
            th.t_star, th.left, th.right
        ),
        Ok(None) => format!("threshold none: lower bound is zero on [{t_lo}, {t_hi}]"),
        Err(Error::Domain(_)) => format!("threshold above T_max={t_hi}"),
        Err(e) => return Err(e),
    })
}

pub fn lower_table(ctx: &Context, spec: &SweepSpec) -> Result<String> {
    let rows = lower_sweep(spec)?;
    let mut s = ctx.header(&[
        params_line(&spec.params),
        format!(
            "sweep T=[{}, {}] steps={} scale={:?} ground={}",
            spec.t_min, spec.t_max, spec.steps, spec.scale, spec.ground
        ),
        format!("normalization={:?}", spec.params.symmetry()),
    ]);
    s.push_str(LOWER_COLUMNS);
    s.push('\n');
    for r in &rows {
        s.push_str(&lower_csv_row(r));
        s.push('\n');
    }
    let _ = writeln!(s, "# {}", threshold_line(&spec.params, spec.t_min, spec.t_max)?);
    Ok(s)
}

fn cmd_lower(ctx: &Context, a: &LowerArgs) -> Result<()> {
    let spec = SweepSpec {
        params: a.model.params()?,
        t_min: a.t_min,
        t_max: a.t_max,
        steps: a.steps,
        scale: match a.scale {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::Log,
        },
        ground: a.ground,
    };
    write_output(a.out.as_deref(), &lower_table(ctx, &spec)?)
}

/// Settings of one upper-bound computation, independent of clap.
#[derive(Debug, Clone)]
pub struct UpperJob {
    pub params: XxzParams,
    pub temperature: f64,
    pub ansatz: Ansatz,
    pub full: FullOptions,
    pub theta_points: usize,
    pub polish: bool,
}

/// Result of [`run_upper`] together with the lower bound of the same state.
#[derive(Debug, Clone)]
pub struct UpperOutcome {
    pub lower: crate::ssi::SsiResult,
    pub report: UpperBoundReport,
}

pub fn run_upper(job: &UpperJob, n_max: u32, basis: Option<&SchurBasis>) -> Result<UpperOutcome> {
    let target = gibbs_blocks(&job.params, job.temperature)?.state;
    let lower = ssi_parameter_with(&moments_from_blocks(&target), job.params.symmetry());
    let report = match job.ansatz {
        Ansatz::Simple => upper_bound_simple(
            &target,
            &default_k_set(target.n()),
            &default_theta_grid(job.theta_points),
            job.polish,
        )?,
        Ansatz::Full => {
            let owned;
            let basis = match basis {
                Some(b) => b,
                None => {
                    owned = build_schur_basis(target.n(), n_max)?;
                    &owned
                }
            };
            upper_bound_full(&target, basis, &FullOptions { polish: job.polish, ..job.full.clone() })?
        }
    };
    sandwich_report(&lower, &report)?;
    Ok(UpperOutcome { lower, report })
}

pub fn load_warm_start(path: &Path, n: u32, basis: Option<&SchurBasis>) -> Result<Vec<EnsembleMember>> {
    // accepts a bare certificate or the document written by `upper --certificate`
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(inner) = doc.get_mut("certificate") {
        doc = inner.take();
    }
    let cert: Certificate = serde_json::from_value(doc)?;
    if cert.n != n {
        return Err(Error::Domain(format!(
            "warm start is for N = {}, target has N = {n}",
            cert.n
        )));
    }
    cert.members
        .into_iter()
        .map(|m| {
            Ok(EnsembleMember {
                blocks: m.descriptor.realize(n, basis)?,
                weight: m.weight,
                descriptor: m.descriptor,
            })
        })
        .collect()
}

pub const UPPER_COLUMNS: &str = "T,lower_bound,t_bsa,gap,residual_two_norm,termination,iterations,members";

fn cmd_upper(ctx: &Context, a: &UpperArgs) -> Result<()> {
    let params = a.model.params()?;
    let basis = match a.ansatz {
        Ansatz::Full => Some(build_schur_basis(params.n, ctx.n_max)?),
        Ansatz::Simple => None,
    };
    let warm_start = match &a.warm_start {
        Some(p) => Some(load_warm_start(p, params.n, basis.as_ref())?),
        None => None,
    };
    let ball_radius = match (a.ball, a.ball_radius) {
        (_, Some(r)) => Some(r),
        (true, None) => Some(separable_ball_radius(params.n)),
        (false, None) => None,
    };
    let job = UpperJob {
        params,
        temperature: a.t,
        ansatz: a.ansatz,
        full: FullOptions {
            restarts: a.restarts,
            seed: ctx.seed,
            max_outer: a.max_outer,
            max_sweeps: a.max_sweeps,
            ball_radius,
            warm_start,
            ..FullOptions::default()
        },
        theta_points: a.theta_points,
        polish: !a.no_polish,
    };
    let outcome = run_upper(&job, ctx.n_max, basis.as_ref())?;
    let r = &outcome.report;
    let cert = r.certificate();
    let doc = json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "params": params,
        "T": a.t,
        "ansatz": format!("{:?}", a.ansatz).to_lowercase(),
        "seed": ctx.seed,
        "lower": outcome.lower,
        "certificate": cert,
    });
    let json_text = serde_json::to_string_pretty(&doc)? + "\n";
    if let Some(path) = &a.certificate {
        write_output(Some(path), &json_text)?;
    }
    let text = match a.format {
        Format::Json => json_text,
        Format::Csv => {
            let mut s = ctx.header(&[
                params_line(&params),
                format!("ansatz={:?} seed={}", a.ansatz, ctx.seed),
            ]);
            s.push_str(UPPER_COLUMNS);
            s.push('\n');
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:?},{},{}",
                a.t,
                outcome.lower.lower_bound,
                r.t_bsa,
                r.t_bsa - outcome.lower.lower_bound,
                r.residual_two_norm,
                r.termination,
                r.iterations,
                r.ensemble.len()
            );
            s
        }
    };
    write_output(a.out.as_deref(), &text)
}

fn cmd_inequalities(a: &InequalityArgs) -> Result<()> {
    let (state, auto_symmetry, params) = match (&a.state, a.n) {
        (Some(path), _) => {
            let s = BlockDiagonalState::from_json(&fs::read_to_string(path)?)?;
            (s, Symmetry::General, None)
        }
        (None, Some(n)) => {
            let t = a
                .t
                .ok_or_else(|| Error::Domain("--t is required with a model".into()))?;
            let model = ModelArgs {
                n,
                g: a.g,
                g_z: a.g_z,
                h: a.h,
                model: a.model,
            };
            let p = model.params()?;
            (gibbs_blocks(&p, t)?.state, p.symmetry(), Some(p))
        }
        (None, None) => return Err(Error::Domain("give either --state or --n with --t".into())),
    };
    let symmetry = match a.symmetry {
        SymmetryArg::Auto => auto_symmetry,
        SymmetryArg::General => Symmetry::General,
        SymmetryArg::Axial => Symmetry::Axial,
        SymmetryArg::Isotropic => Symmetry::Isotropic,
    };
    let m = moments_from_blocks(&state);
    let doc = json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "params": params,
        "T": a.t,
        "symmetry": symmetry,
        "moments": { "mean": m.mean, "second": m.second },
        "ssi": ssi_parameter_with(&m, symmetry),
    });
    write_output(None, &(serde_json::to_string_pretty(&doc)? + "\n"))
}
