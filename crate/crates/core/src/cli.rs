//! The `gnomon` command line.
//!
//! Exit status: 0 on success, 1 when output cannot be written, 2 for unusable
//! flags or config files, 3 for domain errors. Failures print one
//! `ERR_...: message` line on standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::conserved::{self, BracketReport, DEFAULT_SEED};
use crate::dynamics::{
    closure_analysis, integrate, integrate_until, ClosureReport, IntegratorOptions, PhaseState,
    StopCondition, SystemKind, SystemParams,
};
use crate::error::{Error, Result};
use crate::numeric::{fmt17, to_json};
use crate::spectra::{spectrum_table, write_spectrum_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gnomon",
    version,
    about = "Screened Coulomb and oscillator systems on the sphere",
    args_override_self = true,
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one orbit and write its samples.
    Orbit(OrbitArgs),
    /// Decide whether the orbit closes and check the return after one closure angle.
    Closure(ClosureArgs),
    /// Evaluate the brackets of the extended quantities with H along an orbit.
    Turning(OrbitArgs),
    /// Check the classical bracket algebra at seeded random states.
    Brackets(BracketArgs),
    /// Analytic (and optionally numeric) energy levels.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn parse_kind(s: &str) -> std::result::Result<SystemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long, value_parser = parse_kind)]
    pub system: SystemKind,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
}

impl SystemArgs {
    fn params(&self) -> Result<SystemParams> {
        SystemParams::new(self.system, self.lambda, self.k)
    }
}

#[derive(Debug, Args)]
pub struct InitialArgs {
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, default_value_t = 0.0)]
    pub px: f64,
    #[arg(long, default_value_t = 0.0)]
    pub py: f64,
    /// Relative tolerance of the integrator.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

impl InitialArgs {
    fn state(&self) -> PhaseState {
        PhaseState::new(self.x, self.y, self.px, self.py)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file, written atomically. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub initial: InitialArgs,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Space-separated columns without header.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct ClosureArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub initial: InitialArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct BracketArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 1)]
    pub m: i64,
    /// Single level to report; otherwise levels `0..levels`.
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Also solve the radial equation by finite differences.
    #[arg(long)]
    pub numeric: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Failure of a CLI invocation together with its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Domain(Error::Io(_)) => EXIT_IO,
            Failure::Domain(_) => EXIT_DOMAIN,
        }
    }

    pub fn line(&self) -> String {
        match self {
            Failure::Usage(m) => format!("ERR_USAGE: {m}"),
            Failure::Domain(e) => format!("{}: {e}", e.code()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`] with explicit streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(f) => return report(f, err),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let msg = e.render().to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "ERR_USAGE: {first}");
            let _ = write!(err, "{msg}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => report(f, err),
    }
}

fn report(f: Failure, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "{}", f.line());
    f.exit_code()
}

/// Splices `key=value` lines from `--config FILE` in right after the
/// subcommand, so explicit flags (which come later) win.
fn expand_config(argv: Vec<OsString>) -> std::result::Result<Vec<OsString>, Failure> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = it
                .next()
                .ok_or_else(|| Failure::Usage("--config needs a file".into()))?;
            path = Some(PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let injected = config_args(&text)?;
    // argv[0] is the program, argv[1] should be the subcommand
    let at = rest.len().min(2);
    rest.splice(at..at, injected);
    Ok(rest)
}

fn config_args(text: &str) -> std::result::Result<Vec<OsString>, Failure> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(Failure::Usage(format!("config line {}: empty key", i + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            v => {
                args.push(format!("--{key}").into());
                args.push(v.into());
            }
        }
    }
    Ok(args)
}

/// Writes to `path` through a temporary file in the same directory and a
/// rename, or to `out` when no path is given.
fn emit(path: Option<&Path>, out: &mut dyn Write, body: &[u8]) -> Result<()> {
    match path {
        None => {
            out.write_all(body)?;
            out.flush()?;
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(body)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| Error::Io(e.error.to_string()))?;
        }
    }
    Ok(())
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut s = to_json(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn execute(
    cmd: &Command,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Orbit(a) => orbit(a, out, err),
        Command::Closure(a) => closure(a, out),
        Command::Turning(a) => turning(a, out),
        Command::Brackets(a) => brackets(a, out),
        Command::Spectrum(a) => spectrum(a, out),
    }
}

/// Closure of a state's orbit; `None` when the orbit has no defined `alpha`.
fn closure_for(params: &SystemParams, state: &PhaseState) -> Option<ClosureReport> {
    closure_analysis(params, state.lz()).ok()
}

fn orbit(
    a: &OrbitArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let params = a.system.params()?;
    let state = a.initial.state();
    let traj = integrate(state, params, a.t_end, a.initial.tol)?;
    let closure = closure_for(&params, &state);
    let mut body = Vec::new();
    match (a.output.format.unwrap_or(Format::Csv), a.gnuplot) {
        (_, true) => traj.write_gnuplot(&mut body)?,
        (Format::Csv, false) => {
            traj.write_csv(&mut body, true)?;
            if let Some(c) = &closure {
                let ratio = c.ratio.map(|r| format!("{}/{}", r.p, r.q));
                let _ = writeln!(
                    err,
                    "alpha={} closed={} ratio={}",
                    fmt17(c.alpha),
                    c.closed,
                    ratio.as_deref().unwrap_or("none")
                );
            }
        }
        (Format::Json, false) => {
            let doc = json!({
                "system": params.kind,
                "lambda": params.lambda(),
                "k": params.k,
                "rel_tol": traj.rel_tol(),
                "closure": closure,
                "energy_drift": traj.energy_drift(),
                "lz_drift": traj.lz_drift(),
                "turning_points": traj.turning_points_json(),
                "samples": traj.samples(),
            });
            body = json_line(&doc)?;
        }
    }
    emit(a.output.out.as_deref(), out, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct ClosureOutput {
    lz: f64,
    #[serde(flatten)]
    report: ClosureReport,
    /// Largest phase-space coordinate difference between the start and the
    /// state after `closure_angle`.
    return_distance: Option<f64>,
}

fn closure(a: &ClosureArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let params = a.system.params()?;
    let state = a.initial.state();
    let lz = state.lz();
    let report = closure_analysis(&params, lz)?;
    let return_distance = match report.closure_angle {
        Some(angle) => {
            let opts = IntegratorOptions::with_tolerance(a.initial.tol)?;
            let traj = integrate_until(state, params, StopCondition::AngleAdvance(angle), opts)?;
            Some(traj.last().state.max_abs_diff(&state))
        }
        None => None,
    };
    let doc = ClosureOutput {
        lz,
        report,
        return_distance,
    };
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_line(&doc)?,
        Format::Csv => {
            let ratio = report.ratio.map(|r| format!("{}/{}", r.p, r.q));
            let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
            format!(
                "lz,alpha,closed,ratio,closure_angle,radial_periods,return_distance\n{},{},{},{},{},{},{}\n",
                fmt17(lz),
                fmt17(report.alpha),
                report.closed,
                ratio.unwrap_or_default(),
                opt(report.closure_angle),
                report.radial_periods.map(|n| n.to_string()).unwrap_or_default(),
                opt(return_distance),
            )
            .into_bytes()
        }
    };
    emit(a.output.out.as_deref(), out, &body)?;
    Ok(())
}

fn turning(a: &OrbitArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let params = a.system.params()?;
    let traj = integrate(a.initial.state(), params, a.t_end, a.initial.tol)?;
    let report = conserved::turning_point_conservation(&traj)?;
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_line(&report)?,
        Format::Csv => {
            let mut s = String::from("t,r,theta,kind\n");
            for p in traj.turning_points().points() {
                let kind = match p.kind {
                    crate::dynamics::TurningKind::Aphelion => "aphelion",
                    crate::dynamics::TurningKind::Perihelion => "perihelion",
                };
                s += &format!("{},{},{},{kind}\n", fmt17(p.t), fmt17(p.r), fmt17(p.theta));
            }
            s.into_bytes()
        }
    };
    emit(a.output.out.as_deref(), out, &body)?;
    Ok(())
}

fn brackets(a: &BracketArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let params = a.system.params()?;
    if a.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be positive".into()).into());
    }
    let reports: Vec<BracketReport> = conserved::verify_algebra(&params, a.samples, a.seed)?;
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_line(&reports)?,
        Format::Csv => {
            let mut s = String::from("identity,n_samples,max_abs_residual,mean_abs_residual\n");
            for r in &reports {
                s += &format!(
                    "{},{},{},{}\n",
                    r.identity,
                    r.n_samples,
                    fmt17(r.max_abs_residual),
                    fmt17(r.mean_abs_residual)
                );
            }
            s.into_bytes()
        }
    };
    emit(a.output.out.as_deref(), out, &body)?;
    Ok(())
}

fn spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let s = &a.system;
    let entries = match a.n {
        Some(n) => {
            let mut all = spectrum_table(s.system, s.lambda, s.k, a.m, n as usize + 1, a.numeric)?;
            all.split_off(n as usize)
        }
        None => spectrum_table(s.system, s.lambda, s.k, a.m, a.levels, a.numeric)?,
    };
    let body = match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => json_line(&entries)?,
        Format::Csv => {
            let mut b = Vec::new();
            write_spectrum_csv(&mut b, &entries)?;
            b
        }
    };
    emit(a.output.out.as_deref(), out, &body)?;
    Ok(())
}
