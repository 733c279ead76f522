//! The `hsl` command line: catalog listing, verification, sweeps, field dumps and
//! the variational oracle.
//!
//! Exit codes: 0 pass, 1 check failure, 2 bad parameter or unsupported request,
//! 3 numerical abort, 4 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientKind;
use crate::catalog::{build_entry, list_catalog, near_degenerate, template, Params, CONTROL_ID};
use crate::checks::{run_checks, CheckReport, ProfileName, ToleranceProfile};
use crate::error::{HslError, Result};
use crate::jets::Rect;
use crate::surface::{GeometryField, Grid};
use crate::variation::{variation_report, VariationSettings};

pub const DEFAULT_GRID: (usize, usize) = (41, 41);
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BUMPS: usize = 5;
pub const PROFILE_ENV: &str = "HSL_PROFILE";

#[derive(Debug, Parser)]
#[command(
    name = "hsl",
    version,
    about = "Numerical certificates for Hamiltonian stationary Lagrangian surfaces"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print entry ids with their parameters and constraint clauses
    List,
    /// Run every check on one entry and write a JSON report
    Verify(RunArgs),
    /// Run the checks over a grid of parameter tuples (--param name=start:stop:step)
    Sweep(RunArgs),
    /// Write the pointwise geometric fields as CSV
    DumpFields(RunArgs),
    /// First variation of area under seeded Hamiltonian bumps (C² entries only)
    Variation(RunArgs),
}

#[derive(Debug, Default, Args)]
struct RunArgs {
    #[arg(long)]
    entry: Option<String>,
    /// NAME=VALUE, repeatable; sweeps also accept NAME=START:STOP:STEP
    #[arg(long = "param", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    params: Vec<String>,
    /// Sample grid, e.g. 41x41
    #[arg(long, value_name = "NXxNY")]
    grid: Option<String>,
    /// Parameter window overriding the entry default
    #[arg(long, value_name = "X0:X1:Y0:Y1", allow_hyphen_values = true)]
    domain: Option<String>,
    /// strict, default or sweep (falls back to $HSL_PROFILE)
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with the same keys as the flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of bumps for `variation`
    #[arg(long)]
    bumps: Option<usize>,
    /// Record wall time in the report (makes reports non-reproducible)
    #[arg(long)]
    timing: bool,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    entry: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, toml::Value>,
    grid: Option<String>,
    domain: Option<String>,
    profile: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    bumps: Option<usize>,
    timing: Option<bool>,
}

/// A fully resolved command configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub entry: String,
    /// Raw parameter specifications: a number, or a start:stop:step range.
    pub params: BTreeMap<String, String>,
    pub grid: (usize, usize),
    pub domain: Option<Rect>,
    pub profile: ToleranceProfile,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub bumps: usize,
    pub timing: bool,
}

fn bad(clause: &str, message: impl Into<String>) -> HslError {
    HslError::bad_parameter(clause, message)
}

pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.ok_or_else(|| bad("grid NXxNY", format!("cannot parse grid '{s}'")))
}

pub fn parse_domain(s: &str) -> Result<Rect> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("domain x0:x1:y0:y1", format!("cannot parse domain '{s}'")))?;
    match v[..] {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 && v.iter().all(|c| c.is_finite()) => {
            Ok(Rect::new(x0, x1, y0, y1))
        }
        _ => Err(bad("domain x0:x1:y0:y1", format!("malformed domain '{s}'"))),
    }
}

/// A single number, or values start, start + step, … up to stop inclusive.
pub fn parse_values(name: &str, spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                bad(
                    &format!("{name} is a number"),
                    format!("cannot parse '{p}' for {name}"),
                )
            })
    };
    match parts[..] {
        [v] => Ok(vec![num(v)?]),
        [a, b, s] => {
            let (start, stop, step) = (num(a)?, num(b)?, num(s)?);
            if !(step > 0.0) || stop < start {
                return Err(bad(
                    "start ≤ stop, step > 0",
                    format!("malformed range '{spec}' for {name}"),
                ));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // rounding keeps 0.2·3 from printing as 0.6000000000000001
            Ok((0..=n)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(bad(
            "NAME=VALUE or NAME=START:STOP:STEP",
            format!("malformed value '{spec}' for {name}"),
        )),
    }
}

fn value_to_spec(v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::String(s) => Ok(s.clone()),
        other => Err(bad(
            "params are numbers or range strings",
            format!("unsupported value {other}"),
        )),
    }
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| HslError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| bad("valid TOML config", format!("{}: {e}", path.display())))
}

impl RunConfig {
    fn resolve(args: RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => load_config(p)?,
            None => ConfigFile::default(),
        };
        let entry = args
            .entry
            .or(file.entry)
            .ok_or_else(|| bad("--entry", "no entry given (see `hsl list`)"))?;
        let mut params = BTreeMap::new();
        for (k, v) in &file.params {
            params.insert(k.clone(), value_to_spec(v)?);
        }
        for p in &args.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| bad("--param NAME=VALUE", format!("malformed --param '{p}'")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let grid = match args.grid.or(file.grid) {
            Some(g) => parse_grid(&g)?,
            None => DEFAULT_GRID,
        };
        let domain = args
            .domain
            .or(file.domain)
            .map(|d| parse_domain(&d))
            .transpose()?;
        let profile = match args
            .profile
            .or(file.profile)
            .or_else(|| std::env::var(PROFILE_ENV).ok())
        {
            Some(p) => p.parse()?,
            None => ToleranceProfile::DEFAULT,
        };
        Ok(RunConfig {
            entry,
            params,
            grid,
            domain,
            profile,
            out: args.out.or(file.out),
            seed: args.seed.or(file.seed),
            bumps: args.bumps.or(file.bumps).unwrap_or(DEFAULT_BUMPS),
            timing: args.timing || file.timing.unwrap_or(false),
        })
    }

    /// Parameters as single numbers (ranges are only meaningful to `sweep`).
    fn scalar_params(&self) -> Result<Params> {
        self.params
            .iter()
            .map(|(k, v)| match parse_values(k, v)?[..] {
                [x] if !v.contains(':') => Ok((k.clone(), x)),
                _ => Err(bad(
                    &format!("{k} is a single number"),
                    format!("range '{v}' given for {k}; use `hsl sweep`"),
                )),
            })
            .collect()
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|e| HslError::Io(format!("{}: {e}", path.display())))
        }
        None => stdout.write_all(bytes).map_err(HslError::from),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn cmd_list() -> String {
    let mut s = String::new();
    for t in list_catalog() {
        s.push_str(&t.summary());
        s.push('\n');
    }
    let control = template(CONTROL_ID).expect("control template");
    s.push_str(&format!(
        "{}  [ambient {}; params: k (default {}); negative control, not stationary]\n",
        control.id, control.ambient, control.params[0].1
    ));
    s
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CheckReport> {
    let started = Instant::now();
    let entry = build_entry(&cfg.entry, &cfg.scalar_params()?)?;
    let mut report = run_checks(&entry, cfg.grid.0, cfg.grid.1, cfg.domain, &cfg.profile)?;
    report.seed = cfg.seed;
    if cfg.timing {
        report.wall_ms = Some(started.elapsed().as_millis() as u64);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TupleStatus {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstResidual {
    pub name: String,
    pub sup_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTuple {
    pub params: Params,
    pub status: TupleStatus,
    /// Violated constraint clause of a skipped tuple.
    pub clause: Option<String>,
    pub message: Option<String>,
    /// Valid, but within `NEAR_DEGENERATE_BAND` of a constraint boundary.
    pub near_degenerate: bool,
    pub checks: Vec<WorstResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entry: String,
    pub grid: [usize; 2],
    pub profile: ProfileName,
    pub tuples: Vec<SweepTuple>,
    pub summary: SweepSummary,
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let t = template(&cfg.entry)
        .ok_or_else(|| HslError::Unsupported(format!("unknown entry '{}'", cfg.entry)))?;
    let mut axes: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, spec) in &cfg.params {
        if !t.params.iter().any(|(n, _)| n == name) {
            return Err(bad(
                &format!("parameters of {}", t.id),
                format!("unknown parameter '{name}' for {}", t.id),
            ));
        }
        axes.push((name.clone(), parse_values(name, spec)?));
    }
    let mut tuples: Vec<Params> = vec![Params::new()];
    for (name, values) in &axes {
        tuples = tuples
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), *v);
                    q
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(tuples.len());
    for params in tuples {
        let row = match build_entry(&cfg.entry, &params) {
            Err(HslError::BadParameter { clause, message }) => SweepTuple {
                params,
                status: TupleStatus::Skipped,
                clause: Some(clause),
                message: Some(message),
                near_degenerate: false,
                checks: Vec::new(),
            },
            Err(e @ HslError::BadLift { .. }) => SweepTuple {
                params,
                status: TupleStatus::Error,
                clause: None,
                message: Some(e.to_string()),
                near_degenerate: true,
                checks: Vec::new(),
            },
            Err(e) => return Err(e),
            Ok(entry) => match run_checks(&entry, cfg.grid.0, cfg.grid.1, cfg.domain, &cfg.profile) {
                Ok(r) => SweepTuple {
                    params: entry.params.clone(),
                    status: if r.overall_pass {
                        TupleStatus::Pass
                    } else {
                        TupleStatus::Fail
                    },
                    clause: None,
                    message: None,
                    near_degenerate: near_degenerate(&cfg.entry, &entry.params),
                    checks: r
                        .checks
                        .iter()
                        .map(|c| WorstResidual {
                            name: c.name.clone(),
                            sup_residual: c.sup_residual,
                            pass: c.pass,
                        })
                        .collect(),
                },
                Err(e @ HslError::GridTooCoarse { .. }) => return Err(e),
                Err(e) => SweepTuple {
                    params: entry.params.clone(),
                    status: TupleStatus::Error,
                    clause: None,
                    message: Some(e.to_string()),
                    near_degenerate: near_degenerate(&cfg.entry, &entry.params),
                    checks: Vec::new(),
                },
            },
        };
        out.push(row);
    }
    let count = |s: TupleStatus| out.iter().filter(|t| t.status == s).count();
    let summary = SweepSummary {
        total: out.len(),
        passed: count(TupleStatus::Pass),
        failed: count(TupleStatus::Fail),
        skipped: count(TupleStatus::Skipped),
        errors: count(TupleStatus::Error),
    };
    if summary.total == summary.skipped {
        return Err(bad(
            &format!("constraints of {}", t.id),
            "no parameter tuple in the sweep satisfies the constraints",
        ));
    }
    Ok(SweepReport {
        entry: cfg.entry.clone(),
        grid: [cfg.grid.0, cfg.grid.1],
        profile: cfg.profile.name,
        tuples: out,
        summary,
    })
}

/// One CSV row of `dump-fields`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "absH")]
    pub abs_h: f64,
    #[serde(rename = "deltaAlpha")]
    pub delta_alpha: f64,
    #[serde(rename = "dAlpha")]
    pub d_alpha: f64,
    #[serde(rename = "nablaPerpH_norm")]
    pub nabla_perp_h_norm: f64,
    #[serde(rename = "nablaA_norm")]
    pub nabla_a_norm: f64,
    #[serde(rename = "rhoN")]
    pub rho_n: f64,
}

pub fn field_rows(cfg: &RunConfig) -> Result<Vec<FieldRow>> {
    let entry = build_entry(&cfg.entry, &cfg.scalar_params()?)?;
    let grid = Grid::new(
        cfg.grid.0,
        cfg.grid.1,
        cfg.domain.unwrap_or_else(|| entry.default_domain()),
    )?;
    let field = GeometryField::compute(&entry.immersion, grid)?;
    Ok(field
        .points
        .iter()
        .map(|p| FieldRow {
            x: p.x,
            y: p.y,
            k: p.k_intrinsic,
            abs_h: p.abs_h(),
            delta_alpha: p.delta_alpha,
            d_alpha: p.d_alpha,
            nabla_perp_h_norm: p.normal.nabla_perp_h_norm,
            nabla_a_norm: p.normal.nabla_a_norm,
            rho_n: p.normal.rho_n,
        })
        .collect())
}

pub fn fields_csv(rows: &[FieldRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HslError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| HslError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationOutput {
    pub params: Params,
    #[serde(flatten)]
    pub report: crate::variation::VariationReport,
}

pub fn cmd_variation(cfg: &RunConfig) -> Result<VariationOutput> {
    let entry = build_entry(&cfg.entry, &cfg.scalar_params()?)?;
    if entry.ambient.kind() != AmbientKind::FlatC2 {
        return Err(HslError::Unsupported(format!(
            "the variational oracle runs on C² entries only; {} lives in {}",
            entry.id, entry.ambient
        )));
    }
    let map = match cfg.domain {
        Some(d) => entry.immersion.clone().with_domain(d).with_periodic([false; 2]),
        None => entry.immersion.clone(),
    };
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let report = variation_report(&entry.id, &map, cfg.bumps, seed, VariationSettings::default())?;
    Ok(VariationOutput {
        params: entry.params,
        report,
    })
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let status = |ok: bool| if ok { 0 } else { 1 };
    match cli.command {
        Command::List => {
            stdout.write_all(cmd_list().as_bytes())?;
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = RunConfig::resolve(args)?;
            let report = cmd_verify(&cfg)?;
            emit(&cfg.out, &json_bytes(&report), stdout)?;
            for c in report.failed() {
                let at = c
                    .argmax_point
                    .map(|[x, y]| format!(" at ({x}, {y})"))
                    .unwrap_or_default();
                writeln!(
                    stderr,
                    "FAIL {}: {:e} ≥ {:e}{at}",
                    c.name, c.sup_residual, c.tolerance
                )?;
            }
            Ok(status(report.overall_pass))
        }
        Command::Sweep(args) => {
            let cfg = RunConfig::resolve(args)?;
            let report = cmd_sweep(&cfg)?;
            emit(&cfg.out, &json_bytes(&report), stdout)?;
            let s = &report.summary;
            writeln!(
                stderr,
                "{} tuples: {} passed, {} failed, {} skipped, {} errors",
                s.total, s.passed, s.failed, s.skipped, s.errors
            )?;
            Ok(status(s.failed == 0 && s.errors == 0))
        }
        Command::DumpFields(args) => {
            let cfg = RunConfig::resolve(args)?;
            let rows = field_rows(&cfg)?;
            emit(&cfg.out, &fields_csv(&rows)?, stdout)?;
            Ok(0)
        }
        Command::Variation(args) => {
            let cfg = RunConfig::resolve(args)?;
            let out = cmd_variation(&cfg)?;
            emit(&cfg.out, &json_bytes(&out), stdout)?;
            Ok(status(out.report.pass))
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
