//! Command-line front end.
//!
//! Every command writes its artifact to `--output` (stdout when absent).
//! Errors are reported by the binary as one JSON line on stderr with a
//! nonzero exit status.

mod validate;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{first_syzygy_report, BoundReport};
use crate::dynamics::InitialConditions;
use crate::error::{Error, Result};
use crate::events::{detect_events, write_events_csv, EventKind};
use crate::integrate::{integrate, IntegratorConfig};

pub use validate::{validate_figure_eight, Check, Relation, ValidationReport};

/// Version tag carried by every JSON document this tool writes.
pub const SCHEMA_VERSION: u32 = 1;
/// Default search horizon for the first syzygy in `bounds` and `scan`.
pub const DEFAULT_SEARCH_HORIZON: f64 = 20.0;
/// Slack for the `lower ≤ T_s ≤ upper` sandwich in `scan`.
pub const SANDWICH_SLACK: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "syzygy", version, about = "Planar three-body syzygies and first-syzygy bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate and write a trajectory CSV.
    Simulate,
    /// Integrate and write the located syzygies as CSV.
    Events,
    /// Compute the first-syzygy bound report as JSON.
    Bounds,
    /// Reproduce the figure-eight reference numbers.
    Validate,
    /// Bound reports for every record of a JSON Lines file.
    Scan,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Initial-condition JSON (JSON Lines or array for `scan`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// End time for `simulate`/`events`; search horizon for `bounds`/`scan` (default 20).
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Integrator relative tolerance (default 1e-10).
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Integrator absolute tolerance (default 1e-12).
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Lower end of the distance window.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Upper end of the distance window.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Comma-separated event kinds: syzygy, velocity_syzygy.
    #[arg(long, global = true)]
    pub kinds: Option<String>,
    /// Number of uniform trajectory samples in `simulate`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads for `scan` (default 1).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub t_end: Option<f64>,
    pub integrator: IntegratorConfig,
    pub kinds: Vec<EventKind>,
    pub window: Option<(f64, f64)>,
    pub samples: usize,
    pub workers: usize,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let o = &cli.options;
        let mut integrator = IntegratorConfig::default();
        if let Some(r) = o.rel_tol {
            integrator.rel_tol = r;
        }
        if let Some(a) = o.abs_tol {
            integrator.abs_tol = a;
        }
        integrator.validate()?;

        let kinds = match &o.kinds {
            None => EventKind::ALL.to_vec(),
            Some(s) => s
                .split(',')
                .map(|k| {
                    EventKind::parse(k).ok_or_else(|| Error::Config(format!("unknown event kind {k:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let window = match (o.alpha, o.beta) {
            (None, None) => None,
            (Some(a), Some(b)) => Some((a, b)),
            // a single override keeps the other end at its reference value
            (Some(a), None) if cli.command == Command::Validate => Some((a, crate::figure_eight::BETA)),
            (None, Some(b)) if cli.command == Command::Validate => Some((crate::figure_eight::ALPHA, b)),
            _ => return Err(Error::Config("--alpha and --beta must be given together".into())),
        };
        if let Some((a, b)) = window {
            if !(a > 0.0 && a < b) {
                return Err(Error::Config(format!(
                    "distance window needs 0 < alpha < beta, got alpha = {a}, beta = {b}"
                )));
            }
        }
        if let Some(t) = o.t_end {
            if !(t > 0.0) {
                return Err(Error::Config(format!("--t-end must be positive, got {t}")));
            }
        }
        let needs_input = !matches!(cli.command, Command::Validate);
        if needs_input && o.input.is_none() {
            return Err(Error::Config("--input is required".into()));
        }
        if matches!(cli.command, Command::Simulate | Command::Events) && o.t_end.is_none() {
            return Err(Error::Config("--t-end is required".into()));
        }
        for p in [&o.input, &o.output].into_iter().flatten() {
            if p.as_os_str().is_empty() {
                return Err(Error::Config("paths must be nonempty".into()));
            }
        }
        Ok(Self {
            command: cli.command,
            input: o.input.clone(),
            output: o.output.clone(),
            t_end: o.t_end,
            integrator,
            kinds,
            window,
            samples: o.samples.unwrap_or(1001).max(2),
            workers: o.workers.unwrap_or(1).max(1),
        })
    }
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn versioned_json<T: Serialize>(body: &T) -> String {
    serde_json::to_string(&Versioned {
        schema: SCHEMA_VERSION,
        body,
    })
    .expect("report types serialize")
}

/// Single-line JSON diagnostic for an error.
pub fn error_json(err: &Error) -> String {
    #[derive(Serialize)]
    struct Diagnostic<'a> {
        kind: &'a str,
        message: String,
    }
    #[derive(Serialize)]
    struct Wrapper<'a> {
        error: Diagnostic<'a>,
    }
    versioned_json(&Wrapper {
        error: Diagnostic {
            kind: err.kind(),
            message: err.to_string(),
        },
    })
}

fn read_input(cfg: &RunConfig) -> Result<String> {
    let path = cfg.input.as_ref().ok_or_else(|| Error::Config("--input is required".into()))?;
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open_output(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Parses scan input: a JSON array of documents or one document per line.
pub fn parse_records(text: &str) -> Result<Vec<InitialConditions>> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(InitialConditions::from_json)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub records: usize,
    pub reports: usize,
    pub errors: usize,
    pub sandwich_violations: usize,
}

/// Bound report (or error) per record, in input order.
pub fn scan_records(
    records: &[InitialConditions],
    t_max: f64,
    config: &IntegratorConfig,
    window: Option<(f64, f64)>,
    workers: usize,
) -> Result<Vec<Result<BoundReport>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let (masses, state) = rec.to_state()?;
                first_syzygy_report(&masses, &state, t_max, config, window)
            })
            .collect()
    }))
}

/// Executes one command, writing its artifact to the configured output.
pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Command::Simulate => {
            let (masses, state) = InitialConditions::from_json(&read_input(cfg)?)?.to_state()?;
            let t_end = cfg.t_end.expect("checked in from_cli");
            let traj = integrate(&masses, &state, t_end, &cfg.integrator)?;
            let mut out = open_output(cfg)?;
            traj.write_csv(&mut out, cfg.samples)?;
            out.flush()?;
            traj.require_complete().map(|_| ())
        }
        Command::Events => {
            let (masses, state) = InitialConditions::from_json(&read_input(cfg)?)?.to_state()?;
            let t_end = cfg.t_end.expect("checked in from_cli");
            let traj = integrate(&masses, &state, t_end, &cfg.integrator)?;
            let events = detect_events(&traj, &cfg.kinds);
            let mut out = open_output(cfg)?;
            write_events_csv(&mut out, &events)?;
            out.flush()?;
            traj.require_complete().map(|_| ())
        }
        Command::Bounds => {
            let (masses, state) = InitialConditions::from_json(&read_input(cfg)?)?.to_state()?;
            let t_max = cfg.t_end.unwrap_or(DEFAULT_SEARCH_HORIZON);
            let report = first_syzygy_report(&masses, &state, t_max, &cfg.integrator, cfg.window)?;
            let mut out = open_output(cfg)?;
            writeln!(out, "{}", versioned_json(&report))?;
            out.flush()?;
            Ok(())
        }
        Command::Validate => {
            let report = validate_figure_eight(&cfg.integrator, cfg.window)?;
            let mut out = open_output(cfg)?;
            writeln!(out, "{}", versioned_json(&report))?;
            out.flush()?;
            if report.passed {
                Ok(())
            } else {
                let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
                Err(Error::Validation(names.join(", ")))
            }
        }
        Command::Scan => {
            let records = parse_records(&read_input(cfg)?)?;
            let t_max = cfg.t_end.unwrap_or(DEFAULT_SEARCH_HORIZON);
            let results = scan_records(&records, t_max, &cfg.integrator, cfg.window, cfg.workers)?;
            let mut out = open_output(cfg)?;
            let mut summary = ScanSummary {
                records: records.len(),
                reports: 0,
                errors: 0,
                sandwich_violations: 0,
            };
            for (index, res) in results.iter().enumerate() {
                match res {
                    Ok(rep) => {
                        summary.reports += 1;
                        if rep.sandwich_holds(SANDWICH_SLACK) == Some(false) {
                            summary.sandwich_violations += 1;
                        }
                        writeln!(out, "{}", versioned_json(rep))?;
                    }
                    Err(e) => {
                        summary.errors += 1;
                        #[derive(Serialize)]
                        struct RecordError<'a> {
                            index: usize,
                            error: &'a str,
                            message: String,
                        }
                        writeln!(
                            out,
                            "{}",
                            versioned_json(&RecordError {
                                index,
                                error: e.kind(),
                                message: e.to_string(),
                            })
                        )?;
                    }
                }
            }
            #[derive(Serialize)]
            struct SummaryLine<'a> {
                summary: &'a ScanSummary,
            }
            writeln!(out, "{}", versioned_json(&SummaryLine { summary: &summary }))?;
            out.flush()?;
            if summary.sandwich_violations > 0 {
                return Err(Error::Validation(format!(
                    "{} sandwich violations",
                    summary.sandwich_violations
                )));
            }
            Ok(())
        }
    }
}
