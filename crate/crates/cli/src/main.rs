//! `expcomplete`: JSON-in, JSON-out driver for the library.
//!
//! Exit status is 0 on success, 2 when the input is invalid and 3 when the
//! numerics gave up in a way that blocks the requested answer. Reports carry
//! no timestamps or host data, so identical inputs give identical bytes.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use expcomplete_core::criteria::{self, bm_radius, bm_series, sector_test, Evidence, SeriesFlag};
use expcomplete_core::search::{maximize, scale_sweep};
use expcomplete_core::testfn::Check;
use expcomplete_core::transforms::{hilbert, hilbert_derivative, poisson};
use expcomplete_core::{evaluate, verify_membership, Error, Status};

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "expcomplete", version, about = "Completeness functional, transforms and criteria")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON, "schema": 1).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Exponential type σ; replaces sigma/d from the config.
    #[arg(long, global = true, conflicts_with = "d")]
    sigma: Option<f64>,

    /// Segment length d = 2σ; replaces sigma/d from the config.
    #[arg(long, global = true)]
    d: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    rel_tol: Option<f64>,

    #[arg(long, global = true)]
    abs_tol: Option<f64>,

    #[arg(long, global = true)]
    max_depth: Option<u32>,

    /// Directory for `<command>.json` (and `<command>.csv`); stdout if absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Also write plot data as CSV (sweep only; needs --out).
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Membership report for the configured test function.
    VerifyTestfn,
    /// Hilbert transform and (-Hφ)' at the configured x values.
    Hilbert,
    /// Poisson integral at the configured z values.
    Poisson,
    /// The completeness functional for one test function.
    Functional,
    /// Per-space verdicts from the enabled criteria.
    Classify,
    /// Bracket for the critical c of the Beurling–Malliavin series.
    BmRadius,
    /// Maximize the functional over the configured family.
    Search,
    /// Maximize over increasing support radii.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyTestfn => "verify-testfn",
            Command::Hilbert => "hilbert",
            Command::Poisson => "poisson",
            Command::Functional => "functional",
            Command::Classify => "classify",
            Command::BmRadius => "bm-radius",
            Command::Search => "search",
            Command::Sweep => "sweep",
        }
    }
}

/// Report body plus whether the numerics blocked the answer.
struct Outcome {
    result: Value,
    csv: Option<String>,
    blocked: Option<String>,
}

impl Outcome {
    fn new(result: impl Serialize) -> Result<Self, Failure> {
        Ok(Self {
            result: to_value(result)?,
            csv: None,
            blocked: None,
        })
    }
}

fn to_value(v: impl Serialize) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Numerical(format!("serialization failed: {e}")))
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let phi = cfg.function()?;
    let report = verify_membership(&phi, cfg.quadrature())?;
    let blocked = (report.conjugate_positivity.check == Check::Inconclusive)
        .then(|| "conjugate positivity is inconclusive".to_string());
    Ok(Outcome {
        blocked,
        ..Outcome::new(json!({ "function": phi, "membership": report }))?
    })
}

fn run_hilbert(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let phi = cfg.function()?;
    if cfg.x.is_empty() {
        return Err(Failure::Validation("x: at least one evaluation point is required".into()));
    }
    let q = cfg.quadrature();
    let mut rows = Vec::new();
    let mut blocked = None;
    for &x in &cfg.x {
        let h = hilbert(&phi, x, q)?;
        let derivative = if phi.in_zero_set(x) {
            None
        } else {
            Some(hilbert_derivative(&phi, x, q)?)
        };
        let failed = h.status == Status::SingularFailure
            || derivative.is_some_and(|d| d.result.status == Status::SingularFailure);
        if failed && blocked.is_none() {
            blocked = Some(format!("quadrature failed at x = {x}"));
        }
        rows.push(json!({ "x": x, "hilbert": h, "hilbert_inverse": h.negated(), "derivative": derivative }));
    }
    Ok(Outcome {
        blocked,
        ..Outcome::new(json!({ "function": phi, "points": rows }))?
    })
}

fn run_poisson(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let phi = cfg.function()?;
    if cfg.z.is_empty() {
        return Err(Failure::Validation("z: at least one evaluation point is required".into()));
    }
    let mut rows = Vec::new();
    let mut blocked = None;
    for &z in &cfg.z {
        let p = poisson(&phi, z, cfg.quadrature())?;
        if p.status == Status::SingularFailure && blocked.is_none() {
            blocked = Some(format!("quadrature failed at z = {} + {}i", z.re, z.im));
        }
        rows.push(json!({ "z": z, "poisson": p }));
    }
    Ok(Outcome {
        blocked,
        ..Outcome::new(json!({ "function": phi, "points": rows }))?
    })
}

fn run_functional(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = cfg.sequence()?;
    let t = cfg.type_parameter()?;
    let phi = cfg.function()?;
    let membership = verify_membership(&phi, cfg.quadrature())?;
    if cfg.require_membership && !membership.overall {
        return Err(Failure::Validation(format!(
            "test function is not admissible: {}",
            membership.reason.clone().unwrap_or_default()
        )));
    }
    let report = evaluate(&seq, &t, &phi, cfg.quadrature())?;
    let blocked = (report.status == Status::SingularFailure).then(|| "quadrature failed in the functional".into());
    Ok(Outcome {
        blocked,
        ..Outcome::new(json!({
            "membership_overall": membership.overall,
            "shifted_indices": seq.shifted_indices(),
            "report": report,
        }))?
    })
}

fn run_classify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = cfg.sequence()?;
    let t = cfg.type_parameter()?;
    let d = t.d_value();
    let c = &cfg.criteria;

    let sector = c.sector.map(|s| sector_test(&seq, s.alpha, d)).transpose()?;
    let series = c
        .bm_series
        .as_ref()
        .map(|b| bm_series(&seq, b.c, &b.assignment))
        .transpose()?;
    let radius = c.bm_radius.map(|b| bm_radius(&seq, b.c_lo, b.c_hi, b.tol)).transpose()?;
    let sweep = if c.sweep {
        Some(scale_sweep(&seq, &t, cfg.family()?, &cfg.search.radii, &cfg.search_options()?)?)
    } else {
        None
    };
    let evidence = Evidence {
        sector: sector.as_ref(),
        bm_series: series.as_ref(),
        bm_radius: radius.as_ref(),
        sweep: sweep.as_ref(),
    };
    let verdicts = criteria::classify(d, &evidence)?;

    // Per-point assignments are omitted; the flag and sums carry the finding.
    let series_summary = series.as_ref().map(|s| {
        json!({
            "c": s.c,
            "series": s.series,
            "partial_sums": s.partial_sums,
            "convergence": s.convergence,
        })
    });
    let blocked = series
        .as_ref()
        .is_some_and(|s| s.convergence.flag == SeriesFlag::Unknown)
        .then(|| "series convergence undecided".into())
        .filter(|_| verdicts.iter().all(|v| v.criterion.is_none()));
    Ok(Outcome {
        blocked,
        ..Outcome::new(json!({
            "d": d,
            "sigma": t.sigma_value(),
            "shifted_indices": seq.shifted_indices(),
            "sector": sector,
            "bm_series": series_summary,
            "bm_radius": radius,
            "sweep": sweep,
            "verdicts": verdicts,
        }))?
    })
}

fn run_bm_radius(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = cfg.sequence()?;
    let b = cfg
        .criteria
        .bm_radius
        .ok_or_else(|| Failure::Validation("criteria.bm_radius is required".into()))?;
    Outcome::new(bm_radius(&seq, b.c_lo, b.c_hi, b.tol)?)
}

fn run_search(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = cfg.sequence()?;
    let t = cfg.type_parameter()?;
    Outcome::new(maximize(&seq, &t, cfg.family()?, &cfg.search_options()?)?)
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = cfg.sequence()?;
    let t = cfg.type_parameter()?;
    let report = scale_sweep(&seq, &t, cfg.family()?, &cfg.search.radii, &cfg.search_options()?)?;
    let csv = report.to_csv();
    Ok(Outcome {
        csv: Some(csv),
        ..Outcome::new(report)?
    })
}

fn write_output(out: Option<&Path>, stem: &str, body: &str, csv: Option<&str>) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Validation(format!("cannot write output: {e}"));
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io)?;
            fs::write(dir.join(format!("{stem}.json")), body).map_err(io)?;
            if let Some(csv) = csv {
                fs::write(dir.join(format!("{stem}.csv")), csv).map_err(io)?;
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Option<String>, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Validation("--config FILE is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&Overrides {
        sigma: cli.sigma,
        d: cli.d,
        seed: cli.seed,
        rel_tol: cli.rel_tol,
        abs_tol: cli.abs_tol,
        max_depth: cli.max_depth,
    });
    cfg.validate()?;
    if cli.csv && (cli.out.is_none() || !matches!(cli.command, Command::Sweep)) {
        return Err(Failure::Validation("--csv needs --out and the sweep subcommand".into()));
    }

    let outcome = match cli.command {
        Command::VerifyTestfn => run_verify(&cfg),
        Command::Hilbert => run_hilbert(&cfg),
        Command::Poisson => run_poisson(&cfg),
        Command::Functional => run_functional(&cfg),
        Command::Classify => run_classify(&cfg),
        Command::BmRadius => run_bm_radius(&cfg),
        Command::Search => run_search(&cfg),
        Command::Sweep => run_sweep(&cfg),
    }?;

    let report = json!({
        "schema": config::SCHEMA_VERSION,
        "command": cli.command.name(),
        "config": cfg,
        "result": outcome.result,
    });
    let mut body = serde_json::to_string_pretty(&report).map_err(|e| Failure::Numerical(e.to_string()))?;
    body.push('\n');
    let csv = if cli.csv { outcome.csv.as_deref() } else { None };
    write_output(cli.out.as_deref(), cli.command.name(), &body, csv)?;
    Ok(outcome.blocked)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("error: {reason}");
            ExitCode::from(3)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
