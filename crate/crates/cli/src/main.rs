//! `pbedg`: runs the benchmark cases and writes reports, profiles and EOC tables.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use pbedg::diagnostics::{EocTable, ErrorReport, MomentReport};
use pbedg::experiment::{eoc_battery, run, RunResult};
use pbedg::limiter::LimiterMode;
use pbedg::timeloop::{RunTrace, TimeMethod};
use serde::Serialize;

use crate::config::{parse_limiter, parse_method, CliConfig};

const EXIT_THRESHOLD: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pbedg", version, about = "DG solver for aggregation-breakage population balances")]
struct Args {
    /// JSON config; flags given on the command line override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test case: 1a, 1b, 1c, 2a, 2b, 3, 4a or 4b.
    #[arg(long)]
    case: Option<String>,
    #[arg(long = "N")]
    cells: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Gauss points per cell (default k + 1).
    #[arg(long = "Q")]
    order: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// euler, rk2 or rk3.
    #[arg(long, value_parser = parse_method)]
    rk: Option<TimeMethod>,
    /// on, off, gauss_only or full.
    #[arg(long, value_parser = parse_limiter)]
    limiter: Option<Option<LimiterMode>>,
    /// Cap the step by the positivity CFL bound.
    #[arg(long)]
    cfl: bool,
    /// Comma-separated mesh sizes; runs an EOC battery instead of one solve.
    #[arg(long, value_delimiter = ',')]
    eoc: Option<Vec<usize>>,
    /// Output directory (falls back to $PBEDG_OUT_DIR, then `.`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Args {
    fn resolve(&self) -> Result<CliConfig> {
        let mut c = match &self.config {
            Some(path) => CliConfig::load(path)?,
            None => CliConfig::default(),
        };
        if let Some(case) = &self.case {
            c.case = case.parse()?;
        }
        if let Some(n) = self.cells {
            c.cells = n;
        }
        if let Some(k) = self.k {
            c.k = k;
        }
        if self.order.is_some() {
            c.order = self.order;
        }
        if let Some(t) = self.t_end {
            c.time.t_end = t;
        }
        if let Some(dt) = self.dt {
            c.time.dt = dt;
        }
        if let Some(m) = self.rk {
            c.time.method = m;
        }
        if let Some(l) = self.limiter {
            c.time.limiter = l.is_some();
            if let Some(mode) = l {
                c.time.limiter_mode = mode;
            }
        }
        if self.cfl {
            c.time.use_cfl_bound = true;
        }
        if let Some(cells) = &self.eoc {
            c.eoc_cells = Some(cells.clone());
        }
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("PBEDG_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    bound: String,
    pass: bool,
}

fn upper(name: &'static str, value: f64, bound: Option<f64>) -> Option<Check> {
    bound.map(|b| Check {
        name,
        value,
        bound: format!("<= {b:e}"),
        pass: value <= b,
    })
}

fn range(name: &'static str, value: Option<f64>, bound: Option<[f64; 2]>) -> Option<Check> {
    bound.map(|[lo, hi]| {
        let v = value.unwrap_or(f64::NAN);
        Check {
            name,
            value: v,
            bound: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&v),
        }
    })
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    config: &'a CliConfig,
    final_time: f64,
    trace: &'a RunTrace,
    initial_limiter_touched: usize,
    initial_errors: Option<&'a ErrorReport>,
    errors: Option<&'a ErrorReport>,
    moments: &'a MomentReport,
    checks: Vec<Check>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct EocReport<'a> {
    config: &'a CliConfig,
    table: &'a EocTable,
    checks: Vec<Check>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct FailureReport<'a> {
    config: &'a CliConfig,
    error: String,
}

fn stem(c: &CliConfig, cells: usize) -> String {
    format!("{}_N{}_k{}", c.case, cells, c.k)
}

fn single_run(c: &CliConfig, dir: &std::path::Path, result: &RunResult) -> Result<bool> {
    let th = &c.thresholds;
    let mut checks: Vec<Check> = Vec::new();
    if let Some(e) = &result.errors {
        checks.extend(upper("e_h", e.e_h, th.max_e_h));
        checks.extend(upper("e_hd", e.e_hd, th.max_e_hd));
    } else {
        checks.extend(upper("e_h", f64::NAN, th.max_e_h));
        checks.extend(upper("e_hd", f64::NAN, th.max_e_hd));
    }
    let worst_moment = result
        .moments
        .relative_errors
        .iter()
        .flatten()
        .fold(0.0, |a: f64, &b| a.max(b));
    checks.extend(upper("moment_error", worst_moment, th.max_moment_error));
    checks.extend(range("eoc_h", None, th.eoc_h));
    checks.extend(range("eoc_hd", None, th.eoc_hd));
    let pass = checks.iter().all(|c| c.pass);

    let name = stem(c, c.cells);
    let case = c.spec(c.cells).case_spec()?;
    let solution = case.solution();
    for snap in &result.outcome.snapshots {
        let reference = solution.as_ref().map(|s| (s, snap.time));
        let path = dir.join(format!("profile_{name}_t{}.csv", output::time_tag(snap.time)));
        output::emit_profile(&path, snap, &result.mesh, reference)?;
    }
    output::write_moments(&dir.join(format!("moments_{name}.json")), &result.moments)?;
    let report = RunReport {
        config: c,
        final_time: result.outcome.state.time,
        trace: &result.outcome.trace,
        initial_limiter_touched: result.initial_limiter.as_ref().map_or(0, |r| r.touched),
        initial_errors: result.initial_errors.as_ref(),
        errors: result.errors.as_ref(),
        moments: &result.moments,
        checks,
        pass,
    };
    output::write(&dir.join("runreport.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(pass)
}

fn battery(c: &CliConfig, dir: &std::path::Path, table: &EocTable) -> Result<bool> {
    let th = &c.thresholds;
    let finest = table.rows.last().expect("at least two rows");
    let mut checks: Vec<Check> = Vec::new();
    checks.extend(upper("e_h", finest.e_h, th.max_e_h));
    checks.extend(upper("e_hd", finest.e_hd.unwrap_or(f64::NAN), th.max_e_hd));
    checks.extend(range("eoc_h", table.finest_eoc_h(), th.eoc_h));
    checks.extend(range("eoc_hd", table.finest_eoc_hd(), th.eoc_hd));
    checks.extend(upper("moment_error", f64::NAN, th.max_moment_error));
    let pass = checks.iter().all(|c| c.pass);
    output::write_eoc(dir, &format!("eoc_{}_k{}", c.case, c.k), table)?;
    let report = EocReport {
        config: c,
        table,
        checks,
        pass,
    };
    output::write(&dir.join("runreport.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(pass)
}

fn execute(c: &CliConfig, dir: &std::path::Path) -> Result<Result<bool, pbedg::Error>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let outcome = match &c.eoc_cells {
        Some(cells) => match eoc_battery(c.case, c.k, cells, &c.time, c.order) {
            Ok(table) => {
                print!("{}", table.to_markdown());
                Ok(battery(c, dir, &table)?)
            }
            Err(e) => Err(e),
        },
        None => match run(&c.spec(c.cells)) {
            Ok(result) => {
                if let Some(e) = &result.errors {
                    println!("case {} N={} k={}: t = {}, e_h = {:.3e}, e_hd = {:.3e}", c.case, c.cells, c.k, result.outcome.state.time, e.e_h, e.e_hd);
                } else {
                    println!("case {} N={} k={}: t = {}", c.case, c.cells, c.k, result.outcome.state.time);
                }
                Ok(single_run(c, dir, &result)?)
            }
            Err(e) => Err(e),
        },
    };
    if let Err(e) = &outcome {
        let report = FailureReport {
            config: c,
            error: e.to_string(),
        };
        output::write(&dir.join("runreport.json"), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match execute(&config, &args.out_dir()) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => {
            eprintln!("thresholds not met; see runreport.json");
            ExitCode::from(EXIT_THRESHOLD)
        }
        Ok(Err(e)) => {
            eprintln!("solver error: {e}");
            match e {
                pbedg::Error::InvalidArgument(_) | pbedg::Error::Validity { .. } | pbedg::Error::UnknownKernel(_) => {
                    ExitCode::from(EXIT_INVALID)
                }
                _ => ExitCode::from(EXIT_SOLVER),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
