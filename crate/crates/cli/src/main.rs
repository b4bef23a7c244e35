//! `fuchs-reduce`: list the catalog, reduce an entry, verify it, or dump
//! samples of its reduced coefficients.
//!
//! Exit codes: 0 when everything passed, 1 when a verification failed, 2 on
//! any operational error (unknown entry, bad flag value, I/O).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fuchs_core::catalog::{self, parse_rational, CatalogEntry};
use fuchs_core::report::{reduce_document, sample_csv, write_atomic, SCHEMA};
use fuchs_core::verify::{full_reports, prepare, Config, VerificationReport};
use fuchs_core::C64;

#[derive(Parser, Debug)]
#[command(name = "fuchs-reduce", version, about = "Reduce isomonodromic Lax pairs to deformation-free scalar equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog entries.
    List {
        /// Only entries of this family (PII, PIII, PIV, PV).
        #[arg(long)]
        family: Option<String>,
    },
    /// Print the decomposition, case and classical target of an entry.
    Reduce { id: String },
    /// Run every check on one entry (or all of them) and write JSON reports.
    Verify {
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        id: Option<String>,
        #[arg(long)]
        all: bool,
        /// Directory for the per-entry reports.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Write random samples of (τ, P, Q) as CSV.
    Sample {
        id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(short, long, default_value_t = 64)]
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct Opts {
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Override a parameter with an exact rational, e.g. `theta_inf=5/2`.
    #[arg(long = "param", global = true, value_name = "NAME=P/Q")]
    params: Vec<String>,
    /// Basepoint of the x-integrals, as `re,im`.
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    basepoint: Option<C64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_frobenius: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_flow: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_scalar: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_decomposition: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_independence: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_match: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_target: Option<f64>,
    #[arg(long, global = true, value_parser = positive)]
    tol_crossval: Option<f64>,
    /// Number of τ-matched pairs in the independence check.
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long, global = true)]
    frobenius_grid: Option<usize>,
    #[arg(long, global = true)]
    crossval_points: Option<usize>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("tolerance must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(C64::new(re, im))
}

struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

impl Opts {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format.unwrap_or(Format::Text)
        }
    }

    fn config(&self) -> Result<Config, Failure> {
        let mut c = Config { seed: self.seed, basepoint: self.basepoint, ..Config::default() };
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure(format!("--param expects NAME=VALUE, got `{kv}`")))?;
            c.params.insert(k.trim().to_string(), parse_rational(v.trim())?);
        }
        let tols = [
            (self.tol_frobenius, &mut c.tol_frobenius),
            (self.tol_flow, &mut c.tol_flow),
            (self.tol_scalar, &mut c.tol_scalar),
            (self.tol_decomposition, &mut c.tol_decomposition),
            (self.tol_independence, &mut c.tol_independence),
            (self.tol_match, &mut c.tol_match),
            (self.tol_target, &mut c.tol_target),
            (self.tol_crossval, &mut c.tol_crossval),
        ];
        for (v, slot) in tols {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(n) = self.pairs {
            c.pairs = n;
        }
        if let Some(n) = self.frobenius_grid {
            c.frobenius_grid = n;
        }
        if let Some(n) = self.crossval_points {
            c.crossval_points = n;
        }
        Ok(c)
    }
}

/// Writes to stdout, ignoring a closed pipe (`| head`).
fn emit(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_list(opts: &Opts, family: Option<&str>) -> Result<ExitCode, Failure> {
    let mut entries: Vec<CatalogEntry> = Vec::new();
    for id in catalog::all_entries() {
        let e = catalog::lookup(id)?;
        if family.is_none_or(|f| e.family.matches(f)) {
            entries.push(e);
        }
    }
    if opts.format() == Format::Json {
        let docs = entries
            .iter()
            .map(|e| catalog::manifest(&e.id))
            .collect::<Result<Vec<Value>, _>>()?;
        emit(&pretty(&docs));
        return Ok(ExitCode::SUCCESS);
    }
    for e in &entries {
        let params = e
            .parameters
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let target = catalog::manifest(&e.id)?["expected_target"].to_string();
        let flag = if e.negative { "  [negative control]" } else { "" };
        emit(&format!("{:<22} {:<9} {:<7} {:<28} {}{}\n", e.id, e.family.name(), component(e), params, target, flag));
    }
    Ok(ExitCode::SUCCESS)
}

fn component(e: &CatalogEntry) -> &'static str {
    match e.component.index() {
        0 => "first",
        _ => "second",
    }
}

fn cmd_reduce(opts: &Opts, id: &str) -> Result<ExitCode, Failure> {
    let config = opts.config()?;
    let pipeline = prepare(id, &config)?;
    let doc = reduce_document(&pipeline, &config)?;
    emit(&pretty(&doc));
    Ok(ExitCode::SUCCESS)
}

fn summary_line(r: &VerificationReport) -> String {
    let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2e}"));
    let mut line = format!(
        "{} {:<22} case={:<12} match={:<16} frobenius={} indep={} match_res={} crossval={}",
        if r.passed { "PASS" } else { "FAIL" },
        r.id,
        r.case.map_or("-".to_string(), |c| c.to_string()),
        r.matched.kind(),
        num(r.frobenius_max),
        num(r.t_independence_max),
        num(r.match_residual),
        num(r.cross_validation_residual),
    );
    if r.negative_control {
        line.push_str(" [negative control]");
    }
    for e in &r.errors {
        line.push_str(&format!("\n    {e}"));
    }
    line
}

fn cmd_verify(opts: &Opts, id: Option<&str>, all: bool, out_dir: &Path) -> Result<ExitCode, Failure> {
    let config = opts.config()?;
    let ids: Vec<&str> = if all {
        catalog::list_entries()
    } else {
        vec![id.expect("clap requires an id without --all")]
    };
    std::fs::create_dir_all(out_dir)?;
    let mut reports = full_reports(&ids, &config).into_iter().collect::<Result<Vec<_>, _>>()?;
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    for r in &reports {
        write_atomic(&out_dir.join(format!("{}.json", r.id)), pretty(r).as_bytes())?;
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    if opts.format() == Format::Json {
        let rows: Vec<Value> = reports
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "passed": r.passed,
                    "report": out_dir.join(format!("{}.json", r.id)),
                })
            })
            .collect();
        emit(&pretty(&json!({ "schema": SCHEMA, "passed": passed, "total": reports.len(), "reports": rows })));
    } else {
        for r in &reports {
            emit(&format!("{}\n", summary_line(r)));
        }
        emit(&format!("{passed}/{} passed\n", reports.len()));
    }
    Ok(if passed == reports.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_sample(opts: &Opts, id: &str, out: &Path, n: usize) -> Result<ExitCode, Failure> {
    let config = opts.config()?;
    let pipeline = prepare(id, &config)?;
    let csv = sample_csv(&pipeline, n, config.seed)?;
    write_atomic(out, csv.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let opts = &cli.opts;
    let res = match &cli.command {
        Command::List { family } => cmd_list(opts, family.as_deref()),
        Command::Reduce { id } => cmd_reduce(opts, id),
        Command::Verify { id, all, out_dir } => cmd_verify(opts, id.as_deref(), *all, out_dir),
        Command::Sample { id, out, n } => cmd_sample(opts, id, out, *n),
    };
    match res {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
