//! Subcommands and their mapping onto exit statuses.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tcohom::calculus::{self, OperatorKind};
use tcohom::cohomo::{
    cohomology_dims_with, nondeldelbar_degrees, table_csv, table_json, table_text, CohomoError, CohomologyTable,
    EngineKind, EngineOptions, Theory, CSV_HEADER,
};
use tcohom::lattice::{classify_theta, divisor_decay_profile, Classification, ClassifyOptions, DEFAULT_PRECISION_BITS};
use tcohom::primitives::{solve, Aeppli11Path, Gauge, SolveOptions, SolverKind};
use tcohom::specform::{parse_form, serialize_form, SpectralForm};
use tcohom::suites::{self, Suite, SuiteConfig};
use tcohom::Lattice;

use crate::config::{self, Format, RunConfig, EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_PRECONDITION, EXIT_USAGE};
use crate::diagnose;

#[derive(Debug, Parser)]
#[command(name = "tcohom", version, about = "Cohomology of two-dimensional toroidal groups")]
#[command(after_help = "Exit status: 0 success, 1 numerical or suite failure, 2 inconclusive classification, \
3 solver precondition violated, 64 malformed input or configuration.")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Lattice JSON file; the lattice tau = i, p = sqrt 2, q = 0 when absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub lattice: Option<PathBuf>,
    /// Truncation as N,K,M: mode shell, polynomial degree, exponential index.
    #[arg(long, global = true, value_name = "N,K,M", default_value = "2,2,2")]
    pub trunc: String,
    /// Relative rank tolerance.
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    /// Working precision in bits.
    #[arg(long, global = true, value_name = "BITS", env = "TCOHOM_PRECISION", default_value_t = DEFAULT_PRECISION_BITS)]
    pub precision: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output directory for solution bundles.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Rank decisions over the exact quadratic field instead of floating point.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether the lattice is a theta group and print the certificate.
    Classify {
        /// Largest n scanned for the Diophantine bound.
        #[arg(long, default_value_t = 10_000)]
        max_n: u64,
    },
    /// Apply a differential operator to a form file.
    Apply {
        #[arg(long, value_parser = parse_operator)]
        op: OperatorKind,
        input: PathBuf,
    },
    /// Compute a cohomology table.
    Table {
        /// Theory name, or `all`.
        #[arg(long, value_parser = parse_theory, required_unless_present = "all")]
        theory: Option<TheoryChoice>,
        /// Every theory plus the Delta and third-cohomology lines.
        #[arg(long, conflicts_with = "theory")]
        all: bool,
    },
    /// Solve for primitives of a form file and write the solution bundle.
    Solve {
        #[arg(long, value_parser = parse_solver)]
        solver: SolverKind,
        input: PathBuf,
        /// Construction of the (1,1) Aeppli solver.
        #[arg(long, value_enum, default_value_t = PathChoice::Periodic)]
        path: PathChoice,
        /// Seeded gauge instead of the canonical one.
        #[arg(long, value_name = "SEED")]
        gauge_seed: Option<u64>,
    },
    /// Small-divisor decay profile with a fitted envelope.
    Diagnose {
        #[arg(long, default_value_t = 20)]
        shells: u32,
    },
    /// Run the seeded invariant suites.
    Check {
        #[arg(long, value_parser = parse_suite)]
        suite: Option<Suite>,
        /// Random cases per suite.
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoryChoice {
    One(Theory),
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Periodic,
    Cover,
}

fn parse_operator(s: &str) -> Result<OperatorKind, String> {
    s.parse()
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_theory(s: &str) -> Result<TheoryChoice, String> {
    if s == "all" {
        Ok(TheoryChoice::All)
    } else {
        s.parse().map(TheoryChoice::One)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{message}")]
    Failure { message: String, hint: Option<String> },
}

impl CliError {
    pub fn status(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Failure { .. } => EXIT_FAILURE,
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliError::Failure { message: message.into(), hint: None }
    }
}

impl From<CohomoError> for CliError {
    fn from(e: CohomoError) -> Self {
        match e {
            CohomoError::InvalidTruncation(_) | CohomoError::NotExact => CliError::Usage(e.to_string()),
            CohomoError::RankAmbiguous { .. } => CliError::Failure {
                message: e.to_string(),
                hint: Some(
                    "raise --precision (or TCOHOM_PRECISION) or pass --exact on a quadratic-field lattice".into(),
                ),
            },
            _ => CliError::failure(e.to_string()),
        }
    }
}

/// Text for the two streams plus the exit status.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub status: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output { stdout, ..Output::default() }
    }
}

pub fn resolve(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig {
        lattice: config::load_lattice(g.lattice.as_ref()).map_err(CliError::Usage)?,
        trunc: config::parse_truncation(&g.trunc, g.tol).map_err(CliError::Usage)?,
        precision_bits: config::check_precision(g.precision).map_err(CliError::Usage)?,
        format: g.format,
        output: g.output.clone(),
        seed: g.seed,
    })
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let cfg = resolve(&cli.global)?;
    let engine = EngineOptions {
        engine: if cli.global.exact { EngineKind::Exact } else { EngineKind::Float },
        precision_bits: cfg.precision_bits,
    };
    match &cli.command {
        Command::Classify { max_n } => cmd_classify(&cfg, *max_n),
        Command::Apply { op, input } => cmd_apply(&cfg, *op, input),
        Command::Table { theory, all } => {
            let choice = if *all { TheoryChoice::All } else { theory.unwrap_or(TheoryChoice::All) };
            cmd_table(&cfg, &engine, choice)
        }
        Command::Solve { solver, input, path, gauge_seed } => {
            let opts = SolveOptions {
                trunc: cfg.trunc,
                precision_bits: cfg.precision_bits,
                gauge: gauge_seed.map_or(Gauge::Canonical, Gauge::Seeded),
                aeppli11_path: match path {
                    PathChoice::Periodic => Aeppli11Path::Periodic,
                    PathChoice::Cover => Aeppli11Path::Cover,
                },
            };
            cmd_solve(&cfg, *solver, input, &opts)
        }
        Command::Diagnose { shells } => cmd_diagnose(&cfg, *shells),
        Command::Check { suite, cases } => cmd_check(&cfg, *suite, *cases),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| format!("{v}"))
}

pub fn cmd_classify(cfg: &RunConfig, max_n: u64) -> Result<Output, CliError> {
    let opts = ClassifyOptions { max_n, precision_bits: cfg.precision_bits, ..ClassifyOptions::default() };
    let cert = classify_theta(&cfg.lattice, &opts);
    let stdout = match cfg.format {
        Format::Text => {
            let mut s = format!("lattice: {}\nclassification: {}\n", cfg.lattice, cert.classification.name());
            let _ = writeln!(s, "method: {:?}", cert.method);
            let _ = writeln!(s, "C_est: {}", opt_num(cert.c_est));
            let _ = writeln!(s, "delta_est: {}", opt_num(cert.delta_est));
            if let Some(c) = cert.certified_coordinate {
                let _ = writeln!(s, "certified coordinate: {c}");
            }
            if let Some(b) = cert.partial_quotient_bound {
                let _ = writeln!(s, "partial quotient bound: {b}");
            }
            if let Some(n) = cert.witness_n {
                let _ = writeln!(s, "witness n: {n}");
            }
            if let Some(d) = &cert.diagnostic {
                let _ = writeln!(s, "diagnostic: {d}");
            }
            s
        }
        Format::Csv => cert.samples_csv(),
        Format::Json => pretty(&json!({
            "classification": cert.classification.name(),
            "method": format!("{:?}", cert.method),
            "C_est": cert.c_est,
            "delta_est": cert.delta_est,
            "certified_coordinate": cert.certified_coordinate,
            "partial_quotient_bound": cert.partial_quotient_bound,
            "witness_n": cert.witness_n,
            "precision_bits": cert.precision_bits,
            "diagnostic": cert.diagnostic,
            "samples": cert.samples.iter().map(|(n, d)| json!([n, d])).collect::<Vec<_>>(),
        })),
    };
    let status = if cert.classification == Classification::Inconclusive { EXIT_INCONCLUSIVE } else { 0 };
    Ok(Output { stdout, stderr: String::new(), status })
}

fn read_form(path: &Path, lattice: &Arc<Lattice>) -> Result<SpectralForm, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_form(&text, lattice.clone()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn cmd_apply(cfg: &RunConfig, op: OperatorKind, input: &Path) -> Result<Output, CliError> {
    let f = read_form(input, &cfg.lattice)?;
    Ok(Output::ok(serialize_form(&calculus::apply(op, &f))))
}

struct AllTables {
    tables: Vec<CohomologyTable>,
    delta: [i64; 5],
    h_t: usize,
}

fn all_tables(cfg: &RunConfig, engine: &EngineOptions) -> Result<AllTables, CliError> {
    let tables: Vec<CohomologyTable> = Theory::ALL
        .iter()
        .map(|&t| cohomology_dims_with(t, &cfg.lattice, &cfg.trunc, engine))
        .collect::<Result<_, _>>()?;
    let find = |th: Theory| tables.iter().find(|t| t.theory == th).expect("every theory is computed");
    let delta = nondeldelbar_degrees(find(Theory::BottChern), find(Theory::Aeppli), find(Theory::DeRham));
    let h_t = find(Theory::Third).bidegree(1, 1);
    Ok(AllTables { tables, delta, h_t })
}

pub fn cmd_table(cfg: &RunConfig, engine: &EngineOptions, choice: TheoryChoice) -> Result<Output, CliError> {
    let theory = match choice {
        TheoryChoice::One(t) => t,
        TheoryChoice::All => return render_all(cfg, &all_tables(cfg, engine)?),
    };
    let t = cohomology_dims_with(theory, &cfg.lattice, &cfg.trunc, engine)?;
    Ok(Output::ok(match cfg.format {
        Format::Text => table_text(&t),
        Format::Csv => table_csv(&t, true),
        Format::Json => pretty(&table_json(&t)),
    }))
}

fn render_all(cfg: &RunConfig, all: &AllTables) -> Result<Output, CliError> {
    let line = |d: &[i64; 5]| d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let tr = &cfg.trunc;
    let stdout = match cfg.format {
        Format::Text => {
            let mut s: String = all.tables.iter().map(|t| format!("{}\n", table_text(t))).collect();
            let _ = writeln!(s, "Delta^k (k = 0..4) = {}", line(&all.delta));
            let _ = writeln!(s, "h_T^(1,1)+1 = {}", all.h_t);
            s
        }
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for t in &all.tables {
                s.push_str(&table_csv(t, false));
            }
            for (k, d) in all.delta.iter().enumerate() {
                let _ = writeln!(s, "delta,{k},,{d},,{},{},{}", tr.n, tr.k, tr.m);
            }
            s
        }
        Format::Json => pretty(&json!({
            "tables": all.tables.iter().map(table_json).collect::<Vec<_>>(),
            "delta": all.delta,
            "h_T_11_plus_1": all.h_t,
        })),
    };
    Ok(Output::ok(stdout))
}

pub fn cmd_solve(cfg: &RunConfig, kind: SolverKind, input: &Path, opts: &SolveOptions) -> Result<Output, CliError> {
    let f = read_form(input, &cfg.lattice)?;
    let sol = solve(kind, &f, opts).map_err(|e| {
        if e.is_precondition() {
            CliError::Precondition(e.to_string())
        } else {
            CliError::failure(e.to_string())
        }
    })?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("solution-{kind}")));
    fs::create_dir_all(&dir).map_err(|e| CliError::failure(format!("cannot create {}: {e}", dir.display())))?;
    for (name, contents) in sol.bundle_files() {
        let path = dir.join(&name);
        fs::write(&path, contents).map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))?;
    }
    let stdout = match cfg.format {
        Format::Json => pretty(&sol.summary_json()),
        _ => sol.residual_summary(),
    };
    Ok(Output { stdout, stderr: format!("wrote solution bundle to {}\n", dir.display()), status: 0 })
}

pub fn cmd_diagnose(cfg: &RunConfig, shells: u32) -> Result<Output, CliError> {
    if !cfg.lattice.is_toroidal() {
        return Err(CliError::Usage("diagnose needs a toroidal lattice: p or q must be irrational".into()));
    }
    let profile = diagnose::fit(&divisor_decay_profile(&cfg.lattice, shells, cfg.precision_bits));
    let summary = match (profile.decay, profile.c) {
        (Some(d), Some(c)) => format!("summary: {} (c = {c:e})\n", d.summary()),
        _ => "summary: no shells scanned\n".to_string(),
    };
    let stdout = match cfg.format {
        Format::Json => pretty(&json!({
            "rows": profile.rows.iter().map(|(n, m, e)| json!({"n": n, "min_abs_A": m, "fitted_envelope": e})).collect::<Vec<_>>(),
            "c": profile.c,
            "summary": summary.trim_end(),
        })),
        _ => diagnose::csv(&profile),
    };
    Ok(Output { stdout, stderr: summary, status: 0 })
}

pub fn cmd_check(cfg: &RunConfig, suite: Option<Suite>, cases: usize) -> Result<Output, CliError> {
    let sc = SuiteConfig { trunc: cfg.trunc, cases, ..SuiteConfig::new(cfg.lattice.clone(), cfg.seed) };
    let selected: Vec<Suite> = suite.map_or_else(|| Suite::ALL.to_vec(), |s| vec![s]);
    let reports: Vec<_> = selected.iter().map(|&s| suites::run(s, &sc)).collect();
    let all_pass = reports.iter().all(|r| r.passed());
    let stdout = match cfg.format {
        Format::Json => pretty(&json!(reports
            .iter()
            .map(|r| json!({
                "suite": r.suite.name(),
                "outcome": format!("{:?}", r.outcome),
                "checks": r.checks,
                "max_error": r.max_error,
                "detail": r.detail,
            }))
            .collect::<Vec<_>>())),
        _ => reports.iter().map(|r| format!("{}\n", r.line())).collect(),
    };
    Ok(Output { stdout, stderr: String::new(), status: if all_pass { 0 } else { EXIT_FAILURE } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("tcohom").chain(args.iter().copied()))
    }

    #[test]
    fn parses_every_subcommand() {
        assert!(cli(&["classify"]).is_ok());
        assert!(cli(&["apply", "--op", "deldelbar", "f.json"]).is_ok());
        assert!(cli(&["table", "--theory", "bott-chern", "--trunc", "3,3,3"]).is_ok());
        assert!(cli(&["table", "--all", "--format", "csv"]).is_ok());
        assert!(cli(&["solve", "--solver", "aeppli11", "--path", "cover", "f.json"]).is_ok());
        assert!(cli(&["diagnose", "--shells", "0"]).is_ok());
        assert!(cli(&["check", "--suite", "d2", "--seed", "7"]).is_ok());
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(cli(&["table", "--theory", "hodge"]).is_err());
        assert!(cli(&["apply", "--op", "laplace", "f.json"]).is_err());
        assert!(cli(&["check", "--suite", "nope"]).is_err());
        assert!(cli(&["table"]).is_err());
    }

    #[test]
    fn truncation_errors_are_usage_errors() {
        let c = cli(&["table", "--theory", "derham", "--trunc", "0,2,2"]).unwrap();
        assert_eq!(run(&c).unwrap_err().status(), EXIT_USAGE);
    }

    #[test]
    fn all_tables_carry_delta_and_third() {
        let c = cli(&["table", "--all", "--trunc", "1,2,1", "--format", "json"]).unwrap();
        let v: Value = serde_json::from_str(&run(&c).unwrap().stdout).unwrap();
        assert_eq!(v["tables"].as_array().unwrap().len(), Theory::ALL.len());
        assert_eq!(v["delta"].as_array().unwrap().len(), 5);
        assert_eq!(v["h_T_11_plus_1"], 1);
    }
}
