//! Command-line driver: `discover`, `verify`, `bench` and `dataset`.
//!
//! Exit codes: 0 success, 1 input error, 2 numeric failure, 3 empty search.
//! Payloads go to `out`, diagnostics to `err`.

mod plot;
mod problem;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{
    case_names, find_case, registry, run_benchmark, run_repeated, timing_markdown, to_csv,
    to_markdown, BenchOptions, BenchReport, BenchRow, BenchmarkCase, RowStatus, TimingStats,
};
use crate::expr::parse;
use crate::odeint::{build_dataset, IntegratorOptions, OdeSystem, TrajectoryDataset};
use crate::search::{discover, SearchConfig, SearchSummary};
use crate::symmetry::{verify, verify_canonical, FullGenerator, VerificationReport};

pub use plot::plot_dataset;
pub use problem::{ProblemError, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "odesym", version, about = "Discover Lie point symmetries of ODE systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for symmetry generators of a problem and print the result as JSON.
    Discover {
        /// Problem file, or the name of a built-in case.
        problem: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Check given generators numerically and symbolically.
    Verify {
        /// Problem file, or the name of a built-in case.
        problem: String,
        /// Generators such as "[y1, y2]"; defaults to the one in the problem file.
        generators: Vec<String>,
        /// Canonical coordinate r (requires --v and d-1 values of --s).
        #[arg(long)]
        r: Option<String>,
        /// Canonical coordinate v.
        #[arg(long)]
        v: Option<String>,
        /// Canonical coordinates s1..s{d-1}, in order (repeatable).
        #[arg(long)]
        s: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = crate::symmetry::DEFAULT_ACCEPT_LOSS)]
        accept_loss: f64,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run discovery on built-in cases and print a results table.
    Bench {
        /// Run every built-in case.
        #[arg(long, conflicts_with = "case")]
        all: bool,
        /// Case name (repeatable).
        #[arg(long, required_unless_present = "all")]
        case: Vec<String>,
        /// Run each case k times with consecutive seeds and report timing statistics.
        #[arg(long)]
        repeat: Option<usize>,
        /// Print JSON instead of a Markdown table.
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Print CSV instead of a Markdown table.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Integrate trajectories and write them as CSV (default) or JSON.
    Dataset {
        /// Problem file, or the name of a built-in case.
        problem: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write JSON instead of CSV.
        #[arg(long)]
        json: bool,
        /// Write the dataset here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Write an SVG plot of the trajectories.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest number of operator nodes to enumerate.
    #[arg(long, default_value_t = 7)]
    max_ops: usize,
    #[arg(long, default_value_t = crate::symmetry::DEFAULT_ACCEPT_LOSS)]
    accept_loss: f64,
    /// Generators with every component below this magnitude are trivial.
    #[arg(long, default_value_t = crate::symmetry::DEFAULT_TRIVIAL_EPS)]
    eps: f64,
    /// Seconds per search.
    #[arg(long, default_value_t = 600.0)]
    time_budget: f64,
    /// Stop after this many independent generators [default: 1, or the case target in bench].
    #[arg(long)]
    max_generators: Option<usize>,
    /// Accept generators whose residual is not proven zero symbolically.
    #[arg(long)]
    allow_unverified: bool,
    /// Include wall time in JSON output.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Trajectories per dataset; defaults to d + 1.
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long, default_value_t = 50)]
    n_samples: usize,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig, String> {
        if !(self.time_budget > 0.0) || !(self.accept_loss > 0.0) || !(self.eps >= 0.0) {
            return Err("--time-budget and --accept-loss must be positive, --eps non-negative".into());
        }
        if self.max_generators == Some(0) {
            return Err("--max-generators must be positive".into());
        }
        Ok(SearchConfig {
            max_operator_nodes: self.max_ops,
            trivial_eps: self.eps,
            accept_loss: self.accept_loss,
            time_budget: Some(Duration::from_secs_f64(self.time_budget)),
            max_generators: self.max_generators.unwrap_or(1),
            seed: self.seed,
            require_symbolic: !self.allow_unverified,
            ..SearchConfig::default()
        })
    }
}

impl DataArgs {
    fn integrator(&self) -> Result<IntegratorOptions, String> {
        if self.n_samples < 2 {
            return Err("--n-samples must be at least 2".into());
        }
        if self.n_traj == Some(0) {
            return Err("--n-traj must be positive".into());
        }
        Ok(IntegratorOptions {
            n_samples: self.n_samples,
            ..IntegratorOptions::default()
        })
    }

    fn dataset(&self, sys: &OdeSystem, seed: u64) -> Result<TrajectoryDataset, Failure> {
        let opts = self.integrator().map_err(Failure::input)?;
        build_dataset(sys, self.n_traj.unwrap_or(sys.dim() + 1), &opts, seed)
            .map_err(|e| Failure::new(EXIT_NUMERIC, format!("integration failed: {e}")))
    }
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Failure {
            code,
            msg: msg.into(),
        }
    }

    fn input(msg: impl Into<String>) -> Self {
        Failure::new(EXIT_INPUT, msg)
    }
}

/// A problem file path, or a built-in case name when no such file exists.
fn load_problem(arg: &str) -> Result<ProblemFile, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(case) = find_case(arg) {
            return Ok(problem_from_case(&case));
        }
    }
    ProblemFile::load(path).map_err(|e| Failure::input(format!("{arg}: {e}")))
}

/// The problem file equivalent of a built-in case.
pub fn problem_from_case(case: &BenchmarkCase) -> ProblemFile {
    let sys = &case.system;
    let comps = |e: &crate::expr::Expr| {
        (0..e.root_count())
            .map(|k| e.component(k).to_string())
            .collect::<Vec<_>>()
    };
    ProblemFile {
        name: case.name().to_string(),
        dim: sys.dim(),
        f: comps(&sys.f),
        start_range: sys.start_range,
        time_interval: sys.time_interval,
        known_generator: case.known_generators.first().map(comps),
        canonical: None,
    }
}

fn system_of(p: &ProblemFile) -> Result<OdeSystem, Failure> {
    p.system().map_err(|e| Failure::input(format!("{}: {e}", p.name)))
}

fn emit(out: &mut dyn Write, s: &str) -> Result<(), Failure> {
    out.write_all(s.as_bytes())
        .map_err(|e| Failure::input(format!("cannot write output: {e}")))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable payload");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct DiscoverOutput<'a> {
    problem: &'a str,
    seed: u64,
    #[serde(flatten)]
    result: SearchSummary,
}

fn cmd_discover(problem: &str, search: &SearchArgs, data: &DataArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let p = load_problem(problem)?;
    let sys = system_of(&p)?;
    let cfg = search.config().map_err(Failure::input)?;
    let ds = data.dataset(&sys, search.seed)?;
    let res = discover(&sys, &ds, &cfg).map_err(|e| Failure::new(EXIT_NUMERIC, e.to_string()))?;
    let payload = DiscoverOutput {
        problem: &p.name,
        seed: search.seed,
        result: res.summary(true),
    };
    emit(out, &json(&payload))?;
    Ok(if res.generators.is_empty() {
        EXIT_EMPTY
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    problem: &'a str,
    generators: Vec<String>,
    accept_loss: f64,
    passed: bool,
    #[serde(flatten)]
    report: VerificationReport,
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    problem: &str,
    generators: &[String],
    canonical: (&Option<String>, &Option<String>, &[String]),
    seed: u64,
    accept_loss: f64,
    data: &DataArgs,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let p = load_problem(problem)?;
    let sys = system_of(&p)?;
    let d = sys.dim();
    let gens = if generators.is_empty() {
        match p.generator() {
            Some(g) => vec![g.map_err(|e| Failure::input(e.to_string()))?],
            None => return Err(Failure::input("no generator given and none in the problem file")),
        }
    } else {
        generators
            .iter()
            .map(|s| {
                let e = parse(s, d).map_err(|e| Failure::input(format!("generator `{s}`: {e}")))?;
                if e.root_count() != d {
                    return Err(Failure::input(format!(
                        "generator `{s}` has {} components, expected {d}",
                        e.root_count()
                    )));
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let ct = match canonical {
        (None, None, []) => p.canonical_transform().transpose(),
        (Some(r), Some(v), s) => problem::canonical_from_strings(d, r, v, s).map(Some),
        _ => return Err(Failure::input("a canonical transform needs --r, --v and d-1 values of --s")),
    }
    .map_err(|e| Failure::input(e.to_string()))?;
    let ds = data.dataset(&sys, seed)?;
    let mut report = verify(&sys, &gens, &ds).map_err(|e| Failure::input(e.to_string()))?;
    if let Some(ct) = ct {
        let g = FullGenerator {
            xi: parse("0", d).expect("constant parses"),
            eta: gens[0].clone(),
        };
        report.canonical =
            Some(verify_canonical(&sys, &g, &ct, &ds).map_err(|e| Failure::input(e.to_string()))?);
    }
    let passed = report.numeric_loss < accept_loss;
    let payload = VerifyOutput {
        problem: &p.name,
        generators: gens.iter().map(ToString::to_string).collect(),
        accept_loss,
        passed,
        report,
    };
    emit(out, &json(&payload))?;
    Ok(if passed { EXIT_OK } else { EXIT_NUMERIC })
}

fn rows_exit(rows: &[BenchRow]) -> i32 {
    if rows.iter().any(|r| r.status == RowStatus::Error) {
        EXIT_NUMERIC
    } else if rows.iter().all(BenchRow::is_success) {
        EXIT_OK
    } else {
        EXIT_EMPTY
    }
}

#[derive(Serialize)]
struct RepeatOutput {
    seed: u64,
    repeat: usize,
    stats: Vec<TimingStats>,
}

fn timing_csv(stats: &[TimingStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in stats {
        w.serialize(s).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    all: bool,
    names: &[String],
    repeat: Option<usize>,
    as_json: bool,
    as_csv: bool,
    search: &SearchArgs,
    data: &DataArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let cases = if all {
        registry()
    } else {
        names
            .iter()
            .map(|n| {
                find_case(n).ok_or_else(|| {
                    Failure::input(format!("unknown case `{n}` (known: {})", case_names().join(", ")))
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let opts = BenchOptions {
        search: search.config().map_err(Failure::input)?,
        integrator: data.integrator().map_err(Failure::input)?,
        n_trajectories: data.n_traj,
    };
    if let Some(k) = repeat {
        if k == 0 {
            return Err(Failure::input("--repeat must be positive"));
        }
        let mut stats = Vec::new();
        let mut rows = Vec::new();
        for c in &cases {
            let _ = writeln!(err, "{}: {k} runs", c.name());
            let (r, s) = run_repeated(c, &opts, k);
            rows.extend(r);
            stats.push(s);
        }
        let text = if as_json {
            json(&RepeatOutput {
                seed: search.seed,
                repeat: k,
                stats,
            })
        } else if as_csv {
            timing_csv(&stats)
        } else {
            timing_markdown(&stats)
        };
        emit(out, &text)?;
        return Ok(rows_exit(&rows));
    }
    let mut rows = Vec::new();
    for c in &cases {
        let row = run_benchmark(std::slice::from_ref(c), &opts).remove(0);
        let _ = writeln!(err, "{}: {:?}", row.case, row.status);
        rows.push(row);
    }
    let code = rows_exit(&rows);
    let text = if as_json {
        let mut s = BenchReport::new(search.seed, rows, search.timing).to_json();
        s.push('\n');
        s
    } else if as_csv {
        to_csv(&rows)
    } else {
        to_markdown(&rows)
    };
    emit(out, &text)?;
    Ok(code)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_dataset(
    problem: &str,
    seed: u64,
    as_json: bool,
    output: Option<&Path>,
    plot: Option<&Path>,
    data: &DataArgs,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let p = load_problem(problem)?;
    let sys = system_of(&p)?;
    let ds = data.dataset(&sys, seed)?;
    let text = if as_json {
        let mut s = ds.to_json();
        s.push('\n');
        s
    } else {
        ds.to_csv()
    };
    match output {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    if let Some(path) = plot {
        write_file(path, &plot_dataset(&ds))?;
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let res = match &cli.cmd {
        Command::Discover {
            problem,
            search,
            data,
        } => cmd_discover(problem, search, data, out),
        Command::Verify {
            problem,
            generators,
            r,
            v,
            s,
            seed,
            accept_loss,
            data,
        } => cmd_verify(problem, generators, (r, v, s), *seed, *accept_loss, data, out),
        Command::Bench {
            all,
            case,
            repeat,
            json,
            csv,
            search,
            data,
        } => cmd_bench(*all, case, *repeat, *json, *csv, search, data, out, err),
        Command::Dataset {
            problem,
            seed,
            json,
            output,
            plot,
            data,
        } => cmd_dataset(problem, *seed, *json, output.as_deref(), plot.as_deref(), data, out),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::StopReason;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("odesym").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn builtin_case_names_work_as_problems() {
        let (code, out, _) = run_str(&["verify", "intro", "[1, 0]"]);
        assert_eq!(code, EXIT_NUMERIC);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["numeric_loss"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(v["passed"], false);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["bench"]).0, EXIT_INPUT);
        let (code, _, err) = run_str(&["bench", "--case", "nonexistent"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("unknown case"));
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn empty_search_exits_three() {
        let (code, out, _) = run_str(&["discover", "ODE6", "--max-ops", "1"]);
        assert_eq!(code, EXIT_EMPTY);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["generators"].as_array().unwrap().len(), 0);
        assert_eq!(v["stop_reason"], "exhausted");
    }

    #[test]
    fn stop_reason_serializes_snake_case() {
        assert_eq!(serde_json::to_string(&StopReason::TimeBudget).unwrap(), "\"time_budget\"");
    }
}
