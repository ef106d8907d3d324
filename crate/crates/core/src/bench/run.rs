use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::odeint::{build_dataset, IntegratorOptions};
use crate::search::{discover, GeneratorSummary, SearchConfig, StopReason};

use super::BenchmarkCase;

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub search: SearchConfig,
    pub integrator: IntegratorOptions,
    /// Trajectories per dataset; `None` uses `d + 1`.
    pub n_trajectories: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            search: SearchConfig::default(),
            integrator: IntegratorOptions::default(),
            n_trajectories: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    /// At least one generator passed numeric and symbolic verification.
    Success,
    /// Generators were found but not all residuals simplified to zero.
    Unverified,
    NotFound,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub case: String,
    pub status: RowStatus,
    pub target_generators: usize,
    pub generators: Vec<GeneratorSummary>,
    pub skeletons_enumerated: u64,
    pub candidates_scored: u64,
    pub candidates_deduplicated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Dataset construction plus search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl BenchRow {
    pub fn is_success(&self) -> bool {
        self.status == RowStatus::Success
    }

    fn failed(case: &BenchmarkCase, msg: String, secs: f64) -> Self {
        BenchRow {
            case: case.name().to_string(),
            status: RowStatus::Error,
            target_generators: case.target_generators,
            generators: Vec::new(),
            skeletons_enumerated: 0,
            candidates_scored: 0,
            candidates_deduplicated: 0,
            stop_reason: None,
            error: Some(msg),
            wall_time_s: Some(secs),
        }
    }
}

/// Builds the dataset for `case` and runs discovery on it.
pub fn run_case(case: &BenchmarkCase, opts: &BenchOptions) -> BenchRow {
    let start = Instant::now();
    let n_traj = opts.n_trajectories.unwrap_or(case.system.dim() + 1);
    let data = match build_dataset(&case.system, n_traj, &opts.integrator, opts.search.seed) {
        Ok(d) => d,
        Err(e) => return BenchRow::failed(case, e.to_string(), start.elapsed().as_secs_f64()),
    };
    let cfg = SearchConfig {
        max_generators: opts.search.max_generators.max(case.target_generators),
        ..opts.search.clone()
    };
    let res = match discover(&case.system, &data, &cfg) {
        Ok(r) => r,
        Err(e) => return BenchRow::failed(case, e.to_string(), start.elapsed().as_secs_f64()),
    };
    let status = if res.generators.is_empty() {
        RowStatus::NotFound
    } else if res.generators.iter().all(|g| g.is_symbolically_zero()) {
        RowStatus::Success
    } else {
        RowStatus::Unverified
    };
    BenchRow {
        case: case.name().to_string(),
        status,
        target_generators: case.target_generators,
        generators: res.generators.iter().map(GeneratorSummary::from).collect(),
        skeletons_enumerated: res.skeletons_enumerated,
        candidates_scored: res.candidates_scored,
        candidates_deduplicated: res.candidates_deduplicated,
        stop_reason: Some(res.stop_reason),
        error: None,
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    }
}

/// One row per case, in the order given. A failing case is recorded in its
/// row and the run continues.
pub fn run_benchmark(cases: &[BenchmarkCase], opts: &BenchOptions) -> Vec<BenchRow> {
    cases.iter().map(|c| run_case(c, opts)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn new(seed: u64, mut rows: Vec<BenchRow>, include_time: bool) -> Self {
        if !include_time {
            for r in &mut rows {
                r.wall_time_s = None;
            }
        }
        BenchReport { seed, rows }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn generators_cell(r: &BenchRow) -> String {
    if let Some(e) = &r.error {
        return format!("error: {e}");
    }
    if r.generators.is_empty() {
        return "none".to_string();
    }
    r.generators
        .iter()
        .map(|g| g.simplified.clone())
        .collect::<Vec<_>>()
        .join("; ")
}

fn losses_cell(r: &BenchRow) -> String {
    r.generators
        .iter()
        .map(|g| format!("{:.2e}", g.loss))
        .collect::<Vec<_>>()
        .join("; ")
}

fn symbolic_cell(r: &BenchRow) -> String {
    r.generators
        .iter()
        .map(|g| format!("{:?}", g.symbolic_zero))
        .collect::<Vec<_>>()
        .join("; ")
}

fn status_str(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Success => "success",
        RowStatus::Unverified => "unverified",
        RowStatus::NotFound => "not_found",
        RowStatus::Error => "error",
    }
}

/// Markdown results table: case, generator, numeric loss, symbolic-zero
/// flags and wall time.
pub fn to_markdown(rows: &[BenchRow]) -> String {
    let mut s = String::from(
        "| Case | Generator | Numeric loss | Zero symbolic loss | Time (s) |\n|---|---|---|---|---|\n",
    );
    for r in rows {
        let time = r.wall_time_s.map_or("-".to_string(), |t| format!("{t:.3}"));
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.case,
            generators_cell(r).replace('|', "\\|"),
            losses_cell(r),
            symbolic_cell(r),
            time
        );
    }
    s
}

/// CSV summary with one row per case.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "case",
        "status",
        "generators",
        "loss",
        "symbolic_zero",
        "skeletons_enumerated",
        "candidates_scored",
        "candidates_deduplicated",
        "wall_time_s",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.case.clone(),
            status_str(r.status).to_string(),
            generators_cell(r),
            losses_cell(r),
            symbolic_cell(r),
            r.skeletons_enumerated.to_string(),
            r.candidates_scored.to_string(),
            r.candidates_deduplicated.to_string(),
            r.wall_time_s.map_or(String::new(), |t| format!("{t:.6}")),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

/// Mean and two-sided 95% Student-t confidence interval of repeated timings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingStats {
    pub case: String,
    pub runs: usize,
    pub successes: usize,
    pub mean_s: f64,
    pub ci95_low_s: f64,
    pub ci95_high_s: f64,
}

pub fn timing_stats(case: &str, samples: &[f64], successes: usize) -> TimingStats {
    let n = samples.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        samples.iter().sum::<f64>() / n as f64
    };
    let half = if n < 2 {
        f64::NAN
    } else {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * (var / n as f64).sqrt()
    };
    TimingStats {
        case: case.to_string(),
        runs: n,
        successes,
        mean_s: mean,
        ci95_low_s: mean - half,
        ci95_high_s: mean + half,
    }
}

/// Runs `case` `k` times with seeds `seed, seed + 1, …` and summarizes the
/// wall times.
pub fn run_repeated(case: &BenchmarkCase, opts: &BenchOptions, k: usize) -> (Vec<BenchRow>, TimingStats) {
    let rows: Vec<BenchRow> = (0..k as u64)
        .map(|i| {
            let mut o = opts.clone();
            o.search.seed = opts.search.seed.wrapping_add(i);
            run_case(case, &o)
        })
        .collect();
    let times: Vec<f64> = rows.iter().filter_map(|r| r.wall_time_s).collect();
    let ok = rows.iter().filter(|r| r.is_success()).count();
    let stats = timing_stats(case.name(), &times, ok);
    (rows, stats)
}

pub fn timing_markdown(stats: &[TimingStats]) -> String {
    let mut s = String::from(
        "| Case | Runs | Successes | Mean (s) | 95% CI (s) |\n|---|---|---|---|---|\n",
    );
    for t in stats {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4} | [{:.4}, {:.4}] |",
            t.case, t.runs, t.successes, t.mean_s, t.ci95_low_s, t.ci95_high_s
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::find_case;

    #[test]
    fn empty_subset_gives_empty_table() {
        let rows = run_benchmark(&[], &BenchOptions::default());
        assert!(rows.is_empty());
        assert_eq!(to_markdown(&rows).lines().count(), 2);
        assert_eq!(to_csv(&rows).lines().count(), 1);
    }

    #[test]
    fn ode5_row_is_verified() {
        let case = find_case("ODE5").unwrap();
        let row = run_case(&case, &BenchOptions::default());
        assert!(row.is_success(), "{row:?}");
        let g = &row.generators[0];
        assert!(g.loss <= 1e-12);
        assert_eq!(g.symbolic_zero, vec![true, true]);
    }

    #[test]
    fn report_without_time_is_stable() {
        let case = find_case("intro").unwrap();
        let a = BenchReport::new(42, run_benchmark(&[case.clone()], &BenchOptions::default()), false);
        let b = BenchReport::new(42, run_benchmark(&[case], &BenchOptions::default()), false);
        assert_eq!(a.to_json(), b.to_json());
        assert!(!a.to_json().contains("wall_time"));
    }

    #[test]
    fn confidence_interval_matches_t_table() {
        // t_{0.975, 4} = 2.776445
        let s = timing_stats("x", &[1.0, 2.0, 3.0, 4.0, 5.0], 5);
        assert!((s.mean_s - 3.0).abs() < 1e-15);
        let half = 2.776445 * (2.5f64 / 5.0).sqrt();
        assert!((s.ci95_high_s - 3.0 - half).abs() < 1e-5);
        assert!((s.ci95_low_s - 3.0 + half).abs() < 1e-5);
    }
}
