//! Built-in benchmark cases and the results-table runner.

mod registry;
mod run;

pub use registry::{case_names, find_case, registry, BenchmarkCase, EXPECTED_LOSS_CEILING};
pub use run::{
    run_benchmark, run_case, run_repeated, timing_markdown, timing_stats, to_csv, to_markdown,
    BenchOptions, BenchReport, BenchRow, RowStatus, TimingStats,
};
