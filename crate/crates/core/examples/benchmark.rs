//! Run discovery on built-in benchmark cases and print the results table.
//!
//! ```bash
//! cargo run --release --example benchmark
//! ```

use odesym::bench::{find_case, registry, run_benchmark, to_markdown, BenchOptions};

fn main() {
    println!("cases: {:?}", registry().iter().map(|c| c.name().to_string()).collect::<Vec<_>>());
    let cases: Vec<_> = ["intro", "ODE4", "ODE7", "ODE10"]
        .iter()
        .map(|n| find_case(n).unwrap())
        .collect();
    let rows = run_benchmark(&cases, &BenchOptions::default());
    print!("{}", to_markdown(&rows));
}
