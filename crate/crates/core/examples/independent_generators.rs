//! Find several linearly independent generators of one system.
//!
//! ```bash
//! cargo run --release --example independent_generators
//! ```

use odesym::bench::find_case;
use odesym::odeint::{build_dataset, IntegratorOptions};
use odesym::search::{discover, SearchConfig};
use odesym::symmetry::{independence_rank, DEFAULT_RANK_TOL};

fn main() {
    let case = find_case("independent").unwrap();
    let data = build_dataset(&case.system, 3, &IntegratorOptions::default(), 42).unwrap();
    let cfg = SearchConfig {
        max_generators: 2,
        ..SearchConfig::default()
    };
    let res = discover(&case.system, &data, &cfg).unwrap();
    let found: Vec<_> = res.generators.iter().map(|g| g.candidate.eta_star.clone()).collect();
    for g in &res.generators {
        println!("{}", g.simplified);
    }
    println!("rank of found set: {}", independence_rank(&found, &data, DEFAULT_RANK_TOL).rank);

    let mut all = found;
    all.extend(case.known_generators.iter().cloned());
    println!(
        "rank together with the known pair: {}",
        independence_rank(&all, &data, DEFAULT_RANK_TOL).rank
    );
}
