//! Search for symmetry generators of a system from its trajectories.
//!
//! ```bash
//! cargo run --release --example discover
//! ```

use odesym::odeint::{build_dataset, IntegratorOptions, OdeSystem};
use odesym::search::{discover, SearchConfig};

fn main() {
    let sys = OdeSystem::parse("ODE9", &["t*y2*sin(y1)", "t*sin(y1)"], (1.0, 2.0), (1.0, 2.0)).unwrap();
    let data = build_dataset(&sys, sys.dim() + 1, &IntegratorOptions::default(), 42).unwrap();
    let res = discover(&sys, &data, &SearchConfig::default()).unwrap();
    for g in &res.generators {
        println!(
            "eta* = {}  loss {:.2e}  symbolic zero {:?}  ({} operators)",
            g.simplified, g.candidate.loss, g.symbolic_zero, g.n_ops
        );
    }
    println!(
        "{} skeletons, {} labelings scored, {} duplicates skipped, {:?}, {:.3}s",
        res.skeletons_enumerated,
        res.candidates_scored,
        res.candidates_deduplicated,
        res.stop_reason,
        res.wall_time.as_secs_f64()
    );
}
