//! Integrate an ODE system and build a reproducible trajectory dataset.
//!
//! ```bash
//! cargo run --example trajectories
//! ```

use odesym::odeint::{build_dataset, integrate, IntegratorOptions, OdeSystem};

fn main() {
    let sys = OdeSystem::parse("oscillator", &["-y2", "y1"], (1.0, 2.0), (0.0, 2.0)).unwrap();
    let opts = IntegratorOptions::default();

    // A single solution, sampled at `n_samples` equally spaced times.
    let tr = integrate(&sys, &[1.0, 0.0], 0.0, 2.0, &opts).unwrap();
    let end = tr.y.last().unwrap();
    println!(
        "y(2) = [{:.12}, {:.12}], exact [{:.12}, {:.12}]",
        end[0],
        end[1],
        2f64.cos(),
        2f64.sin()
    );

    // d + 1 trajectories with seeded random initial conditions.
    let data = build_dataset(&sys, 3, &opts, 42).unwrap();
    println!("{} points, bounding box {:?}", data.n_total(), data.bounding_box());
    for line in data.to_csv().lines().take(4) {
        println!("{line}");
    }
}
