//! Check candidate symmetry generators numerically and symbolically.
//!
//! ```bash
//! cargo run --example verify_generator
//! ```

use odesym::expr::parse;
use odesym::odeint::{build_dataset, IntegratorOptions, OdeSystem};
use odesym::symmetry::{verify, verify_canonical, CanonicalTransform, FullGenerator, LossContext};

fn main() {
    let sys = OdeSystem::parse("oscillator", &["-y2", "y1"], (1.0, 2.0), (0.0, 2.0)).unwrap();
    let data = build_dataset(&sys, 3, &IntegratorOptions::default(), 42).unwrap();
    let ctx = LossContext::new(&sys, &data).unwrap();

    for g in ["[y1, y2]", "[cos(t), sin(t)]", "[1, 0]"] {
        let eta = parse(g, 2).unwrap();
        let report = verify(&sys, &[eta.clone()], &data).unwrap();
        println!(
            "{g:18} loss {:.3e}  symbolic zero {:?}",
            ctx.loss(&eta),
            report.symbolic_zero
        );
    }

    // Scaling has canonical coordinates in which it becomes a translation of v.
    let g = FullGenerator {
        xi: parse("0", 2).unwrap(),
        eta: parse("[y1, y2]", 2).unwrap(),
    };
    let ct = CanonicalTransform {
        r: parse("t", 2).unwrap(),
        v: parse("log(y1) + y2/y1", 2).unwrap(),
        s: vec![parse("y2/y1", 2).unwrap()],
    };
    let rep = verify_canonical(&sys, &g, &ct, &data).unwrap();
    println!(
        "canonical coordinates: max violation {:.1e} ({} points outside log's domain)",
        rep.max_violation(),
        rep.excluded_points
    );
}
