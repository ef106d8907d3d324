//! Reduce a higher-order equation to first order and prolong a generator.
//!
//! ```bash
//! cargo run --example higher_order
//! ```

use odesym::expr::parse;
use odesym::symmetry::{jet_var, prolong, to_first_order, FullGenerator};

fn main() {
    // y'' = -y over jet variables (t, y, y').
    let f = parse("-y1", 2).unwrap();
    let sys = to_first_order(&f, 2).unwrap();
    println!("first-order form: {sys}");

    // Time translation combined with scaling: xi = t, eta = y.
    let g = FullGenerator {
        xi: parse("t", 1).unwrap(),
        eta: parse("y1", 1).unwrap(),
    };
    for (k, e) in prolong(&g, 2).unwrap().iter().enumerate() {
        println!("eta^({}) = {}", k + 1, e.simplify());
    }
    println!("y'' lives at variable index {}", jet_var(1, 1, 2));
}
