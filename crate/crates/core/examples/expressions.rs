//! Parse, evaluate, differentiate and simplify expressions.
//!
//! ```bash
//! cargo run --example expressions
//! ```

use odesym::expr::{is_identically_zero, parse, EvalPoint};

fn main() {
    // Variables are `t, y1..yd`; a bracketed list gives several outputs.
    let f = parse("[y1*(t + y2/y1)^2, t^2*y1]", 2).expect("valid expression");
    println!("f = {f}");

    let p = EvalPoint::new(1.5, vec![1.0, 2.0]);
    println!("f(1.5, 1, 2) = {:?}", f.evaluate(&p).unwrap());

    // Forward-mode derivatives with respect to (t, y1, y2), one row per output.
    for (k, row) in f.gradient(&p).unwrap().iter().enumerate() {
        println!("grad f{} = {row:?}", k + 1);
    }

    // Symbolic derivative d/dy1 (variable index 1), then simplification.
    let df = f.diff(1);
    println!("df/dy1 = {}", df.simplify());

    // Exact zero test on the normal form.
    let identity = parse("sin(t)^2 + cos(t)^2 - 1", 0).unwrap();
    println!("sin^2 + cos^2 - 1 == 0: {}", is_identically_zero(&identity, 0));
    let not_identity = parse("sqrt(y1^2) - y1", 1).unwrap();
    println!("sqrt(y1^2) - y1 == 0: {}", is_identically_zero(&not_identity, 0));

    // Errors carry the byte position.
    if let Err(e) = parse("y1 * (t +", 1) {
        println!("parse error: {e}");
    }
}
