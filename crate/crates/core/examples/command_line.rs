//! Drive the command-line interface in-process on a bundled problem file.
//!
//! ```bash
//! cargo run --release --example command_line
//! ```

use odesym::cli::{run, ProblemFile};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/problems/intro.ode");
    let problem = ProblemFile::load(path.as_ref()).unwrap();
    print!("{}", problem.to_toml());

    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(["odesym", "verify", path, "[cos(t), sin(t)]"], &mut out, &mut err);
    println!("verify exit {code}:\n{}", String::from_utf8_lossy(&out));

    out.clear();
    let code = run(["odesym", "discover", path], &mut out, &mut err);
    println!("discover exit {code}:\n{}", String::from_utf8_lossy(&out));
}
