use crate::expr::{parse, Expr};
use crate::odeint::{OdeError, OdeSystem};

/// Loss below which a known generator passes the registry self-check.
pub const EXPECTED_LOSS_CEILING: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BenchmarkCase {
    pub system: OdeSystem,
    /// One or more generators known to satisfy the reduced condition.
    pub known_generators: Vec<Expr>,
    pub expected_loss_ceiling: f64,
    /// How many independent generators a discovery run should look for.
    pub target_generators: usize,
}

impl BenchmarkCase {
    pub fn name(&self) -> &str {
        &self.system.name
    }
}

struct Spec {
    name: &'static str,
    f: &'static [&'static str],
    gens: &'static [&'static str],
    start: (f64, f64),
    time: (f64, f64),
}

const SPECS: &[Spec] = &[
    Spec {
        name: "intro",
        f: &["-y2", "y1"],
        gens: &["[y1, y2]"],
        start: (1.0, 2.0),
        time: (0.0, 2.0),
    },
    Spec {
        name: "independent",
        f: &["sqrt(y1)*t", "y1*y2*t"],
        gens: &["[0, y2]", "[sqrt(y1), y1*y2]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE1",
        f: &["y1*(t + y2/y1)^2", "t^2*y1"],
        gens: &["[y1, y2]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE2",
        f: &["y1^2*y2*exp(y1^-1)", "t*exp(-y1^-1)"],
        gens: &["[y1^2, y2]"],
        start: (1.0, 2.0),
        time: (0.0, 1.0),
    },
    Spec {
        name: "ODE3",
        f: &["t*y1*(y2 - log(y1))", "t + y2 - log(y1)"],
        gens: &["[y1, 1]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE4",
        f: &["t^-1*(2*y1 + y2*exp(-y1*t^-2))", "y2"],
        gens: &["[t^2, y2]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE5",
        f: &["y1*(t - log(y1)*tan(t))", "-y2*log(y1)*tan(t) + y2"],
        gens: &["[y1*cos(t), y2*cos(t)]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE6",
        f: &["y1*(t*y2*y1^-1 + 2*log(y1)*t^-1)", "2*y2*log(y1)*t^-1"],
        gens: &["[t^2*y1, t^2*y2]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE7",
        f: &[
            "y2*exp(-0.5*y1^2*t^-2)*y1^-1 + 0.5*y1*t^-1",
            "-0.5*y1^2*y2*t^-3",
        ],
        gens: &["[t/y1, y2/t]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
    Spec {
        name: "ODE8",
        f: &["exp(-t)*sin(y2)", "exp(-t)*sin(y1)"],
        gens: &["[sin(y2), sin(y1)]"],
        start: (-1.0, 0.0),
        time: (-1.0, 0.0),
    },
    Spec {
        name: "ODE9",
        f: &["t*y2*sin(y1)", "t*sin(y1)"],
        gens: &["[y2*sin(y1), sin(y1)]"],
        start: (-1.0, 0.0),
        time: (-1.0, 0.0),
    },
    Spec {
        name: "ODE10",
        f: &["t*log(y2)", "t*y1^2"],
        gens: &["[log(y2), y1^2]"],
        start: (1.0, 2.0),
        time: (1.0, 2.0),
    },
];

fn build(spec: &Spec) -> Result<BenchmarkCase, OdeError> {
    let system = OdeSystem::parse(spec.name, spec.f, spec.start, spec.time)?;
    let known_generators = spec
        .gens
        .iter()
        .map(|g| parse(g, system.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchmarkCase {
        system,
        target_generators: known_generators.len(),
        known_generators,
        expected_loss_ceiling: EXPECTED_LOSS_CEILING,
    })
}

/// The twelve built-in cases: two worked examples followed by ODE1..ODE10.
pub fn registry() -> Vec<BenchmarkCase> {
    SPECS
        .iter()
        .map(|s| build(s).expect("built-in case parses"))
        .collect()
}

/// Looks a case up by name, ignoring ASCII case.
pub fn find_case(name: &str) -> Option<BenchmarkCase> {
    SPECS
        .iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .map(|s| build(s).expect("built-in case parses"))
}

pub fn case_names() -> Vec<&'static str> {
    SPECS.iter().map(|s| s.name).collect()
}
