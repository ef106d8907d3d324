//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use odesym::bench::{find_case, registry, run_benchmark, BenchOptions};
use odesym::expr::{parse, Expr};
use odesym::odeint::{build_dataset, integrate, integrate_fixed, IntegratorOptions, OdeSystem};
use odesym::search::{discover, SearchConfig};
use odesym::symmetry::{
    full_condition_residual, independence_rank, loss, remove_hamiltonian, residual, symbolic_zero,
    FullGenerator, DEFAULT_RANK_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    binary_count, fd_error, oracle_expressions, random_expr_string, residual_scale, sample_point, stream_expressions,
    unary_count,
};

const KNOWN_LOSS_CEILING: f64 = 1e-10;
const KNOWN_RUNTIME: Duration = Duration::from_secs(10);
const CASE_BUDGET: Duration = Duration::from_secs(600);
const INTRO_UNIT_LOSS: f64 = 0.5;
const INTRO_UNIT_TOL: f64 = 1e-12;
const INTRO_SCALING_CEILING: f64 = 1e-20;
const FD_REL_TOL: f64 = 1e-6;
const NULLITY_TOL: f64 = 1e-9;
const MIN_ORDER: f64 = 4.5;
const ENDPOINT_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn known_generators() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in registry() {
        let data = build_dataset(&case.system, case.system.dim() + 1, &IntegratorOptions::default(), 42).unwrap();
        for g in &case.known_generators {
            let l = loss(&case.system, g, &data);
            let sym = symbolic_zero(&case.system, g).unwrap();
            worst = worst.max(l);
            if !(l < KNOWN_LOSS_CEILING) || !sym.iter().all(|&z| z) {
                failures.push(format!("{} {g}: loss {l:e}, symbolic {sym:?}", case.name()));
            }
        }
    }
    let t = start.elapsed();
    let pass = failures.is_empty() && t < KNOWN_RUNTIME;
    outcome(
        pass,
        format!("12 cases, worst loss {worst:.2e}, {:.2}s {}", t.as_secs_f64(), failures.join("; ")),
    )
}

fn discovery() -> Outcome {
    let rows = run_benchmark(&registry(), &BenchOptions::default());
    let mut bad = Vec::new();
    let mut slowest: f64 = 0.0;
    for r in &rows {
        let t = r.wall_time_s.unwrap_or(f64::INFINITY);
        slowest = slowest.max(t);
        let ok = r.is_success()
            && t < CASE_BUDGET.as_secs_f64()
            && r.generators.iter().all(|g| g.loss < KNOWN_LOSS_CEILING);
        if !ok {
            bad.push(r.case.clone());
        }
    }
    outcome(
        bad.is_empty() && rows.len() == 12,
        format!("{}/12 cases verified, slowest {slowest:.2}s {}", 12 - bad.len(), bad.join(", ")),
    )
}

fn independent() -> Outcome {
    let case = find_case("independent").unwrap();
    let data = build_dataset(&case.system, 3, &IntegratorOptions::default(), 42).unwrap();
    let cfg = SearchConfig {
        max_generators: 2,
        ..SearchConfig::default()
    };
    let res = discover(&case.system, &data, &cfg).unwrap();
    let found: Vec<Expr> = res.generators.iter().map(|g| g.candidate.eta_star.clone()).collect();
    let rank = independence_rank(&found, &data, DEFAULT_RANK_TOL).rank;
    let mut all = found.clone();
    all.extend(case.known_generators.iter().cloned());
    let joint = independence_rank(&all, &data, DEFAULT_RANK_TOL).rank;
    let printed: Vec<String> = res.generators.iter().map(|g| g.simplified.to_string()).collect();
    outcome(
        found.len() == 2 && rank == 2 && joint == 2,
        format!("found {printed:?}, rank {rank}, rank with known pair {joint}"),
    )
}

fn hand_losses() -> Outcome {
    let case = find_case("intro").unwrap();
    let unit = parse("[1, 0]", 2).unwrap();
    let scaling = parse("[y1, y2]", 2).unwrap();
    let mut worst_unit: f64 = 0.0;
    let mut worst_scaling: f64 = 0.0;
    for seed in [1, 42, 1234] {
        for n_traj in [3, 5] {
            let data = build_dataset(&case.system, n_traj, &IntegratorOptions::default(), seed).unwrap();
            worst_unit = worst_unit.max((loss(&case.system, &unit, &data) - INTRO_UNIT_LOSS).abs());
            worst_scaling = worst_scaling.max(loss(&case.system, &scaling, &data));
        }
    }
    outcome(
        worst_unit <= INTRO_UNIT_TOL && worst_scaling < INTRO_SCALING_CEILING,
        format!("|loss([1,0]) - 0.5| <= {worst_unit:.1e}, loss([y1,y2]) <= {worst_scaling:.1e} over 6 datasets"),
    )
}

fn autodiff_vs_fd(rng: &mut ChaCha8Rng) -> (bool, String) {
    let cases = registry();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for case in &cases {
        let exprs = std::iter::once(&case.system.f).chain(&case.known_generators);
        for e in exprs {
            for _ in 0..100 {
                let p = sample_point(case, rng);
                if let Some(err) = fd_error(e, &p) {
                    worst = worst.max(err);
                    checked += 1;
                }
            }
        }
    }
    (worst < FD_REL_TOL, format!("autodiff/FD worst {worst:.1e} over {checked} evaluations"))
}

fn hamiltonian_nullity(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for case in registry() {
        let d = case.system.dim();
        for _ in 0..100 {
            let xi = parse(&random_expr_string(rng, d, 3), d).unwrap();
            let parts: Vec<Expr> = (0..d)
                .map(|k| parse(&format!("({xi}) * ({})", case.system.f.component(k)), d).unwrap())
                .collect();
            let g = FullGenerator {
                xi,
                eta: Expr::stack(&parts),
            };
            let p = sample_point(&case, rng);
            let r = full_condition_residual(&case.system, &g, &p).unwrap();
            let scale = residual_scale(&case.system.f, &p);
            worst = r.iter().fold(worst, |a, x| a.max(x.abs() / scale));
        }
    }
    (worst < NULLITY_TOL, format!("Hamiltonian nullity worst {worst:.1e}"))
}

fn reduced_full(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for case in registry() {
        let d = case.system.dim();
        for _ in 0..100 {
            let xi = parse(&random_expr_string(rng, d, 2), d).unwrap();
            let parts: Vec<Expr> = (0..d).map(|_| parse(&random_expr_string(rng, d, 2), d).unwrap()).collect();
            let g = FullGenerator {
                xi,
                eta: Expr::stack(&parts),
            };
            let reduced = remove_hamiltonian(&case.system, &g).unwrap();
            let p = sample_point(&case, rng);
            let a = full_condition_residual(&case.system, &g, &p).unwrap();
            let b = residual(&case.system, &reduced, &p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs() / x.abs().max(residual_scale(&case.system.f, &p)));
            }
        }
    }
    (worst < NULLITY_TOL, format!("reduced/full worst {worst:.1e}"))
}

fn enumeration_oracle() -> (bool, String) {
    let oracle = oracle_expressions(4, unary_count(), binary_count(), 2);
    let mut counts = Vec::new();
    let mut ok = true;
    for (n, expected) in oracle.iter().enumerate() {
        let (got, emitted) = stream_expressions(n);
        ok &= emitted == got.len() && got == *expected;
        counts.push(format!("n={n}: {}/{}", emitted, expected.len()));
    }
    (ok, format!("enumeration {}", counts.join(" ")))
}

fn rk45() -> (bool, String) {
    let intro = find_case("intro").unwrap().system;
    let exact = [2f64.cos(), 2f64.sin()];
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let y = integrate_fixed(&intro, &[1.0, 0.0], 0.0, 2.0, h).unwrap();
            ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
        })
        .collect();
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);

    let opts = IntegratorOptions {
        n_samples: 2,
        ..IntegratorOptions::default()
    };
    let end = |sys: &OdeSystem, y0: &[f64], t0: f64, t1: f64| integrate(sys, y0, t0, t1, &opts).unwrap().y.last().unwrap().clone();
    let y = end(&intro, &[1.0, 0.0], 0.0, 2.0);
    let e_osc = (y[0] - exact[0]).abs().max((y[1] - exact[1]).abs());
    let indep = find_case("independent").unwrap().system;
    let y = end(&indep, &[1.0 / 16.0, (1.0f64 / 96.0).exp()], 1.0, 2.0);
    let e_ind = (y[0] - 1.0).abs().max((y[1] - (64.0f64 / 96.0).exp()).abs());
    (
        order >= MIN_ORDER && e_osc < ENDPOINT_TOL && e_ind < ENDPOINT_TOL,
        format!("RK45 order {order:.2}, endpoint errors {e_osc:.1e} / {e_ind:.1e}"),
    )
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let parts = [
        autodiff_vs_fd(&mut rng),
        hamiltonian_nullity(&mut rng),
        reduced_full(&mut rng),
        enumeration_oracle(),
        rk45(),
    ];
    let pass = parts.iter().all(|p| p.0);
    let detail: Vec<String> = parts
        .iter()
        .map(|(ok, d)| format!("{}{d}", if *ok { "" } else { "FAILED " }))
        .collect();
    outcome(pass, detail.join("; "))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_odesym"))
            .args(["bench", "--all", "--seed", "42", "--json"])
            .output()
            .expect("binary runs")
    };
    let a = run();
    let b = run();
    let same = a.stdout == b.stdout;
    outcome(
        same && a.status.success() && !a.stdout.is_empty(),
        format!("{} bytes, identical: {same}, exit {:?}", a.stdout.len(), a.status.code()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("known-generator verification", known_generators),
        ("discovery success on all cases", discovery),
        ("independent generators", independent),
        ("hand-computed losses", hand_losses),
        ("property suites", property_suites),
        ("determinism of bench JSON", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
