mod common;

use odesym::bench::registry;
use odesym::expr::{parse, EvalPoint, Expr};
use odesym::symmetry::{full_condition_residual, remove_hamiltonian, residual, FullGenerator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{fd_error, random_expr_string, residual_scale, sample_point};

fn benchmark_expressions() -> Vec<(usize, Expr)> {
    registry()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            std::iter::once((i, c.system.f.clone())).chain(c.known_generators.iter().map(move |g| (i, g.clone())))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn autodiff_matches_finite_differences(seed in any::<u64>()) {
        let cases = registry();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, e) in benchmark_expressions() {
            let p = sample_point(&cases[i], &mut rng);
            if let Some(err) = fd_error(&e, &p) {
                prop_assert!(err < 1e-6, "{} at {:?}: {}", e, p, err);
            }
        }
    }

    #[test]
    fn hamiltonian_multiples_satisfy_the_full_condition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for case in registry() {
            let d = case.system.dim();
            let xi = parse(&random_expr_string(&mut rng, d, 3), d).unwrap();
            let eta = hamiltonian_eta(&xi, &case.system.f);
            let g = FullGenerator { xi: xi.clone(), eta };
            let p = sample_point(&case, &mut rng);
            let r = full_condition_residual(&case.system, &g, &p).unwrap();
            let tol = 1e-9 * residual_scale(&case.system.f, &p);
            prop_assert!(r.iter().all(|x| x.abs() < tol), "{} xi = {}: {:?}", case.name(), xi, r);
        }
    }

    #[test]
    fn reduced_and_full_conditions_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for case in registry() {
            let d = case.system.dim();
            let xi = parse(&random_expr_string(&mut rng, d, 2), d).unwrap();
            let parts: Vec<Expr> = (0..d).map(|_| parse(&random_expr_string(&mut rng, d, 2), d).unwrap()).collect();
            let g = FullGenerator { xi, eta: Expr::stack(&parts) };
            let reduced = remove_hamiltonian(&case.system, &g).unwrap();
            let p = sample_point(&case, &mut rng);
            let full = full_condition_residual(&case.system, &g, &p).unwrap();
            let red = residual(&case.system, &reduced, &p).unwrap();
            for (a, b) in full.iter().zip(&red) {
                let tol = 1e-9 * a.abs().max(residual_scale(&case.system.f, &p));
                prop_assert!((a - b).abs() <= tol, "{}: {} vs {}", case.name(), a, b);
            }
        }
    }

    #[test]
    fn scaling_is_a_symmetry_of_the_oscillator(t in -5.0..5.0f64, y1 in -3.0..3.0f64, y2 in -3.0..3.0f64) {
        let case = odesym::bench::find_case("intro").unwrap();
        let p = EvalPoint::new(t, vec![y1, y2]);
        for g in ["[y1, y2]", "[cos(t), sin(t)]", "[-sin(t), cos(t)]"] {
            let r = residual(&case.system, &parse(g, 2).unwrap(), &p).unwrap();
            prop_assert!(r.iter().all(|x| x.abs() < 1e-12));
        }
    }
}

/// `xi * f`, the Hamiltonian part for the given `xi`.
fn hamiltonian_eta(xi: &Expr, f: &Expr) -> Expr {
    let d = f.root_count();
    let parts: Vec<Expr> = (0..d)
        .map(|k| parse(&format!("({xi}) * ({})", f.component(k)), d).unwrap())
        .collect();
    Expr::stack(&parts)
}
