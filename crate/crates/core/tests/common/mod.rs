//! Oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::HashSet;

use odesym::bench::BenchmarkCase;
use odesym::expr::{BinaryOp, EvalPoint, Expr, Node};
use odesym::search::{enumerate_skeletons, label_skeleton, leaf_alphabet, OperatorSet};
use rand::Rng;

/// Uniform point in the case's start box and time interval.
pub fn sample_point(case: &BenchmarkCase, rng: &mut impl Rng) -> EvalPoint {
    let (a, b) = case.system.start_range;
    let (t0, t1) = case.system.time_interval;
    let t = rng.random_range(t0..t1);
    let y = (0..case.system.dim()).map(|_| rng.random_range(a..b)).collect();
    EvalPoint::new(t, y)
}

/// Largest relative deviation between the forward-mode jacobian of `e` and
/// Richardson-extrapolated central differences at `p`; `None` if `e` is
/// undefined near `p`. Each entry takes the best of several step sizes so
/// that points close to a pole are not dominated by truncation error.
pub fn fd_error(e: &Expr, p: &EvalPoint) -> Option<f64> {
    let vars = p.vars();
    let (_, jac) = e.value_and_jacobian(&vars).ok()?;
    let m = vars.len();
    let central = |j: usize, h: f64| -> Option<Vec<f64>> {
        let mut up = vars.clone();
        let mut dn = vars.clone();
        up[j] += h;
        dn[j] -= h;
        let fu = e.eval_slice(&up).ok()?;
        let fd = e.eval_slice(&dn).ok()?;
        Some(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let scale = vars[j].abs().max(1.0);
        let mut best = vec![f64::INFINITY; e.root_count()];
        for h in [1e-3, 1e-4, 1e-5, 1e-6].map(|h| h * scale) {
            let (Some(coarse), Some(fine)) = (central(j, h), central(j, h / 2.0)) else {
                continue;
            };
            for (k, b) in best.iter_mut().enumerate() {
                let numeric = (4.0 * fine[k] - coarse[k]) / 3.0;
                let ad = jac[k * m + j];
                *b = b.min((ad - numeric).abs() / ad.abs().max(1.0));
            }
        }
        if best.iter().any(|b| b.is_infinite()) {
            return None;
        }
        worst = best.into_iter().fold(worst, f64::max);
    }
    Some(worst)
}

/// Rounding scale of a residual at `p`: residual terms are products of `f`
/// and its jacobian, so cancellation error grows with `|f| * |df|`.
pub fn residual_scale(f: &Expr, p: &EvalPoint) -> f64 {
    let (v, jac) = f.value_and_jacobian(&p.vars()).expect("f defined at sample point");
    let top = |x: &[f64]| x.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    top(&v) * top(&jac)
}

/// A random expression over `t, y1..yd` using only everywhere-defined,
/// bounded-growth operations.
pub fn random_expr_string(rng: &mut impl Rng, d: usize, depth: u32) -> String {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..d + 3) {
            0 => "t".to_string(),
            i if i <= d => format!("y{i}"),
            i if i == d + 1 => "0.5".to_string(),
            _ => "2".to_string(),
        };
    }
    let a = random_expr_string(rng, d, depth - 1);
    match rng.random_range(0..6) {
        0 => format!("sin({a})"),
        1 => format!("cos({a})"),
        2 => format!("({a})^2"),
        op => {
            let b = random_expr_string(rng, d, depth - 1);
            let sym = ["+", "-", "*"][op - 3];
            format!("({a} {sym} {b})")
        }
    }
}

/// Expression tree over leaf and operator indices, the oracle's own
/// representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    Leaf(usize),
    Un(usize, Box<Tree>),
    Bin(usize, Box<Tree>, Box<Tree>),
}

impl Tree {
    fn collect_ops<'a>(&'a self, out: &mut HashSet<&'a Tree>) {
        match self {
            Tree::Leaf(_) => {}
            Tree::Un(_, a) => {
                out.insert(self);
                a.collect_ops(out);
            }
            Tree::Bin(_, a, b) => {
                out.insert(self);
                a.collect_ops(out);
                b.collect_ops(out);
            }
        }
    }

    /// Operator nodes after merging identical subtrees.
    pub fn dag_ops(&self) -> usize {
        let mut s = HashSet::new();
        self.collect_ops(&mut s);
        s.len()
    }
}

/// Every tree with exactly `k` operator nodes (tree count, no sharing),
/// for `k = 0..=max_tree_ops`.
pub fn all_trees(n_leaves: usize, n_unary: usize, n_binary: usize, max_tree_ops: usize) -> Vec<Vec<Tree>> {
    let mut by_size: Vec<Vec<Tree>> = vec![(0..n_leaves).map(Tree::Leaf).collect()];
    for k in 1..=max_tree_ops {
        let mut v = Vec::new();
        for u in 0..n_unary {
            for t in &by_size[k - 1] {
                v.push(Tree::Un(u, Box::new(t.clone())));
            }
        }
        for b in 0..n_binary {
            for i in 0..k {
                for l in &by_size[i] {
                    for r in &by_size[k - 1 - i] {
                        v.push(Tree::Bin(b, Box::new(l.clone()), Box::new(r.clone())));
                    }
                }
            }
        }
        by_size.push(v);
    }
    by_size
}

/// Brute force: distinct single-output expressions with exactly `n` shared
/// operator nodes, for `n = 0..=max_ops`. A DAG with `n` nodes unfolds to
/// a tree of at most `2^n - 1` operators.
pub fn oracle_expressions(n_leaves: usize, n_unary: usize, n_binary: usize, max_ops: usize) -> Vec<HashSet<Tree>> {
    let max_tree = (1usize << max_ops) - 1;
    let mut out = vec![HashSet::new(); max_ops + 1];
    for trees in all_trees(n_leaves, n_unary, n_binary, max_tree) {
        for t in trees {
            let n = t.dag_ops();
            if n <= max_ops {
                out[n].insert(t);
            }
        }
    }
    out
}

/// The single root of `e` as a [`Tree`] over the standard operator set and
/// the alphabet `t, y1.., constants`.
pub fn expr_to_tree(e: &Expr, d: usize, constants: &[f64]) -> Tree {
    let ops = OperatorSet::standard();
    fn go(e: &Expr, id: usize, d: usize, constants: &[f64], ops: &OperatorSet) -> Tree {
        match e.nodes()[id] {
            Node::Var(i) => Tree::Leaf(i),
            Node::Const(c) => Tree::Leaf(d + 1 + constants.iter().position(|&x| x == c).expect("alphabet constant")),
            Node::Unary(op, a) => {
                let idx = ops
                    .unary
                    .iter()
                    .position(|l| *l == odesym::search::UnaryLabel::Op(op))
                    .expect("standard unary op");
                Tree::Un(idx, Box::new(go(e, a as usize, d, constants, ops)))
            }
            Node::Binary(BinaryOp::Pow, a, b) => {
                let Node::Const(c) = e.nodes()[b as usize] else {
                    panic!("non-constant exponent")
                };
                let idx = ops
                    .unary
                    .iter()
                    .position(|l| *l == odesym::search::UnaryLabel::Pow(c))
                    .expect("standard power");
                Tree::Un(idx, Box::new(go(e, a as usize, d, constants, ops)))
            }
            Node::Binary(op, a, b) => {
                let idx = ops.binary.iter().position(|&o| o == op).expect("standard binary op");
                Tree::Bin(
                    idx,
                    Box::new(go(e, a as usize, d, constants, ops)),
                    Box::new(go(e, b as usize, d, constants, ops)),
                )
            }
        }
    }
    assert_eq!(e.root_count(), 1);
    go(e, e.roots()[0] as usize, d, constants, &ops)
}

/// Expressions from the skeleton stream for `d = 1` with exactly `n` operator
/// nodes, plus the number of emitted items (to detect duplicates).
pub fn stream_expressions(n: usize) -> (HashSet<Tree>, usize) {
    let constants = [1.0, 2.0];
    let alphabet = leaf_alphabet(1, &constants);
    let ops = OperatorSet::standard();
    let mut set = HashSet::new();
    let mut emitted = 0;
    for sk in enumerate_skeletons(1, n, alphabet.len()) {
        for (_, e) in label_skeleton(&sk, &alphabet, &ops) {
            emitted += 1;
            set.insert(expr_to_tree(&e, 1, &constants));
        }
    }
    (set, emitted)
}

pub fn unary_count() -> usize {
    OperatorSet::standard().unary.len()
}

pub fn binary_count() -> usize {
    OperatorSet::standard().binary.len()
}
