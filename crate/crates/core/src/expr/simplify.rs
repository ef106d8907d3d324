//! Simplification: local rewrites followed by replacing every subexpression
//! the normal form proves to be zero.

use super::normal::zero_nodes;
use super::{exact_quotient, BinaryOp, Expr, ExprBuilder, Node, NodeId, UnaryOp};

pub(super) fn simplify(e: &Expr) -> Expr {
    let local = rewrite(e, None);
    let zeros = zero_nodes(&local);
    if zeros.iter().any(|&z| z) {
        rewrite(&local, Some(&zeros))
    } else {
        local
    }
}

fn rewrite(e: &Expr, zeros: Option<&[bool]>) -> Expr {
    let mut b = ExprBuilder::new();
    let mut map: Vec<NodeId> = Vec::with_capacity(e.nodes().len());
    for (i, node) in e.nodes().iter().enumerate() {
        let id = if zeros.map(|z| z[i]).unwrap_or(false) {
            b.constant(0.0)
        } else {
            match *node {
                Node::Var(k) => b.var(k),
                Node::Const(c) => b.constant(c),
                Node::Unary(op, a) => unary(&mut b, op, map[a as usize]),
                Node::Binary(op, l, r) => binary(&mut b, op, map[l as usize], map[r as usize]),
            }
        };
        map.push(id);
    }
    let roots = e.roots().iter().map(|&r| map[r as usize]).collect();
    b.finish(roots)
}

fn unary(b: &mut ExprBuilder, op: UnaryOp, a: NodeId) -> NodeId {
    if let Some(c) = b.const_value(a) {
        if let Some(v) = fold_unary(op, c) {
            return b.constant(v);
        }
    }
    match (op, b.get(a)) {
        (UnaryOp::Neg, _) => b.neg(a),
        (UnaryOp::Inv, Node::Unary(UnaryOp::Inv, x)) => x,
        (UnaryOp::Exp, Node::Unary(UnaryOp::Log, x)) => x,
        (UnaryOp::Square, Node::Unary(UnaryOp::Sqrt, x)) => x,
        (UnaryOp::Square, Node::Unary(UnaryOp::Neg, x)) => b.unary(UnaryOp::Square, x),
        (UnaryOp::Cos, Node::Unary(UnaryOp::Neg, x)) => b.unary(UnaryOp::Cos, x),
        (UnaryOp::Sin | UnaryOp::Tan, Node::Unary(UnaryOp::Neg, x)) => {
            let inner = b.unary(op, x);
            b.neg(inner)
        }
        _ => b.unary(op, a),
    }
}

/// Folds only results that are exact in floating point.
fn fold_unary(op: UnaryOp, c: f64) -> Option<f64> {
    let v = match op {
        UnaryOp::Neg => -c,
        UnaryOp::Inv => return exact_quotient(1.0, c),
        UnaryOp::Exp if c == 0.0 => 1.0,
        UnaryOp::Log if c == 1.0 => 0.0,
        UnaryOp::Sin | UnaryOp::Tan if c == 0.0 => 0.0,
        UnaryOp::Cos if c == 0.0 => 1.0,
        UnaryOp::Sqrt if c >= 0.0 && c.sqrt() * c.sqrt() == c => c.sqrt(),
        UnaryOp::Square if (c * c).is_finite() && exact_quotient(c * c, c) == Some(c) => c * c,
        _ => return None,
    };
    Some(v)
}

fn binary(b: &mut ExprBuilder, op: BinaryOp, l: NodeId, r: NodeId) -> NodeId {
    match op {
        BinaryOp::Add => match (b.get(l), b.get(r)) {
            (Node::Binary(BinaryOp::Sub, x, y), _) if y == r => x,
            (_, Node::Binary(BinaryOp::Sub, x, y)) if y == l => x,
            _ => b.add(l, r),
        },
        BinaryOp::Sub => match (b.get(l), b.get(r)) {
            (Node::Binary(BinaryOp::Add, x, y), _) if x == r => y,
            (Node::Binary(BinaryOp::Add, x, y), _) if y == r => x,
            (Node::Binary(BinaryOp::Sub, x, y), _) if x == r => b.neg(y),
            (_, Node::Binary(BinaryOp::Sub, x, y)) if x == l => y,
            _ => b.sub(l, r),
        },
        BinaryOp::Mul => {
            if l == r {
                return b.unary(UnaryOp::Square, l);
            }
            match (b.get(l), b.get(r)) {
                (Node::Unary(UnaryOp::Neg, x), Node::Unary(UnaryOp::Neg, y)) => b.mul(x, y),
                (Node::Unary(UnaryOp::Inv, x), _) => b.div(r, x),
                (_, Node::Unary(UnaryOp::Inv, y)) => b.div(l, y),
                _ => b.mul(l, r),
            }
        }
        BinaryOp::Div => {
            match b.get(r) {
                Node::Unary(UnaryOp::Inv, y) => b.mul(l, y),
                // Integer exponents only: x^-0.5 and x^0.5 differ at x = 0.
                Node::Binary(BinaryOp::Pow, x, c) => match b.const_value(c) {
                    Some(c) if c < 0.0 && c.fract() == 0.0 => {
                        let p = b.pow(x, -c);
                        b.mul(l, p)
                    }
                    _ => b.div(l, r),
                },
                _ => b.div(l, r),
            }
        }
        BinaryOp::Pow => {
            let c = b.const_value(r).expect("constant exponent");
            b.pow(l, c)
        }
    }
}
