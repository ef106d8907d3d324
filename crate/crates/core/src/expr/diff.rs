use super::{BinaryOp, Expr, ExprBuilder, Node, NodeId, UnaryOp};

/// Partial derivative of every root of `e` with respect to variable `var`.
pub(super) fn diff_symbolic(e: &Expr, var: usize) -> Expr {
    let mut b = ExprBuilder::new();
    let map = b.import(e);
    let mut d: Vec<NodeId> = Vec::with_capacity(e.nodes().len());
    for (i, node) in e.nodes().iter().enumerate() {
        let this = map[i];
        let di = match *node {
            Node::Var(k) => b.constant(if k == var { 1.0 } else { 0.0 }),
            Node::Const(_) => b.constant(0.0),
            Node::Unary(op, a) => {
                let (u, du) = (map[a as usize], d[a as usize]);
                if b.const_value(du) == Some(0.0) {
                    b.constant(0.0)
                } else {
                    let outer = unary_derivative(&mut b, op, u, this);
                    b.mul(outer, du)
                }
            }
            Node::Binary(op, l, r) => {
                let (u, du) = (map[l as usize], d[l as usize]);
                let (v, dv) = (map[r as usize], d[r as usize]);
                match op {
                    BinaryOp::Add => b.add(du, dv),
                    BinaryOp::Sub => b.sub(du, dv),
                    BinaryOp::Mul => {
                        let x = b.mul(du, v);
                        let y = b.mul(u, dv);
                        b.add(x, y)
                    }
                    BinaryOp::Div => {
                        // u'/v - u*v'/v^2
                        let x = b.div(du, v);
                        let num = b.mul(u, dv);
                        let den = b.unary(UnaryOp::Square, v);
                        let y = if b.const_value(num) == Some(0.0) {
                            num
                        } else {
                            b.div(num, den)
                        };
                        b.sub(x, y)
                    }
                    BinaryOp::Pow => {
                        let c = b.const_value(v).expect("constant exponent");
                        let lower = b.pow(u, c - 1.0);
                        let k = b.constant(c);
                        let outer = b.mul(k, lower);
                        b.mul(outer, du)
                    }
                }
            }
        };
        d.push(di);
    }
    let roots = e.roots().iter().map(|&r| d[r as usize]).collect();
    b.finish(roots)
}

/// `d op(u) / du`, with `this` the node for `op(u)` itself.
fn unary_derivative(b: &mut ExprBuilder, op: UnaryOp, u: NodeId, this: NodeId) -> NodeId {
    match op {
        UnaryOp::Neg => b.constant(-1.0),
        UnaryOp::Inv => {
            let sq = b.unary(UnaryOp::Square, u);
            let inv = b.unary(UnaryOp::Inv, sq);
            b.neg(inv)
        }
        UnaryOp::Exp => this,
        UnaryOp::Log => b.unary(UnaryOp::Inv, u),
        UnaryOp::Sin => b.unary(UnaryOp::Cos, u),
        UnaryOp::Cos => {
            let s = b.unary(UnaryOp::Sin, u);
            b.neg(s)
        }
        UnaryOp::Tan => {
            let sq = b.unary(UnaryOp::Square, this);
            let one = b.constant(1.0);
            b.add(one, sq)
        }
        UnaryOp::Sqrt => {
            let two = b.constant(2.0);
            let den = b.mul(two, this);
            b.unary(UnaryOp::Inv, den)
        }
        UnaryOp::Square => {
            let two = b.constant(2.0);
            b.mul(two, u)
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, EvalPoint};

    #[test]
    fn derivative_of_cos_t() {
        let e = parse("cos(t)", 1).unwrap();
        assert_eq!(e.diff(0).to_string(), "-sin(t)");
    }

    #[test]
    fn derivative_of_product() {
        let e = parse("y1*y2*t", 2).unwrap();
        assert_eq!(e.diff(1).to_string(), "y2*t");
    }

    #[test]
    fn derivative_of_canonical_coordinate() {
        let e = parse("ln(y1) + y2/y1", 2).unwrap();
        let d = e.diff(1);
        assert_eq!(d.to_string(), "y1^-1 - y2/y1^2");
        let p = EvalPoint::new(0.0, vec![2.0, 3.0]);
        let v = d.evaluate(&p).unwrap()[0];
        assert!((v - (0.5 - 3.0 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn matches_forward_mode_gradient() {
        let e = parse(
            "[exp(-y1*t^-2)*y2/t + tan(y1), sqrt(y1)*log(y2)^3 - 1/(y1*y2)]",
            2,
        )
        .unwrap();
        let p = EvalPoint::new(1.3, vec![0.6, 1.8]);
        let grad = e.gradient(&p).unwrap();
        for var in 0..3 {
            let d = e.diff(var).evaluate(&p).unwrap();
            for k in 0..2 {
                assert!((d[k] - grad[k][var]).abs() <= 1e-10 * (1.0 + grad[k][var].abs()));
            }
        }
    }
}
