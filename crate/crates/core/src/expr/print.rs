//! Printing in the parser's grammar with minimal parentheses.
//!
//! The output re-parses to the same DAG: `square`, `inv` and `sqrt` print as
//! `^2`, `^-1` and `sqrt(..)`, which the parser maps back to those nodes.

use super::{BinaryOp, Expr, Node, NodeId, UnaryOp};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

pub(super) fn var_name(i: usize) -> String {
    if i == 0 {
        "t".to_string()
    } else {
        format!("y{i}")
    }
}

fn number(c: f64) -> String {
    format!("{c}")
}

fn precedence(e: &Expr, id: NodeId) -> u8 {
    match e.node(id) {
        Node::Var(_) => PREC_ATOM,
        Node::Const(c) if c < 0.0 => PREC_NEG,
        Node::Const(_) => PREC_ATOM,
        Node::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Node::Unary(UnaryOp::Square | UnaryOp::Inv, _) => PREC_POWER,
        Node::Unary(..) => PREC_ATOM,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_SUM,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PREC_PRODUCT,
        Node::Binary(BinaryOp::Pow, ..) => PREC_POWER,
    }
}

fn wrapped(e: &Expr, id: NodeId, min_prec: u8, out: &mut String) {
    if precedence(e, id) < min_prec {
        out.push('(');
        write_node(e, id, out);
        out.push(')');
    } else {
        write_node(e, id, out);
    }
}

fn write_node(e: &Expr, id: NodeId, out: &mut String) {
    match e.node(id) {
        Node::Var(i) => out.push_str(&var_name(i)),
        Node::Const(c) => out.push_str(&number(c)),
        Node::Unary(op, a) => match op {
            UnaryOp::Neg => {
                out.push('-');
                wrapped(e, a, PREC_NEG, out);
            }
            UnaryOp::Square => {
                wrapped(e, a, PREC_ATOM, out);
                out.push_str("^2");
            }
            UnaryOp::Inv => {
                wrapped(e, a, PREC_ATOM, out);
                out.push_str("^-1");
            }
            _ => {
                out.push_str(op.name());
                out.push('(');
                write_node(e, a, out);
                out.push(')');
            }
        },
        Node::Binary(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinaryOp::Add => (" + ", PREC_SUM, PREC_PRODUCT),
                BinaryOp::Sub => (" - ", PREC_SUM, PREC_PRODUCT),
                BinaryOp::Mul => ("*", PREC_PRODUCT, PREC_NEG),
                BinaryOp::Div => ("/", PREC_PRODUCT, PREC_NEG),
                BinaryOp::Pow => {
                    wrapped(e, a, PREC_ATOM, out);
                    out.push('^');
                    if let Node::Const(c) = e.node(b) {
                        out.push_str(&number(c));
                    }
                    return;
                }
            };
            wrapped(e, a, lp, out);
            out.push_str(sym);
            wrapped(e, b, rp, out);
        }
    }
}

pub(super) fn print_node(e: &Expr, id: NodeId) -> String {
    let mut out = String::new();
    write_node(e, id, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn roundtrip(s: &str, d: usize) -> String {
        let e = parse(s, d).unwrap();
        let printed = e.to_string();
        assert_eq!(parse(&printed, d).unwrap(), e, "{s} -> {printed}");
        printed
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(roundtrip("(y1*y2)*t", 2), "y1*y2*t");
        assert_eq!(roundtrip("y1*(y2*t)", 2), "y1*(y2*t)");
        assert_eq!(roundtrip("y1 - (y2 - t)", 2), "y1 - (y2 - t)");
        assert_eq!(roundtrip("-(y1 + y2)", 2), "-(y1 + y2)");
        assert_eq!(roundtrip("(-y1)*y2", 2), "-y1*y2");
        assert_eq!(roundtrip("-(y1*y2)", 2), "-(y1*y2)");
        assert_eq!(roundtrip("(t+1)^2", 1), "(t + 1)^2");
        assert_eq!(roundtrip("sin(t)^-3", 1), "sin(t)^-3");
        assert_eq!(roundtrip("(-2)^3", 1), "(-2)^3");
        assert_eq!(roundtrip("1/y1", 1), "1/y1");
        assert_eq!(roundtrip("y1^-1", 1), "y1^-1");
        assert_eq!(roundtrip("y2/(t*y1)", 2), "y2/(t*y1)");
    }

    #[test]
    fn multi_root_display() {
        assert_eq!(roundtrip("[cos(t), sin(t)]", 2), "[cos(t), sin(t)]");
    }
}
