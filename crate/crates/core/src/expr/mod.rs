//! Expression DAGs over the variables `t, y1, .., yd`.
//!
//! An [`Expr`] is an append-only node array in topological order (every
//! child index is smaller than its parent) plus one root per output
//! component. Nodes are hash-consed by [`ExprBuilder`], so structurally
//! identical subexpressions share one node.

mod diff;
mod eval;
mod normal;
mod parse;
mod print;
mod simplify;

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

pub use eval::{binary_local, unary_local, Dual, EvalPoint, DIVISION_GUARD};
pub use normal::is_identically_zero;
pub use parse::parse;

use thiserror::Error;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Neg,
    Inv,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Square,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 9] = [
        UnaryOp::Neg,
        UnaryOp::Inv,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Sqrt,
        UnaryOp::Square,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Inv => "inv",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Right operand is always a [`Node::Const`].
    Pow,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }
}

/// `Var(0)` is `t`, `Var(k)` for `k >= 1` is `y_k`.
#[derive(Clone, Copy, Debug)]
pub enum Node {
    Var(usize),
    Const(f64),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Unary(o1, a), Node::Unary(o2, b)) => o1 == o2 && a == b,
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            _ => false,
        }
    }
}

impl Eq for Node {}

impl Hash for Node {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Node::Var(i) => i.hash(state),
            Node::Const(c) => c.to_bits().hash(state),
            Node::Unary(op, a) => {
                op.hash(state);
                a.hash(state);
            }
            Node::Binary(op, a, b) => {
                op.hash(state);
                a.hash(state);
                b.hash(state);
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("exponent at position {pos} must be a numeric constant")]
    NonConstantExponent { pos: usize },
    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },
}

/// Raised when an expression is evaluated outside its domain.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("{op} is undefined at argument {arg}")]
pub struct DomainError {
    pub op: &'static str,
    pub arg: f64,
}

/// Immutable, compacted expression DAG with one or more roots.
#[derive(Clone, Debug)]
pub struct Expr {
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.roots == other.roots
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    /// Number of operator (non-leaf) nodes.
    pub fn operator_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Unary(..) | Node::Binary(..)))
            .count()
    }

    /// Largest variable index referenced, or `None` for constant expressions.
    pub fn max_var(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Var(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Checks the topological-order invariant and that pow exponents are constants.
    pub fn is_well_formed(&self) -> bool {
        let n = self.nodes.len() as NodeId;
        let topo = self.nodes.iter().enumerate().all(|(i, node)| {
            let i = i as NodeId;
            match *node {
                Node::Var(_) | Node::Const(_) => true,
                Node::Unary(_, a) => a < i,
                Node::Binary(op, a, b) => {
                    a < i
                        && b < i
                        && (op != BinaryOp::Pow
                            || matches!(self.nodes[b as usize], Node::Const(_)))
                }
            }
        });
        topo && self.roots.iter().all(|&r| r < n)
    }

    pub fn is_constant_zero(&self, root: usize) -> bool {
        matches!(self.nodes[self.roots[root] as usize], Node::Const(c) if c == 0.0)
    }

    /// Single-root expression for component `k`.
    pub fn component(&self, k: usize) -> Expr {
        let mut b = ExprBuilder::new();
        let map = b.import(self);
        let root = map[self.roots[k] as usize];
        b.finish(vec![root])
    }

    pub fn components(&self) -> Vec<Expr> {
        (0..self.root_count()).map(|k| self.component(k)).collect()
    }

    /// Stacks the roots of several expressions into one multi-root DAG.
    pub fn stack(parts: &[Expr]) -> Expr {
        let mut b = ExprBuilder::new();
        let mut roots = Vec::new();
        for p in parts {
            let map = b.import(p);
            roots.extend(p.roots.iter().map(|&r| map[r as usize]));
        }
        b.finish(roots)
    }

    pub fn constant(c: f64) -> Expr {
        let mut b = ExprBuilder::new();
        let r = b.constant(c);
        b.finish(vec![r])
    }

    pub fn var(i: usize) -> Expr {
        let mut b = ExprBuilder::new();
        let r = b.var(i);
        b.finish(vec![r])
    }

    /// Text of component `k` in the parser's grammar.
    pub fn print_root(&self, k: usize) -> String {
        print::print_node(self, self.roots[k])
    }

    /// Every component printed separately.
    pub fn print_roots(&self) -> Vec<String> {
        (0..self.root_count()).map(|k| self.print_root(k)).collect()
    }

    pub fn diff(&self, var: usize) -> Expr {
        diff::diff_symbolic(self, var)
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.roots.len() == 1 {
            write!(f, "{}", self.print_root(0))
        } else {
            write!(f, "[{}]", self.print_roots().join(", "))
        }
    }
}

/// Hash-consing constructor for [`Expr`].
///
/// The plain constructors (`unary`, `binary`, `pow`) never rewrite. The
/// `add`/`sub`/`mul`/`div`/`neg` helpers fold constants and drop neutral
/// elements; they are what differentiation and simplification build with.
#[derive(Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.index.insert(node, id);
        id
    }

    pub fn get(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.intern(Node::Var(i))
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        debug_assert!(c.is_finite());
        // -0.0 and 0.0 share a node.
        let c = if c == 0.0 { 0.0 } else { c };
        self.intern(Node::Const(c))
    }

    pub fn unary(&mut self, op: UnaryOp, a: NodeId) -> NodeId {
        self.intern(Node::Unary(op, a))
    }

    /// Panics if `op` is `Pow` and `b` is not a constant node.
    pub fn binary(&mut self, op: BinaryOp, a: NodeId, b: NodeId) -> NodeId {
        assert!(
            op != BinaryOp::Pow || matches!(self.get(b), Node::Const(_)),
            "pow exponent must be a constant node"
        );
        self.intern(Node::Binary(op, a, b))
    }

    /// `base ^ exponent` in canonical form: exponents 1, 2, -1 and 1/2 map to
    /// the identity, `square`, `inv` and `sqrt`; 0 maps to the constant 1.
    pub fn pow(&mut self, base: NodeId, exponent: f64) -> NodeId {
        if exponent == 1.0 {
            base
        } else if exponent == 0.0 {
            self.constant(1.0)
        } else if exponent == 2.0 {
            self.unary(UnaryOp::Square, base)
        } else if exponent == -1.0 {
            self.unary(UnaryOp::Inv, base)
        } else if exponent == 0.5 {
            self.unary(UnaryOp::Sqrt, base)
        } else {
            let e = self.constant(exponent);
            self.binary(BinaryOp::Pow, base, e)
        }
    }

    pub fn const_value(&self, id: NodeId) -> Option<f64> {
        match self.get(id) {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_const(&self, id: NodeId, v: f64) -> bool {
        self.const_value(id) == Some(v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        match self.get(a) {
            Node::Const(c) => self.constant(-c),
            Node::Unary(UnaryOp::Neg, inner) => inner,
            _ => self.unary(UnaryOp::Neg, a),
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.constant(x + y);
        }
        if self.is_const(a, 0.0) {
            return b;
        }
        if self.is_const(b, 0.0) {
            return a;
        }
        if let Node::Unary(UnaryOp::Neg, nb) = self.get(b) {
            return self.sub(a, nb);
        }
        if let Node::Unary(UnaryOp::Neg, na) = self.get(a) {
            return self.sub(b, na);
        }
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if a == b {
            return self.constant(0.0);
        }
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.constant(x - y);
        }
        if self.is_const(b, 0.0) {
            return a;
        }
        if self.is_const(a, 0.0) {
            return self.neg(b);
        }
        if let Node::Unary(UnaryOp::Neg, nb) = self.get(b) {
            return self.add(a, nb);
        }
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.constant(x * y);
        }
        if self.is_const(a, 0.0) || self.is_const(b, 0.0) {
            return self.constant(0.0);
        }
        if self.is_const(a, 1.0) {
            return b;
        }
        if self.is_const(b, 1.0) {
            return a;
        }
        if self.is_const(a, -1.0) {
            return self.neg(b);
        }
        if self.is_const(b, -1.0) {
            return self.neg(a);
        }
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            if let Some(q) = exact_quotient(x, y) {
                return self.constant(q);
            }
        }
        if self.is_const(a, 0.0) && !self.is_const(b, 0.0) {
            return self.constant(0.0);
        }
        if self.is_const(b, 1.0) {
            return a;
        }
        if a == b && !self.is_const(a, 0.0) {
            return self.constant(1.0);
        }
        if self.is_const(a, 1.0) {
            return self.unary(UnaryOp::Inv, b);
        }
        self.binary(BinaryOp::Div, a, b)
    }

    /// Copies every node of `e` into this builder; returns the id mapping.
    pub fn import(&mut self, e: &Expr) -> Vec<NodeId> {
        let mut map: Vec<NodeId> = Vec::with_capacity(e.nodes.len());
        for node in &e.nodes {
            let id = match *node {
                Node::Var(i) => self.var(i),
                Node::Const(c) => self.constant(c),
                Node::Unary(op, a) => self.unary(op, map[a as usize]),
                Node::Binary(op, a, b) => self.binary(op, map[a as usize], map[b as usize]),
            };
            map.push(id);
        }
        map
    }

    /// Imports `e` and returns its root ids in this builder.
    pub fn import_roots(&mut self, e: &Expr) -> Vec<NodeId> {
        let map = self.import(e);
        e.roots.iter().map(|&r| map[r as usize]).collect()
    }

    /// Freezes the given roots into a compacted [`Expr`]: only reachable
    /// nodes are kept, renumbered in depth-first post-order from the roots.
    pub fn finish(&self, roots: Vec<NodeId>) -> Expr {
        let mut new_id: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        let mut out = ExprBuilder::new();
        let mut new_roots = Vec::with_capacity(roots.len());
        for &r in &roots {
            let id = self.copy_postorder(r, &mut new_id, &mut out);
            new_roots.push(id);
        }
        Expr {
            nodes: out.nodes,
            roots: new_roots,
        }
    }

    fn copy_postorder(
        &self,
        root: NodeId,
        new_id: &mut [Option<NodeId>],
        out: &mut ExprBuilder,
    ) -> NodeId {
        // Iterative DFS so deep expressions cannot overflow the stack.
        let mut stack: Vec<(NodeId, bool)> = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if new_id[id as usize].is_some() {
                continue;
            }
            let node = self.nodes[id as usize];
            if !expanded {
                stack.push((id, true));
                match node {
                    Node::Unary(_, a) => stack.push((a, false)),
                    Node::Binary(_, a, b) => {
                        stack.push((b, false));
                        stack.push((a, false));
                    }
                    _ => {}
                }
                continue;
            }
            let mapped = match node {
                Node::Var(i) => out.var(i),
                Node::Const(c) => out.constant(c),
                Node::Unary(op, a) => out.unary(op, new_id[a as usize].unwrap()),
                Node::Binary(op, a, b) => {
                    out.binary(op, new_id[a as usize].unwrap(), new_id[b as usize].unwrap())
                }
            };
            new_id[id as usize] = Some(mapped);
        }
        new_id[root as usize].unwrap()
    }
}

/// `x / y` if it is exactly representable, judged with exact rationals.
pub(crate) fn exact_quotient(x: f64, y: f64) -> Option<f64> {
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    if y == 0.0 {
        return None;
    }
    let a = BigRational::from_float(x)?;
    let b = BigRational::from_float(y)?;
    if b.is_zero() {
        return None;
    }
    let q = a / b;
    let f = q.to_f64()?;
    (BigRational::from_float(f)? == q).then_some(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_shares_nodes() {
        let mut b = ExprBuilder::new();
        let y1 = b.var(1);
        let y1b = b.var(1);
        assert_eq!(y1, y1b);
        let s1 = b.unary(UnaryOp::Sin, y1);
        let s2 = b.unary(UnaryOp::Sin, y1b);
        assert_eq!(s1, s2);
    }

    #[test]
    fn finish_drops_unreachable_nodes() {
        let mut b = ExprBuilder::new();
        let t = b.var(0);
        let _dead = b.unary(UnaryOp::Exp, t);
        let y = b.var(1);
        let e = b.finish(vec![y]);
        assert_eq!(e.nodes().len(), 1);
        assert!(e.is_well_formed());
    }

    #[test]
    fn smart_constructors_fold_identities() {
        let mut b = ExprBuilder::new();
        let x = b.var(1);
        let zero = b.constant(0.0);
        let one = b.constant(1.0);
        assert_eq!(b.add(x, zero), x);
        assert_eq!(b.mul(one, x), x);
        let z = b.mul(x, zero);
        assert_eq!(b.const_value(z), Some(0.0));
        let d = b.sub(x, x);
        assert_eq!(b.const_value(d), Some(0.0));
        let n = b.neg(x);
        assert_eq!(b.neg(n), x);
        let third = {
            let three = b.constant(3.0);
            b.div(one, three)
        };
        assert!(b.const_value(third).is_none(), "1/3 is not folded");
    }

    #[test]
    #[should_panic]
    fn pow_requires_constant_exponent() {
        let mut b = ExprBuilder::new();
        let t = b.var(0);
        let y = b.var(1);
        b.binary(BinaryOp::Pow, t, y);
    }
}
