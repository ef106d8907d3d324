//! Unlabeled expression DAGs.
//!
//! A skeleton fixes the wiring of operator slots and which slot (or leaf)
//! each output reads; operator symbols and leaf symbols are assigned later.
//! Leaf slots always receive pairwise distinct symbols, so a skeleton
//! describes the maximally shared form of an expression.
//!
//! Skeletons are kept in a canonical numbering: operator slots are numbered
//! in depth-first post-order from the roots (taken in order, children left to
//! right), and leaf slots form a restricted growth string in slot order.
//! Each isomorphism class therefore appears exactly once.


use crate::expr::{BinaryOp, Expr, ExprBuilder, NodeId, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Child {
    Leaf(u8),
    Op(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Unary(Child),
    Binary(Child, Child),
}

impl Slot {
    pub fn arity(&self) -> usize {
        match self {
            Slot::Unary(_) => 1,
            Slot::Binary(..) => 2,
        }
    }

    fn children(&self) -> impl Iterator<Item = Child> {
        let (a, b) = match *self {
            Slot::Unary(a) => (a, None),
            Slot::Binary(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Skeleton {
    pub ops: Vec<Slot>,
    pub roots: Vec<Child>,
    pub n_leaves: usize,
}

impl Skeleton {
    pub fn n_ops(&self) -> usize {
        self.ops.len()
    }

    /// `used_as_child[i]` is true if slot `i` feeds another slot.
    pub fn used_as_child(&self) -> Vec<bool> {
        let mut used = vec![false; self.ops.len()];
        for s in &self.ops {
            for c in s.children() {
                if let Child::Op(j) = c {
                    used[j as usize] = true;
                }
            }
        }
        used
    }

    /// Whether the numbering is the canonical one described in the module docs.
    pub fn is_canonical(&self) -> bool {
        // Leaves: restricted growth in slot order, all used.
        let mut next_leaf = 0u8;
        let leaf_refs = self
            .ops
            .iter()
            .flat_map(|s| s.children())
            .chain(self.roots.iter().copied());
        for c in leaf_refs {
            if let Child::Leaf(l) = c {
                if l > next_leaf {
                    return false;
                }
                if l == next_leaf {
                    next_leaf += 1;
                }
            }
        }
        if next_leaf as usize != self.n_leaves {
            return false;
        }
        // Operators: post-order numbering from the roots is the identity.
        let n = self.ops.len();
        let mut order: Vec<u8> = Vec::with_capacity(n);
        let mut done = vec![false; n];
        for &r in &self.roots {
            if let Child::Op(o) = r {
                self.post_order(o, &mut done, &mut order);
            }
        }
        order.len() == n && order.iter().enumerate().all(|(i, &o)| o as usize == i)
    }

    fn post_order(&self, root: u8, done: &mut [bool], order: &mut Vec<u8>) {
        let mut stack = vec![(root, false)];
        while let Some((o, expanded)) = stack.pop() {
            if done[o as usize] {
                continue;
            }
            if expanded {
                done[o as usize] = true;
                order.push(o);
                continue;
            }
            stack.push((o, true));
            let kids: Vec<Child> = self.ops[o as usize].children().collect();
            for c in kids.into_iter().rev() {
                if let Child::Op(j) = c {
                    stack.push((j, false));
                }
            }
        }
    }
}

/// Search state while growing operator lists slot by slot.
struct Grow {
    d: usize,
    n_ops: usize,
    max_leaves: usize,
    ops: Vec<Slot>,
    refs: Vec<u32>,
    n_leaves: u8,
}

impl Grow {
    fn child_options(&self, leaves_so_far: u8) -> Vec<(Child, u8)> {
        let mut out = Vec::new();
        let new_leaf_ok = (leaves_so_far as usize) < self.max_leaves;
        let top = if new_leaf_ok { leaves_so_far } else { leaves_so_far.saturating_sub(1) };
        if leaves_so_far > 0 || new_leaf_ok {
            for l in 0..=top {
                let grown = if l == leaves_so_far { leaves_so_far + 1 } else { leaves_so_far };
                out.push((Child::Leaf(l), grown));
            }
        }
        for o in 0..self.ops.len() {
            out.push((Child::Op(o as u8), leaves_so_far));
        }
        out
    }

    fn unreferenced(&self) -> usize {
        self.refs.iter().filter(|&&r| r == 0).count()
    }

    fn add_ref(&mut self, c: Child, delta: i32) {
        if let Child::Op(o) = c {
            self.refs[o as usize] = (self.refs[o as usize] as i32 + delta) as u32;
        }
    }

    fn push(&mut self, slot: Slot, leaves: u8, out: &mut Vec<Skeleton>) {
        let saved = self.n_leaves;
        for c in slot.children() {
            self.add_ref(c, 1);
        }
        self.ops.push(slot);
        self.refs.push(0);
        self.n_leaves = leaves;
        self.grow(out);
        self.n_leaves = saved;
        self.refs.pop();
        self.ops.pop();
        for c in slot.children() {
            self.add_ref(c, -1);
        }
    }

    fn grow(&mut self, out: &mut Vec<Skeleton>) {
        let remaining = self.n_ops - self.ops.len();
        // Every operator still unreferenced must end up as a root; each new
        // slot can absorb at most one net dangling operator.
        if self.unreferenced() > self.d + remaining {
            return;
        }
        if remaining == 0 {
            let mut roots = Vec::with_capacity(self.d);
            self.choose_roots(&mut roots, self.n_leaves, out);
            return;
        }
        for (a, la) in self.child_options(self.n_leaves) {
            self.push(Slot::Unary(a), la, out);
        }
        for (a, la) in self.child_options(self.n_leaves) {
            for (b, lb) in self.child_options(la) {
                self.push(Slot::Binary(a, b), lb, out);
            }
        }
    }

    fn choose_roots(&self, roots: &mut Vec<Child>, leaves: u8, out: &mut Vec<Skeleton>) {
        if roots.len() == self.d {
            let mut covered = self.refs.iter().map(|&r| r > 0).collect::<Vec<_>>();
            for r in roots.iter() {
                if let Child::Op(o) = r {
                    covered[*o as usize] = true;
                }
            }
            if covered.iter().all(|&c| c) {
                let sk = Skeleton {
                    ops: self.ops.clone(),
                    roots: roots.clone(),
                    n_leaves: leaves as usize,
                };
                if sk.is_canonical() {
                    out.push(sk);
                }
            }
            return;
        }
        for (c, l) in self.child_options(leaves) {
            roots.push(c);
            self.choose_roots(roots, l, out);
            roots.pop();
        }
    }
}

/// All canonical skeletons with `d` outputs, exactly `n_ops` operator slots
/// and at most `max_leaves` distinct leaves.
pub fn enumerate_skeletons(d: usize, n_ops: usize, max_leaves: usize) -> Vec<Skeleton> {
    let mut g = Grow {
        d,
        n_ops,
        max_leaves: max_leaves.min(u8::MAX as usize),
        ops: Vec::with_capacity(n_ops),
        refs: Vec::with_capacity(n_ops),
        n_leaves: 0,
    };
    let mut out = Vec::new();
    g.grow(&mut out);
    out
}

/// Operator symbol for a unary slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryLabel {
    Op(UnaryOp),
    /// `x^c` for a constant exponent `c`.
    Pow(f64),
}

/// Symbol for a leaf slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeafSymbol {
    Var(usize),
    Const(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    pub unary: Vec<UnaryLabel>,
    pub binary: Vec<BinaryOp>,
}

impl OperatorSet {
    /// The nine unary operators, powers with exponents -3, -2, -1/2, 3 and
    /// 4, and the four arithmetic operators. The exponents -1, 1/2 and 2
    /// are already `inv`, `sqrt` and `square`.
    pub fn standard() -> Self {
        let mut unary: Vec<UnaryLabel> = UnaryOp::ALL.iter().map(|&o| UnaryLabel::Op(o)).collect();
        unary.extend([-3.0, -2.0, -0.5, 3.0, 4.0].map(UnaryLabel::Pow));
        OperatorSet {
            unary,
            binary: vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div],
        }
    }

    pub fn arity_count(&self, arity: usize) -> usize {
        if arity == 1 {
            self.unary.len()
        } else {
            self.binary.len()
        }
    }
}

/// `t, y1..yd` followed by the given constants.
pub fn leaf_alphabet(d: usize, constants: &[f64]) -> Vec<LeafSymbol> {
    (0..=d)
        .map(LeafSymbol::Var)
        .chain(constants.iter().map(|&c| LeafSymbol::Const(c)))
        .collect()
}

/// A full assignment of symbols to a skeleton's slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Labeling {
    /// Index into the leaf alphabet per leaf slot.
    pub leaves: Vec<u8>,
    /// Index into the operator list of matching arity per operator slot.
    pub ops: Vec<u8>,
}

impl Labeling {
    /// Position in the canonical labeling order of `sk`: leaf choices are
    /// the most significant digits (each slot choosing among the symbols
    /// not used by earlier slots), then operator choices in slot order.
    pub fn id(&self, sk: &Skeleton, alphabet_len: usize, ops: &OperatorSet) -> u64 {
        let mut id: u64 = 0;
        let mut used: Vec<u8> = Vec::with_capacity(self.leaves.len());
        for (s, &l) in self.leaves.iter().enumerate() {
            let digit = l as u64 - used.iter().filter(|&&u| u < l).count() as u64;
            id = id * (alphabet_len - s) as u64 + digit;
            used.push(l);
        }
        for (slot, &o) in sk.ops.iter().zip(&self.ops) {
            id = id * ops.arity_count(slot.arity()) as u64 + o as u64;
        }
        id
    }
}

/// Builds the labeled expression DAG without any rewriting.
pub fn build_expr(
    sk: &Skeleton,
    lab: &Labeling,
    alphabet: &[LeafSymbol],
    ops: &OperatorSet,
) -> Expr {
    let mut b = ExprBuilder::new();
    let leaves: Vec<NodeId> = lab
        .leaves
        .iter()
        .map(|&l| match alphabet[l as usize] {
            LeafSymbol::Var(i) => b.var(i),
            LeafSymbol::Const(c) => b.constant(c),
        })
        .collect();
    let mut nodes: Vec<NodeId> = Vec::with_capacity(sk.ops.len());
    let get = |c: Child, nodes: &[NodeId]| match c {
        Child::Leaf(l) => leaves[l as usize],
        Child::Op(o) => nodes[o as usize],
    };
    for (slot, &o) in sk.ops.iter().zip(&lab.ops) {
        let id = match *slot {
            Slot::Unary(a) => {
                let a = get(a, &nodes);
                match ops.unary[o as usize] {
                    UnaryLabel::Op(op) => b.unary(op, a),
                    UnaryLabel::Pow(c) => {
                        let e = b.constant(c);
                        b.binary(BinaryOp::Pow, a, e)
                    }
                }
            }
            Slot::Binary(x, y) => {
                let (x, y) = (get(x, &nodes), get(y, &nodes));
                b.binary(ops.binary[o as usize], x, y)
            }
        };
        nodes.push(id);
    }
    let roots = sk.roots.iter().map(|&r| get(r, &nodes)).collect();
    b.finish(roots)
}

/// Every labeling of `sk` in canonical order, skipping those in which two
/// operator slots with the same children get the same symbol (such an
/// expression has a smaller maximally shared form).
pub fn label_skeleton<'a>(
    sk: &'a Skeleton,
    alphabet: &'a [LeafSymbol],
    ops: &'a OperatorSet,
) -> impl Iterator<Item = (Labeling, Expr)> + 'a {
    let a = alphabet.len();
    let leaf_perms = permutations(a, sk.n_leaves);
    let radices: Vec<usize> = sk.ops.iter().map(|s| ops.arity_count(s.arity())).collect();
    let op_total: u64 = radices.iter().map(|&r| r as u64).product();
    leaf_perms.into_iter().flat_map(move |leaves| {
        let radices = radices.clone();
        (0..op_total).filter_map(move |mut code| {
            let mut labels = vec![0u8; radices.len()];
            for i in (0..radices.len()).rev() {
                labels[i] = (code % radices[i] as u64) as u8;
                code /= radices[i] as u64;
            }
            for i in 0..sk.ops.len() {
                for j in 0..i {
                    if sk.ops[i] == sk.ops[j] && labels[i] == labels[j] {
                        return None;
                    }
                }
            }
            let lab = Labeling {
                leaves: leaves.clone(),
                ops: labels,
            };
            let e = build_expr(sk, &lab, alphabet, ops);
            Some((lab, e))
        })
    })
}

/// Injective sequences of length `k` over `0..n` in lexicographic order.
pub fn permutations(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    let mut used = vec![false; n];
    fn rec(n: usize, k: usize, cur: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i as u8);
                rec(n, k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    if k <= n {
        rec(n, k, &mut cur, &mut used, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn zero_operator_skeletons_are_leaves() {
        let sks = enumerate_skeletons(1, 0, 4);
        assert_eq!(sks.len(), 1);
        let ops = OperatorSet::standard();
        let alphabet = leaf_alphabet(1, &[1.0, 2.0]);
        assert_eq!(label_skeleton(&sks[0], &alphabet, &ops).count(), alphabet.len());
    }

    #[test]
    fn one_operator_single_output() {
        // sin(L0); L0 + L0; L0 + L1.
        let sks = enumerate_skeletons(1, 1, 4);
        assert_eq!(sks.len(), 3);
        let ops = OperatorSet::standard();
        let alphabet = leaf_alphabet(1, &[1.0, 2.0]);
        let n: usize = sks.iter().map(|s| label_skeleton(s, &alphabet, &ops).count()).sum();
        // 14 unary labels over 4 leaves, 4 binary labels over a repeated
        // leaf (4) or an ordered pair of distinct leaves (12).
        assert_eq!(n, 14 * 4 + 4 * 4 + 4 * 12);
    }

    #[test]
    fn unary_over_t_with_two_symbols() {
        let sk = Skeleton {
            ops: vec![Slot::Unary(Child::Leaf(0))],
            roots: vec![Child::Op(0)],
            n_leaves: 1,
        };
        let ops = OperatorSet {
            unary: vec![UnaryLabel::Op(UnaryOp::Sin), UnaryLabel::Op(UnaryOp::Cos)],
            binary: vec![],
        };
        let alphabet = [LeafSymbol::Var(0)];
        let printed: Vec<String> = label_skeleton(&sk, &alphabet, &ops)
            .map(|(_, e)| e.to_string())
            .collect();
        assert_eq!(printed, vec!["sin(t)", "cos(t)"]);
    }

    #[test]
    fn shared_child_shape_is_enumerated() {
        // u = op(L0); roots op(L1, u) and op(L2, u).
        let want = Skeleton {
            ops: vec![
                Slot::Unary(Child::Leaf(0)),
                Slot::Binary(Child::Leaf(1), Child::Op(0)),
                Slot::Binary(Child::Leaf(2), Child::Op(0)),
            ],
            roots: vec![Child::Op(1), Child::Op(2)],
            n_leaves: 3,
        };
        assert!(want.is_canonical());
        assert!(enumerate_skeletons(2, 3, 5).contains(&want));
    }

    #[test]
    fn skeletons_are_canonical_and_distinct() {
        for d in 1..=2 {
            for n in 0..=3 {
                let sks = enumerate_skeletons(d, n, 5);
                let set: HashSet<_> = sks.iter().cloned().collect();
                assert_eq!(set.len(), sks.len());
                assert!(sks.iter().all(|s| s.is_canonical() && s.n_ops() == n));
            }
        }
    }

    #[test]
    fn labeling_ids_follow_enumeration_order() {
        let ops = OperatorSet::standard();
        let alphabet = leaf_alphabet(1, &[1.0]);
        for sk in enumerate_skeletons(1, 2, alphabet.len()) {
            let ids: Vec<u64> = label_skeleton(&sk, &alphabet, &ops)
                .map(|(l, _)| l.id(&sk, alphabet.len(), &ops))
                .collect();
            assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
