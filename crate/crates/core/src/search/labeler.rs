//! Labeling of one skeleton with pruning on probe points.
//!
//! Operator slots are labeled in slot order while values and gradients at a
//! handful of dataset points are propagated alongside, so whole subtrees of
//! the labeling space are cut as soon as a slot
//!
//! - is undefined at a probe (the candidate could never have finite loss),
//! - coincides with a leaf symbol or an earlier slot (a smaller DAG computes
//!   the same function),
//! - is constant (except a zero output), or
//! - is a commutative operation with operands in non-canonical order.
//!
//! Completed labelings are kept only if the squared residual at every probe
//! stays below the per-point share of the loss threshold, a necessary
//! condition for `loss < accept_loss`.

use crate::expr::{binary_local, unary_local, BinaryOp, DomainError};
use crate::odeint::OdeSystem;

use super::fingerprint::{quantize, Mixer};
use super::skeleton::{Child, LeafSymbol, Labeling, OperatorSet, Skeleton, Slot, UnaryLabel};

/// Values and gradients of the leaf symbols and of `f` at the probe points.
pub(crate) struct ProbeSet {
    d: usize,
    p: usize,
    /// Stride per point: value followed by `d + 1` partials.
    w: usize,
    leaf: Vec<Vec<f64>>,
    leaf_keys: Vec<u64>,
    f: Vec<f64>,
    jf: Vec<f64>,
    /// Bound on `sum_k S_k^2` at a single point.
    limit: f64,
}

impl ProbeSet {
    pub(crate) fn new(
        sys: &OdeSystem,
        points: &[Vec<f64>],
        alphabet: &[LeafSymbol],
        limit: f64,
    ) -> Result<Self, DomainError> {
        let d = sys.dim();
        let m = d + 1;
        let w = m + 1;
        let p = points.len();
        let mut f = Vec::with_capacity(p * d);
        let mut jf = Vec::with_capacity(p * d * m);
        for pt in points {
            let (v, j) = sys.f.value_and_jacobian(pt)?;
            f.extend(v);
            jf.extend(j);
        }
        let leaf: Vec<Vec<f64>> = alphabet
            .iter()
            .map(|s| {
                let mut buf = vec![0.0; p * w];
                for (q, pt) in points.iter().enumerate() {
                    match *s {
                        LeafSymbol::Var(i) => {
                            buf[q * w] = pt[i];
                            buf[q * w + 1 + i] = 1.0;
                        }
                        LeafSymbol::Const(c) => buf[q * w] = c,
                    }
                }
                buf
            })
            .collect();
        let leaf_keys = leaf.iter().map(|b| key(b)).collect();
        Ok(ProbeSet {
            d,
            p,
            w,
            leaf,
            leaf_keys,
            f,
            jf,
            limit,
        })
    }

    fn residual_ok(&self, roots: &[&[f64]]) -> bool {
        let (d, m, w) = (self.d, self.d + 1, self.w);
        for q in 0..self.p {
            let mut sum = 0.0;
            for k in 0..d {
                let eta_k = &roots[k][q * w..(q + 1) * w];
                let jfk = &self.jf[(q * d + k) * m..(q * d + k + 1) * m];
                let mut s = eta_k[1];
                for i in 0..d {
                    s += eta_k[2 + i] * self.f[q * d + i];
                    s -= jfk[1 + i] * roots[i][q * w];
                }
                sum += s * s;
            }
            if !(sum <= self.limit) {
                return false;
            }
        }
        true
    }
}

fn key(buf: &[f64]) -> u64 {
    let mut h = Mixer::default();
    for &x in buf {
        h.push(quantize(x));
    }
    h.finish()
}

/// Constant over the probes: zero gradient and a single value.
fn is_constant(buf: &[f64], w: usize) -> bool {
    let v0 = quantize(buf[0]);
    buf.chunks(w)
        .all(|c| quantize(c[0]) == v0 && c[1..].iter().all(|&x| quantize(x) == 0))
}

/// A labeling that survived all probe checks.
pub(crate) struct Hit {
    pub labeling: Labeling,
}

pub(crate) struct SkeletonScan {
    pub hits: Vec<Hit>,
    /// Complete labelings reached (after pruning) and checked on the probes.
    pub scored: u64,
}

struct Scan<'a> {
    sk: &'a Skeleton,
    probes: &'a ProbeSet,
    ops: &'a OperatorSet,
    used: Vec<bool>,
    perm: &'a [u8],
    bufs: Vec<Vec<f64>>,
    keys: Vec<u64>,
    labels: Vec<u8>,
    out: SkeletonScan,
}

impl Scan<'_> {
    fn child<'b>(&'b self, prev: &'b [Vec<f64>], c: Child) -> (&'b [f64], u64) {
        match c {
            Child::Leaf(l) => {
                let s = self.perm[l as usize] as usize;
                (&self.probes.leaf[s], self.probes.leaf_keys[s])
            }
            Child::Op(o) => (&prev[o as usize], self.keys[o as usize]),
        }
    }

    /// Fills slot `i` with `label`; false if the slot must be pruned.
    fn fill(&mut self, i: usize, label: usize) -> bool {
        let w = self.probes.w;
        let slot = self.sk.ops[i];
        let (prev, rest) = self.bufs.split_at_mut(i);
        let cur = &mut rest[0];
        let ok = match slot {
            Slot::Unary(a) => {
                let src = match a {
                    Child::Leaf(l) => &self.probes.leaf[self.perm[l as usize] as usize][..],
                    Child::Op(o) => &prev[o as usize][..],
                };
                fill_unary(self.ops.unary[label], src, cur, w)
            }
            Slot::Binary(a, b) => {
                let op = self.ops.binary[label];
                let ka = match a {
                    Child::Leaf(l) => self.probes.leaf_keys[self.perm[l as usize] as usize],
                    Child::Op(o) => self.keys[o as usize],
                };
                let kb = match b {
                    Child::Leaf(l) => self.probes.leaf_keys[self.perm[l as usize] as usize],
                    Child::Op(o) => self.keys[o as usize],
                };
                if matches!(op, BinaryOp::Add | BinaryOp::Mul) && ka > kb {
                    return false;
                }
                let sa = match a {
                    Child::Leaf(l) => &self.probes.leaf[self.perm[l as usize] as usize][..],
                    Child::Op(o) => &prev[o as usize][..],
                };
                let sb = match b {
                    Child::Leaf(l) => &self.probes.leaf[self.perm[l as usize] as usize][..],
                    Child::Op(o) => &prev[o as usize][..],
                };
                fill_binary(op, sa, sb, cur, w)
            }
        };
        if !ok {
            return false;
        }
        if is_constant(cur, w) {
            // Only a zero output may be constant.
            if self.used[i] || quantize(cur[0]) != 0 {
                return false;
            }
        }
        let k = key(cur);
        if self.probes.leaf_keys.contains(&k) || self.keys[..i].contains(&k) {
            return false;
        }
        self.keys[i] = k;
        true
    }

    fn rec(&mut self, i: usize) {
        let n = self.sk.ops.len();
        if i == n {
            self.out.scored += 1;
            let roots: Vec<&[f64]> = self
                .sk
                .roots
                .iter()
                .map(|&r| self.child(&self.bufs, r).0)
                .collect();
            if self.probes.residual_ok(&roots) {
                self.out.hits.push(Hit {
                    labeling: Labeling {
                        leaves: self.perm.to_vec(),
                        ops: self.labels.clone(),
                    },
                });
            }
            return;
        }
        let radix = self.ops.arity_count(self.sk.ops[i].arity());
        for label in 0..radix {
            if self.fill(i, label) {
                self.labels[i] = label as u8;
                self.rec(i + 1);
            }
        }
    }
}

fn fill_unary(label: UnaryLabel, src: &[f64], cur: &mut [f64], w: usize) -> bool {
    for (s, c) in src.chunks(w).zip(cur.chunks_mut(w)) {
        let r = match label {
            UnaryLabel::Op(op) => unary_local(op, s[0]),
            UnaryLabel::Pow(e) => binary_local(BinaryOp::Pow, s[0], e).map(|(v, da, _)| (v, da)),
        };
        let Ok((v, dv)) = r else { return false };
        c[0] = v;
        for k in 1..w {
            let g = dv * s[k];
            if !g.is_finite() {
                return false;
            }
            c[k] = g;
        }
    }
    true
}

fn fill_binary(op: BinaryOp, a: &[f64], b: &[f64], cur: &mut [f64], w: usize) -> bool {
    for ((sa, sb), c) in a.chunks(w).zip(b.chunks(w)).zip(cur.chunks_mut(w)) {
        let Ok((v, da, db)) = binary_local(op, sa[0], sb[0]) else {
            return false;
        };
        c[0] = v;
        for k in 1..w {
            let g = da * sa[k] + db * sb[k];
            if !g.is_finite() {
                return false;
            }
            c[k] = g;
        }
    }
    true
}

/// Labels `sk` in canonical order (leaf permutations from `perms`, which
/// must be the lexicographic injective sequences of length `sk.n_leaves`)
/// and returns the labelings that pass the probe checks.
pub(crate) fn scan_skeleton(
    sk: &Skeleton,
    probes: &ProbeSet,
    ops: &OperatorSet,
    perms: &[Vec<u8>],
) -> SkeletonScan {
    let n = sk.ops.len();
    let mut scan = Scan {
        sk,
        probes,
        ops,
        used: sk.used_as_child(),
        perm: &[],
        bufs: vec![vec![0.0; probes.p * probes.w]; n],
        keys: vec![0; n],
        labels: vec![0; n],
        out: SkeletonScan {
            hits: Vec::new(),
            scored: 0,
        },
    };
    for perm in perms {
        scan.perm = perm;
        scan.rec(0);
    }
    scan.out
}
