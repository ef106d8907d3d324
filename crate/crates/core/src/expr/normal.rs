//! Algebraic normal form used to decide whether an expression is identically
//! zero.
//!
//! Expressions are mapped to quotients of expanded Laurent polynomials with
//! exact rational coefficients. Monomials are products of atoms raised to
//! rational powers times one exponential factor `exp(p)` whose argument `p` is
//! itself a polynomial, so `exp(a)*exp(b)` merges into `exp(a + b)`.
//! Atoms are variables and opaque applications (`log`, `sin`, `cos`, radicals
//! of sums) keyed by the normal form of their argument. `tan` is rewritten as
//! `sin/cos` and `sin^2` as `1 - cos^2`.
//!
//! The test is one-sided: `true` means the expression is zero wherever it is
//! defined; `false` means "not shown to be zero".

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{BinaryOp, Expr, Node, UnaryOp};

type Coef = BigRational;
type Exponent = Ratio<i64>;

const MAX_TERMS: usize = 4000;
const MAX_INT_POWER: i64 = 12;

#[derive(Debug)]
struct Unsupported;

type Res<T> = Result<T, Unsupported>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(usize),
    Log(String),
    Sin(String),
    Cos(String),
    Exp(String),
    Radical(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial {
    factors: Vec<(Atom, Exponent)>,
    exp: Poly,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Poly {
    terms: BTreeMap<Monomial, Coef>,
}

impl Monomial {
    fn atom(a: Atom, e: Exponent) -> Self {
        Monomial {
            factors: vec![(a, e)],
            exp: Poly::default(),
        }
    }

    fn mul(&self, other: &Monomial) -> Res<Monomial> {
        let mut factors: Vec<(Atom, Exponent)> = Vec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
            let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
            if take_a {
                factors.push(a[i].clone());
                i += 1;
            } else if take_b {
                factors.push(b[j].clone());
                j += 1;
            } else {
                let e = a[i].1 + b[j].1;
                if !e.is_zero() {
                    factors.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
        Ok(Monomial {
            factors,
            exp: self.exp.add(&other.exp)?,
        })
    }

    fn pow(&self, q: Exponent) -> Monomial {
        let qc = Coef::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()));
        Monomial {
            factors: self
                .factors
                .iter()
                .map(|(a, e)| (a.clone(), e * q))
                .filter(|(_, e)| !e.is_zero())
                .collect(),
            exp: self.exp.scale(&qc),
        }
    }

    /// `x^(2k)` raised to a fractional power would lose the sign of `x`.
    fn has_even_power(&self) -> bool {
        self.factors.iter().any(|(_, e)| e.numer() % 2 == 0)
    }
}

impl Poly {
    fn constant(c: Coef) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::default(), c);
        }
        p
    }

    fn one() -> Poly {
        Poly::constant(Coef::one())
    }

    fn monomial(m: Monomial, c: Coef) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .map(|(m, c)| *m == Monomial::default() && c.is_one())
                .unwrap_or(false)
    }

    fn single(&self) -> Option<(&Monomial, &Coef)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn accumulate(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn add(&self, other: &Poly) -> Res<Poly> {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.clone());
        }
        check(out)
    }

    fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    fn scale(&self, k: &Coef) -> Poly {
        if k.is_zero() {
            return Poly::default();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    fn mul(&self, other: &Poly) -> Res<Poly> {
        if self.terms.len() * other.terms.len() > MAX_TERMS * 4 {
            return Err(Unsupported);
        }
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.accumulate(m1.mul(m2)?, c1 * c2);
            }
        }
        check(out)
    }

    fn mul_monomial(&self, m: &Monomial, k: &Coef) -> Res<Poly> {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            out.accumulate(m1.mul(m)?, c1 * k);
        }
        Ok(out)
    }

    /// Rewrites `sin(u)^k` for integer `k >= 2` via `sin^2 = 1 - cos^2`.
    fn reduce_trig(&self) -> Res<Poly> {
        let mut out = Poly::default();
        let mut work: Vec<(Monomial, Coef)> =
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        while let Some((m, c)) = work.pop() {
            let hit = m.factors.iter().position(|(a, e)| {
                matches!(a, Atom::Sin(_)) && e.is_integer() && *e.numer() >= 2
            });
            match hit {
                None => out.accumulate(m, c),
                Some(i) => {
                    let key = match &m.factors[i].0 {
                        Atom::Sin(k) => k.clone(),
                        _ => unreachable!(),
                    };
                    let mut lowered = m.clone();
                    lowered.factors[i].1 -= Exponent::from_integer(2);
                    if lowered.factors[i].1.is_zero() {
                        lowered.factors.remove(i);
                    }
                    let cos2 = Monomial::atom(Atom::Cos(key), Exponent::from_integer(2));
                    let with_cos = lowered.mul(&cos2)?;
                    work.push((lowered, c.clone()));
                    work.push((with_cos, -c));
                    if work.len() > MAX_TERMS {
                        return Err(Unsupported);
                    }
                }
            }
        }
        check(out)
    }

    fn leading_coef(&self) -> Option<&Coef> {
        self.terms.values().next()
    }
}

fn check(p: Poly) -> Res<Poly> {
    if p.terms.len() > MAX_TERMS {
        Err(Unsupported)
    } else {
        Ok(p)
    }
}

/// `num / den` with `den` either 1 or a monic sum of at least two terms.
#[derive(Clone, Debug, PartialEq, Eq)]
struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    fn poly(p: Poly) -> RatFn {
        RatFn {
            num: p,
            den: Poly::one(),
        }
    }

    fn constant(c: Coef) -> RatFn {
        RatFn::poly(Poly::constant(c))
    }

    fn atom(a: Atom) -> RatFn {
        RatFn::poly(Poly::monomial(
            Monomial::atom(a, Exponent::one()),
            Coef::one(),
        ))
    }

    fn normalized(num: Poly, den: Poly) -> Res<RatFn> {
        if den.is_zero() {
            return Err(Unsupported);
        }
        if num.is_zero() {
            return Ok(RatFn::poly(num));
        }
        if let Some((m, c)) = den.single() {
            let inv = m.pow(Exponent::from_integer(-1));
            let k = c.recip();
            let num = num.mul_monomial(&inv, &k)?;
            return Ok(RatFn::poly(num));
        }
        let lead = den.leading_coef().cloned().unwrap_or_else(Coef::one);
        let k = lead.recip();
        Ok(RatFn {
            num: num.scale(&k),
            den: den.scale(&k),
        })
    }

    fn constant_value(&self) -> Option<&Coef> {
        if !self.den.is_one() {
            return None;
        }
        if self.num.is_zero() {
            return None;
        }
        self.num
            .single()
            .filter(|(m, _)| **m == Monomial::default())
            .map(|(_, c)| c)
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn add(&self, o: &RatFn) -> Res<RatFn> {
        if self.den == o.den {
            return RatFn::normalized(self.num.add(&o.num)?, self.den.clone());
        }
        let a = self.num.mul(&o.den)?;
        let b = o.num.mul(&self.den)?;
        RatFn::normalized(a.add(&b)?, self.den.mul(&o.den)?)
    }

    fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    fn mul(&self, o: &RatFn) -> Res<RatFn> {
        RatFn::normalized(self.num.mul(&o.num)?, self.den.mul(&o.den)?)
    }

    fn recip(&self) -> Res<RatFn> {
        if self.num.is_zero() {
            return Err(Unsupported);
        }
        RatFn::normalized(self.den.clone(), self.num.clone())
    }

    fn powi(&self, k: i64) -> Res<RatFn> {
        if k.abs() > MAX_INT_POWER {
            return Err(Unsupported);
        }
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut acc = RatFn::constant(Coef::one());
        for _ in 0..k.abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    fn pow(&self, q: Exponent) -> Res<RatFn> {
        if q.is_integer() {
            return self.powi(*q.numer());
        }
        if self.den.is_one() {
            if let Some((m, c)) = self.num.single() {
                if !m.has_even_power() {
                    if let Some(root) = rational_power(c, q) {
                        return Ok(RatFn::poly(Poly::monomial(m.pow(q), root)));
                    }
                }
            }
        }
        let whole = q.floor();
        let frac = q - whole;
        let radical = RatFn::poly(Poly::monomial(
            Monomial::atom(Atom::Radical(self.key()), frac),
            Coef::one(),
        ));
        self.powi(*whole.numer())?.mul(&radical)
    }

    fn key(&self) -> String {
        format!("{:?}/{:?}", self.num, self.den)
    }

    /// Splits off a sign so that `u` and `-u` share one key.
    fn sign_normalized(&self) -> (bool, RatFn) {
        match self.num.leading_coef() {
            Some(c) if c.is_negative() => (true, self.neg()),
            _ => (false, self.clone()),
        }
    }
}

/// `c^q` as an exact rational, for `q` with denominator 2 and `c > 0` a ratio
/// of perfect squares; `c = 1` works for any `q`.
fn rational_power(c: &Coef, q: Exponent) -> Option<Coef> {
    if c.is_one() {
        return Some(Coef::one());
    }
    if *q.denom() != 2 || !c.is_positive() {
        return None;
    }
    let (n, d) = (c.numer(), c.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) != n || &(&rd * &rd) != d {
        return None;
    }
    let root = Coef::new(rn, rd);
    let k = *q.numer();
    let mut acc = Coef::one();
    let base = if k < 0 { root.recip() } else { root };
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    Some(acc)
}

fn exponent_of(c: f64) -> Res<Exponent> {
    let r = BigRational::from_float(c).ok_or(Unsupported)?;
    let n = r.numer().to_i64().ok_or(Unsupported)?;
    let d = r.denom().to_i64().ok_or(Unsupported)?;
    if d > 1 << 20 {
        return Err(Unsupported);
    }
    Ok(Exponent::new(n, d))
}

fn unary(op: UnaryOp, a: &RatFn) -> Res<RatFn> {
    match op {
        UnaryOp::Neg => Ok(a.neg()),
        UnaryOp::Inv => a.recip(),
        UnaryOp::Square => a.mul(a),
        UnaryOp::Sqrt => a.pow(Exponent::new(1, 2)),
        UnaryOp::Exp => {
            if a.is_zero() {
                return Ok(RatFn::constant(Coef::one()));
            }
            if a.den.is_one() {
                let m = Monomial {
                    factors: Vec::new(),
                    exp: a.num.clone(),
                };
                Ok(RatFn::poly(Poly::monomial(m, Coef::one())))
            } else {
                Ok(RatFn::atom(Atom::Exp(a.key())))
            }
        }
        UnaryOp::Log => {
            if a.constant_value().map(|c| c.is_one()).unwrap_or(false) {
                return Ok(RatFn::constant(Coef::zero()));
            }
            Ok(RatFn::atom(Atom::Log(a.key())))
        }
        UnaryOp::Sin => sin(a),
        UnaryOp::Cos => cos(a),
        UnaryOp::Tan => {
            let s = sin(a)?;
            let c = cos(a)?;
            s.mul(&c.recip()?)
        }
    }
}

fn sin(a: &RatFn) -> Res<RatFn> {
    if a.is_zero() {
        return Ok(RatFn::constant(Coef::zero()));
    }
    let (flip, u) = a.sign_normalized();
    let s = RatFn::atom(Atom::Sin(u.key()));
    Ok(if flip { s.neg() } else { s })
}

fn cos(a: &RatFn) -> Res<RatFn> {
    if a.is_zero() {
        return Ok(RatFn::constant(Coef::one()));
    }
    let (_, u) = a.sign_normalized();
    Ok(RatFn::atom(Atom::Cos(u.key())))
}

fn normal_forms(e: &Expr) -> Vec<Option<RatFn>> {
    let mut out: Vec<Option<RatFn>> = Vec::with_capacity(e.nodes().len());
    for node in e.nodes() {
        let r = match *node {
            Node::Var(i) => Some(RatFn::atom(Atom::Var(i))),
            Node::Const(c) => BigRational::from_float(c).map(RatFn::constant),
            Node::Unary(op, a) => out[a as usize].as_ref().and_then(|x| unary(op, x).ok()),
            Node::Binary(op, a, b) => match (&out[a as usize], &out[b as usize]) {
                (Some(x), Some(y)) => binary(op, x, y, e.node(b)).ok(),
                _ => None,
            },
        };
        out.push(r);
    }
    out
}

fn binary(op: BinaryOp, x: &RatFn, y: &RatFn, rhs: Node) -> Res<RatFn> {
    match op {
        BinaryOp::Add => x.add(y),
        BinaryOp::Sub => x.add(&y.neg()),
        BinaryOp::Mul => x.mul(y),
        BinaryOp::Div => x.mul(&y.recip()?),
        BinaryOp::Pow => match rhs {
            Node::Const(c) => x.pow(exponent_of(c)?),
            _ => Err(Unsupported),
        },
    }
}

/// Per node: whether it is shown to vanish identically.
pub(super) fn zero_nodes(e: &Expr) -> Vec<bool> {
    normal_forms(e)
        .iter()
        .map(|r| match r {
            Some(r) => r.num.reduce_trig().map(|p| p.is_zero()).unwrap_or(false),
            None => false,
        })
        .collect()
}

/// True if root `k` of `e` is shown to vanish identically on its domain.
pub fn is_identically_zero(e: &Expr, k: usize) -> bool {
    let forms = normal_forms(e);
    match &forms[e.roots()[k] as usize] {
        Some(r) => r.num.reduce_trig().map(|p| p.is_zero()).unwrap_or(false),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn zero(s: &str) -> bool {
        is_identically_zero(&parse(s, 3).unwrap(), 0)
    }

    #[test]
    fn polynomial_identities() {
        assert!(zero("(y1 + y2)^2 - y1^2 - 2*y1*y2 - y2^2"));
        assert!(zero("y1*(t + y2/y1)^2 - (t*y1 + y2)^2/y1"));
        assert!(!zero("y1 + y2"));
        assert!(zero("0.5*y1 - y1/2"));
        assert!(!zero("0.1*3 - 0.3"), "decimal constants are exact binary fractions");
    }

    #[test]
    fn radicals_and_exponentials() {
        assert!(zero("sqrt(y1)*sqrt(y1) - y1"));
        assert!(zero("y1^-0.5*y1 - sqrt(y1)"));
        assert!(zero("exp(t)*exp(-t) - 1"));
        assert!(zero("exp(y1/t^2)^2 - exp(2*y1*t^-2)"));
        assert!(zero("sqrt(4*y1^3) - 2*y1*sqrt(y1)"));
        assert!(!zero("sqrt(y1^2) - y1"), "sqrt(x^2) is |x|");
    }

    #[test]
    fn trigonometric_identities() {
        assert!(zero("sin(t)^2 + cos(t)^2 - 1"));
        assert!(zero("tan(t)*cos(t) - sin(t)"));
        assert!(zero("1 + tan(y1)^2 - cos(y1)^-2"));
        assert!(zero("sin(-t) + sin(t)"));
        assert!(zero("cos(-t) - cos(t)"));
        assert!(!zero("sin(t) - cos(t)"));
    }

    #[test]
    fn rational_functions() {
        assert!(zero("1/(y1 + y2) + 1/(y1 - y2) - 2*y1/((y1 + y2)*(y1 - y2))"));
        assert!(zero("(y1^2 - y2^2)/(y1 + y2) - (y1 - y2)*(y1 + y2)/(y1 + y2)"));
        assert!(zero("log(y1 + 1) - log(1 + y1)"));
    }
}
