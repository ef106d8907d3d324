//! Symmetry conditions, losses and generator post-processing.
//!
//! A generator `X = xi d/dt + <eta, grad_y>` of `y' = f(t, y)` with the
//! Hamiltonian part removed (`xi = 0`) is a vector `eta*` satisfying
//!
//! ```text
//! S_k = d eta*_k/dt + sum_j d eta*_k/dy_j f_j - sum_j d f_k/dy_j eta*_j = 0.
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DomainError, EvalPoint, Expr, ExprBuilder, NodeId};
use crate::odeint::{OdeSystem, TrajectoryDataset};

/// Loss below which a candidate counts as satisfying the condition.
pub const DEFAULT_ACCEPT_LOSS: f64 = 1e-10;
/// Median `|eta*|` below which a candidate counts as trivial.
pub const DEFAULT_TRIVIAL_EPS: f64 = 0.01;
/// Relative singular-value cutoff for the independence rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("generator has {found} components, system has dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("right-hand side undefined at a data point: {0}")]
    Domain(#[from] DomainError),
    #[error("order must be at least {min}, got {got}")]
    Order { min: usize, got: usize },
    #[error("right-hand side references y{var}, beyond order {order}")]
    DerivativeTooHigh { var: usize, order: usize },
    #[error("canonical transform needs {expected} `s` components, got {found}")]
    CanonicalShape { expected: usize, found: usize },
}

/// Where a search candidate came from: `(skeleton id, labeling id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub skeleton: u64,
    pub labeling: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorCandidate {
    pub eta_star: Expr,
    pub loss: f64,
    pub provenance: Option<Provenance>,
}

impl GeneratorCandidate {
    pub fn new(eta_star: Expr) -> Self {
        GeneratorCandidate {
            eta_star,
            loss: f64::NAN,
            provenance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullGenerator {
    pub xi: Expr,
    pub eta: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalTransform {
    pub r: Expr,
    pub v: Expr,
    pub s: Vec<Expr>,
}

fn check_dim(sys: &OdeSystem, e: &Expr) -> Result<(), SymmetryError> {
    if e.root_count() != sys.dim() {
        return Err(SymmetryError::Dimension {
            expected: sys.dim(),
            found: e.root_count(),
        });
    }
    Ok(())
}

/// `S_k` at `p` for each component `k`.
pub fn residual(sys: &OdeSystem, eta_star: &Expr, p: &EvalPoint) -> Result<Vec<f64>, DomainError> {
    let vars = p.vars();
    let (f, jf) = sys.f.value_and_jacobian(&vars)?;
    let (eta, je) = eta_star.value_and_jacobian(&vars)?;
    Ok(reduced_residual(&f, &jf, &eta, &je))
}

/// Reduced condition from values and row-major `(d) x (d + 1)` Jacobians.
fn reduced_residual(f: &[f64], jf: &[f64], eta: &[f64], je: &[f64]) -> Vec<f64> {
    let d = f.len();
    let m = d + 1;
    (0..d)
        .map(|k| {
            let mut s = je[k * m];
            for j in 0..d {
                s += je[k * m + 1 + j] * f[j];
                s -= jf[k * m + 1 + j] * eta[j];
            }
            s
        })
        .collect()
}

/// Right-hand side and its Jacobian cached at every data point.
///
/// Building the context once and scoring many candidates against it is the
/// hot path of the search.
#[derive(Clone, Debug)]
pub struct LossContext {
    dim: usize,
    /// Row `i` is `(t, y1..yd)` of point `i`.
    vars: Vec<f64>,
    f: Vec<f64>,
    jf: Vec<f64>,
}

/// Scratch buffers for [`LossContext`] evaluations.
#[derive(Default)]
pub struct Scratch {
    values: Vec<f64>,
    partials: Vec<f64>,
}

impl LossContext {
    pub fn new(sys: &OdeSystem, data: &TrajectoryDataset) -> Result<Self, SymmetryError> {
        let d = sys.dim();
        let mut vars = Vec::with_capacity(data.n_total() * (d + 1));
        let mut f = Vec::with_capacity(data.n_total() * d);
        let mut jf = Vec::with_capacity(data.n_total() * d * (d + 1));
        for (t, y) in data.points() {
            let row_start = vars.len();
            vars.push(t);
            vars.extend_from_slice(y);
            let (fv, jv) = sys.f.value_and_jacobian(&vars[row_start..])?;
            f.extend(fv);
            jf.extend(jv);
        }
        Ok(LossContext { dim: d, vars, f, jf })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.vars.len() / (self.dim + 1)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let m = self.dim + 1;
        &self.vars[i * m..(i + 1) * m]
    }

    fn residual_at(&self, e: &Expr, i: usize, s: &mut Scratch) -> Result<Vec<f64>, DomainError> {
        let (d, m) = (self.dim, self.dim + 1);
        e.eval_gradient_nodes(self.point(i), &mut s.values, &mut s.partials)?;
        let eta: Vec<f64> = e.roots().iter().map(|&r| s.values[r as usize]).collect();
        let mut je = Vec::with_capacity(d * m);
        for &r in e.roots() {
            je.extend_from_slice(&s.partials[r as usize * m..(r as usize + 1) * m]);
        }
        Ok(reduced_residual(
            &self.f[i * d..(i + 1) * d],
            &self.jf[i * d * m..(i + 1) * d * m],
            &eta,
            &je,
        ))
    }

    /// Residual vectors at every point.
    pub fn residuals(&self, eta_star: &Expr) -> Result<Vec<Vec<f64>>, DomainError> {
        let mut s = Scratch::default();
        (0..self.n_points())
            .map(|i| self.residual_at(eta_star, i, &mut s))
            .collect()
    }

    /// Mean squared residual; `+inf` if `eta_star` is undefined anywhere.
    pub fn loss(&self, eta_star: &Expr) -> f64 {
        self.loss_bounded(eta_star, f64::INFINITY, &mut Scratch::default())
    }

    /// Like [`LossContext::loss`] but gives up with `+inf` as soon as the
    /// loss is known to exceed `limit`.
    pub fn loss_bounded(&self, eta_star: &Expr, limit: f64, s: &mut Scratch) -> f64 {
        if eta_star.root_count() != self.dim {
            return f64::INFINITY;
        }
        let n = self.n_points();
        let denom = (n * self.dim) as f64;
        let cap = limit * denom;
        let mut sum = 0.0;
        for i in 0..n {
            match self.residual_at(eta_star, i, s) {
                Ok(r) => sum += r.iter().map(|x| x * x).sum::<f64>(),
                Err(_) => return f64::INFINITY,
            }
            if !(sum <= cap) {
                return f64::INFINITY;
            }
        }
        sum / denom
    }

    /// Values of `eta_star` at every point, point-major; `None` on a domain error.
    pub fn values(&self, eta_star: &Expr, s: &mut Scratch) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n_points() * eta_star.root_count());
        for i in 0..self.n_points() {
            eta_star.eval_nodes(self.point(i), &mut s.values).ok()?;
            out.extend(eta_star.roots().iter().map(|&r| s.values[r as usize]));
        }
        Some(out)
    }

    /// Median `|eta*_k|` over all points and components is below `eps`.
    pub fn is_trivial(&self, eta_star: &Expr, eps: f64, s: &mut Scratch) -> bool {
        match self.values(eta_star, s) {
            Some(v) => is_trivial_values(v, eps),
            None => true,
        }
    }
}

fn is_trivial_values(mut v: Vec<f64>, eps: f64) -> bool {
    if v.is_empty() {
        return true;
    }
    for x in v.iter_mut() {
        *x = x.abs();
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    median < eps
}

/// Mean squared residual over `data`; `+inf` on any domain error.
pub fn loss(sys: &OdeSystem, eta_star: &Expr, data: &TrajectoryDataset) -> f64 {
    match LossContext::new(sys, data) {
        Ok(ctx) => ctx.loss(eta_star),
        Err(_) => f64::INFINITY,
    }
}

/// Median test for trivial generators; domain errors count as trivial.
pub fn is_trivial(eta_star: &Expr, data: &TrajectoryDataset, eps: f64) -> bool {
    let mut values = Vec::new();
    for (t, y) in data.points() {
        let p = EvalPoint::new(t, y.to_vec());
        match eta_star.evaluate(&p) {
            Ok(v) => values.extend(v),
            Err(_) => return true,
        }
    }
    is_trivial_values(values, eps)
}

/// Full symmetry condition for `X = xi d/dt + <eta, grad_y>` at `p`.
pub fn full_condition_residual(
    sys: &OdeSystem,
    g: &FullGenerator,
    p: &EvalPoint,
) -> Result<Vec<f64>, DomainError> {
    let vars = p.vars();
    let d = sys.dim();
    let m = d + 1;
    let (f, jf) = sys.f.value_and_jacobian(&vars)?;
    let (eta, je) = g.eta.value_and_jacobian(&vars)?;
    let (_, jxi) = g.xi.value_and_jacobian(&vars)?;
    let xi = g.xi.eval_slice(&vars)?[0];
    let mut dxi = jxi[0];
    for j in 0..d {
        dxi += jxi[1 + j] * f[j];
    }
    Ok((0..d)
        .map(|k| {
            let mut s = je[k * m];
            for j in 0..d {
                s += je[k * m + 1 + j] * f[j];
                s -= jf[k * m + 1 + j] * eta[j];
            }
            s - dxi * f[k] - xi * jf[k * m]
        })
        .collect())
}

/// `eta* = eta - xi f`.
pub fn remove_hamiltonian(sys: &OdeSystem, g: &FullGenerator) -> Result<Expr, SymmetryError> {
    check_dim(sys, &g.eta)?;
    let mut b = ExprBuilder::new();
    let eta = b.import_roots(&g.eta);
    let xi = b.import_roots(&g.xi)[0];
    let f = b.import_roots(&sys.f);
    let roots = eta
        .iter()
        .zip(&f)
        .map(|(&e, &fk)| {
            let prod = b.mul(xi, fk);
            b.sub(e, prod)
        })
        .collect();
    Ok(b.finish(roots))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    /// Indices of generators that could not be evaluated on the data.
    pub excluded: Vec<usize>,
}

/// Numerical rank of the matrix whose rows are the generators evaluated at
/// every data point.
pub fn independence_rank(gs: &[Expr], data: &TrajectoryDataset, tol: f64) -> RankReport {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut excluded = Vec::new();
    'outer: for (idx, g) in gs.iter().enumerate() {
        let mut row = Vec::with_capacity(data.n_total() * data.dim);
        for (t, y) in data.points() {
            match g.evaluate(&EvalPoint::new(t, y.to_vec())) {
                Ok(v) if v.len() == data.dim && v.iter().all(|x| x.is_finite()) => row.extend(v),
                _ => {
                    excluded.push(idx);
                    continue 'outer;
                }
            }
        }
        rows.push(row);
    }
    RankReport {
        rank: matrix_rank(&rows, tol),
        excluded,
    }
}

pub(crate) fn matrix_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Rewrites `y^(n) = f(t, y, y', .., y^(n-1))` as a first-order system.
///
/// In `f_high`, `y1` stands for `y`, `y2` for `y'` and so on up to `yn`
/// for `y^(n-1)`; the returned right-hand side is `[y2, .., yn, f_high]`.
pub fn to_first_order(f_high: &Expr, order: usize) -> Result<Expr, SymmetryError> {
    if order < 2 {
        return Err(SymmetryError::Order { min: 2, got: order });
    }
    if f_high.root_count() != 1 {
        return Err(SymmetryError::Dimension {
            expected: 1,
            found: f_high.root_count(),
        });
    }
    if let Some(v) = f_high.max_var() {
        if v > order {
            return Err(SymmetryError::DerivativeTooHigh { var: v, order });
        }
    }
    let mut b = ExprBuilder::new();
    let mut roots: Vec<NodeId> = (2..=order).map(|k| b.var(k)).collect();
    roots.push(b.import_roots(f_high)[0]);
    Ok(b.finish(roots))
}

/// Variable index of `y_i^(k)` (component `i` from 1) in jet space.
pub fn jet_var(dim: usize, i: usize, k: usize) -> usize {
    1 + k * dim + (i - 1)
}

/// Total derivative of every root of `e`, treating `y^(k)` as independent
/// jet variables laid out by [`jet_var`].
pub fn total_derivative(e: &Expr, dim: usize) -> Expr {
    let mut b = ExprBuilder::new();
    let mut acc: Vec<NodeId> = b.import_roots(&e.diff(0));
    if let Some(max) = e.max_var() {
        for v in 1..=max {
            let dv = e.diff(v);
            let dv_roots = b.import_roots(&dv);
            let next = b.var(v + dim);
            for (a, r) in acc.iter_mut().zip(dv_roots) {
                let term = b.mul(r, next);
                *a = b.add(*a, term);
            }
        }
    }
    b.finish(acc).simplify()
}

/// Prolongation coefficients `eta^(1) .. eta^(n)` of `g` on jet space,
/// via `eta^(k) = D eta^(k-1) - y^(k) D xi`.
pub fn prolong(g: &FullGenerator, order: usize) -> Result<Vec<Expr>, SymmetryError> {
    if order < 1 {
        return Err(SymmetryError::Order { min: 1, got: order });
    }
    let dim = g.eta.root_count();
    let dxi = total_derivative(&g.xi, dim);
    let mut out = Vec::with_capacity(order);
    let mut prev = g.eta.clone();
    for k in 1..=order {
        let dprev = total_derivative(&prev, dim);
        let mut b = ExprBuilder::new();
        let dp = b.import_roots(&dprev);
        let dx = b.import_roots(&dxi)[0];
        let roots = (1..=dim)
            .map(|i| {
                let yk = b.var(jet_var(dim, i, k));
                let term = b.mul(yk, dx);
                b.sub(dp[i - 1], term)
            })
            .collect();
        let next = b.finish(roots).simplify();
        out.push(next.clone());
        prev = next;
    }
    Ok(out)
}

/// Largest violations of `X r = 0`, `X v = 1` and `X s_i = 0` over a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReport {
    pub r: f64,
    pub v: f64,
    pub s: Vec<f64>,
    pub excluded_points: usize,
}

impl CanonicalReport {
    pub fn max_violation(&self) -> f64 {
        self.s.iter().fold(self.r.max(self.v), |a, &b| a.max(b))
    }
}

fn apply_generator(g: &FullGenerator, h: &Expr, vars: &[f64]) -> Result<f64, DomainError> {
    let xi = g.xi.eval_slice(vars)?[0];
    let eta = g.eta.eval_slice(vars)?;
    let (_, jh) = h.value_and_jacobian(vars)?;
    Ok(xi * jh[0] + eta.iter().enumerate().map(|(k, e)| e * jh[1 + k]).sum::<f64>())
}

pub fn verify_canonical(
    sys: &OdeSystem,
    g: &FullGenerator,
    ct: &CanonicalTransform,
    data: &TrajectoryDataset,
) -> Result<CanonicalReport, SymmetryError> {
    check_dim(sys, &g.eta)?;
    if ct.s.len() + 1 != sys.dim() {
        return Err(SymmetryError::CanonicalShape {
            expected: sys.dim() - 1,
            found: ct.s.len(),
        });
    }
    let mut rep = CanonicalReport {
        r: 0.0,
        v: 0.0,
        s: vec![0.0; ct.s.len()],
        excluded_points: 0,
    };
    let mut vars = Vec::new();
    for (t, y) in data.points() {
        vars.clear();
        vars.push(t);
        vars.extend_from_slice(y);
        let eval = || -> Result<(f64, f64, Vec<f64>), DomainError> {
            let r = apply_generator(g, &ct.r, &vars)?.abs();
            let v = (apply_generator(g, &ct.v, &vars)? - 1.0).abs();
            let s = ct
                .s
                .iter()
                .map(|s| apply_generator(g, s, &vars).map(f64::abs))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((r, v, s))
        };
        match eval() {
            Ok((r, v, s)) => {
                rep.r = rep.r.max(r);
                rep.v = rep.v.max(v);
                for (a, b) in rep.s.iter_mut().zip(s) {
                    *a = a.max(b);
                }
            }
            Err(_) => rep.excluded_points += 1,
        }
    }
    Ok(rep)
}

/// The reduced condition as an expression with one root per component.
pub fn symbolic_residual(sys: &OdeSystem, eta_star: &Expr) -> Result<Expr, SymmetryError> {
    check_dim(sys, eta_star)?;
    let d = sys.dim();
    let mut b = ExprBuilder::new();
    let f = b.import_roots(&sys.f);
    let eta = b.import_roots(eta_star);
    let deta: Vec<Vec<NodeId>> = (0..=d).map(|v| b.import_roots(&eta_star.diff(v))).collect();
    let df: Vec<Vec<NodeId>> = (1..=d).map(|v| b.import_roots(&sys.f.diff(v))).collect();
    let roots = (0..d)
        .map(|k| {
            let mut s = deta[0][k];
            for j in 0..d {
                let plus = b.mul(deta[j + 1][k], f[j]);
                s = b.add(s, plus);
                let minus = b.mul(df[j][k], eta[j]);
                s = b.sub(s, minus);
            }
            s
        })
        .collect();
    Ok(b.finish(roots))
}

/// Per component: does the simplified reduced condition fold to `0`?
pub fn symbolic_zero(sys: &OdeSystem, eta_star: &Expr) -> Result<Vec<bool>, SymmetryError> {
    let s = symbolic_residual(sys, eta_star)?.simplify();
    Ok((0..s.root_count()).map(|k| s.is_constant_zero(k)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub numeric_loss: f64,
    pub symbolic_zero: Vec<bool>,
    pub rank: usize,
    pub excluded_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalReport>,
}

impl VerificationReport {
    pub fn is_symbolically_zero(&self) -> bool {
        !self.symbolic_zero.is_empty() && self.symbolic_zero.iter().all(|&z| z)
    }
}

/// Numeric loss, symbolic check and rank of a set of reduced generators.
///
/// The loss reported is the largest over `gens`; `symbolic_zero` holds
/// one entry per component of every generator in order.
pub fn verify(
    sys: &OdeSystem,
    gens: &[Expr],
    data: &TrajectoryDataset,
) -> Result<VerificationReport, SymmetryError> {
    for g in gens {
        check_dim(sys, g)?;
    }
    let ctx = LossContext::new(sys, data)?;
    let numeric_loss = gens.iter().map(|g| ctx.loss(g)).fold(0.0, f64::max);
    let mut symbolic = Vec::new();
    for g in gens {
        symbolic.extend(symbolic_zero(sys, g)?);
    }
    let rank = independence_rank(gens, data, DEFAULT_RANK_TOL);
    Ok(VerificationReport {
        numeric_loss,
        symbolic_zero: symbolic,
        rank: rank.rank,
        excluded_points: 0,
        canonical: None,
    })
}
