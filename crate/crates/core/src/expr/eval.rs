use smallvec::SmallVec;

use super::{BinaryOp, DomainError, Expr, Node, UnaryOp};

/// Denominators smaller than this in magnitude raise a [`DomainError`].
pub const DIVISION_GUARD: f64 = 1e-12;

/// A point `(t, y)` at which expressions are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub y: Vec<f64>,
}

impl EvalPoint {
    pub fn new(t: f64, y: Vec<f64>) -> Self {
        Self { t, y }
    }

    /// `[t, y1, .., yd]`, the layout every evaluator works on.
    pub fn vars(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.y.len() + 1);
        v.push(self.t);
        v.extend_from_slice(&self.y);
        v
    }
}

fn domain(op: &'static str, arg: f64) -> DomainError {
    DomainError { op, arg }
}

fn finite(op: &'static str, arg: f64, v: f64) -> Result<f64, DomainError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(op, arg))
    }
}

/// Value and first derivative of a unary operator at `x`.
pub fn unary_local(op: UnaryOp, x: f64) -> Result<(f64, f64), DomainError> {
    let name = op.name();
    let (v, dv) = match op {
        UnaryOp::Neg => (-x, -1.0),
        UnaryOp::Inv => {
            if x.abs() < DIVISION_GUARD {
                return Err(domain(name, x));
            }
            let v = 1.0 / x;
            (v, -v * v)
        }
        UnaryOp::Exp => {
            let v = x.exp();
            (v, v)
        }
        UnaryOp::Log => {
            if x <= 0.0 {
                return Err(domain(name, x));
            }
            (x.ln(), 1.0 / x)
        }
        UnaryOp::Sin => (x.sin(), x.cos()),
        UnaryOp::Cos => (x.cos(), -x.sin()),
        UnaryOp::Tan => {
            let v = x.tan();
            (v, 1.0 + v * v)
        }
        UnaryOp::Sqrt => {
            if x < 0.0 {
                return Err(domain(name, x));
            }
            let v = x.sqrt();
            (v, 0.5 / v)
        }
        UnaryOp::Square => (x * x, 2.0 * x),
    };
    Ok((finite(name, x, v)?, dv))
}

/// Value and partial derivatives of a binary operator at `(a, b)`.
///
/// For `Pow` the exponent `b` is a constant, so its partial is reported as 0.
pub fn binary_local(op: BinaryOp, a: f64, b: f64) -> Result<(f64, f64, f64), DomainError> {
    let name = op.name();
    let r = match op {
        BinaryOp::Add => (a + b, 1.0, 1.0),
        BinaryOp::Sub => (a - b, 1.0, -1.0),
        BinaryOp::Mul => (a * b, b, a),
        BinaryOp::Div => {
            if b.abs() < DIVISION_GUARD {
                return Err(domain(name, b));
            }
            let q = a / b;
            (q, 1.0 / b, -q / b)
        }
        BinaryOp::Pow => {
            let integral = b.fract() == 0.0;
            if !integral && a < 0.0 {
                return Err(domain(name, a));
            }
            if b < 0.0 && a.abs() < DIVISION_GUARD {
                return Err(domain(name, a));
            }
            let (v, dv) = if integral && b.abs() <= 64.0 {
                let k = b as i32;
                (a.powi(k), b * a.powi(k - 1))
            } else {
                (a.powf(b), b * a.powf(b - 1.0))
            };
            (v, dv, 0.0)
        }
    };
    Ok((finite(name, a, r.0)?, r.1, r.2))
}

/// Forward-mode dual number carrying partials with respect to `(t, y1, .., yd)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub partials: SmallVec<[f64; 4]>,
}

impl Dual {
    pub fn constant(value: f64, n_vars: usize) -> Self {
        Self {
            value,
            partials: SmallVec::from_elem(0.0, n_vars),
        }
    }

    /// The independent variable with index `var`.
    pub fn variable(value: f64, var: usize, n_vars: usize) -> Self {
        let mut d = Self::constant(value, n_vars);
        d.partials[var] = 1.0;
        d
    }

    pub fn apply_unary(&self, op: UnaryOp) -> Result<Dual, DomainError> {
        let (v, dv) = unary_local(op, self.value)?;
        Ok(Dual {
            value: v,
            partials: self.partials.iter().map(|p| dv * p).collect(),
        })
    }

    pub fn apply_binary(&self, op: BinaryOp, rhs: &Dual) -> Result<Dual, DomainError> {
        let (v, da, db) = binary_local(op, self.value, rhs.value)?;
        Ok(Dual {
            value: v,
            partials: self
                .partials
                .iter()
                .zip(&rhs.partials)
                .map(|(pa, pb)| da * pa + db * pb)
                .collect(),
        })
    }
}

impl Expr {
    /// Values of every node at `vars = [t, y1, ..]`, written into `buf`.
    pub(crate) fn eval_nodes(&self, vars: &[f64], buf: &mut Vec<f64>) -> Result<(), DomainError> {
        buf.clear();
        buf.reserve(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                Node::Var(i) => vars[i],
                Node::Const(c) => c,
                Node::Unary(op, a) => unary_local(op, buf[a as usize])?.0,
                Node::Binary(op, a, b) => binary_local(op, buf[a as usize], buf[b as usize])?.0,
            };
            buf.push(v);
        }
        Ok(())
    }

    /// Root values at `vars = [t, y1, ..]`.
    pub fn eval_slice(&self, vars: &[f64]) -> Result<Vec<f64>, DomainError> {
        let mut buf = Vec::new();
        self.eval_nodes(vars, &mut buf)?;
        Ok(self.roots.iter().map(|&r| buf[r as usize]).collect())
    }

    /// One value per root, or a domain error if any node is undefined at `p`.
    pub fn evaluate(&self, p: &EvalPoint) -> Result<Vec<f64>, DomainError> {
        self.eval_slice(&p.vars())
    }

    /// Forward-mode sweep over all nodes. `values` receives node values and
    /// `partials` the flattened `nodes x vars.len()` gradient table.
    pub(crate) fn eval_gradient_nodes(
        &self,
        vars: &[f64],
        values: &mut Vec<f64>,
        partials: &mut Vec<f64>,
    ) -> Result<(), DomainError> {
        let m = vars.len();
        values.clear();
        partials.clear();
        partials.resize(self.nodes.len() * m, 0.0);
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::Var(k) => {
                    partials[i * m + k] = 1.0;
                    vars[k]
                }
                Node::Const(c) => c,
                Node::Unary(op, a) => {
                    let a = a as usize;
                    let (v, dv) = unary_local(op, values[a])?;
                    for j in 0..m {
                        partials[i * m + j] = dv * partials[a * m + j];
                    }
                    v
                }
                Node::Binary(op, a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    let (v, da, db) = binary_local(op, values[a], values[b])?;
                    for j in 0..m {
                        partials[i * m + j] = da * partials[a * m + j] + db * partials[b * m + j];
                    }
                    v
                }
            };
            values.push(v);
        }
        if partials.iter().any(|p| !p.is_finite()) {
            return Err(DomainError {
                op: "derivative",
                arg: f64::NAN,
            });
        }
        Ok(())
    }

    /// Root values and row-major `roots x vars.len()` Jacobian at `vars`.
    pub fn value_and_jacobian(&self, vars: &[f64]) -> Result<(Vec<f64>, Vec<f64>), DomainError> {
        let mut values = Vec::new();
        let mut partials = Vec::new();
        self.eval_gradient_nodes(vars, &mut values, &mut partials)?;
        let m = vars.len();
        let vals = self.roots.iter().map(|&r| values[r as usize]).collect();
        let mut jac = Vec::with_capacity(self.roots.len() * m);
        for &r in &self.roots {
            jac.extend_from_slice(&partials[r as usize * m..(r as usize + 1) * m]);
        }
        Ok((vals, jac))
    }

    /// Row `k` is `(d/dt, d/dy1, .., d/dyd)` of root `k` at `p`.
    pub fn gradient(&self, p: &EvalPoint) -> Result<Vec<Vec<f64>>, DomainError> {
        let vars = p.vars();
        let (_, jac) = self.value_and_jacobian(&vars)?;
        Ok(jac.chunks(vars.len()).map(|c| c.to_vec()).collect())
    }

    /// Root values as dual numbers, evaluated with the [`Dual`] type.
    pub fn evaluate_dual(&self, p: &EvalPoint) -> Result<Vec<Dual>, DomainError> {
        let vars = p.vars();
        let m = vars.len();
        let mut buf: Vec<Dual> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let d = match *node {
                Node::Var(k) => Dual::variable(vars[k], k, m),
                Node::Const(c) => Dual::constant(c, m),
                Node::Unary(op, a) => buf[a as usize].apply_unary(op)?,
                Node::Binary(op, a, b) => buf[a as usize].apply_binary(op, &buf[b as usize])?,
            };
            buf.push(d);
        }
        Ok(self.roots.iter().map(|&r| buf[r as usize].clone()).collect())
    }
}
