use thiserror::Error;

use super::ast::{BinOp, Expr, UnaryOp};

/// Evaluation failure. Non-finite results are reported rather than
/// silently propagated into tensors downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("expression is not differentiable at this point (abs at 0)")]
    NonDifferentiable,
    #[error("point has wrong dimension")]
    DimensionMismatch,
}

/// Scalar-like number systems an expression can be evaluated over.
///
/// `f64` and [`Jet2`] implement this; both run through the same generic
/// evaluation code so the jet value channel performs bit-identical
/// floating-point operations to the plain evaluation.
pub trait ExprScalar: Sized + Clone {
    fn from_f64(c: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Result<Self, EvalError>;
    fn is_finite(&self) -> bool;
}

impl ExprScalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn abs(self) -> Result<Self, EvalError> {
        Ok(f64::abs(self))
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Truncated second-order Taylor data: value, gradient and symmetric
/// Hessian. The Hessian is stored once as a packed lower triangle, so
/// `hess(i, j) == hess(j, i)` holds exactly by construction.
///
/// A constant jet carries an empty gradient and broadcasts against any
/// dimension; arithmetic unifies dimensions on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl Jet2 {
    /// Dimension-free constant; broadcasts in arithmetic.
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: Vec::new(),
            hess: Vec::new(),
        }
    }

    /// Seeds coordinate `index` of an `n`-dimensional point: value `x`,
    /// gradient `e_index`, zero Hessian.
    pub fn variable(x: f64, index: usize, n: usize) -> Self {
        assert!(index < n);
        let mut grad = vec![0.0; n];
        grad[index] = 1.0;
        Jet2 {
            value: x,
            grad,
            hess: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Dimension; 0 for an unbroadcast constant.
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_at(&self, i: usize) -> f64 {
        self.grad.get(i).copied().unwrap_or(0.0)
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.hess.get(tri(i, j)).copied().unwrap_or(0.0)
    }

    /// Expands a constant to dimension `n`; a no-op when already sized.
    pub fn lifted(mut self, n: usize) -> Self {
        if self.grad.is_empty() {
            self.grad = vec![0.0; n];
            self.hess = vec![0.0; n * (n + 1) / 2];
        } else {
            assert_eq!(self.grad.len(), n, "jet dimension mismatch");
        }
        self
    }

    fn unify(mut a: Jet2, mut b: Jet2) -> (Jet2, Jet2) {
        match (a.dim(), b.dim()) {
            (0, n) if n > 0 => a = a.lifted(n),
            (n, 0) if n > 0 => b = b.lifted(n),
            (na, nb) => assert_eq!(na, nb, "jet dimension mismatch"),
        }
        (a, b)
    }

    /// Chain rule for a univariate map with derivatives `f1`, `f2` at the
    /// inner value; `f0` is the mapped value.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in 0..=i {
                hess.push(f2 * self.grad[i] * self.grad[j] + f1 * self.hess[tri(i, j)]);
            }
        }
        Jet2 {
            value: f0,
            grad: self.grad.iter().map(|g| f1 * g).collect(),
            hess,
        }
    }
}

impl ExprScalar for Jet2 {
    fn from_f64(c: f64) -> Self {
        Jet2::constant(c)
    }

    fn add(self, o: Self) -> Self {
        let (a, b) = Jet2::unify(self, o);
        Jet2 {
            value: a.value + b.value,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| x + y).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| x + y).collect(),
        }
    }

    fn sub(self, o: Self) -> Self {
        let (a, b) = Jet2::unify(self, o);
        Jet2 {
            value: a.value - b.value,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| x - y).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| x - y).collect(),
        }
    }

    fn mul(self, o: Self) -> Self {
        let (a, b) = Jet2::unify(self, o);
        let n = a.dim();
        let mut grad = Vec::with_capacity(n);
        for i in 0..n {
            grad.push(a.grad[i] * b.value + a.value * b.grad[i]);
        }
        let mut hess = Vec::with_capacity(a.hess.len());
        for i in 0..n {
            for j in 0..=i {
                hess.push(
                    a.hess[tri(i, j)] * b.value
                        + a.grad[i] * b.grad[j]
                        + a.grad[j] * b.grad[i]
                        + a.value * b.hess[tri(i, j)],
                );
            }
        }
        Jet2 {
            value: a.value * b.value,
            grad,
            hess,
        }
    }

    fn div(self, o: Self) -> Self {
        // q = a/b; from a = q*b: q' = (a' - q b')/b and
        // q'' = (a'' - q'b' - q''... expanded below) / b.
        let (a, b) = Jet2::unify(self, o);
        let n = a.dim();
        let q = a.value / b.value;
        let mut grad = Vec::with_capacity(n);
        for i in 0..n {
            grad.push((a.grad[i] - q * b.grad[i]) / b.value);
        }
        let mut hess = Vec::with_capacity(a.hess.len());
        for i in 0..n {
            for j in 0..=i {
                let num = a.hess[tri(i, j)]
                    - grad[i] * b.grad[j]
                    - grad[j] * b.grad[i]
                    - q * b.hess[tri(i, j)];
                hess.push(num / b.value);
            }
        }
        Jet2 {
            value: q,
            grad,
            hess,
        }
    }

    fn neg(self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    fn sin(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let f2 = -0.25 / (s * self.value);
        self.chain(s, 0.5 / s, f2)
    }

    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn abs(self) -> Result<Self, EvalError> {
        if self.value > 0.0 {
            Ok(self)
        } else if self.value < 0.0 {
            Ok(ExprScalar::neg(self))
        } else if self.value == 0.0 {
            Err(EvalError::NonDifferentiable)
        } else {
            // NaN input: keep propagating, the finiteness check reports it.
            Ok(self)
        }
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

/// Integer power by repeated squaring; negative exponents go through the
/// reciprocal. Shared by the real and jet paths.
fn powi<T: ExprScalar>(base: T, n: i64) -> T {
    if n < 0 {
        return T::from_f64(1.0).div(powi(base, -n));
    }
    let mut result = T::from_f64(1.0);
    let mut acc = base;
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = result.mul(acc.clone());
        }
        k >>= 1;
        if k > 0 {
            acc = acc.clone().mul(acc);
        }
    }
    result
}

/// Exponents that are literal integers use repeated multiplication; any
/// other exponent goes through `exp(e * ln(b))`, defined only for `b > 0`.
fn as_int_exponent(e: &Expr) -> Option<i64> {
    if let Expr::Const(c) = e {
        if c.fract() == 0.0 && c.abs() <= 2_147_483_647.0 {
            return Some(*c as i64);
        }
    }
    None
}

pub(crate) fn eval_scalar<T: ExprScalar>(expr: &Expr, vars: &[T]) -> Result<T, EvalError> {
    Ok(match expr {
        Expr::Const(c) => T::from_f64(*c),
        Expr::Var(i) => vars.get(*i).ok_or(EvalError::DimensionMismatch)?.clone(),
        Expr::Unary(op, e) => {
            let v = eval_scalar(e, vars)?;
            match op {
                UnaryOp::Neg => v.neg(),
                UnaryOp::Sin => v.sin(),
                UnaryOp::Cos => v.cos(),
                UnaryOp::Exp => v.exp(),
                UnaryOp::Sqrt => v.sqrt(),
                UnaryOp::Abs => v.abs()?,
            }
        }
        Expr::Binary(op, a, b) => {
            if *op == BinOp::Pow {
                let base = eval_scalar(a, vars)?;
                return Ok(match as_int_exponent(b) {
                    Some(k) => powi(base, k),
                    None => {
                        let e = eval_scalar(b, vars)?;
                        e.mul(base.ln()).exp()
                    }
                });
            }
            let x = eval_scalar(a, vars)?;
            let y = eval_scalar(b, vars)?;
            match op {
                BinOp::Add => x.add(y),
                BinOp::Sub => x.sub(y),
                BinOp::Mul => x.mul(y),
                BinOp::Div => x.div(y),
                BinOp::Pow => unreachable!(),
            }
        }
    })
}

/// IEEE-754 double evaluation at `point`; non-finite results (division by
/// zero, sqrt of a negative, ...) are reported as an error.
pub fn eval_real(expr: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    if expr.min_dimension() > point.len() {
        return Err(EvalError::DimensionMismatch);
    }
    let v = eval_scalar(expr, point)?;
    if !v.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(v)
}

/// Evaluates value, gradient and Hessian at `point` by jet arithmetic
/// with the exact chain rule — no finite differencing anywhere.
pub fn eval_jet(expr: &Expr, point: &[f64]) -> Result<Jet2, EvalError> {
    let n = point.len();
    if expr.min_dimension() > n {
        return Err(EvalError::DimensionMismatch);
    }
    let vars: Vec<Jet2> = point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet2::variable(x, i, n))
        .collect();
    let j = eval_scalar(expr, &vars)?.lifted(n);
    if !ExprScalar::is_finite(&j) {
        return Err(EvalError::NonFinite);
    }
    Ok(j)
}
