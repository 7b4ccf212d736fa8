//! Symbolic expressions for metric and vector-field components.
//!
//! Components are parsed once into an [`Expr`] tree and then evaluated
//! at points, either as plain doubles ([`eval_real`]) or as second-order
//! jets ([`eval_jet`]) that carry exact gradients and Hessians. One jet
//! evaluation of a metric component yields `g`, `∂g` and `∂∂g` at a point,
//! which is exactly the derivative order curvature needs.

mod ast;
mod jet;
mod parse;

pub use ast::{BinOp, Expr, UnaryOp};
pub use jet::{eval_jet, eval_real, EvalError, ExprScalar, Jet2};
pub use parse::{parse_expr, parse_expr_with, CoordTable, ParseError, ParseErrorKind};
