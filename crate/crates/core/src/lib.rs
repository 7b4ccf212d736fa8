//! Curvature engine for singular semi-Riemannian metrics.
//!
//! A metric is given symbolically per component and may degenerate or
//! change signature from point to point. The engine evaluates, at any
//! point: the metric with its first and second derivatives (by exact jet
//! arithmetic), the Koszul form, the radical and the annihilator
//! co-metric (a pseudo-inverse), covariant derivatives of
//! radical-annihilator tensors, the Riemann/Ricci/scalar curvature, and
//! in dimension four the weight-2 densitized Einstein tensor that stays
//! finite where the classical Einstein tensor blows up.

pub mod catalog;
pub mod curvature;
pub mod einstein;
pub mod geometry;
pub mod linalg;
pub mod suites;
pub mod symbolic;

pub use curvature::{riemann, riemann_at, ricci, scalar_curvature, RiemannTensor};
pub use einstein::{densitized_einstein, einstein_residual, DensitizedCurvature};
pub use geometry::{evaluate_point, MetricField, PointGeometry, VectorFieldExpr};
pub use linalg::{analyze_metric, CoMetric, CoTensor, Signature, SymMatrix};
pub use symbolic::{eval_jet, eval_real, parse_expr, Expr, Jet2};
