//! Metric fields, the Koszul form, lower covariant derivatives and point
//! classification.
//!
//! A [`MetricField`] holds the symbolic components `g_ab(x)`. One jet
//! evaluation per component yields `g`, `∂g` and `∂∂g` at a point, from
//! which the Koszul form `𝒦_abc = ½(∂_a g_bc + ∂_b g_ca − ∂_c g_ab)`
//! (Christoffel symbols of the first kind) is assembled exactly. The
//! Koszul form plays the role of the connection without ever raising an
//! index, which is what makes the degenerate case tractable: where the
//! metric has a radical, `𝒦(X,Y,·)` lands in the radical annihilator at
//! radical-stationary points and can be contracted with the co-metric.

use thiserror::Error;

use crate::linalg::{
    analyze_metric, slot_radical_residual, CoMetric, CoTensor, LinalgError, SymMatrix,
};
use crate::symbolic::{
    eval_jet, eval_real, parse_expr_with, CoordTable, EvalError, Expr, ExprScalar, Jet2,
    ParseError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("component g[{row}][{col}]: {source}")]
    Component {
        row: usize,
        col: usize,
        source: EvalError,
    },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("parse error in component g[{row}][{col}]: {source}")]
    ComponentParse {
        row: usize,
        col: usize,
        source: ParseError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("1-form is not radical-annihilator at this point (residual {residual:.3e})")]
    NotRadicalAnnihilator { residual: f64 },
    #[error("point is not radical-stationary (residual {residual:.3e})")]
    NotRadicalStationary { residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

/// Symmetric metric tensor field: one expression per lower-triangular
/// component. Immutable after construction; all point evaluations are
/// pure, so fields can be shared across threads and scanned concurrently.
#[derive(Debug, Clone)]
pub struct MetricField {
    n: usize,
    coord_names: Vec<String>,
    /// Packed lower triangle, `components[tri(i, j)] = g_ij` for `i >= j`.
    components: Vec<Expr>,
}

impl MetricField {
    /// Builds from already-parsed lower-triangular components, row by row
    /// (row `i` has `i + 1` entries).
    pub fn from_exprs(components: Vec<Expr>, n: usize) -> Self {
        assert_eq!(components.len(), n * (n + 1) / 2);
        MetricField {
            n,
            coord_names: (0..n).map(|i| format!("x{i}")).collect(),
            components,
        }
    }

    /// Parses a lower-triangular matrix of component sources. `coords`
    /// supplies the coordinate names; they alias `x0..x{n-1}`.
    pub fn parse(coords: &[String], rows: &[Vec<String>]) -> Result<Self, GeometryError> {
        let n = coords.len();
        if rows.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                found: rows.len(),
            });
        }
        let table = CoordTable::from_names(coords);
        let mut components = Vec::with_capacity(n * (n + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(GeometryError::Dimension {
                    expected: i + 1,
                    found: row.len(),
                });
            }
            for (j, src) in row.iter().enumerate() {
                components.push(parse_expr_with(src, n, &table).map_err(|source| {
                    GeometryError::ComponentParse {
                        row: i,
                        col: j,
                        source,
                    }
                })?);
            }
        }
        Ok(MetricField {
            n,
            coord_names: coords.to_vec(),
            components,
        })
    }

    pub fn diagonal(entries: Vec<Expr>) -> Self {
        let n = entries.len();
        let mut components = Vec::with_capacity(n * (n + 1) / 2);
        for (i, e) in entries.into_iter().enumerate() {
            for _ in 0..i {
                components.push(Expr::constant(0.0));
            }
            components.push(e);
        }
        MetricField::from_exprs(components, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        &self.components[tri(i, j)]
    }

    /// Applies `f` to every component, e.g. for a conformal rescaling.
    pub fn map_components(&self, mut f: impl FnMut(&Expr) -> Expr) -> Self {
        MetricField {
            n: self.n,
            coord_names: self.coord_names.clone(),
            components: self.components.iter().map(&mut f).collect(),
        }
    }

    pub fn with_coord_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.n);
        self.coord_names = names;
        self
    }

    /// Metric value at a point.
    pub fn value_at(&self, p: &[f64]) -> Result<SymMatrix, GeometryError> {
        self.check_point(p)?;
        let mut data = Vec::with_capacity(self.components.len());
        for i in 0..self.n {
            for j in 0..=i {
                data.push(eval_real(&self.components[tri(i, j)], p).map_err(|source| {
                    GeometryError::Component {
                        row: i,
                        col: j,
                        source,
                    }
                })?);
            }
        }
        Ok(SymMatrix::from_fn(self.n, |i, j| data[tri(i, j)]))
    }

    /// Jets of all components at a point, packed lower-triangular.
    pub(crate) fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet2>, GeometryError> {
        self.check_point(p)?;
        let mut jets = Vec::with_capacity(self.components.len());
        for i in 0..self.n {
            for j in 0..=i {
                jets.push(eval_jet(&self.components[tri(i, j)], p).map_err(|source| {
                    GeometryError::Component {
                        row: i,
                        col: j,
                        source,
                    }
                })?);
            }
        }
        Ok(jets)
    }

    /// The 1-form field `Y^♭`: components `Σ_b g_cb Y^b` as expressions.
    pub fn lower(&self, y: &VectorFieldExpr) -> VectorFieldExpr {
        assert_eq!(y.n(), self.n);
        let comps = (0..self.n)
            .map(|c| {
                let mut acc = Expr::constant(0.0);
                for b in 0..self.n {
                    acc = Expr::add(
                        acc,
                        Expr::mul(self.component(c, b).clone(), y.component(b).clone()),
                    );
                }
                acc
            })
            .collect();
        VectorFieldExpr::new(comps)
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.n {
            return Err(GeometryError::Dimension {
                expected: self.n,
                found: p.len(),
            });
        }
        Ok(())
    }
}

/// Expression-valued vector field (or covector field, component-wise).
/// Keeping fields symbolic makes Lie brackets exact jet computations
/// instead of finite differences.
#[derive(Debug, Clone)]
pub struct VectorFieldExpr {
    components: Vec<Expr>,
}

impl VectorFieldExpr {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorFieldExpr { components }
    }

    pub fn parse(sources: &[&str], n: usize) -> Result<Self, ParseError> {
        let comps = sources
            .iter()
            .map(|s| crate::symbolic::parse_expr(s, n))
            .collect::<Result<Vec<_>, _>>()?;
        assert_eq!(comps.len(), n);
        Ok(VectorFieldExpr::new(comps))
    }

    /// The coordinate field `∂_c`.
    pub fn coordinate(c: usize, n: usize) -> Self {
        VectorFieldExpr::new(
            (0..n)
                .map(|i| Expr::constant(if i == c { 1.0 } else { 0.0 }))
                .collect(),
        )
    }

    pub fn constant(values: &[f64]) -> Self {
        VectorFieldExpr::new(values.iter().map(|&v| Expr::constant(v)).collect())
    }

    /// The field `f · X`.
    pub fn scaled(&self, f: &Expr) -> Self {
        VectorFieldExpr::new(
            self.components
                .iter()
                .map(|c| Expr::mul(f.clone(), c.clone()))
                .collect(),
        )
    }

    pub fn add(&self, other: &VectorFieldExpr) -> Self {
        assert_eq!(self.n(), other.n());
        VectorFieldExpr::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| Expr::add(a.clone(), b.clone()))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn values_at(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| eval_real(c, p)).collect()
    }

    pub(crate) fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet2>, EvalError> {
        self.components.iter().map(|c| eval_jet(c, p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointFlags {
    pub nondegenerate: bool,
    pub radical_stationary: bool,
}

/// Everything the engine knows about the metric at one point: the value,
/// first and second derivatives, the Koszul components, the spectral
/// data and the classification flags.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub g: SymMatrix,
    /// `dg[a][b][c] = ∂_a g_bc`, symmetric in the last two slots.
    pub dg: CoTensor,
    /// `ddg[a][b][c][d] = ∂_a ∂_b g_cd`, symmetric in `(a,b)` and `(c,d)`.
    pub ddg: CoTensor,
    /// `𝒦_abc = ½(∂_a g_bc + ∂_b g_ca − ∂_c g_ab)`.
    pub koszul: CoTensor,
    pub cm: CoMetric,
    pub flags: PointFlags,
}

impl PointGeometry {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// The covector `c ↦ 𝒦_abc` for fixed `a`, `b`.
    pub fn koszul_covector(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.n()).map(|c| self.koszul.get(&[a, b, c])).collect()
    }
}

/// Largest contraction of `𝒦_ab·` against the radical basis, relative to
/// `max(1, ‖𝒦‖∞)`. Zero where the metric is non-degenerate.
pub fn radical_stationarity_residual(koszul: &CoTensor, cm: &CoMetric) -> f64 {
    slot_radical_residual(koszul, 2, cm)
}

/// True iff every `𝒦(∂_a, ∂_b, ·)` annihilates the radical within `tol`.
/// Checking the coordinate-frame components suffices for all smooth
/// fields by bilinearity of the Koszul form.
pub fn is_radical_stationary(pg: &PointGeometry, tol: f64) -> bool {
    radical_stationarity_residual(&pg.koszul, &pg.cm) <= tol
}

/// Evaluates the metric field at `p`: jets of every component give `g`,
/// `∂g`, `∂∂g`; the Koszul components follow from the coordinate formula
/// and the spectral analysis classifies the point.
pub fn evaluate_point(
    field: &MetricField,
    p: &[f64],
    tol: f64,
) -> Result<PointGeometry, GeometryError> {
    let n = field.n();
    let jets = field.jets_at(p)?;
    let g = SymMatrix::from_fn(n, |i, j| jets[tri(i, j)].value());
    let dg = CoTensor::from_fn(n, 3, |idx| {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        let (b, c) = if b >= c { (b, c) } else { (c, b) };
        jets[tri(b, c)].grad_at(a)
    });
    let ddg = CoTensor::from_fn(n, 4, |idx| {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        let (c, d) = if c >= d { (c, d) } else { (d, c) };
        jets[tri(c, d)].hess(a, b)
    });
    let koszul = CoTensor::from_fn(n, 3, |idx| {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        0.5 * (dg.get(&[a, b, c]) + dg.get(&[b, c, a]) - dg.get(&[c, a, b]))
    });
    let cm = analyze_metric(&g, tol)?;
    let radical_stationary = radical_stationarity_residual(&koszul, &cm) <= tol.max(1e-12);
    let flags = PointFlags {
        nondegenerate: cm.rank == n,
        radical_stationary,
    };
    Ok(PointGeometry {
        point: p.to_vec(),
        g,
        dg,
        ddg,
        koszul,
        cm,
        flags,
    })
}

// ---------------------------------------------------------------------
// First-order scalar jets derived from full jets.
//
// Full `Jet2` data exists only for primitive expressions (metric and
// field components). Quantities like `⟨Y,Z⟩` keep full second-order
// data, but a directional derivative consumes one order: `X⟨Y,Z⟩` is
// known only to first order. `D1` tracks that reduced order explicitly
// so the code cannot silently ask for a derivative it does not have.
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) struct D1 {
    pub v: f64,
    pub g: Vec<f64>,
}

impl D1 {
    pub(crate) fn from_jet(j: &Jet2) -> Self {
        D1 {
            v: j.value(),
            g: j.grad().to_vec(),
        }
    }

    fn zero(n: usize) -> Self {
        D1 {
            v: 0.0,
            g: vec![0.0; n],
        }
    }

    fn add(mut self, o: &D1) -> Self {
        self.v += o.v;
        for (a, b) in self.g.iter_mut().zip(&o.g) {
            *a += b;
        }
        self
    }

    fn sub(mut self, o: &D1) -> Self {
        self.v -= o.v;
        for (a, b) in self.g.iter_mut().zip(&o.g) {
            *a -= b;
        }
        self
    }

    fn mul(&self, o: &D1) -> Self {
        D1 {
            v: self.v * o.v,
            g: self
                .g
                .iter()
                .zip(&o.g)
                .map(|(a, b)| a * o.v + self.v * b)
                .collect(),
        }
    }

    fn scale(mut self, c: f64) -> Self {
        self.v *= c;
        for a in &mut self.g {
            *a *= c;
        }
        self
    }
}

/// Directional derivative of a second-order scalar jet along a field
/// known to first order: result is first-order data for `X(q)`.
pub(crate) fn directional(x: &[D1], q: &Jet2) -> D1 {
    let n = x.len();
    let mut v = 0.0;
    let mut g = vec![0.0; n];
    for (a, xa) in x.iter().enumerate() {
        v += xa.v * q.grad_at(a);
        for b in 0..n {
            g[b] += xa.g[b] * q.grad_at(a) + xa.v * q.hess(a, b);
        }
    }
    D1 { v, g }
}

fn directional_value(xv: &[f64], q: &D1) -> f64 {
    xv.iter().zip(&q.g).map(|(a, b)| a * b).sum()
}

/// Lie bracket `[X,Y]^c = X^a ∂_a Y^c − Y^a ∂_a X^c` with its first
/// derivatives, assembled from the component jets.
pub(crate) fn bracket(x: &[Jet2], y: &[Jet2]) -> Vec<D1> {
    let n = x.len();
    (0..n)
        .map(|c| {
            let mut v = 0.0;
            let mut g = vec![0.0; n];
            for a in 0..n {
                v += x[a].value() * y[c].grad_at(a) - y[a].value() * x[c].grad_at(a);
                for b in 0..n {
                    g[b] += x[a].grad_at(b) * y[c].grad_at(a) + x[a].value() * y[c].hess(a, b)
                        - y[a].grad_at(b) * x[c].grad_at(a)
                        - y[a].value() * x[c].hess(a, b);
                }
            }
            D1 { v, g }
        })
        .collect()
}

/// Scalar pairing `⟨X,Y⟩ = g_ab X^a Y^b` as a full second-order jet.
pub(crate) fn pairing_jet(gjets: &[Jet2], x: &[Jet2], y: &[Jet2]) -> Jet2 {
    let n = x.len();
    let mut acc = Jet2::constant(0.0);
    for a in 0..n {
        for b in 0..=a {
            let term = gjets[tri(a, b)].clone().mul(if a == b {
                x[a].clone().mul(y[a].clone())
            } else {
                x[a].clone()
                    .mul(y[b].clone())
                    .add(x[b].clone().mul(y[a].clone()))
            });
            acc = acc.add(term);
        }
    }
    acc
}

/// The same pairing at first order, accepting first-order arguments.
pub(crate) fn pairing_d1(gjets: &[Jet2], x: &[D1], y: &[D1]) -> D1 {
    let n = x.len();
    let mut acc = D1::zero(n);
    for a in 0..n {
        for b in 0..n {
            let (i, j) = if a >= b { (a, b) } else { (b, a) };
            let gab = D1::from_jet(&gjets[tri(i, j)]);
            acc = acc.add(&gab.mul(&x[a]).mul(&y[b]));
        }
    }
    acc
}

pub(crate) fn d1_of_jets(jets: &[Jet2]) -> Vec<D1> {
    jets.iter().map(D1::from_jet).collect()
}

/// Everything the frame-wise Koszul form needs at one point.
pub(crate) struct FramePoint {
    pub gjets: Vec<Jet2>,
}

impl FramePoint {
    pub(crate) fn new(field: &MetricField, p: &[f64]) -> Result<Self, GeometryError> {
        Ok(FramePoint {
            gjets: field.jets_at(p)?,
        })
    }

    /// `𝒦(X,Y,Z)` with its first derivatives:
    /// `½{X⟨Y,Z⟩ + Y⟨Z,X⟩ − Z⟨X,Y⟩ − ⟨X,[Y,Z]⟩ + ⟨Y,[Z,X]⟩ + ⟨Z,[X,Y]⟩}`.
    pub(crate) fn koszul_d1(&self, x: &[Jet2], y: &[Jet2], z: &[Jet2]) -> D1 {
        let (xd, yd, zd) = (d1_of_jets(x), d1_of_jets(y), d1_of_jets(z));
        let pair_yz = pairing_jet(&self.gjets, y, z);
        let pair_zx = pairing_jet(&self.gjets, z, x);
        let pair_xy = pairing_jet(&self.gjets, x, y);
        let br_yz = bracket(y, z);
        let br_zx = bracket(z, x);
        let br_xy = bracket(x, y);
        directional(&xd, &pair_yz)
            .add(&directional(&yd, &pair_zx))
            .sub(&directional(&zd, &pair_xy))
            .sub(&pairing_d1(&self.gjets, &xd, &br_yz))
            .add(&pairing_d1(&self.gjets, &yd, &br_zx))
            .add(&pairing_d1(&self.gjets, &zd, &br_xy))
            .scale(0.5)
    }

    /// Value of `𝒦(W,Z,T)` where `W` is only known to first order (a Lie
    /// bracket), while `Z`, `T` have full jets.
    pub(crate) fn koszul_value_d1(&self, w: &[D1], z: &[Jet2], t: &[Jet2]) -> f64 {
        let (zd, td) = (d1_of_jets(z), d1_of_jets(t));
        let wv: Vec<f64> = w.iter().map(|c| c.v).collect();
        let zv: Vec<f64> = z.iter().map(|c| c.value()).collect();
        let tv: Vec<f64> = t.iter().map(|c| c.value()).collect();

        let pair_zt = pairing_jet(&self.gjets, z, t);
        let pair_tw = pairing_d1(&self.gjets, &td, w);
        let pair_wz = pairing_d1(&self.gjets, w, &zd);

        // brackets involving W need only ∂W, available at first order
        let br_zt: Vec<f64> = bracket(z, t).iter().map(|c| c.v).collect();
        let br_tw = bracket_jet_d1(t, w);
        let br_wz = bracket_d1_jet(w, z);

        0.5 * (directional_value(&wv, &D1::from_jet(&pair_zt))
            + directional_value(&zv, &pair_tw)
            - directional_value(&tv, &pair_wz)
            - self.pair_value(&wv, &br_zt)
            + self.pair_value(&zv, &br_tw)
            + self.pair_value(&tv, &br_wz))
    }

    pub(crate) fn pair_value(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = u.len();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let (i, j) = if a >= b { (a, b) } else { (b, a) };
                acc += self.gjets[tri(i, j)].value() * u[a] * v[b];
            }
        }
        acc
    }
}

/// Values of `[T, W]` where `T` has full jets and `W` first-order data.
fn bracket_jet_d1(t: &[Jet2], w: &[D1]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|c| {
            (0..n)
                .map(|a| t[a].value() * w[c].g[a] - w[a].v * t[c].grad_at(a))
                .sum()
        })
        .collect()
}

/// Values of `[W, Z]` with `W` first-order, `Z` full jets.
fn bracket_d1_jet(w: &[D1], z: &[Jet2]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|c| {
            (0..n)
                .map(|a| w[a].v * z[c].grad_at(a) - z[a].value() * w[c].g[a])
                .sum()
        })
        .collect()
}

/// The Koszul form `𝒦(X,Y,Z)` at `p`, evaluated from its definition with
/// jet derivatives of the scalar pairings and exact Lie brackets. On
/// coordinate fields this reproduces the stored coordinate components.
pub fn koszul_frame(
    field: &MetricField,
    p: &[f64],
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    z: &VectorFieldExpr,
) -> Result<f64, GeometryError> {
    let fp = FramePoint::new(field, p)?;
    let xj = x.jets_at(p)?;
    let yj = y.jets_at(p)?;
    let zj = z.jets_at(p)?;
    Ok(fp.koszul_d1(&xj, &yj, &zj).v)
}

/// Lower covariant derivative `(∇♭_X Y)_c = 𝒦(X, Y, ∂_c)`, expanded over
/// the coordinate components:
/// `Σ_ab X^a (Y^b 𝒦_abc + (∂_a Y^b) g_bc)`.
pub fn lower_cov_deriv(
    pg: &PointGeometry,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
) -> Result<Vec<f64>, GeometryError> {
    let n = pg.n();
    let xv = x.values_at(&pg.point)?;
    let yj = y.jets_at(&pg.point)?;
    let mut out = vec![0.0; n];
    for c in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += xv[a]
                    * (yj[b].value() * pg.koszul.get(&[a, b, c])
                        + yj[b].grad_at(a) * pg.g.get(b, c));
            }
        }
        out[c] = acc;
    }
    Ok(out)
}

/// Covariant derivative of a radical-annihilator 1-form `ω` along `X`:
/// the covector `Y ↦ X(ω(Y)) − g•(∇♭_X Y, ω)`, per coordinate direction.
///
/// Defined (by the underlying theory) only when `ω` annihilates the
/// radical and the point is radical-stationary; both are enforced.
pub fn cov_deriv_oneform(
    field: &MetricField,
    p: &[f64],
    x: &VectorFieldExpr,
    omega: &VectorFieldExpr,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let pg = evaluate_point(field, p, tol)?;
    cov_deriv_oneform_at(&pg, x, omega, tol)
}

pub fn cov_deriv_oneform_at(
    pg: &PointGeometry,
    x: &VectorFieldExpr,
    omega: &VectorFieldExpr,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let n = pg.n();
    ensure_radical_stationary(pg, tol)?;
    let oj = omega.jets_at(&pg.point)?;
    let ov: Vec<f64> = oj.iter().map(|j| j.value()).collect();
    ensure_annihilator(&ov, pg, tol)?;
    let xv = x.values_at(&pg.point)?;

    let mut out = vec![0.0; n];
    for b in 0..n {
        // X(ω_b): ∂_b is constant, so ω(∂_b) is just the component
        let x_omega_b: f64 = (0..n).map(|a| xv[a] * oj[b].grad_at(a)).sum();
        // 𝒦(X, ∂_b, ·) via f-linearity in the first slot
        let kxb: Vec<f64> = (0..n)
            .map(|c| (0..n).map(|a| xv[a] * pg.koszul.get(&[a, b, c])).sum())
            .collect();
        out[b] = x_omega_b - pg.cm.co_pair(&kxb, &ov);
    }
    Ok(out)
}

/// Covariant tensor field with expression components, used for tensors
/// whose covariant derivative is requested.
#[derive(Debug, Clone)]
pub struct CoTensorField {
    n: usize,
    order: usize,
    components: Vec<Expr>,
}

impl CoTensorField {
    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let count = n.pow(order as u32);
        let mut idx = vec![0usize; order];
        let mut components = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            for slot in (0..order).rev() {
                idx[slot] = rem % n;
                rem /= n;
            }
            components.push(f(&idx));
        }
        CoTensorField {
            n,
            order,
            components,
        }
    }

    /// The metric itself as an order-2 tensor field.
    pub fn from_metric(field: &MetricField) -> Self {
        Self::from_fn(field.n(), 2, |idx| field.component(idx[0], idx[1]).clone())
    }

    /// `ω ⊗ τ` of two 1-form fields.
    pub fn tensor_product(omega: &VectorFieldExpr, tau: &VectorFieldExpr) -> Self {
        let n = omega.n();
        Self::from_fn(n, 2, |idx| {
            Expr::mul(
                omega.component(idx[0]).clone(),
                tau.component(idx[1]).clone(),
            )
        })
    }

    pub fn from_oneform(omega: &VectorFieldExpr) -> Self {
        let n = omega.n();
        Self::from_fn(n, 1, |idx| omega.component(idx[0]).clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn component(&self, idx: &[usize]) -> &Expr {
        &self.components[self.offset(idx)]
    }

    pub fn values_at(&self, p: &[f64]) -> Result<CoTensor, EvalError> {
        let mut err = None;
        let t = CoTensor::from_fn(self.n, self.order, |idx| {
            match eval_real(self.component(idx), p) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        match err {
            None => Ok(t),
            Some(e) => Err(e),
        }
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet2>, EvalError> {
        self.components.iter().map(|c| eval_jet(c, p)).collect()
    }
}

/// Covariant derivative of a covariant tensor whose slots are all
/// radical-annihilator, at a radical-stationary point:
/// `(∇_X T)(Y_1..Y_k) = X(T(Y..)) − Σ_i g•^{st} 𝒦(X,Y_i,∂_s) T(.. ∂_t ..)`.
pub fn cov_deriv_tensor(
    field: &MetricField,
    p: &[f64],
    x: &VectorFieldExpr,
    t: &CoTensorField,
    tol: f64,
) -> Result<CoTensor, GeometryError> {
    let pg = evaluate_point(field, p, tol)?;
    cov_deriv_tensor_at(&pg, x, t, tol)
}

pub fn cov_deriv_tensor_at(
    pg: &PointGeometry,
    x: &VectorFieldExpr,
    t: &CoTensorField,
    tol: f64,
) -> Result<CoTensor, GeometryError> {
    let n = pg.n();
    ensure_radical_stationary(pg, tol)?;
    let tj = t.jets_at(&pg.point)?;
    let tv = CoTensor::from_fn(n, t.order(), |idx| tj[t.offset(idx)].value());
    for slot in 0..t.order() {
        let residual = slot_radical_residual(&tv, slot, &pg.cm);
        if residual > tol {
            return Err(GeometryError::NotRadicalAnnihilator { residual });
        }
    }
    let xv = x.values_at(&pg.point)?;

    // K[b][s] = 𝒦(X, ∂_b, ∂_s), f-linear in the first slot
    let kx: Vec<Vec<f64>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|s| (0..n).map(|a| xv[a] * pg.koszul.get(&[a, b, s])).sum())
                .collect()
        })
        .collect();

    let order = t.order();
    let mut idx_t = vec![0usize; order];
    Ok(CoTensor::from_fn(n, order, |idx| {
        // X applied to the scalar component function
        let mut acc: f64 = (0..n)
            .map(|a| xv[a] * tj[t.offset(idx)].grad_at(a))
            .sum();
        for (i, &bi) in idx.iter().enumerate() {
            idx_t.copy_from_slice(idx);
            for s in 0..n {
                for u in 0..n {
                    let w = pg.cm.cometric.get(s, u);
                    if w == 0.0 {
                        continue;
                    }
                    idx_t[i] = u;
                    acc -= w * kx[bi][s] * tv.get(&idx_t);
                }
            }
        }
        acc
    }))
}

fn ensure_radical_stationary(pg: &PointGeometry, tol: f64) -> Result<(), GeometryError> {
    let residual = radical_stationarity_residual(&pg.koszul, &pg.cm);
    if residual > tol.max(1e-12) {
        return Err(GeometryError::NotRadicalStationary { residual });
    }
    Ok(())
}

fn ensure_annihilator(omega: &[f64], pg: &PointGeometry, tol: f64) -> Result<(), GeometryError> {
    let scale = omega.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let residual = pg
        .cm
        .radical_basis
        .iter()
        .map(|w| omega.iter().zip(w).map(|(o, wi)| o * wi).sum::<f64>().abs())
        .fold(0.0, f64::max)
        / scale;
    if residual > tol {
        return Err(GeometryError::NotRadicalAnnihilator { residual });
    }
    Ok(())
}

/// A curve `s ↦ (x0(s), .., x{n-1}(s))` given by expressions in the
/// single parameter `s`.
#[derive(Debug, Clone)]
pub struct CurvePath {
    exprs: Vec<Expr>,
}

impl CurvePath {
    pub fn new(exprs: Vec<Expr>) -> Self {
        CurvePath { exprs }
    }

    /// Parses per-coordinate expressions in the parameter `s` (alias of
    /// the single variable).
    pub fn parse(sources: &[String]) -> Result<Self, ParseError> {
        let mut table = CoordTable::new();
        table.alias("s", 0);
        let exprs = sources
            .iter()
            .map(|src| parse_expr_with(src, 1, &table))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CurvePath { exprs })
    }

    pub fn n(&self) -> usize {
        self.exprs.len()
    }

    pub fn at(&self, s: f64) -> Result<Vec<f64>, EvalError> {
        self.exprs.iter().map(|e| eval_real(e, &[s])).collect()
    }
}

/// Evidence report from sampling `h_abcd(s) = g•^{st} 𝒦_abs 𝒦_cdt` along
/// a path. The verdict is a heuristic consistent-sampling statement,
/// never a proof: smoothness of the contraction across a signature
/// change cannot be certified from finitely many samples.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub samples: usize,
    /// Samples where the rank dropped below the maximum rank seen along
    /// the path; at those points the contraction is taken as extension
    /// by continuity and the pointwise value is excluded.
    pub rank_drop_samples: usize,
    pub eval_failures: usize,
    pub max_abs_h: f64,
    pub max_second_diff: f64,
    pub bounded: bool,
    pub lipschitz_consistent: bool,
    pub verdict: bool,
}

/// Samples the Koszul-square contraction along a path and reports
/// boundedness plus a discrete continuity check across rank drops.
///
/// The Lipschitz constant is fitted as the largest slope seen away from
/// rank-change samples; pairs adjacent to or straddling a rank change
/// must then stay within twice that slope (plus `tol`, scaled).
pub fn semi_regular_probe(
    field: &MetricField,
    path: &CurvePath,
    s_min: f64,
    s_max: f64,
    samples: usize,
    tol: f64,
) -> Result<ProbeReport, GeometryError> {
    assert!(samples >= 3, "need at least 3 samples");
    if path.n() != field.n() {
        return Err(GeometryError::Dimension {
            expected: field.n(),
            found: path.n(),
        });
    }
    let n = field.n();
    let step = (s_max - s_min) / (samples - 1) as f64;

    struct Sample {
        s: f64,
        rank: usize,
        h: CoTensor,
    }
    let mut evaluated: Vec<Option<Sample>> = Vec::with_capacity(samples);
    let mut eval_failures = 0usize;
    let mut max_rank = 0usize;
    for i in 0..samples {
        let s = s_min + step * i as f64;
        let sample = (|| -> Result<Sample, GeometryError> {
            let p = path.at(s)?;
            let pg = evaluate_point(field, &p, tol)?;
            let h = CoTensor::from_fn(n, 4, |idx| {
                let kab = pg.koszul_covector(idx[0], idx[1]);
                let kcd = pg.koszul_covector(idx[2], idx[3]);
                pg.cm.co_pair(&kab, &kcd)
            });
            Ok(Sample {
                s,
                rank: pg.cm.rank,
                h,
            })
        })();
        match sample {
            Ok(sm) => {
                max_rank = max_rank.max(sm.rank);
                evaluated.push(Some(sm));
            }
            Err(_) => {
                eval_failures += 1;
                evaluated.push(None);
            }
        }
    }

    // indices of samples kept for the h series (full generic rank)
    let kept: Vec<usize> = (0..samples)
        .filter(|&i| matches!(&evaluated[i], Some(sm) if sm.rank == max_rank))
        .collect();
    let rank_drop_samples = samples - eval_failures - kept.len();
    let near_drop = |i: usize| -> bool {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(samples - 1);
        (lo..=hi).any(|j| !matches!(&evaluated[j], Some(sm) if sm.rank == max_rank))
    };

    let mut max_abs_h = 0.0f64;
    for &i in &kept {
        max_abs_h = max_abs_h.max(evaluated[i].as_ref().unwrap().h.max_abs());
    }
    let h_scale = max_abs_h.max(1.0);

    let mut max_second_diff = 0.0f64;
    let mut consistent = true;
    let mut idx = vec![0usize; 4];
    for flat in 0..n.pow(4) {
        let mut rem = flat;
        for slot in (0..4).rev() {
            idx[slot] = rem % n;
            rem /= n;
        }
        let series: Vec<(usize, f64, f64)> = kept
            .iter()
            .map(|&i| {
                let sm = evaluated[i].as_ref().unwrap();
                (i, sm.s, sm.h.get(&idx))
            })
            .collect();
        // fitted Lipschitz constant from the bulk (pairs untouched by
        // rank changes)
        let mut fit = 0.0f64;
        for w in series.windows(2) {
            let ((i0, s0, h0), (i1, s1, h1)) = (w[0], w[1]);
            if i1 == i0 + 1 && !near_drop(i0) && !near_drop(i1) {
                fit = fit.max((h1 - h0).abs() / (s1 - s0));
            }
        }
        for w in series.windows(2) {
            let ((_, s0, h0), (_, s1, h1)) = (w[0], w[1]);
            if (h1 - h0).abs() > 2.0 * fit * (s1 - s0) + tol * h_scale {
                consistent = false;
            }
        }
        for w in series.windows(3) {
            let ((i0, _, h0), (i1, _, h1), (i2, _, h2)) = (w[0], w[1], w[2]);
            if i1 == i0 + 1 && i2 == i1 + 1 {
                max_second_diff = max_second_diff.max((h2 - 2.0 * h1 + h0).abs());
            }
        }
    }

    let bounded = max_abs_h.is_finite() && max_abs_h <= 1.0 / tol;
    Ok(ProbeReport {
        samples,
        rank_drop_samples,
        eval_failures,
        max_abs_h,
        max_second_diff,
        bounded,
        lipschitz_consistent: consistent,
        verdict: bounded && consistent && eval_failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn field_from(rows: &[&[&str]]) -> MetricField {
        let n = rows.len();
        let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect();
        MetricField::parse(&coords, &rows).unwrap()
    }

    fn diag_field(entries: &[&str]) -> MetricField {
        let n = entries.len();
        MetricField::diagonal(
            entries
                .iter()
                .map(|s| crate::symbolic::parse_expr(s, n).unwrap())
                .collect(),
        )
    }

    #[test]
    fn constant_metric_has_zero_koszul() {
        let field = diag_field(&["0", "-1", "1", "1"]);
        let pg = evaluate_point(&field, &[0.3, -1.2, 0.5, 2.0], TOL).unwrap();
        assert_eq!(pg.koszul.max_abs(), 0.0);
        assert!(!pg.flags.nondegenerate);
        assert!(pg.flags.radical_stationary);
        assert_eq!(pg.cm.rank, 3);

        let flat = diag_field(&["1", "1"]);
        let pg = evaluate_point(&flat, &[0.0, 0.0], TOL).unwrap();
        assert!(pg.flags.nondegenerate);
        assert_eq!(pg.koszul.max_abs(), 0.0);
    }

    /// Finite-difference oracle for the coordinate Koszul formula,
    /// independent of the jet machinery.
    fn koszul_fd(field: &MetricField, p: &[f64], a: usize, b: usize, c: usize) -> f64 {
        let h = 1e-6;
        let dg = |a: usize, b: usize, c: usize| {
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[a] += h;
            lo[a] -= h;
            (eval_real(field.component(b, c), &hi).unwrap()
                - eval_real(field.component(b, c), &lo).unwrap())
                / (2.0 * h)
        };
        0.5 * (dg(a, b, c) + dg(b, c, a) - dg(c, a, b))
    }

    #[test]
    fn koszul_of_quadratic_diagonal_metric() {
        let field = diag_field(&["x0^2", "1"]);
        for &t in &[0.7, -1.3, 2.0] {
            let pg = evaluate_point(&field, &[t, 0.4], TOL).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let want = if (a, b, c) == (0, 0, 0) { t } else { 0.0 };
                        let got = pg.koszul.get(&[a, b, c]);
                        assert!((got - want).abs() < 1e-12, "K[{a}{b}{c}] = {got}");
                        let fd = koszul_fd(&field, &[t, 0.4], a, b, c);
                        assert!((got - fd).abs() < 1e-6, "fd oracle: {got} vs {fd}");
                    }
                }
            }
        }
    }

    fn random_poly(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Expr {
        let mut e = Expr::constant(rng.gen_range(-scale..scale));
        for i in 0..n {
            e = Expr::add(
                e,
                Expr::mul(Expr::constant(rng.gen_range(-scale..scale)), Expr::var(i)),
            );
            for j in i..n {
                if rng.gen_bool(0.4) {
                    e = Expr::add(
                        e,
                        Expr::mul(
                            Expr::constant(rng.gen_range(-scale..scale)),
                            Expr::mul(Expr::var(i), Expr::var(j)),
                        ),
                    );
                }
            }
        }
        e
    }

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricField {
        let mut comps = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                comps.push(if i == j {
                    Expr::add(Expr::constant(3.0), random_poly(rng, n, 0.3))
                } else {
                    random_poly(rng, n, 0.3)
                });
            }
        }
        MetricField::from_exprs(comps, n)
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> VectorFieldExpr {
        VectorFieldExpr::new((0..n).map(|_| random_poly(rng, n, 1.0)).collect())
    }

    #[test]
    fn koszul_frame_matches_coordinate_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = rng.gen_range(2..=4);
            let field = random_metric(&mut rng, n);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pg = evaluate_point(&field, &p, TOL).unwrap();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let frame = koszul_frame(
                            &field,
                            &p,
                            &VectorFieldExpr::coordinate(a, n),
                            &VectorFieldExpr::coordinate(b, n),
                            &VectorFieldExpr::coordinate(c, n),
                        )
                        .unwrap();
                        let coord = pg.koszul.get(&[a, b, c]);
                        assert!(
                            (frame - coord).abs() <= 1e-12 * coord.abs().max(1.0),
                            "K[{a}{b}{c}]: frame {frame} vs coord {coord}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn koszul_frame_f_linear_in_first_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 3;
        let field = random_metric(&mut rng, n);
        let f = crate::symbolic::parse_expr("x0^2+1", n).unwrap();
        let x = random_field(&mut rng, n);
        let y = random_field(&mut rng, n);
        let z = random_field(&mut rng, n);
        let fx = x.scaled(&f);
        for _ in 0..10 {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = koszul_frame(&field, &p, &fx, &y, &z).unwrap();
            let rhs = eval_real(&f, &p).unwrap() * koszul_frame(&field, &p, &x, &y, &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn koszul_frame_constant_case() {
        let field = diag_field(&["-1", "1", "1"]);
        let x = VectorFieldExpr::constant(&[1.0, 2.0, -0.5]);
        let y = VectorFieldExpr::constant(&[0.0, 1.0, 3.0]);
        let z = VectorFieldExpr::constant(&[2.0, -1.0, 1.0]);
        assert_eq!(koszul_frame(&field, &[0.1, 0.2, 0.3], &x, &y, &z).unwrap(), 0.0);
    }

    #[test]
    fn lower_cov_deriv_flat_constant_fields() {
        let field = diag_field(&["1", "1", "1"]);
        let pg = evaluate_point(&field, &[0.5, 0.5, 0.5], TOL).unwrap();
        let x = VectorFieldExpr::constant(&[1.0, -2.0, 0.3]);
        let y = VectorFieldExpr::constant(&[0.7, 0.1, -1.0]);
        let d = lower_cov_deriv(&pg, &x, &y).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lower_cov_deriv_is_torsionless_and_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 3;
        let field = random_metric(&mut rng, n);
        let x = random_field(&mut rng, n);
        let y = random_field(&mut rng, n);
        let z = random_field(&mut rng, n);
        for _ in 0..10 {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pg = evaluate_point(&field, &p, TOL).unwrap();
            let fp = FramePoint::new(&field, &p).unwrap();

            let dxy = lower_cov_deriv(&pg, &x, &y).unwrap();
            let dyx = lower_cov_deriv(&pg, &y, &x).unwrap();
            let zv = z.values_at(&p).unwrap();

            // torsionless: (∇♭_X Y − ∇♭_Y X)(Z) = ⟨[X,Y],Z⟩
            let lhs: f64 = (0..n).map(|c| (dxy[c] - dyx[c]) * zv[c]).sum();
            let br: Vec<f64> = bracket(&x.jets_at(&p).unwrap(), &y.jets_at(&p).unwrap())
                .iter()
                .map(|c| c.v)
                .collect();
            let rhs = fp.pair_value(&br, &zv);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));

            // metric: (∇♭_X Y)(Z) + (∇♭_X Z)(Y) = X⟨Y,Z⟩
            let dxz = lower_cov_deriv(&pg, &x, &z).unwrap();
            let yv = y.values_at(&p).unwrap();
            let lhs: f64 = (0..n).map(|c| dxy[c] * zv[c] + dxz[c] * yv[c]).sum();
            let pair_yz = pairing_jet(&fp.gjets, &y.jets_at(&p).unwrap(), &z.jets_at(&p).unwrap());
            let xv = x.values_at(&p).unwrap();
            let rhs: f64 = (0..n).map(|a| xv[a] * pair_yz.grad_at(a)).sum();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));

            // agreement with the frame-wise Koszul form
            for c in 0..n {
                let k = koszul_frame(&field, &p, &x, &y, &VectorFieldExpr::coordinate(c, n))
                    .unwrap();
                assert!((dxy[c] - k).abs() < 1e-10 * k.abs().max(1.0));
            }
        }
    }

    #[test]
    fn radical_stationarity_classification() {
        // ∂g_00 vanishes on the degeneracy locus: stationary
        let field = diag_field(&["x0^2", "1", "1", "1"]);
        let pg = evaluate_point(&field, &[0.0, 1.0, 2.0, 3.0], TOL).unwrap();
        assert!(pg.flags.radical_stationary);
        assert!(!pg.flags.nondegenerate);

        // 𝒦_000 = 1/2 against the radical direction: not stationary
        let field = diag_field(&["x0", "1", "1", "1"]);
        let pg = evaluate_point(&field, &[0.0, 1.0, 2.0, 3.0], TOL).unwrap();
        assert!(!pg.flags.radical_stationary);
        assert!(is_radical_stationary(&pg, 0.6)); // residual is exactly 1/2

        // non-degenerate points are vacuously stationary
        let pg = evaluate_point(&field, &[2.0, 1.0, 2.0, 3.0], TOL).unwrap();
        assert!(pg.flags.radical_stationary);
        assert!(pg.flags.nondegenerate);
    }

    #[test]
    fn cov_deriv_oneform_commutes_with_lowering() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 3;
        let field = random_metric(&mut rng, n);
        let x = random_field(&mut rng, n);
        let y = random_field(&mut rng, n);
        let omega = field.lower(&y);
        for _ in 0..10 {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pg = evaluate_point(&field, &p, TOL).unwrap();
            let lhs = cov_deriv_oneform_at(&pg, &x, &omega, 1e-8).unwrap();
            let rhs = lower_cov_deriv(&pg, &x, &y).unwrap();
            for c in 0..n {
                assert!(
                    (lhs[c] - rhs[c]).abs() < 1e-9 * rhs[c].abs().max(1.0),
                    "slot {c}: {} vs {}",
                    lhs[c],
                    rhs[c]
                );
            }
        }
    }

    #[test]
    fn cov_deriv_oneform_flat_constant() {
        let field = diag_field(&["1", "1"]);
        let x = VectorFieldExpr::constant(&[1.0, 1.0]);
        let omega = VectorFieldExpr::constant(&[0.5, -2.0]);
        let d = cov_deriv_oneform(&field, &[0.0, 0.0], &x, &omega, 1e-8).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cov_deriv_oneform_rejects_bad_inputs() {
        // ω with a radical component at a degenerate point
        let field = diag_field(&["x0^2", "1"]);
        let x = VectorFieldExpr::constant(&[1.0, 0.0]);
        let omega = VectorFieldExpr::constant(&[1.0, 0.0]); // dx0 is not annihilator at x0=0
        let err = cov_deriv_oneform(&field, &[0.0, 1.0], &x, &omega, 1e-8).unwrap_err();
        assert!(matches!(err, GeometryError::NotRadicalAnnihilator { .. }));

        // non-stationary point
        let field = diag_field(&["x0", "1"]);
        let omega = VectorFieldExpr::constant(&[0.0, 1.0]);
        let err = cov_deriv_oneform(&field, &[0.0, 1.0], &x, &omega, 1e-8).unwrap_err();
        assert!(matches!(err, GeometryError::NotRadicalStationary { .. }));
    }

    #[test]
    fn metric_is_parallel() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        // non-degenerate random metric and the degenerate stationary family
        for field in [random_metric(&mut rng, 3), diag_field(&["x0^2", "1", "1"])] {
            let t = CoTensorField::from_metric(&field);
            for _ in 0..10 {
                let n = field.n();
                let x = random_field(&mut rng, n);
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let d = cov_deriv_tensor(&field, &p, &x, &t, 1e-8).unwrap();
                assert!(
                    d.max_abs() <= 1e-9,
                    "∇g residual {} at {p:?}",
                    d.max_abs()
                );
            }
        }
    }

    #[test]
    fn tensor_derivative_order_one_reduces_to_oneform() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let n = 3;
        let field = random_metric(&mut rng, n);
        let x = random_field(&mut rng, n);
        let omega = field.lower(&random_field(&mut rng, n));
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = CoTensorField::from_oneform(&omega);
        let a = cov_deriv_tensor(&field, &p, &x, &t, 1e-8).unwrap();
        let b = cov_deriv_oneform(&field, &p, &x, &omega, 1e-8).unwrap();
        for c in 0..n {
            assert!((a.get(&[c]) - b[c]).abs() < 1e-12 * b[c].abs().max(1.0));
        }
    }

    #[test]
    fn tensor_derivative_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 3;
        let field = random_metric(&mut rng, n);
        let x = random_field(&mut rng, n);
        let omega = field.lower(&random_field(&mut rng, n));
        let tau = field.lower(&random_field(&mut rng, n));
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let prod = CoTensorField::tensor_product(&omega, &tau);
        let lhs = cov_deriv_tensor(&field, &p, &x, &prod, 1e-8).unwrap();

        let d_omega = cov_deriv_oneform(&field, &p, &x, &omega, 1e-8).unwrap();
        let d_tau = cov_deriv_oneform(&field, &p, &x, &tau, 1e-8).unwrap();
        let ov = omega.values_at(&p).unwrap();
        let tv = tau.values_at(&p).unwrap();
        for a in 0..n {
            for b in 0..n {
                let rhs = d_omega[a] * tv[b] + ov[a] * d_tau[b];
                let got = lhs.get(&[a, b]);
                assert!(
                    (got - rhs).abs() < 1e-9 * rhs.abs().max(1.0),
                    "({a},{b}): {got} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn koszul_vanishes_against_radical_at_stationary_points() {
        // at radical-stationary points 𝒦(X,Y,W) = 𝒦(Y,X,W) = −𝒦(X,W,Y) = 0
        // for W in the radical
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let field = diag_field(&["x0^2", "1", "1", "1"]);
        let x = random_field(&mut rng, 4);
        let y = random_field(&mut rng, 4);
        let p = [0.0, 0.4, -0.7, 0.2];
        let pg = evaluate_point(&field, &p, TOL).unwrap();
        assert!(pg.flags.radical_stationary);
        let w_dir: Vec<f64> = pg.cm.radical_basis[0].clone();
        let w = VectorFieldExpr::constant(&w_dir);
        for (a, b) in [(&x, &y), (&y, &x)] {
            let k = koszul_frame(&field, &p, a, b, &w).unwrap();
            assert!(k.abs() < 1e-10, "K(X,Y,W) = {k}");
        }
        let k = koszul_frame(&field, &p, &x, &w, &y).unwrap();
        assert!(k.abs() < 1e-10, "K(X,W,Y) = {k}");
    }

    #[test]
    fn oneform_derivative_stays_annihilator_at_constant_signature() {
        // constant-signature degenerate space: ∇_X ω remains annihilator
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let field = diag_field(&["0", "-1", "1", "1"]);
        for _ in 0..10 {
            let x = random_field(&mut rng, 4);
            let omega = field.lower(&random_field(&mut rng, 4));
            let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pg = evaluate_point(&field, &p, TOL).unwrap();
            let d = cov_deriv_oneform_at(&pg, &x, &omega, 1e-8).unwrap();
            for w in &pg.cm.radical_basis {
                let pairing: f64 = d.iter().zip(w).map(|(a, b)| a * b).sum();
                assert!(pairing.abs() <= 1e-9, "residual {pairing}");
            }
        }
    }

    #[test]
    fn probe_smooth_degenerate_family() {
        // g = diag(x0^2, 1, 1, 1): h is constant along the axis
        let field = diag_field(&["x0^2", "1", "1", "1"]);
        let path = CurvePath::parse(&["s".into(), "0".into(), "0".into(), "0".into()]).unwrap();
        let report = semi_regular_probe(&field, &path, -1.0, 1.0, 201, 1e-9).unwrap();
        assert!(report.verdict, "{report:?}");
        assert!(report.rank_drop_samples >= 1);
        // h_(00)(00) = 𝒦_000 g•^00 𝒦_000 = x0^2/x0^2 = 1
        assert!((report.max_abs_h - 1.0).abs() < 1e-9, "{report:?}");
    }

    #[test]
    fn probe_divergent_family() {
        // g = diag(x0, 1, 1, 1): h ~ 1/(4 x0) diverges at the locus
        let field = diag_field(&["x0", "1", "1", "1"]);
        let path = CurvePath::parse(&["s".into(), "0".into(), "0".into(), "0".into()]).unwrap();
        let report = semi_regular_probe(&field, &path, -1.0, 1.0, 201, 1e-9).unwrap();
        assert!(!report.verdict, "{report:?}");
        assert!(!report.lipschitz_consistent);
    }

    #[test]
    fn probe_nondegenerate_is_trivially_consistent() {
        let field = diag_field(&["1", "exp(x0)", "1", "1"]);
        let path = CurvePath::parse(&["s".into(), "0".into(), "0".into(), "0".into()]).unwrap();
        let report = semi_regular_probe(&field, &path, -1.0, 1.0, 101, 1e-9).unwrap();
        assert!(report.verdict, "{report:?}");
        assert_eq!(report.rank_drop_samples, 0);
    }
}
