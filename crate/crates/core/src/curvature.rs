//! Riemann curvature for semi-regular metrics, Ricci and scalar
//! curvature, and a classical Levi-Civita cross-check for non-degenerate
//! points.
//!
//! The curvature never touches an inverse metric: it is assembled from
//! the Koszul components, their exact derivatives (from the Hessians of
//! `g`) and co-metric contractions,
//!
//! ```text
//! R_abcd = ∂_b 𝒦_acd − ∂_a 𝒦_bcd + g•^{st}(𝒦_bcs 𝒦_adt − 𝒦_acs 𝒦_bdt),
//! ```
//!
//! with the sign fixed so the unit sphere has sectional and scalar
//! curvature +1 and +2. `∂𝒦` comes from `∂∂g` symbolically-exactly,
//! never by finite-differencing `𝒦`, which keeps the symmetry residuals
//! at rounding level.

use thiserror::Error;

use crate::geometry::{
    bracket, evaluate_point, FramePoint, GeometryError, MetricField, PointGeometry,
    VectorFieldExpr,
};
use crate::linalg::{slot_radical_residual, CoMetric, CoTensor, SymMatrix};
use crate::symbolic::Jet2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("classical route refused: the metric is degenerate at this point")]
    DegeneratePoint,
    #[error("classical route refused: condition number {cond:.3e} exceeds 1e12")]
    IllConditioned { cond: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Residuals of the algebraic identities the Riemann tensor must
/// satisfy, in absolute terms; `norm` is `‖R‖∞` for scaling.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryResiduals {
    /// `R_abcd + R_bacd`
    pub antisym_first_pair: f64,
    /// `R_abcd + R_abdc`
    pub antisym_second_pair: f64,
    /// `R_abcd − R_cdab`
    pub pair_interchange: f64,
    /// `R_abcd + R_bcad + R_cabd`
    pub first_bianchi: f64,
    /// Largest contraction with a radical basis vector over all slots.
    pub radical_annihilation: f64,
    pub norm: f64,
}

impl SymmetryResiduals {
    /// Largest symmetry residual relative to `max(1, ‖R‖∞)`.
    pub fn max_relative(&self) -> f64 {
        let scale = self.norm.max(1.0);
        self.antisym_first_pair
            .max(self.antisym_second_pair)
            .max(self.pair_interchange)
            .max(self.first_bianchi)
            / scale
    }
}

/// The Riemann curvature tensor at one point, with its symmetry
/// residuals attached.
#[derive(Debug, Clone)]
pub struct RiemannTensor {
    pub values: CoTensor,
    pub point: Vec<f64>,
    pub residuals: SymmetryResiduals,
    /// Propagated from the point classification; the tensor is only
    /// guaranteed meaningful where this holds.
    pub radical_stationary: bool,
}

impl RiemannTensor {
    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.values.get(&[a, b, c, d])
    }
}

/// `∂_a 𝒦_bcd = ½(∂_a∂_b g_cd + ∂_a∂_c g_db − ∂_a∂_d g_bc)`, exact from
/// the stored Hessians.
fn koszul_derivative(pg: &PointGeometry) -> CoTensor {
    CoTensor::from_fn(pg.n(), 4, |idx| {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        0.5 * (pg.ddg.get(&[a, b, c, d]) + pg.ddg.get(&[a, c, d, b]) - pg.ddg.get(&[a, d, b, c]))
    })
}

fn symmetry_residuals(values: &CoTensor, cm: &CoMetric) -> SymmetryResiduals {
    let n = values.n();
    let mut r = SymmetryResiduals {
        antisym_first_pair: 0.0,
        antisym_second_pair: 0.0,
        pair_interchange: 0.0,
        first_bianchi: 0.0,
        radical_annihilation: 0.0,
        norm: values.max_abs(),
    };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = values.get(&[a, b, c, d]);
                    r.antisym_first_pair = r
                        .antisym_first_pair
                        .max((v + values.get(&[b, a, c, d])).abs());
                    r.antisym_second_pair = r
                        .antisym_second_pair
                        .max((v + values.get(&[a, b, d, c])).abs());
                    r.pair_interchange = r
                        .pair_interchange
                        .max((v - values.get(&[c, d, a, b])).abs());
                    r.first_bianchi = r.first_bianchi.max(
                        (v + values.get(&[b, c, a, d]) + values.get(&[c, a, b, d])).abs(),
                    );
                }
            }
        }
    }
    let scale = r.norm.max(1.0);
    for slot in 0..4 {
        r.radical_annihilation = r
            .radical_annihilation
            .max(slot_radical_residual(values, slot, cm) * scale);
    }
    r
}

/// Riemann curvature tensor from the coordinate formula. Meaningful at
/// radical-stationary points; elsewhere the tensor is still computed but
/// flagged via [`RiemannTensor::radical_stationary`].
pub fn riemann(pg: &PointGeometry) -> RiemannTensor {
    let n = pg.n();
    let dk = koszul_derivative(pg);
    let values = CoTensor::from_fn(n, 4, |idx| {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        let mut v = dk.get(&[b, a, c, d]) - dk.get(&[a, b, c, d]);
        for s in 0..n {
            for t in 0..n {
                let w = pg.cm.cometric.get(s, t);
                if w == 0.0 {
                    continue;
                }
                v += w
                    * (pg.koszul.get(&[b, c, s]) * pg.koszul.get(&[a, d, t])
                        - pg.koszul.get(&[a, c, s]) * pg.koszul.get(&[b, d, t]));
            }
        }
        v
    });
    let residuals = symmetry_residuals(&values, &pg.cm);
    RiemannTensor {
        values,
        point: pg.point.clone(),
        residuals,
        radical_stationary: pg.flags.radical_stationary,
    }
}

/// `R(X,Y,Z,T)` evaluated directly on vector fields from the Koszul
/// form, with jet derivatives of the scalar maps `p ↦ 𝒦(·,·,·)(p)` —
/// an independent path to cross-check [`riemann`]:
///
/// ```text
/// R(X,Y,Z,T) = Y𝒦(X,Z,T) − X𝒦(Y,Z,T) + 𝒦([X,Y],Z,T)
///              + ⟨𝒦(Y,Z,•),𝒦(X,T,•)⟩ − ⟨𝒦(X,Z,•),𝒦(Y,T,•)⟩
/// ```
pub fn riemann_fields(
    field: &MetricField,
    p: &[f64],
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    z: &VectorFieldExpr,
    t: &VectorFieldExpr,
    tol: f64,
) -> Result<f64, CurvatureError> {
    let n = field.n();
    let fp = FramePoint::new(field, p)?;
    let cm = crate::linalg::analyze_metric(
        &SymMatrix::from_fn(n, |i, j| fp.gjets[i * (i + 1) / 2 + j].value()),
        tol,
    )
    .map_err(GeometryError::from)?;

    let xj = x.jets_at(p).map_err(GeometryError::from)?;
    let yj = y.jets_at(p).map_err(GeometryError::from)?;
    let zj = z.jets_at(p).map_err(GeometryError::from)?;
    let tj = t.jets_at(p).map_err(GeometryError::from)?;
    let xv: Vec<f64> = xj.iter().map(Jet2::value).collect();
    let yv: Vec<f64> = yj.iter().map(Jet2::value).collect();

    let k_xzt = fp.koszul_d1(&xj, &zj, &tj);
    let k_yzt = fp.koszul_d1(&yj, &zj, &tj);
    let y_k_xzt: f64 = yv.iter().zip(&k_xzt.g).map(|(a, b)| a * b).sum();
    let x_k_yzt: f64 = xv.iter().zip(&k_yzt.g).map(|(a, b)| a * b).sum();

    let br_xy = bracket(&xj, &yj);
    let k_br = fp.koszul_value_d1(&br_xy, &zj, &tj);

    // covectors c ↦ 𝒦(·,·,∂_c)
    let coord_jets: Vec<Vec<Jet2>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|i| Jet2::constant(if i == c { 1.0 } else { 0.0 }).lifted(n))
                .collect()
        })
        .collect();
    let mut k_xz = vec![0.0; n];
    let mut k_yt = vec![0.0; n];
    let mut k_yz = vec![0.0; n];
    let mut k_xt = vec![0.0; n];
    for c in 0..n {
        k_xz[c] = fp.koszul_d1(&xj, &zj, &coord_jets[c]).v;
        k_yt[c] = fp.koszul_d1(&yj, &tj, &coord_jets[c]).v;
        k_yz[c] = fp.koszul_d1(&yj, &zj, &coord_jets[c]).v;
        k_xt[c] = fp.koszul_d1(&xj, &tj, &coord_jets[c]).v;
    }

    Ok(y_k_xzt - x_k_yzt + k_br + cm.co_pair(&k_yz, &k_xt) - cm.co_pair(&k_xz, &k_yt))
}

/// Ricci tensor `Ric_ab = g•^{st} R_asbt` (covariant contraction of the
/// Riemann tensor in its 2nd and 4th slots). Symmetric up to rounding.
pub fn ricci(r: &RiemannTensor, cm: &CoMetric) -> SymMatrix {
    let n = r.n();
    SymMatrix::from_fn(n, |a, b| {
        let mut acc = 0.0;
        for s in 0..n {
            for t in 0..n {
                let w = cm.cometric.get(s, t);
                if w != 0.0 {
                    acc += w * r.get(a, s, b, t);
                }
            }
        }
        acc
    })
}

/// Scalar curvature with the radical-annihilator diagnostic on the Ricci
/// tensor it contracts.
#[derive(Debug, Clone, Copy)]
pub struct ScalarCurvature {
    pub value: f64,
    /// Whether `Ric` passed the annihilator check at `tol`.
    pub ricci_annihilator: bool,
    pub residual: f64,
}

/// `s = g•^{ab} Ric_ab`.
pub fn scalar_curvature(ric: &SymMatrix, cm: &CoMetric, tol: f64) -> ScalarCurvature {
    let n = ric.n();
    let t = CoTensor::from_fn(n, 2, |idx| ric.get(idx[0], idx[1]));
    let residual = slot_radical_residual(&t, 0, cm).max(slot_radical_residual(&t, 1, cm));
    let mut value = 0.0;
    for a in 0..n {
        for b in 0..n {
            value += cm.cometric.get(a, b) * ric.get(a, b);
        }
    }
    ScalarCurvature {
        value,
        ricci_annihilator: residual <= tol,
        residual,
    }
}

/// Classical Levi-Civita route, valid only where `g` is invertible:
/// `Γ^c_ab = g^{cs} 𝒦_abs`, the standard curvature of the connection,
/// lowered with `g`. Independent of the co-metric path; used as an
/// oracle at non-degenerate points.
pub fn levi_civita_oracle(pg: &PointGeometry) -> Result<RiemannTensor, CurvatureError> {
    let n = pg.n();
    if !pg.flags.nondegenerate {
        return Err(CurvatureError::DegeneratePoint);
    }
    let cond = pg.cm.condition_number();
    if cond > 1e12 {
        return Err(CurvatureError::IllConditioned { cond });
    }
    let ginv = pg.cm.full_inverse();

    // Γ^c_ab
    let gamma = |c: usize, a: usize, b: usize| -> f64 {
        (0..n)
            .map(|s| ginv.get(c, s) * pg.koszul.get(&[a, b, s]))
            .sum()
    };
    // ∂_a g^{st} = −g^{sp} (∂_a g_pq) g^{qt}
    let dginv = CoTensor::from_fn(n, 3, |idx| {
        let (a, s, t) = (idx[0], idx[1], idx[2]);
        let mut acc = 0.0;
        for p in 0..n {
            for q in 0..n {
                acc -= ginv.get(s, p) * pg.dg.get(&[a, p, q]) * ginv.get(q, t);
            }
        }
        acc
    });
    let dk = koszul_derivative(pg);
    // ∂_a Γ^s_bc
    let dgamma = |a: usize, s: usize, b: usize, c: usize| -> f64 {
        (0..n)
            .map(|t| {
                dginv.get(&[a, s, t]) * pg.koszul.get(&[b, c, t])
                    + ginv.get(s, t) * dk.get(&[a, b, c, t])
            })
            .sum()
    };

    let values = CoTensor::from_fn(n, 4, |idx| {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        // ⟨(∇_a∇_b − ∇_b∇_a)∂_c, ∂_d⟩, then the sphere-positive sign
        let mut acc = 0.0;
        for s in 0..n {
            acc += pg.g.get(s, d) * (dgamma(a, s, b, c) - dgamma(b, s, a, c));
            for t in 0..n {
                acc += pg.g.get(t, d) * (gamma(s, b, c) * gamma(t, a, s) - gamma(s, a, c) * gamma(t, b, s));
            }
        }
        -acc
    });
    let residuals = symmetry_residuals(&values, &pg.cm);
    Ok(RiemannTensor {
        values,
        point: pg.point.clone(),
        residuals,
        radical_stationary: pg.flags.radical_stationary,
    })
}

/// Convenience: evaluate the point and its Riemann tensor in one step.
pub fn riemann_at(
    field: &MetricField,
    p: &[f64],
    tol: f64,
) -> Result<(PointGeometry, RiemannTensor), GeometryError> {
    let pg = evaluate_point(field, p, tol)?;
    let r = riemann(&pg);
    Ok((pg, r))
}

/// Divergence heuristic used by reports: a value is a divergence
/// candidate when it exceeds `1/tol` in magnitude.
pub fn divergence_candidate(value: f64, tol: f64) -> bool {
    !value.is_finite() || value.abs() > 1.0 / tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{parse_expr, Expr};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn diag_field(entries: &[&str]) -> MetricField {
        let n = entries.len();
        MetricField::diagonal(entries.iter().map(|s| parse_expr(s, n).unwrap()).collect())
    }

    fn sphere(radius: f64) -> MetricField {
        let r2 = Expr::constant(radius * radius);
        MetricField::diagonal(vec![
            r2.clone(),
            Expr::mul(r2, parse_expr("sin(x0)^2", 2).unwrap()),
        ])
    }

    #[test]
    fn constant_degenerate_metric_is_flat() {
        let field = diag_field(&["0", "-1", "1", "1"]);
        let (_, r) = riemann_at(&field, &[0.4, 1.0, -2.0, 0.7], TOL).unwrap();
        assert_eq!(r.values.max_abs(), 0.0);
        assert!(r.radical_stationary);
        assert_eq!(r.residuals.max_relative(), 0.0);
    }

    #[test]
    fn unit_sphere_curvature_closed_form() {
        let field = sphere(1.0);
        for &theta in &[0.4, 1.0, 1.9, 2.6] {
            let (pg, r) = riemann_at(&field, &[theta, 0.3], TOL).unwrap();
            let want = theta.sin().powi(2);
            assert!(
                (r.get(0, 1, 0, 1) - want).abs() < 1e-12 * want.max(1.0),
                "R_0101 = {} want {want}",
                r.get(0, 1, 0, 1)
            );
            let ric = ricci(&r, &pg.cm);
            assert!((ric.get(0, 0) - 1.0).abs() < 1e-11);
            assert!((ric.get(1, 1) - want).abs() < 1e-11);
            assert!(ric.get(0, 1).abs() < 1e-12);
            let s = scalar_curvature(&ric, &pg.cm, 1e-8);
            assert!(s.ricci_annihilator);
            assert!((s.value - 2.0).abs() < 1e-11, "s = {}", s.value);
        }
    }

    #[test]
    fn scaled_sphere_scalar_curvature() {
        let field = sphere(2.0);
        let (pg, r) = riemann_at(&field, &[1.1, 0.0], TOL).unwrap();
        let ric = ricci(&r, &pg.cm);
        let s = scalar_curvature(&ric, &pg.cm, 1e-8);
        assert!((s.value - 0.5).abs() < 1e-11, "s = {}", s.value);
    }

    #[test]
    fn oracle_agrees_on_sphere() {
        let field = sphere(1.0);
        let (pg, r) = riemann_at(&field, &[0.9, 0.2], TOL).unwrap();
        let oracle = levi_civita_oracle(&pg).unwrap();
        let n = 2;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let x = r.get(a, b, c, d);
                        let y = oracle.get(a, b, c, d);
                        assert!(
                            (x - y).abs() <= 1e-9 * x.abs().max(1.0),
                            "({a}{b}{c}{d}): {x} vs {y}"
                        );
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

    fn random_nondeg_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricField {
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

    #[test]
    fn oracle_agrees_on_random_nondegenerate_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let field = random_nondeg_metric(&mut rng, n);
            for _ in 0..5 {
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (pg, r) = riemann_at(&field, &p, TOL).unwrap();
                if !pg.flags.nondegenerate {
                    continue;
                }
                let oracle = levi_civita_oracle(&pg).unwrap();
                let scale = r.values.max_abs().max(1.0);
                let mut worst = 0.0f64;
                r.values.for_each(|idx, v| {
                    worst = worst.max((v - oracle.values.get(idx)).abs());
                });
                assert!(worst <= 1e-7 * scale, "disagreement {worst:.3e}");
            }
        }
    }

    #[test]
    fn oracle_refuses_degenerate_points() {
        let field = diag_field(&["x0^2", "1"]);
        let pg = evaluate_point(&field, &[0.0, 1.0], TOL).unwrap();
        assert!(matches!(
            levi_civita_oracle(&pg),
            Err(CurvatureError::DegeneratePoint)
        ));
    }

    #[test]
    fn field_formula_matches_coordinate_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 3;
        let field = random_nondeg_metric(&mut rng, n);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, r) = riemann_at(&field, &p, TOL).unwrap();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let via_fields = riemann_fields(
                            &field,
                            &p,
                            &VectorFieldExpr::coordinate(a, n),
                            &VectorFieldExpr::coordinate(b, n),
                            &VectorFieldExpr::coordinate(c, n),
                            &VectorFieldExpr::coordinate(d, n),
                            TOL,
                        )
                        .unwrap();
                        let coord = r.get(a, b, c, d);
                        assert!(
                            (via_fields - coord).abs() <= 1e-9 * coord.abs().max(1.0),
                            "({a}{b}{c}{d}): {via_fields} vs {coord}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn field_formula_antisymmetry_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 3;
        let field = random_nondeg_metric(&mut rng, n);
        let mk = |rng: &mut ChaCha8Rng| {
            VectorFieldExpr::new((0..n).map(|_| random_poly(rng, n, 1.0)).collect())
        };
        let x = mk(&mut rng);
        let y = mk(&mut rng);
        let z = mk(&mut rng);
        let t = mk(&mut rng);
        let f = parse_expr("x0^2+1", n).unwrap();
        for _ in 0..5 {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // X = Y forces zero
            let same = riemann_fields(&field, &p, &x, &x, &z, &t, TOL).unwrap();
            assert!(same.abs() < 1e-9);
            // f-linearity in the first argument
            let fx = x.scaled(&f);
            let lhs = riemann_fields(&field, &p, &fx, &y, &z, &t, TOL).unwrap();
            let rhs = crate::symbolic::eval_real(&f, &p).unwrap()
                * riemann_fields(&field, &p, &x, &y, &z, &t, TOL).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn degenerate_quadratic_family_is_flat_and_annihilating() {
        let field = diag_field(&["x0^2", "1", "1", "1"]);
        for &t in &[0.0, 0.3, -0.8] {
            let (pg, r) = riemann_at(&field, &[t, 0.0, 1.0, 2.0], TOL).unwrap();
            assert!(r.values.max_abs() < 1e-13, "R should vanish, got {}", r.values.max_abs());
            assert!(r.radical_stationary);
            if t == 0.0 {
                assert!(!pg.flags.nondegenerate);
                assert!(r.residuals.radical_annihilation < 1e-12);
            }
        }
    }

    #[test]
    fn conformal_minkowski_curvature_is_bounded_across_degeneracy() {
        // g = x0^2 η: R_0101 = 1 in this convention, constant in x0
        let eta = diag_field(&["-1", "1", "1", "1"]);
        let omega2 = parse_expr("x0^2", 4).unwrap();
        let field = eta.map_components(|c| Expr::mul(omega2.clone(), c.clone()));
        for &t in &[0.5, 0.01, -0.01, 1e-4, -1e-4] {
            let (pg, r) = riemann_at(&field, &[t, 0.2, 0.3, 0.4], TOL).unwrap();
            assert!(pg.flags.radical_stationary);
            assert!((r.get(0, 1, 0, 1) - 1.0).abs() < 1e-6, "R_0101 = {}", r.get(0, 1, 0, 1));
            assert!(r.residuals.max_relative() <= 1e-8);
        }
        // exactly on the degeneracy everything is radical (rank 0)
        let (pg, r) = riemann_at(&field, &[0.0, 0.2, 0.3, 0.4], TOL).unwrap();
        assert_eq!(pg.cm.rank, 0);
        assert!(r.radical_stationary);
        assert!(r.values.max_abs().is_finite());
    }

    #[test]
    fn ricci_divergence_candidate_detection() {
        assert!(!divergence_candidate(1e5, 1e-8));
        assert!(divergence_candidate(1e9, 1e-8));
        assert!(divergence_candidate(f64::INFINITY, 1e-8));
    }
}
