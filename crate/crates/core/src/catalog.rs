//! Built-in parametrized metric families, used by the test suites and
//! the CLI. Every entry carries machine-checkable expected facts that
//! the engine re-derives on each test run; no stored value goes
//! unverified.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{CurvePath, MetricField};
use crate::symbolic::{eval_jet, eval_real, parse_expr, EvalError, Expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid signature counts: r={r}, s={s}, t={t} must sum to n >= 1")]
    InvalidCounts { r: usize, s: usize, t: usize },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}`: {message}")]
    BadParam { name: String, message: String },
    #[error("parameter `{name}`: {source}")]
    ParamParse { name: String, source: ParseError },
    #[error("sphere radius must be positive, got {0}")]
    BadRadius(f64),
}

/// Singular semi-Euclidean space: `diag(0 × r, −1 × s, +1 × t)`. The
/// radical is spanned by the first `r` coordinate directions.
pub fn semi_euclidean(r: usize, s: usize, t: usize) -> Result<MetricField, CatalogError> {
    let n = r + s + t;
    if n == 0 {
        return Err(CatalogError::InvalidCounts { r, s, t });
    }
    let mut entries = Vec::with_capacity(n);
    entries.extend(std::iter::repeat_with(|| Expr::constant(0.0)).take(r));
    entries.extend(std::iter::repeat_with(|| Expr::constant(-1.0)).take(s));
    entries.extend(std::iter::repeat_with(|| Expr::constant(1.0)).take(t));
    Ok(MetricField::diagonal(entries))
}

/// Diagonal metric `diag(g_00(x), .., g_{n-1,n-1}(x))` from expression
/// sources.
pub fn diagonal_family(exprs: &[&str]) -> Result<MetricField, CatalogError> {
    let n = exprs.len();
    let entries = exprs
        .iter()
        .enumerate()
        .map(|(i, src)| {
            parse_expr(src, n).map_err(|source| CatalogError::ParamParse {
                name: format!("g{i}"),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricField::diagonal(entries))
}

/// Conformal rescaling `g = Ω² g̃` as a symbolic component product. The
/// result degenerates exactly on the zero set of `Ω`; when the base is
/// non-degenerate the result is semi-regular there.
pub fn conformal(omega_src: &str, base: &MetricField) -> Result<MetricField, CatalogError> {
    let omega =
        parse_expr(omega_src, base.n()).map_err(|source| CatalogError::ParamParse {
            name: "omega".into(),
            source,
        })?;
    let omega2 = Expr::mul(omega.clone(), omega);
    Ok(base.map_components(|c| Expr::mul(omega2.clone(), c.clone())))
}

/// Round 2-sphere of the given radius: `diag(ρ², ρ² sin²(x0))`. The
/// standard non-degenerate target for the Levi-Civita cross-check.
pub fn sphere(radius: f64) -> Result<MetricField, CatalogError> {
    if radius <= 0.0 {
        return Err(CatalogError::BadRadius(radius));
    }
    let r2 = Expr::constant(radius * radius);
    Ok(MetricField::diagonal(vec![
        r2.clone(),
        Expr::mul(r2, parse_expr("sin(x0)^2", 2).unwrap()),
    ]))
}

/// The three diagonal-metric contraction sums whose smoothness
/// characterizes semi-regularity for diagonal metrics, sampled at one
/// point. Terms with `g_ss = 0` are omitted (extension by continuity).
/// Returns, maximized over the free index pair:
/// `Σ_s ∂_a g_ss ∂_b g_ss / g_ss`, `Σ_s ∂_s g_aa ∂_s g_bb / g_ss`,
/// `Σ_s ∂_a g_ss ∂_s g_bb / g_ss`.
pub fn diagonal_semiregularity_sums(
    entries: &[Expr],
    p: &[f64],
) -> Result<[f64; 3], EvalError> {
    let n = entries.len();
    let jets = entries
        .iter()
        .map(|e| eval_jet(e, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = [0.0f64; 3];
    for a in 0..n {
        for b in 0..n {
            let mut sums = [0.0f64; 3];
            for (s, js) in jets.iter().enumerate() {
                let gss = js.value();
                if gss == 0.0 {
                    continue;
                }
                sums[0] += js.grad_at(a) * js.grad_at(b) / gss;
                sums[1] += jets[a].grad_at(s) * jets[b].grad_at(s) / gss;
                sums[2] += js.grad_at(a) * jets[b].grad_at(s) / gss;
            }
            for k in 0..3 {
                out[k] = out[k].max(sums[k].abs());
            }
        }
    }
    Ok(out)
}

/// Sufficient-but-not-necessary diagnostic for diagonal metrics: the
/// largest ratio `|∂_b g_aa| / √|g_aa|` at `p` (taken as 0 where
/// `g_aa = 0`). Bounded ratios along a path certify the semi-regularity
/// sums are smooth; an unbounded ratio proves nothing by itself.
pub fn diagonal_sufficient_ratio(entries: &[Expr], p: &[f64]) -> Result<f64, EvalError> {
    let jets = entries
        .iter()
        .map(|e| eval_jet(e, p))
        .collect::<Result<Vec<_>, _>>()?;
    let n = entries.len();
    let mut worst = 0.0f64;
    for (_a, ja) in jets.iter().enumerate() {
        let gaa = ja.value();
        if gaa == 0.0 {
            continue;
        }
        for b in 0..n {
            worst = worst.max(ja.grad_at(b).abs() / gaa.abs().sqrt());
        }
    }
    Ok(worst)
}

/// A fact about a catalog entry that the engine re-derives in tests.
#[derive(Debug, Clone)]
pub enum Fact {
    /// `R ≡ 0` at sampled points (within 1e-14).
    Flat,
    /// `𝒦 ≡ 0` at sampled points (constant metrics).
    ZeroKoszul,
    /// The metric has this rank at every sampled point.
    ConstantRank(usize),
    /// Every sampled point is radical-stationary.
    RadicalStationary,
    /// Scalar curvature at sampled points (non-degenerate entries only).
    Scalar { value: f64, tol: f64 },
    /// The semi-regularity probe along coordinate `coord` (other
    /// coordinates fixed at the given values) reports this verdict.
    ProbeVerdict { coord: usize, verdict: bool },
    /// The point fails radical stationarity.
    NotRadicalStationaryAt(Vec<f64>),
}

pub struct ExpectedFact {
    pub description: &'static str,
    pub fact: Fact,
}

type Params = BTreeMap<String, String>;

pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// One line per accepted parameter: `name (default) — meaning`.
    pub params_help: &'static [&'static str],
    pub build: fn(&Params) -> Result<MetricField, CatalogError>,
    pub expected: fn() -> Vec<ExpectedFact>,
}

fn get_usize(params: &Params, name: &str, default: usize) -> Result<usize, CatalogError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| CatalogError::BadParam {
            name: name.into(),
            message: format!("`{v}` is not a non-negative integer"),
        }),
    }
}

fn get_f64(params: &Params, name: &str, default: f64) -> Result<f64, CatalogError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| CatalogError::BadParam {
            name: name.into(),
            message: format!("`{v}` is not a number"),
        }),
    }
}

fn build_semi_euclidean(params: &Params) -> Result<MetricField, CatalogError> {
    let r = get_usize(params, "r", 0)?;
    let s = get_usize(params, "s", 1)?;
    let t = get_usize(params, "t", 3)?;
    semi_euclidean(r, s, t)
}

fn build_sphere(params: &Params) -> Result<MetricField, CatalogError> {
    sphere(get_f64(params, "radius", 1.0)?)
}

fn build_diagonal(params: &Params) -> Result<MetricField, CatalogError> {
    // entries g0, g1, .. must be contiguous from 0
    let mut exprs = Vec::new();
    loop {
        match params.get(&format!("g{}", exprs.len())) {
            Some(src) => exprs.push(src.as_str()),
            None => break,
        }
    }
    if exprs.is_empty() {
        // 4-dimensional Euclidean by default
        exprs = vec!["1"; 4];
    }
    diagonal_family(&exprs)
}

fn build_conformal(params: &Params) -> Result<MetricField, CatalogError> {
    let omega = params.get("omega").map(String::as_str).unwrap_or("x0");
    let base = semi_euclidean(0, 1, 3)?;
    conformal(omega, &base)
}

fn probe_axis(verdict: bool) -> Vec<ExpectedFact> {
    vec![ExpectedFact {
        description: "semi-regularity probe along the x0 axis",
        fact: Fact::ProbeVerdict { coord: 0, verdict },
    }]
}

/// The built-in registry. Order is stable; `info` prints it as-is.
pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "semi_euclidean",
            summary: "constant diag(0 x r, -1 x s, +1 x t); degenerate for r > 0, flat",
            params_help: &[
                "r (0)  number of zero (radical) directions",
                "s (1)  number of -1 directions",
                "t (3)  number of +1 directions",
            ],
            build: build_semi_euclidean,
            expected: || {
                vec![
                    ExpectedFact {
                        description: "constant metric has vanishing Koszul form",
                        fact: Fact::ZeroKoszul,
                    },
                    ExpectedFact {
                        description: "constant metric is flat",
                        fact: Fact::Flat,
                    },
                    ExpectedFact {
                        description: "rank is s + t everywhere (Minkowski default: 4)",
                        fact: Fact::ConstantRank(4),
                    },
                    ExpectedFact {
                        description: "radical-stationary everywhere",
                        fact: Fact::RadicalStationary,
                    },
                ]
            },
        },
        CatalogEntry {
            name: "sphere",
            summary: "round 2-sphere diag(radius^2, radius^2 sin(x0)^2)",
            params_help: &["radius (1)  sphere radius, must be positive"],
            build: build_sphere,
            expected: || {
                vec![ExpectedFact {
                    description: "scalar curvature 2/radius^2 (default radius 1)",
                    fact: Fact::Scalar {
                        value: 2.0,
                        tol: 1e-8,
                    },
                }]
            },
        },
        CatalogEntry {
            name: "diagonal",
            summary: "diag(g0(x), g1(x), ..) from expressions",
            params_help: &[
                "g0, g1, ..  diagonal component expressions, contiguous from g0 (default: 1,1,1,1)",
            ],
            build: build_diagonal,
            expected: Vec::new,
        },
        CatalogEntry {
            name: "quadratic_axis",
            summary: "diag(x0^2, 1, 1, 1): degenerate on x0 = 0, semi-regular",
            params_help: &[],
            build: |_| diagonal_family(&["x0^2", "1", "1", "1"]),
            expected: || {
                let mut facts = vec![
                    ExpectedFact {
                        description: "radical-stationary everywhere (incl. x0 = 0)",
                        fact: Fact::RadicalStationary,
                    },
                    ExpectedFact {
                        description: "flat away from and across the degeneracy",
                        fact: Fact::Flat,
                    },
                ];
                facts.extend(probe_axis(true));
                facts
            },
        },
        CatalogEntry {
            name: "linear_axis",
            summary: "diag(x0, 1, 1, 1): degenerate on x0 = 0, NOT radical-stationary there",
            params_help: &[],
            build: |_| diagonal_family(&["x0", "1", "1", "1"]),
            expected: || {
                let mut facts = vec![ExpectedFact {
                    description: "fails radical stationarity at the origin",
                    fact: Fact::NotRadicalStationaryAt(vec![0.0, 0.0, 0.0, 0.0]),
                }];
                facts.extend(probe_axis(false));
                facts
            },
        },
        CatalogEntry {
            name: "conformal",
            summary: "omega^2 * Minkowski; degenerate exactly on omega = 0, semi-regular",
            params_help: &["omega (x0)  conformal factor expression"],
            build: build_conformal,
            expected: || {
                let mut facts = vec![ExpectedFact {
                    description: "radical-stationary everywhere",
                    fact: Fact::RadicalStationary,
                }];
                facts.extend(probe_axis(true));
                facts
            },
        },
    ]
}

/// Looks up and builds a catalog entry.
pub fn build(name: &str, params: &Params) -> Result<MetricField, CatalogError> {
    let entry = entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry(name.into()))?;
    (entry.build)(params)
}

/// Re-derives one expected fact with the engine; returns a human-readable
/// failure if the fact does not hold. Sample points are deterministic.
pub fn verify_fact(field: &MetricField, fact: &Fact, tol: f64) -> Result<(), String> {
    use rand::Rng;
    use rand::SeedableRng;
    let n = field.n();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xfac7);
    let mut points: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    points.push(vec![0.0; n]);

    let eval = |p: &[f64]| crate::geometry::evaluate_point(field, p, tol);
    match fact {
        Fact::Flat => {
            for p in &points {
                let pg = eval(p).map_err(|e| e.to_string())?;
                let r = crate::curvature::riemann(&pg);
                if r.values.max_abs() > 1e-14 {
                    return Err(format!("not flat at {p:?}: |R| = {}", r.values.max_abs()));
                }
            }
            Ok(())
        }
        Fact::ZeroKoszul => {
            for p in &points {
                let pg = eval(p).map_err(|e| e.to_string())?;
                if pg.koszul.max_abs() > 1e-14 {
                    return Err(format!("|K| = {} at {p:?}", pg.koszul.max_abs()));
                }
            }
            Ok(())
        }
        Fact::ConstantRank(rank) => {
            for p in &points {
                let pg = eval(p).map_err(|e| e.to_string())?;
                if pg.cm.rank != *rank {
                    return Err(format!("rank {} at {p:?}, expected {rank}", pg.cm.rank));
                }
            }
            Ok(())
        }
        Fact::RadicalStationary => {
            for p in &points {
                let pg = eval(p).map_err(|e| e.to_string())?;
                if !pg.flags.radical_stationary {
                    return Err(format!("not radical-stationary at {p:?}"));
                }
            }
            Ok(())
        }
        Fact::Scalar { value, tol: stol } => {
            for p in &points {
                let pg = match eval(p) {
                    Ok(pg) if pg.flags.nondegenerate => pg,
                    _ => continue,
                };
                let r = crate::curvature::riemann(&pg);
                let ric = crate::curvature::ricci(&r, &pg.cm);
                let s = crate::curvature::scalar_curvature(&ric, &pg.cm, 1e-8);
                if (s.value - value).abs() > *stol {
                    return Err(format!("scalar {} at {p:?}, expected {value}", s.value));
                }
            }
            Ok(())
        }
        Fact::ProbeVerdict { coord, verdict } => {
            let sources: Vec<String> = (0..n)
                .map(|i| if i == *coord { "s".into() } else { "0".into() })
                .collect();
            let path = CurvePath::parse(&sources).map_err(|e| e.to_string())?;
            let report =
                crate::geometry::semi_regular_probe(field, &path, -1.0, 1.0, 201, tol)
                    .map_err(|e| e.to_string())?;
            if report.verdict != *verdict {
                return Err(format!("probe verdict {:?}, expected {verdict}", report));
            }
            Ok(())
        }
        Fact::NotRadicalStationaryAt(p) => {
            let pg = eval(p).map_err(|e| e.to_string())?;
            if pg.flags.radical_stationary {
                return Err(format!("unexpectedly radical-stationary at {p:?}"));
            }
            Ok(())
        }
    }
}

/// Evaluates `Ω` at sampled points of a region and reports the most
/// negative value seen, if any. The conformal construction itself only
/// uses `Ω²`; a negative sample is worth a warning because the factor is
/// conventionally taken non-negative.
pub fn omega_negative_sample(
    omega: &Expr,
    points: impl IntoIterator<Item = Vec<f64>>,
) -> Result<Option<f64>, EvalError> {
    let mut worst: Option<f64> = None;
    for p in points {
        let v = eval_real(omega, &p)?;
        if v < 0.0 && worst.map_or(true, |w| v < w) {
            worst = Some(v);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{evaluate_point, koszul_frame, VectorFieldExpr};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    #[test]
    fn semi_euclidean_signatures() {
        // Minkowski
        let g = semi_euclidean(0, 1, 3).unwrap();
        let pg = evaluate_point(&g, &[0.0; 4], TOL).unwrap();
        assert_eq!(pg.cm.rank, 4);
        assert_eq!(pg.cm.signature.neg, 1);
        assert_eq!(pg.cm.signature.pos, 3);
        assert_eq!(pg.g.get(0, 0), -1.0);

        // degenerate
        let g = semi_euclidean(1, 1, 2).unwrap();
        let pg = evaluate_point(&g, &[0.0; 4], TOL).unwrap();
        assert_eq!(pg.cm.rank, 3);
        assert_eq!(pg.cm.signature.zero, 1);
        // radical is the first coordinate direction
        assert!((pg.cm.radical_basis[0][0].abs() - 1.0).abs() < 1e-12);

        // Euclidean
        let g = semi_euclidean(0, 0, 3).unwrap();
        let pg = evaluate_point(&g, &[0.0; 3], TOL).unwrap();
        assert_eq!(pg.cm.signature.pos, 3);

        assert!(semi_euclidean(0, 0, 0).is_err());
    }

    #[test]
    fn diagonal_family_examples() {
        let g = diagonal_family(&["x0^2", "1", "1", "1"]).unwrap();
        let pg = evaluate_point(&g, &[0.0, 0.0, 0.0, 0.0], TOL).unwrap();
        assert!(pg.flags.radical_stationary);

        let g = diagonal_family(&["x0", "1", "1", "1"]).unwrap();
        let pg = evaluate_point(&g, &[0.0, 0.0, 0.0, 0.0], TOL).unwrap();
        assert!(!pg.flags.radical_stationary);

        assert!(diagonal_family(&["x0 +", "1"]).is_err());
    }

    #[test]
    fn semiregularity_sums_closed_form() {
        // diag(x0^2, 1, 1, 1): Σ ∂_0 g_ss ∂_0 g_ss / g_ss = 4x0²/x0² = 4
        let entries: Vec<Expr> = ["x0^2", "1", "1", "1"]
            .iter()
            .map(|s| parse_expr(s, 4).unwrap())
            .collect();
        for &x in &[0.5, -0.25, 1.0] {
            let sums = diagonal_semiregularity_sums(&entries, &[x, 0.0, 0.0, 0.0]).unwrap();
            assert!((sums[0] - 4.0).abs() < 1e-12, "{sums:?}");
        }
        // diag(x0, 1, 1, 1): the same sum is 1/x0, divergent
        let entries: Vec<Expr> = ["x0", "1", "1", "1"]
            .iter()
            .map(|s| parse_expr(s, 4).unwrap())
            .collect();
        let near = diagonal_semiregularity_sums(&entries, &[1e-3, 0.0, 0.0, 0.0]).unwrap();
        assert!(near[0] > 100.0);
    }

    #[test]
    fn conformal_identity_omega_one() {
        let base = semi_euclidean(0, 1, 3).unwrap();
        let g = conformal("1", &base).unwrap();
        let p = [0.3, -0.2, 0.8, 0.1];
        let a = g.value_at(&p).unwrap();
        let b = base.value_at(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn conformal_koszul_transformation_law() {
        // 𝒦 = Ω²𝒦̃ + Ω[g̃(Y,Z)X + g̃(X,Z)Y − g̃(X,Y)Z](Ω), both sides
        // evaluated independently
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0f);
        let base = semi_euclidean(0, 1, 3).unwrap();
        let omega_src = "x0 + 0.2*x1";
        let g = conformal(omega_src, &base).unwrap();
        let omega = parse_expr(omega_src, 4).unwrap();

        let mk = |rng: &mut ChaCha8Rng| {
            VectorFieldExpr::new(
                (0..4)
                    .map(|_| {
                        let mut e = Expr::constant(rng.gen_range(-1.0..1.0));
                        for i in 0..4 {
                            e = Expr::add(
                                e,
                                Expr::mul(
                                    Expr::constant(rng.gen_range(-1.0..1.0)),
                                    Expr::var(i),
                                ),
                            );
                        }
                        e
                    })
                    .collect(),
            )
        };
        let x = mk(&mut rng);
        let y = mk(&mut rng);
        let z = mk(&mut rng);
        for _ in 0..10 {
            let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = koszul_frame(&g, &p, &x, &y, &z).unwrap();

            let om = eval_jet(&omega, &p).unwrap();
            let gb = base.value_at(&p).unwrap();
            let xv = x.values_at(&p).unwrap();
            let yv = y.values_at(&p).unwrap();
            let zv = z.values_at(&p).unwrap();
            let dir = |v: &[f64]| -> f64 { (0..4).map(|a| v[a] * om.grad_at(a)).sum() };
            let k_base = koszul_frame(&base, &p, &x, &y, &z).unwrap();
            let rhs = om.value() * om.value() * k_base
                + om.value()
                    * (gb.pair(&yv, &zv) * dir(&xv) + gb.pair(&xv, &zv) * dir(&yv)
                        - gb.pair(&xv, &yv) * dir(&zv));
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0),
                "{lhs} vs {rhs} at {p:?}"
            );
        }
    }

    #[test]
    fn sphere_parameters() {
        assert!(sphere(0.0).is_err());
        assert!(sphere(-1.0).is_err());
        let g = sphere(2.0).unwrap();
        let v = g.value_at(&[1.0, 0.5]).unwrap();
        assert_eq!(v.get(0, 0), 4.0);
        assert!((v.get(1, 1) - 4.0 * 1.0f64.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn registry_builds_and_facts_hold() {
        for entry in entries() {
            let field = (entry.build)(&BTreeMap::new())
                .unwrap_or_else(|e| panic!("{} failed to build: {e}", entry.name));
            for expected in (entry.expected)() {
                verify_fact(&field, &expected.fact, TOL).unwrap_or_else(|msg| {
                    panic!("{}: fact `{}` failed: {msg}", entry.name, expected.description)
                });
            }
        }
    }

    #[test]
    fn registry_rejects_unknown_names() {
        assert!(matches!(
            build("nosuch", &BTreeMap::new()),
            Err(CatalogError::UnknownEntry(_))
        ));
    }

    #[test]
    fn omega_sign_sampling() {
        let omega = parse_expr("x0", 1).unwrap();
        let worst = omega_negative_sample(&omega, vec![vec![0.5], vec![-0.25]]).unwrap();
        assert_eq!(worst, Some(-0.25));
        let omega = parse_expr("x0^2", 1).unwrap();
        let worst = omega_negative_sample(&omega, vec![vec![0.5], vec![-0.25]]).unwrap();
        assert_eq!(worst, None);
    }
}
