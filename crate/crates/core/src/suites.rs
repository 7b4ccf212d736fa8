//! Reusable verification suites: the Koszul identity battery, Riemann
//! symmetry residuals, the pseudo-inverse (Penrose) battery, the
//! Levi-Civita cross-check and radical-stationarity sampling.
//!
//! Each suite compares two independently evaluated sides of an identity
//! and reports the worst residual. The CLI `check` command and the
//! acceptance tests both run these.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::{levi_civita_oracle, riemann};
use crate::geometry::{
    bracket, evaluate_point, koszul_frame, pairing_jet, FramePoint, MetricField, VectorFieldExpr,
};
use crate::linalg::{analyze_metric, cocontract, CoTensor, SymMatrix};
use crate::symbolic::{eval_jet, Expr, Jet2};

/// Outcome of one suite: worst residual over all cases against the
/// tolerance it must stay under.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Number of (point, identity) cases actually evaluated.
    pub cases: usize,
    pub detail: String,
}

impl SuiteResult {
    fn from_residual(
        name: &'static str,
        max_residual: f64,
        tolerance: f64,
        cases: usize,
        detail: String,
    ) -> Self {
        SuiteResult {
            name,
            passed: max_residual <= tolerance && cases > 0,
            max_residual,
            tolerance,
            cases,
            detail,
        }
    }
}

/// Uniform sample points in `[lo, hi]^n`, deterministic in the seed.
pub fn sample_box(seed: u64, n: usize, lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(lo..hi)).collect())
        .collect()
}

/// Random polynomial of degree <= 2 with coefficients in `(-scale, scale)`.
pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Expr {
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

/// Random symmetric polynomial metric of degree <= 2. Diagonal dominance
/// keeps it non-degenerate on the unit box.
pub fn random_polynomial_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricField {
    let mut comps = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            comps.push(if i == j {
                Expr::add(Expr::constant(3.0), random_polynomial(rng, n, 0.3))
            } else {
                random_polynomial(rng, n, 0.15)
            });
        }
    }
    MetricField::from_exprs(comps, n)
}

pub fn random_vector_field(rng: &mut ChaCha8Rng, n: usize) -> VectorFieldExpr {
    VectorFieldExpr::new((0..n).map(|_| random_polynomial(rng, n, 1.0)).collect())
}

/// The eight Koszul-form identities, each evaluated with both sides
/// built independently (jet derivatives of pairings, exact brackets,
/// an independently assembled Lie derivative). Residuals are absolute.
pub fn koszul_identity_suite(
    field: &MetricField,
    points: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> SuiteResult {
    let n = field.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_identity = 0usize;
    let mut cases = 0usize;

    for p in points {
        let x = random_vector_field(&mut rng, n);
        let y = random_vector_field(&mut rng, n);
        let z = random_vector_field(&mut rng, n);
        let f = random_polynomial(&mut rng, n, 1.0);
        let a = rng.gen_range(-2.0..2.0f64);

        let k = |u: &VectorFieldExpr, v: &VectorFieldExpr, w: &VectorFieldExpr| {
            koszul_frame(field, p, u, v, w)
        };
        let (kxyz, g, fp) = match (
            k(&x, &y, &z),
            field.value_at(p),
            FramePoint::new(field, p),
        ) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => continue,
        };
        let xj = x.jets_at(p).unwrap();
        let yj = y.jets_at(p).unwrap();
        let zj = z.jets_at(p).unwrap();
        let xv: Vec<f64> = xj.iter().map(Jet2::value).collect();
        let yv: Vec<f64> = yj.iter().map(Jet2::value).collect();
        let zv: Vec<f64> = zj.iter().map(Jet2::value).collect();
        let fj = eval_jet(&f, p).unwrap();
        let fv = fj.value();
        let xf: f64 = (0..n).map(|i| xv[i] * fj.grad_at(i)).sum();
        let fx = x.scaled(&f);
        let fy = y.scaled(&f);
        let fz = z.scaled(&f);

        let mut check = |id: usize, residual: f64| {
            cases += 1;
            if residual.abs() > worst {
                worst = residual.abs();
                worst_identity = id;
            }
        };

        // 1: additivity and R-linearity in the first argument
        let ax_plus_y = x.scaled(&Expr::constant(a)).add(&y);
        check(
            1,
            k(&ax_plus_y, &z, &y).unwrap() - (a * k(&x, &z, &y).unwrap() + k(&y, &z, &y).unwrap()),
        );
        // 2: 𝒦(fX,Y,Z) = f 𝒦(X,Y,Z)
        check(2, k(&fx, &y, &z).unwrap() - fv * kxyz);
        // 3: Leibniz in the second argument
        let pair_yz = fp.pair_value(&yv, &zv);
        check(3, k(&x, &fy, &z).unwrap() - (fv * kxyz + xf * pair_yz));
        // 4: f-linearity in the third argument
        check(4, k(&x, &y, &fz).unwrap() - fv * kxyz);
        // 5: metric: 𝒦(X,Y,Z) + 𝒦(X,Z,Y) = X⟨Y,Z⟩
        let pyz_jet = pairing_jet(&fp.gjets, &yj, &zj);
        let x_pair: f64 = (0..n).map(|i| xv[i] * pyz_jet.grad_at(i)).sum();
        check(5, kxyz + k(&x, &z, &y).unwrap() - x_pair);
        // 6: torsionless: 𝒦(X,Y,Z) − 𝒦(Y,X,Z) = ⟨[X,Y],Z⟩
        let br_xy: Vec<f64> = bracket(&xj, &yj).iter().map(|c| c.v).collect();
        check(6, kxyz - k(&y, &x, &z).unwrap() - fp.pair_value(&br_xy, &zv));
        // 7: 𝒦(X,Y,Z) + 𝒦(Z,Y,X) = (L_Y g)(Z,X), Lie derivative built
        // from its own definition
        let pzx_jet = pairing_jet(&fp.gjets, &zj, &xj);
        let y_pair_zx: f64 = (0..n).map(|i| yv[i] * pzx_jet.grad_at(i)).sum();
        let br_yz: Vec<f64> = bracket(&yj, &zj).iter().map(|c| c.v).collect();
        let br_yx: Vec<f64> = bracket(&yj, &xj).iter().map(|c| c.v).collect();
        let lie = y_pair_zx - fp.pair_value(&br_yz, &xv) - fp.pair_value(&zv, &br_yx);
        check(7, kxyz + k(&z, &y, &x).unwrap() - lie);
        // 8: 𝒦(X,Y,Z) + 𝒦(Y,Z,X) = Y⟨Z,X⟩ + ⟨[X,Y],Z⟩
        check(
            8,
            kxyz + k(&y, &z, &x).unwrap() - (y_pair_zx + fp.pair_value(&br_xy, &zv)),
        );
        let _ = g;
    }

    SuiteResult::from_residual(
        "koszul-identities",
        worst,
        tol,
        cases,
        format!("worst identity: ({worst_identity})"),
    )
}

/// Riemann symmetry residuals (both antisymmetries, pair interchange,
/// first Bianchi) plus radical annihilation, relative to `max(1,‖R‖∞)`.
pub fn riemann_symmetry_suite(field: &MetricField, points: &[Vec<f64>], tol: f64) -> SuiteResult {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut skipped = 0;
    for p in points {
        let pg = match evaluate_point(field, p, 1e-9) {
            Ok(pg) => pg,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let r = riemann(&pg);
        let scale = r.residuals.norm.max(1.0);
        worst = worst.max(r.residuals.max_relative());
        worst = worst.max(r.residuals.radical_annihilation / scale);
        cases += 1;
    }
    SuiteResult::from_residual(
        "riemann-symmetries",
        worst,
        tol,
        cases,
        format!("{skipped} points skipped"),
    )
}

/// Pseudo-inverse battery on the metric sampled at the given points plus
/// seeded random symmetric matrices (including forced-rank-deficient
/// ones): Penrose conditions, `g•(u♭,v♭) = g(u,v)`, the rank-trace
/// identity, and annihilation of the radical by `g•`.
pub fn penrose_suite(
    field: Option<&MetricField>,
    points: &[Vec<f64>],
    seed: u64,
    random_matrices: usize,
    tol: f64,
) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut cases = 0;

    let mut matrices: Vec<SymMatrix> = Vec::new();
    if let Some(field) = field {
        for p in points {
            if let Ok(g) = field.value_at(p) {
                matrices.push(g);
            }
        }
    }
    for _ in 0..random_matrices {
        let n = rng.gen_range(2..=6);
        let diag: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.35) {
                    0.0
                } else {
                    let mag = rng.gen_range(0.1..10.0);
                    if rng.gen_bool(0.5) {
                        -mag
                    } else {
                        mag
                    }
                }
            })
            .collect();
        // random rotation built from Givens factors keeps this
        // dependency-free and deterministic
        let mut q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..(3 * n) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            if a == b {
                b = (b + 1) % n;
            }
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            for row in q.iter_mut() {
                let (ra, rb) = (row[a], row[b]);
                row[a] = c * ra - s * rb;
                row[b] = s * ra + c * rb;
            }
        }
        matrices.push(SymMatrix::from_fn(n, |i, j| {
            (0..n).map(|s| q[i][s] * diag[s] * q[j][s]).sum()
        }));
    }

    for g in &matrices {
        let n = g.n();
        let cm = match analyze_metric(g, 1e-9) {
            Ok(cm) => cm,
            Err(_) => continue,
        };
        let scale = g.max_abs().max(1.0);
        // Penrose: g g• g = g and g• g g• = g•
        for i in 0..n {
            for j in 0..n {
                let mut ggg = 0.0;
                let mut ppp = 0.0;
                for s in 0..n {
                    for t in 0..n {
                        ggg += g.get(i, s) * cm.cometric.get(s, t) * g.get(t, j);
                        ppp += cm.cometric.get(i, s) * g.get(s, t) * cm.cometric.get(t, j);
                    }
                }
                worst = worst.max((ggg - g.get(i, j)).abs() / scale);
                worst = worst.max((ppp - cm.cometric.get(i, j)).abs() / scale.max(cm.cometric.max_abs()));
            }
        }
        // g•(u♭, v♭) = g(u, v)
        for _ in 0..4 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let guv = g.pair(&u, &v);
            let co = cm.co_pair(&crate::linalg::flat(g, &u), &crate::linalg::flat(g, &v));
            worst = worst.max((guv - co).abs() / guv.abs().max(1.0));
        }
        // rank-trace identity
        let trace = cocontract(&CoTensor::from_matrix(g), 0, 1, &cm)
            .unwrap()
            .get(&[]);
        worst = worst.max((trace - cm.rank as f64).abs());
        cases += 1;
    }

    SuiteResult::from_residual(
        "pseudo-inverse",
        worst,
        tol,
        cases,
        format!("{} matrices", matrices.len()),
    )
}

/// Compares the co-metric Riemann route against the classical
/// Levi-Civita route at non-degenerate sampled points, relative to
/// `max(1,‖R‖∞)`.
pub fn oracle_suite(field: &MetricField, points: &[Vec<f64>], tol: f64) -> SuiteResult {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut skipped = 0;
    for p in points {
        let pg = match evaluate_point(field, p, 1e-9) {
            Ok(pg) if pg.flags.nondegenerate => pg,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let r = riemann(&pg);
        let oracle = match levi_civita_oracle(&pg) {
            Ok(o) => o,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let scale = r.values.max_abs().max(1.0);
        let mut diff = 0.0f64;
        r.values.for_each(|idx, v| {
            diff = diff.max((v - oracle.values.get(idx)).abs());
        });
        worst = worst.max(diff / scale);
        cases += 1;
    }
    SuiteResult::from_residual(
        "levi-civita-oracle",
        worst,
        tol,
        cases,
        format!("{skipped} degenerate/failed points skipped"),
    )
}

/// Samples radical stationarity; passes when every evaluable point is
/// radical-stationary. The degeneracy locus is probed explicitly by
/// including coordinate-axis zeros among the points.
pub fn radical_stationarity_suite(field: &MetricField, points: &[Vec<f64>], tol: f64) -> SuiteResult {
    let n = field.n();
    let mut all: Vec<Vec<f64>> = points.to_vec();
    all.push(vec![0.0; n]);
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in &all {
        match evaluate_point(field, p, tol) {
            Ok(pg) => {
                cases += 1;
                let residual =
                    crate::geometry::radical_stationarity_residual(&pg.koszul, &pg.cm);
                worst = worst.max(residual);
                if !pg.flags.radical_stationary {
                    failures += 1;
                }
            }
            Err(_) => continue,
        }
    }
    SuiteResult {
        name: "radical-stationarity",
        passed: failures == 0 && cases > 0,
        max_residual: worst,
        tolerance: tol,
        cases,
        detail: format!("{failures} non-stationary points"),
    }
}

/// ∇g = 0 at sampled radical-stationary points.
pub fn metric_parallel_suite(
    field: &MetricField,
    points: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> SuiteResult {
    let n = field.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = crate::geometry::CoTensorField::from_metric(field);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in points {
        let x = random_vector_field(&mut rng, n);
        match crate::geometry::cov_deriv_tensor(field, p, &x, &t, 1e-8) {
            Ok(d) => {
                worst = worst.max(d.max_abs());
                cases += 1;
            }
            Err(_) => continue,
        }
    }
    SuiteResult::from_residual("metric-parallel", worst, tol, cases, String::new())
}

/// Dual-path contraction check: `cocontract` against the orthogonal
/// frame sum on random radical-annihilator tensors.
pub fn contraction_dual_path_suite(seed: u64, tensors: usize, tol: f64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..tensors {
        let n = rng.gen_range(2..=5);
        let diag: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.4) {
                    0.0
                } else {
                    rng.gen_range(0.2..4.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 }
                }
            })
            .collect();
        let g = SymMatrix::diagonal(&diag);
        let cm = analyze_metric(&g, 1e-9).unwrap();
        // project a random tensor so both contracted slots annihilate
        // the radical: P = g• g
        let mut proj = vec![vec![0.0; n]; n];
        for (s, row) in proj.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = (0..n).map(|t| cm.cometric.get(s, t) * g.get(t, b)).sum();
            }
        }
        let order = rng.gen_range(2..=3);
        let raw = CoTensor::from_fn(n, order, |_| rng.gen_range(-2.0..2.0));
        let t = CoTensor::from_fn(n, order, |idx| {
            // slots 0 and 1 projected, the rest passed through
            let mut acc = 0.0;
            for s in 0..n {
                for u in 0..n {
                    let mut src = idx.to_vec();
                    src[0] = s;
                    src[1] = u;
                    acc += raw.get(&src) * proj[s][idx[0]] * proj[u][idx[1]];
                }
            }
            acc
        });
        let a = cocontract(&t, 0, 1, &cm).unwrap();
        let b = crate::linalg::cocontract_frame(
            &t,
            0,
            1,
            &cm.eigenvectors,
            &cm.eigenvalues,
            cm.zero_cut,
        )
        .unwrap();
        let scale = a.max_abs().max(1.0);
        let mut diff = 0.0f64;
        a.for_each(|idx, v| diff = diff.max((v - b.get(idx)).abs()));
        worst = worst.max(diff / scale);
        cases += 1;
    }
    SuiteResult::from_residual("contraction-dual-path", worst, tol, cases, String::new())
}
