use criterion::{black_box, criterion_group, criterion_main, Criterion};

use semireg_core::catalog;
use semireg_core::curvature::riemann;
use semireg_core::einstein::densitized_einstein;
use semireg_core::geometry::evaluate_point;
use semireg_core::linalg::analyze_metric;
use semireg_core::{eval_jet, parse_expr, SymMatrix};

fn bench_symbolic(c: &mut Criterion) {
    let src = "sin(x0)^2 * exp(0.25*x1) + x2*x3 - 1/(x0^2 + 2)";
    c.bench_function("parse_expr", |b| {
        b.iter(|| parse_expr(black_box(src), 4).unwrap())
    });
    let ast = parse_expr(src, 4).unwrap();
    let p = [0.3, -0.7, 1.1, 0.5];
    c.bench_function("eval_jet_n4", |b| {
        b.iter(|| eval_jet(black_box(&ast), black_box(&p)).unwrap())
    });
}

fn bench_linalg(c: &mut Criterion) {
    let g = SymMatrix::from_fn(4, |i, j| {
        if i == j {
            (i as f64) - 1.5
        } else {
            0.1 * (i + j) as f64
        }
    });
    c.bench_function("analyze_metric_n4", |b| {
        b.iter(|| analyze_metric(black_box(&g), 1e-9).unwrap())
    });
}

fn bench_point_pipeline(c: &mut Criterion) {
    let base = catalog::semi_euclidean(0, 1, 3).unwrap();
    let field = catalog::conformal("x0", &base).unwrap();
    let p = [0.35, 0.1, -0.2, 0.6];

    c.bench_function("evaluate_point_conformal_n4", |b| {
        b.iter(|| evaluate_point(black_box(&field), black_box(&p), 1e-9).unwrap())
    });

    let pg = evaluate_point(&field, &p, 1e-9).unwrap();
    c.bench_function("riemann_n4", |b| b.iter(|| riemann(black_box(&pg))));

    let r = riemann(&pg);
    c.bench_function("densitized_einstein", |b| {
        b.iter(|| densitized_einstein(black_box(&r), &pg.g, &pg.cm).unwrap())
    });
}

fn bench_grid_scan(c: &mut Criterion) {
    let field = catalog::diagonal_family(&["x0^2", "1", "1", "1"]).unwrap();
    c.bench_function("scan_100_points_full_curvature", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..100 {
                let x0 = -1.0 + 2.0 * i as f64 / 99.0;
                let pg = evaluate_point(&field, &[x0, 0.0, 0.0, 0.0], 1e-9).unwrap();
                let r = riemann(&pg);
                acc += r.values.max_abs();
            }
            black_box(acc)
        })
    });
}

criterion_group!(
    benches,
    bench_symbolic,
    bench_linalg,
    bench_point_pipeline,
    bench_grid_scan
);
criterion_main!(benches);
