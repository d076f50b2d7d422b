use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use trajaccel::accel::fit_coefficients;
use trajaccel::driver::RunOptions;
use trajaccel::experiment::{build_operator, run_built, Acceleration, Method, MethodParams};
use trajaccel::linalg::{companion_roots, least_squares, Matrix};
use trajaccel::problems::{gen_problem, ProblemKind, ProblemSpec, Rng};
use trajaccel::prox::prox_nuclear;
use trajaccel::{Horizon, PredictorConfig};

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("dense");
    for q in [2usize, 6, 10] {
        let a = random(256, q, 1);
        let b = Rng::new(2).normals(256);
        g.bench_with_input(BenchmarkId::new("least_squares_256", q), &q, |bench, _| {
            bench.iter(|| least_squares(black_box(&a), black_box(&b)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fit_coefficients_256", q), &q, |bench, _| {
            bench.iter(|| fit_coefficients(black_box(&a), black_box(&b)).unwrap())
        });
        let coeffs: Vec<f64> = Rng::new(3).normals(q).iter().map(|x| 0.3 * x).collect();
        g.bench_with_input(BenchmarkId::new("companion_roots", q), &q, |bench, _| {
            bench.iter(|| companion_roots(black_box(&coeffs)).unwrap())
        });
    }
    for n in [10usize, 20, 40] {
        let m = random(n, n, 4);
        g.bench_with_input(BenchmarkId::new("prox_nuclear", n), &n, |bench, _| {
            bench.iter(|| prox_nuclear(black_box(&m), 0.5).unwrap())
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let mut spec = ProblemSpec::new(ProblemKind::Lasso, 1);
    spec.sparsity = 14;
    spec.noise = 0.01;
    let inst = gen_problem(&spec).unwrap();
    let built = build_operator(Method::Fb, &inst, &MethodParams::default()).unwrap();
    let z = Rng::new(5).normals(built.op.dim());
    c.bench_function("fb_step_lasso_48x128", |b| b.iter(|| built.op.apply(black_box(&z)).unwrap()));

    let opts = RunOptions {
        tol: 1e-8,
        observe: false,
        ..RunOptions::default()
    };
    let mut g = c.benchmark_group("lasso_fb_to_1e-8");
    g.sample_size(10);
    for (name, acc) in [
        ("plain", Acceleration::None),
        ("fista", Acceleration::Fista),
        ("a2fom_q4", Acceleration::A2fom(PredictorConfig::new(4, Horizon::Infinite))),
    ] {
        g.bench_function(name, |b| b.iter(|| run_built(&built, &acc, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, dense, solvers);
criterion_main!(benches);
