//! Acceptance criteria, one line per criterion.
//!
//! Run with `cargo test -p trajaccel-cli --test acceptance -- --nocapture` to see
//! the report.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use trajaccel::accel::{
    companion, drive_with, fit_coefficients, mpe, predict_finite, predict_infinite, rre,
    CoefficientSource, FitResult, Gain, Horizon, LeastSquaresFit, Prediction, PredictorConfig,
    A2Fom,
};
use trajaccel::diagnostics::{
    angle_between, classify_trace, convolution_error_bounds, prediction_error_bounds, ClassifyConfig, TrajectoryType,
};
use trajaccel::driver::{RunOptions, RunOutcome};
use trajaccel::experiment::{build_operator, run_built, Acceleration, Method, MethodParams};
use trajaccel::lab::{
    composite_rotation_bounds, elliptical_matrix, elliptical_rotation, make_type1, make_type2,
    make_type3, pd_leading_block, rotation, run_linear,
};
use trajaccel::linalg::{norm, solve_linear, sub, Matrix};
use trajaccel::problems::{gen_problem, random_orthogonal, ProblemKind, ProblemSpec, Rng};
use trajaccel::splitting::AffineOperator;
use trajaccel::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Simulates `x_k = R x_{k-1}` and returns (ratio range, angle range).
fn simulate_ellipse(r: &Matrix, steps: usize) -> ((f64, f64), (f64, f64)) {
    let mut x = vec![1.0, 0.3];
    let (mut rlo, mut rhi, mut alo, mut ahi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for _ in 0..steps {
        let y = r.matvec(&x);
        let ratio = norm(&y).powi(2) / norm(&x).powi(2);
        let ang = angle_between(&x, &y).unwrap();
        rlo = rlo.min(ratio);
        rhi = rhi.max(ratio);
        alo = alo.min(ang);
        ahi = ahi.max(ang);
        let n = norm(&y);
        x = y.iter().map(|v| v / n).collect();
    }
    ((rlo, rhi), (alo, ahi))
}

const SLACK: f64 = 1e-9;

fn inside(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo - SLACK && x <= hi + SLACK
}

fn c1_elliptical_bounds() -> Outcome {
    let phi = PI / 30.01;
    let e = elliptical_rotation(0.5, phi).unwrap();
    let want_ratio = (0.5679, 1.7608);
    let want_chi = (0.1980, 0.7564);
    let got_ratio = (round4(e.ratio_interval.0), round4(e.ratio_interval.1));
    let got_chi = (round4(e.chi_interval.0), round4(e.chi_interval.1));
    let values = got_ratio == want_ratio && got_chi == want_chi;
    let (sr, sa) = simulate_ellipse(&e.r, 10_000);
    let sim = inside(sr.0, e.ratio_interval)
        && inside(sr.1, e.ratio_interval)
        && inside(sa.0, e.chi_interval)
        && inside(sa.1, e.chi_interval);
    let alt = elliptical_rotation(0.5, PI / 8.01).unwrap();
    outcome(
        values && sim,
        format!(
            "phi=pi/30.01 gives ratio [{:.4}, {:.4}] chi [{:.4}, {:.4}] (expected {want_ratio:?} {want_chi:?}); \
             simulation inside: {sim}; phi=pi/8.01 gives ratio [{:.4}, {:.4}] chi [{:.4}, {:.4}]",
            got_ratio.0, got_ratio.1, got_chi.0, got_chi.1,
            alt.ratio_interval.0, alt.ratio_interval.1, alt.chi_interval.0, alt.chi_interval.1
        ),
    )
}

fn c2_composite_rotation() -> Outcome {
    let psi = PI / 3.0;
    let check = |phi: f64| {
        let b = composite_rotation_bounds(psi, phi, 0.5).unwrap();
        let m = rotation(psi).matmul(&elliptical_matrix(0.5, phi));
        let (_, sa) = simulate_ellipse(&m, 10_000);
        (b, inside(sa.0, b) && inside(sa.1, b))
    };
    let (b, sim) = check(PI / 30.01);
    let values = (round4(b.0), round4(b.1)) == (0.2908, 0.8492);
    let (alt, _) = check(PI / 8.01);
    outcome(
        values && sim,
        format!(
            "phi=pi/30.01 gives [{:.4}, {:.4}] (expected [0.2908, 0.8492]); simulation inside: {sim}; \
             phi=pi/8.01 gives [{:.4}, {:.4}]",
            b.0, b.1, alt.0, alt.1
        ),
    )
}

fn c3_type1_rate() -> Outcome {
    let sig = [0.99, 0.99 * 0.98, 0.99 * 0.9];
    let lab = make_type1(&sig, 11).unwrap();
    let v0 = Rng::new(12).normals(3);
    let run = run_linear(&lab.m, &[0.0; 3], &v0, 400).unwrap();
    // (k, ln(1 - cos theta_k)) for k = 100..=400
    let pts: Vec<(f64, f64)> = run
        .trace
        .iter()
        .zip(&run.one_minus_cos)
        .filter(|(r, _)| (100..=400).contains(&r.k))
        .filter_map(|(r, o)| o.filter(|v| *v > 0.0).map(|v| (r.k as f64, v.ln())))
        .collect();
    let slope = ls_slope(&pts);
    let want = 2.0 * 0.98f64.ln();
    let rel = (slope - want).abs() / want.abs();
    outcome(
        rel <= 0.05 && pts.len() > 250,
        format!("slope {slope:.6} vs {want:.6} (relative error {rel:.4}, {} points)", pts.len()),
    )
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c4_type2_limit() -> Outcome {
    let psi: f64 = 0.05;
    let modulus = 0.99;
    let lab = make_type2(psi, modulus, &[0.96 * modulus, 0.5 * modulus], 21).unwrap();
    let v0 = Rng::new(22).normals(4);
    let run = run_linear(&lab.m, &[0.0; 4], &v0, 400).unwrap();
    let worst = run
        .trace
        .iter()
        .filter(|r| r.k >= 300)
        .map(|r| (r.cos_theta.unwrap() - psi.cos()).abs())
        .fold(0.0f64, f64::max);
    outcome(
        worst <= 1e-6,
        format!("max |cos theta_k - cos(0.05)| over k in [300, 400] = {worst:.3e}"),
    )
}

fn c5_type3_containment() -> Outcome {
    let (a, b, c) = (0.95, 0.75, 0.35);
    let d = 0.99 * (a * b + c * c as f64).sqrt();
    let lab = make_type3(&[a, d], &[b, d], &[c, 0.0], 1.0, 1.0, 31).unwrap();
    let interval = lab.predicted.angle_interval.unwrap();
    let v0 = lab.leading_vector(&[1.0, 0.4]);
    let run = run_linear(&lab.m, &[0.0; 4], &v0, 10_000).unwrap();
    let thetas: Vec<f64> = run
        .trace
        .iter()
        .zip(&run.theta)
        .filter(|(r, _)| r.k >= 50)
        .filter_map(|(_, t)| *t)
        .collect();
    let bad = thetas.iter().filter(|t| !inside(**t, interval)).count();
    let lo = thetas.iter().cloned().fold(f64::MAX, f64::min);
    let hi = thetas.iter().cloned().fold(f64::MIN, f64::max);
    outcome(
        bad == 0 && thetas.len() >= 9_000,
        format!(
            "interval [{:.6}, {:.6}], observed [{lo:.6}, {hi:.6}] over {} iterates, {bad} outside",
            interval.0,
            interval.1,
            thetas.len()
        ),
    )
}

/// Exact-linear sequence `z_{k+1} = M z_k + d` with distinct real eigenvalues.
struct LinearCase {
    m: Matrix,
    z: Vec<Vec<f64>>,
    z_star: Vec<f64>,
}

fn linear_case(seed: u64, steps: usize) -> LinearCase {
    let mut rng = Rng::new(seed);
    let n = 2 + rng.below(5);
    // eigenvalues on a grid in (-0.9, 0.9), at least 0.15 apart
    let mut grid: Vec<f64> = (0..12).map(|i| -0.85 + 0.15 * i as f64).collect();
    let mut eig = Vec::new();
    for _ in 0..n {
        let j = rng.below(grid.len());
        eig.push(grid.remove(j));
    }
    let q = random_orthogonal(n, &mut rng);
    let g = Matrix::new(n, n, rng.normals(n * n)).unwrap();
    let p = q.add(&g.scale(0.2));
    let pinv_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solve_linear(&p, &e).unwrap()
        })
        .collect();
    let pinv = Matrix::from_columns(&pinv_cols);
    let m = p.matmul(&Matrix::from_diag(&eig)).matmul(&pinv);
    let d = rng.normals(n);
    let z_star = solve_linear(&Matrix::identity(n).sub(&m), &d).unwrap();
    let mut z = vec![rng.normals(n)];
    for _ in 0..steps {
        let last = z.last().unwrap();
        let next: Vec<f64> = m.matvec(last).iter().zip(&d).map(|(a, b)| a + b).collect();
        z.push(next);
    }
    LinearCase { m, z, z_star }
}

/// Difference matrices at index `k`: (V_{k-1}, v_k, V_k) with `q` columns.
fn windows(z: &[Vec<f64>], k: usize, q: usize) -> (Matrix, Vec<f64>, Matrix) {
    let v = |j: usize| sub(&z[j], &z[j - 1]);
    let prev = Matrix::from_columns(&(1..=q).map(|i| v(k - i)).collect::<Vec<_>>());
    let cur = Matrix::from_columns(&(0..q).map(|i| v(k - i)).collect::<Vec<_>>());
    (prev, v(k), cur)
}

fn c6_minimal_polynomial() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for seed in 0..20 {
        let case = linear_case(600 + seed, 40);
        let n = case.m.rows();
        let q = n;
        let k = q + 1;
        let (prev, vk, cur) = windows(&case.z, k, q);
        let fit = fit_coefficients(&prev, &vk).unwrap();
        let pred = predict_infinite(&case.z[k - 1], &cur, &companion(&fit.c)).unwrap();
        let e_a = match pred {
            Prediction::Point(p) => norm(&sub(&p, &case.z_star)),
            _ => f64::INFINITY,
        };
        let iter = &case.z[..q + 2];
        let e_m = match mpe(iter).unwrap() {
            Prediction::Point(p) => norm(&sub(&p, &case.z_star)),
            _ => f64::INFINITY,
        };
        let e_r = norm(&sub(&rre(iter).unwrap(), &case.z_star));
        worst = (worst.0.max(e_a), worst.1.max(e_m), worst.2.max(e_r));
        ok &= e_a <= 1e-8 && e_m <= 1e-8 && e_r <= 1e-8;
    }
    outcome(
        ok,
        format!(
            "20 sequences: max error predictor {:.2e}, MPE {:.2e}, RRE {:.2e}",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c7_prediction_error() -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    let mut tightest = f64::MAX;
    let mut conv_violations = 0;
    for seed in 0..20 {
        let case = linear_case(600 + seed, 60);
        let n = case.m.rows();
        let q = n - 1;
        let k = q + 6;
        let (prev, vk, cur) = windows(&case.z, k, q);
        let fit = fit_coefficients(&prev, &vk).unwrap();
        let cm = companion(&fit.c);
        let bounds = prediction_error_bounds(
            &case.m,
            &case.z[k],
            &case.z[k - 1],
            &case.z_star,
            fit.epsilon,
            &fit.c,
            50,
        )
        .unwrap();
        let conv =
            convolution_error_bounds(&case.m, &case.z[k], &case.z_star, fit.epsilon, &fit.c, 50)
                .unwrap();
        for s in 1..=50 {
            let p = predict_finite(&case.z[k], &cur, &cm, s).unwrap();
            let err = norm(&sub(&p, &case.z_star));
            checked += 1;
            if err > bounds[s - 1] * (1.0 + 1e-12) {
                violations += 1;
            }
            if err > conv[s - 1] * (1.0 + 1e-12) {
                conv_violations += 1;
            }
            tightest = tightest.min(bounds[s - 1] / err.max(f64::MIN_POSITIVE));
        }
    }
    outcome(
        violations == 0,
        format!(
            "{checked} (instance, s) pairs, {violations} violations, smallest bound/error ratio {tightest:.3}; \
             convolution bound violations: {conv_violations}"
        ),
    )
}

fn dr_two_lines(alpha: f64, acc: &Acceleration, tol: f64) -> trajaccel::Result<RunOutcome> {
    let mut spec = ProblemSpec::new(ProblemKind::Feasibility2Lines, 77);
    spec.alpha = alpha;
    let inst = gen_problem(&spec)?;
    let built = build_operator(Method::Dr, &inst, &MethodParams::default())?;
    let opts = RunOptions {
        tol,
        max_iter: 100_000,
        ..RunOptions::default()
    };
    Ok(run_built(&built, acc, &opts)?.run)
}

fn c8_friedrichs() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let run = dr_two_lines(alpha, &Acceleration::None, 1e-13).unwrap();
        let tail = &run.trace[run.trace.len() / 2..];
        let cos_err = tail
            .iter()
            .filter_map(|r| r.cos_theta)
            .map(|c| (c - alpha.cos()).abs())
            .fold(0.0f64, f64::max);
        let pts: Vec<(f64, f64)> = tail.iter().map(|r| (r.k as f64, r.v_norm.ln())).collect();
        let rate = ls_slope(&pts).exp();
        let good = cos_err <= 1e-4 && (rate - alpha.cos()).abs() <= 0.02;
        ok &= good;
        parts.push(format!(
            "alpha={alpha:.4}: max|cos-cos a|={cos_err:.1e}, rate {rate:.4} vs {:.4}",
            alpha.cos()
        ));
    }
    outcome(ok, parts.join("; "))
}

fn iterations(r: trajaccel::Result<RunOutcome>) -> Option<usize> {
    r.ok().filter(|o| o.converged).map(|o| o.iterations)
}

fn c9_inertial_ordering() -> Outcome {
    let alpha = PI / 12.0;
    let tol = 1e-8;
    let idr = iterations(dr_two_lines(alpha, &Acceleration::Inertial { a: 0.3, b: 0.0 }, tol));
    let dr = iterations(dr_two_lines(alpha, &Acceleration::None, tol));
    let three = iterations(dr_two_lines(alpha, &Acceleration::Inertial { a: 0.6, b: -0.3 }, tol));
    let a2 = iterations(dr_two_lines(
        alpha,
        &Acceleration::A2fom(PredictorConfig::new(2, Horizon::Infinite)),
        tol,
    ));
    let ordered = match (idr, dr, three, a2) {
        (Some(a), Some(b), Some(c), Some(d)) => a > b && b > c && c > d,
        _ => false,
    };
    outcome(
        ordered,
        format!("iDR(0.3) {idr:?} > DR {dr:?} > 3-point {three:?} > a2dr {a2:?}"),
    )
}

fn lasso_instance(seed: u64) -> trajaccel::problems::ProblemInstance {
    let mut spec = ProblemSpec::new(ProblemKind::Lasso, seed);
    spec.sparsity = 14;
    spec.noise = 0.01;
    spec.mu = 1.0;
    gen_problem(&spec).unwrap()
}

fn c10_fb_identification() -> Outcome {
    let inst = lasso_instance(1);
    let built = build_operator(Method::Fb, &inst, &MethodParams::default()).unwrap();
    let opts = RunOptions {
        tol: 1e-12,
        ..RunOptions::default()
    };
    let run = run_built(&built, &Acceleration::None, &opts).unwrap().run;
    let sup: Vec<usize> = run.trace.iter().map(|r| r.support_size.unwrap()).collect();
    let last = *sup.last().unwrap();
    // first k after which the support size never changes
    let k_id = sup.iter().rposition(|&s| s != last).map_or(0, |i| i + 1);
    let tail: Vec<f64> = run.trace[k_id..].iter().filter_map(|r| r.cos_theta).collect();
    let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    let finite = run.converged && k_id < run.trace.len() / 2;
    outcome(
        finite && mean > 0.999,
        format!(
            "support settles at {last} from k = {} of {}; tail mean cos theta = {mean:.6}",
            k_id + 1,
            run.iterations
        ),
    )
}

fn c11_dr_gamma() -> Outcome {
    let inst = lasso_instance(1);
    let opts = RunOptions {
        tol: 1e-10,
        max_iter: 20_000,
        ..RunOptions::default()
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, want_line) in [(0.9, true), (10.0, false)] {
        let params = MethodParams {
            gamma_over_l: Some(c),
            ..MethodParams::default()
        };
        let built = build_operator(Method::Dr, &inst, &params).unwrap();
        let plain = run_built(&built, &Acceleration::None, &opts).unwrap().run;
        let ty = classify_trace(&plain.trace, opts.tol, &ClassifyConfig::default());
        let inertial = run_built(&built, &Acceleration::Inertial { a: 0.7, b: 0.0 }, &opts);
        let converged = matches!(&inertial, Ok(o) if o.run.converged);
        let good = if want_line {
            ty == TrajectoryType::TypeI && converged
        } else {
            ty != TrajectoryType::TypeI && !converged
        };
        ok &= good;
        let desc = match &inertial {
            Ok(o) if o.run.converged => format!("converged in {}", o.run.iterations),
            Ok(o) => format!("stalled at |v| = {:.2e} after {}", o.run.final_residual(), o.run.iterations),
            Err(Error::Divergence { k, .. }) => format!("diverged at k = {k}"),
            Err(e) => format!("error {e}"),
        };
        parts.push(format!("gamma={c}/|A|^2: {} plain, a=0.7 {desc}", ty.label()));
    }
    outcome(ok, parts.join("; "))
}

fn c12_acceleration() -> Outcome {
    let opts = RunOptions {
        tol: 1e-8,
        max_iter: 100_000,
        observe: false,
        ..RunOptions::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let cases = [
        (ProblemKind::Lasso, Method::Fb),
        (ProblemKind::BasisPursuit, Method::Dr),
        (ProblemKind::PdL1Affine, Method::Pd),
        (ProblemKind::PcpToy, Method::Gfb),
    ];
    for (kind, method) in cases {
        let mut spec = ProblemSpec::new(kind, 1);
        match kind {
            ProblemKind::Lasso => {
                spec.sparsity = 14;
                spec.noise = 0.01;
            }
            ProblemKind::PcpToy => {
                spec.shape = Some((20, 20));
                spec.sparsity = 20;
            }
            _ => {}
        }
        let inst = gen_problem(&spec).unwrap();
        let built = build_operator(method, &inst, &MethodParams::default()).unwrap();
        let plain = run_built(&built, &Acceleration::None, &opts).unwrap().run;
        let acc = run_built(&built, &Acceleration::A2fom(PredictorConfig::default()), &opts)
            .unwrap()
            .run;
        let ratio = acc.iterations as f64 / plain.iterations as f64;
        ok &= plain.converged && acc.converged && ratio <= 0.6;
        parts.push(format!(
            "{}/{}: {} vs {} ({ratio:.2})",
            kind.label(),
            method.label(),
            acc.iterations,
            plain.iterations
        ));
    }
    outcome(ok, parts.join("; "))
}

/// Returns deliberately wrong coefficients with a stable companion matrix.
struct Adversary {
    rng: Rng,
}

impl CoefficientSource for Adversary {
    fn fit(&mut self, _k: usize, v_prev: &Matrix, v_k: &[f64]) -> trajaccel::Result<FitResult> {
        let q = v_prev.cols();
        let mut c: Vec<f64> = (0..q).map(|_| 0.2 * (self.rng.uniform() - 0.5) / q as f64).collect();
        c[0] = if self.rng.uniform() < 0.5 { 0.95 } else { -0.95 };
        FitResult::from_coefficients(v_prev, v_k, c)
    }
}

fn c13_safeguard() -> Outcome {
    let n = 10;
    let mut rng = Rng::new(131);
    let r = random_orthogonal(n, &mut rng);
    let t = Matrix::identity(n).add(&r).scale(0.5);
    let op = AffineOperator::new(t, rng.normals(n)).unwrap();
    let (a, b, delta) = (1.0, 1e6, 3.0);
    let cfg = PredictorConfig {
        gain: Gain::Safeguard { a, b, delta },
        ..PredictorConfig::default()
    };
    let mut acc = A2Fom::with_source(cfg, vec![0..n], Box::new(Adversary { rng: Rng::new(132) })).unwrap();
    let opts = RunOptions {
        tol: 1e-10,
        max_iter: 200_000,
        ..RunOptions::default()
    };
    let out = match drive_with(&op, &mut acc, &rng.normals(n), &opts) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let accepted: Vec<_> = out
        .events
        .iter()
        .filter(|e| e.outcome == trajaccel::accel::EventOutcome::Accepted)
        .collect();
    let max_e = accepted.iter().map(|e| e.e_norm).fold(0.0f64, f64::max);
    let tail: f64 = accepted
        .iter()
        .map(|e| (e.k as f64).powf(-(1.0 + delta)))
        .sum();
    let bound = a * max_e + b * tail;
    let ok = out.run.converged && out.accumulated_perturbation <= bound;
    // the same operator without the safeguard, for contrast
    let _ = LeastSquaresFit;
    outcome(
        ok,
        format!(
            "converged {} in {} iterations with {} injected extrapolations; perturbation {:.3e} <= bound {:.3e}",
            out.run.converged,
            out.run.iterations,
            accepted.len(),
            out.accumulated_perturbation,
            bound
        ),
    )
}

fn c14_pd_block() -> Outcome {
    let mut rng = Rng::new(141);
    let mut recon_fail = 0;
    let mut modulus_fail = 0;
    let mut worst_recon = 0.0f64;
    let mut worst_mod = 0.0f64;
    let mut tuples = 0;
    while tuples < 50 {
        let gr = 0.05 + 1.95 * rng.uniform();
        let gj = 0.05 + 1.95 * rng.uniform();
        let sigma = 0.05 + 1.95 * rng.uniform();
        let tau = rng.uniform();
        if gr * gj * sigma * sigma >= 1.0 {
            continue;
        }
        tuples += 1;
        let blk = pd_leading_block(gr, gj, tau, sigma).unwrap();
        // eigenvalues of the 2x2 block from its characteristic polynomial
        let tr = blk.block[(0, 0)] + blk.block[(1, 1)];
        let det = blk.block[(0, 0)] * blk.block[(1, 1)] - blk.block[(0, 1)] * blk.block[(1, 0)];
        let disc = num_complex::Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
        let lam = (num_complex::Complex64::new(tr, 0.0) + disc) / 2.0;
        let want = (1.0 - tau * gj * gr * sigma * sigma).sqrt();
        let dm = (lam.norm() - want).abs().max((blk.modulus - want).abs());
        worst_mod = worst_mod.max(dm);
        if dm > 1e-12 {
            modulus_fail += 1;
        }
        match blk.geometry.reconstruct() {
            Some(m) => {
                let e = m.sub(&blk.block).norm_inf();
                worst_recon = worst_recon.max(e);
                if e > 1e-10 {
                    recon_fail += 1;
                }
            }
            None => recon_fail += 1,
        }
    }
    outcome(
        recon_fail == 0 && modulus_fail == 0,
        format!(
            "50 tuples: reconstruction failed on {recon_fail} (no real elliptical factor or error > 1e-10; \
             worst error where it exists {worst_recon:.1e}); modulus mismatches {modulus_fail} (worst {worst_mod:.1e})"
        ),
    )
}

fn c15_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[problem]\nkind = \"lasso\"\nsparsity = 14\nnoise = 0.01\nseed = 5\n\n\
         [solver]\nmethod = \"fb\"\n\n[acceleration]\nkind = \"a2fom\"\nq = 4\n\n\
         [run]\ntol = 1e-10\n",
    )
    .unwrap();
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_trajaccel"))
            .arg("run")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    if !(run(&a) && run(&b)) {
        return outcome(false, "run exited with a nonzero status");
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    outcome(
        x == y,
        format!("two runs wrote {} and {} bytes, identical: {}", x.len(), y.len(), x == y),
    )
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 elliptical rotation bounds", c1_elliptical_bounds),
        ("2 composite rotation", c2_composite_rotation),
        ("3 type I rate", c3_type1_rate),
        ("4 type II limit", c4_type2_limit),
        ("5 type III containment", c5_type3_containment),
        ("6 minimal-polynomial exactness", c6_minimal_polynomial),
        ("7 prediction-error bound", c7_prediction_error),
        ("8 DR Friedrichs geometry", c8_friedrichs),
        ("9 inertial-failure ordering", c9_inertial_ordering),
        ("10 FB type I and identification", c10_fb_identification),
        ("11 DR gamma-dependent trajectory", c11_dr_gamma),
        ("12 acceleration delivers", c12_acceleration),
        ("13 safeguard summability", c13_safeguard),
        ("14 PD leading block", c14_pd_block),
        ("15 CLI determinism", c15_determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {name}: {status} ({:.2}s) {}",
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
