//! Per-iteration trajectory measurements and trajectory classification.

use crate::error::{Error, Result};
use crate::linalg::{norm, small_svd, sub, Matrix};

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub v_norm: f64,
    pub cos_theta: Option<f64>,
    pub objective: Option<f64>,
    pub support_size: Option<usize>,
    pub rank: Option<usize>,
    pub extrapolated: bool,
    pub cos_vartheta: Option<f64>,
}

impl TraceRecord {
    pub fn new(k: usize, v_norm: f64) -> Self {
        TraceRecord {
            k,
            v_norm,
            cos_theta: None,
            objective: None,
            support_size: None,
            rank: None,
            extrapolated: false,
            cos_vartheta: None,
        }
    }
}

/// Clamped cosine of the angle between two nonzero vectors.
pub fn cos_angle(v: &[f64], w: &[f64]) -> Result<f64> {
    let (nv, nw) = (norm(v), norm(w));
    if nv == 0.0 || nw == 0.0 {
        return Err(Error::UndefinedAngle("zero vector"));
    }
    // normalise first so tiny vectors do not underflow the inner product
    let c: f64 = v.iter().zip(w).map(|(a, b)| (a / nv) * (b / nw)).sum();
    Ok(c.clamp(-1.0, 1.0))
}

/// Angle in radians between two nonzero vectors.
pub fn angle_between(v: &[f64], w: &[f64]) -> Result<f64> {
    let (nv, nw) = (norm(v), norm(w));
    if nv == 0.0 || nw == 0.0 {
        return Err(Error::UndefinedAngle("zero vector"));
    }
    let (mut d, mut s) = (0.0, 0.0);
    for (a, b) in v.iter().zip(w) {
        let (x, y) = (a / nv, b / nw);
        d += (x - y) * (x - y);
        s += (x + y) * (x + y);
    }
    Ok(2.0 * d.sqrt().atan2(s.sqrt()))
}

/// Angle between the step `z_k - z_{k-1}` and the direction to the limit `z* - z_k`.
pub fn angle_to_limit(zk: &[f64], zk1: &[f64], z_star: &[f64]) -> Result<f64> {
    let step = sub(zk, zk1);
    let to_lim = sub(z_star, zk);
    if norm(&step) == 0.0 || norm(&to_lim) == 0.0 {
        return Err(Error::UndefinedAngle("coincident points"));
    }
    angle_between(&step, &to_lim)
}

/// Count of entries with magnitude above `tol`.
pub fn support_size(x: &[f64], tol: f64) -> usize {
    x.iter().filter(|v| v.abs() > tol).count()
}

/// Count of singular values above `tol * sigma_max`.
pub fn numerical_rank(m: &Matrix, tol: f64) -> Result<usize> {
    let s = small_svd(m)?.s;
    let smax = s[0];
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > tol * smax).count())
}

/// Support size of `x` and, when `shape` is given, the rank of `x` read as a row-major matrix.
pub fn identification_metrics(
    x: &[f64],
    shape: Option<(usize, usize)>,
    tol: f64,
) -> Result<(usize, Option<usize>)> {
    let support = support_size(x, tol);
    let rank = match shape {
        Some((r, c)) => Some(numerical_rank(&Matrix::new(r, c, x.to_vec())?, tol)?),
        None => None,
    };
    Ok((support, rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryType {
    TypeI,
    TypeII,
    TypeIII,
    Undetermined,
}

impl TrajectoryType {
    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryType::TypeI => "TypeI",
            TrajectoryType::TypeII => "TypeII",
            TrajectoryType::TypeIII => "TypeIII",
            TrajectoryType::Undetermined => "Undetermined",
        }
    }
}

/// Thresholds for [`classify_trajectory`]. These are conventions, not sharp definitions.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyConfig {
    pub tail_fraction: f64,
    pub min_len: usize,
    /// Type I: tail mean of cos theta above `1 - line_tol`.
    pub line_tol: f64,
    /// Type II: tail standard deviation below this.
    pub spiral_std: f64,
    /// Type III: oscillation amplitude above this in both halves of the tail.
    pub oscillation: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tail_fraction: 0.25,
            min_len: 50,
            line_tol: 1e-3,
            spiral_std: 1e-3,
            oscillation: 1e-2,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn amplitude(xs: &[f64]) -> f64 {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Classifies a series of cos theta values from its tail.
pub fn classify_trajectory(cos_theta: &[f64], cfg: &ClassifyConfig) -> TrajectoryType {
    if cos_theta.len() < cfg.min_len {
        return TrajectoryType::Undetermined;
    }
    let start = ((1.0 - cfg.tail_fraction) * cos_theta.len() as f64).floor() as usize;
    let tail = &cos_theta[start.min(cos_theta.len() - 2)..];
    let (first, second) = tail.split_at(tail.len() / 2);
    let m = mean(tail);
    if m > 1.0 - cfg.line_tol && mean(second) >= mean(first) - cfg.line_tol * 1e-3 {
        return TrajectoryType::TypeI;
    }
    if std_dev(tail) < cfg.spiral_std && m > cfg.line_tol && m < 1.0 - cfg.line_tol {
        return TrajectoryType::TypeII;
    }
    let (a1, a2) = (amplitude(first), amplitude(second));
    if a1 > cfg.oscillation && a2 > cfg.oscillation && a2 <= 1.5 * a1 && amplitude(tail) < 2.0 {
        return TrajectoryType::TypeIII;
    }
    TrajectoryType::Undetermined
}

/// Classifies a trace, using the records after the residual first falls below
/// `1e3 * tol` (the whole trace if it never does).
pub fn classify_trace(trace: &[TraceRecord], tol: f64, cfg: &ClassifyConfig) -> TrajectoryType {
    let start = trace
        .iter()
        .position(|r| r.v_norm <= 1e3 * tol)
        .unwrap_or(0);
    let series: Vec<f64> = trace[start..].iter().filter_map(|r| r.cos_theta).collect();
    classify_trajectory(&series, cfg)
}

/// Error bounds for `s = 1..=s_max` in the exact-linearization setting.
///
/// Entry `s - 1` is
/// `|M^s (z_k - z*)| + |sum_{l<s} M^l| |f_k| + B_{k,s} eps_k` with
/// `f_k = M (z_{k-1} - z*) - (z_k - z*)` and `B_{k,s}` the largest norm of the partial power
/// sums `sum_{l=i}^{t} M^l` and `sum_{l=i}^{t} C^l`, `i in {0, 1}`, `t <= s`.
pub fn prediction_error_bounds(
    m: &Matrix,
    zk: &[f64],
    zk1: &[f64],
    z_star: &[f64],
    epsilon: f64,
    c: &[f64],
    s_max: usize,
) -> Result<Vec<f64>> {
    let n = m.rows();
    let q = c.len();
    let comp = crate::accel::companion(c);
    let ek = sub(zk, z_star);
    let fhat = sub(&m.matvec(&sub(zk1, z_star)), &ek);
    let fhat_norm = norm(&fhat);
    let spec = |a: &Matrix| -> Result<f64> { a.norm2() };

    let mut mpow = Matrix::identity(n); // M^t
    let mut cpow = Matrix::identity(q);
    let mut msum0 = Matrix::identity(n); // sum_{l=0}^t M^l
    let mut msum1 = Matrix::zeros(n, n); // sum_{l=1}^t M^l
    let mut csum0 = Matrix::identity(q);
    let mut csum1 = Matrix::zeros(q, q);
    let mut b = 1.0f64;
    let mut out = Vec::with_capacity(s_max);
    for _s in 1..=s_max {
        // sum_{l<s} M^l before advancing
        let head = spec(&msum0)? * fhat_norm;
        mpow = m.matmul(&mpow);
        cpow = comp.matmul(&cpow);
        msum0 = msum0.add(&mpow);
        msum1 = msum1.add(&mpow);
        csum0 = csum0.add(&cpow);
        csum1 = csum1.add(&cpow);
        for a in [&msum0, &msum1, &csum0, &csum1] {
            b = b.max(spec(a)?);
        }
        out.push(norm(&mpow.matvec(&ek)) + head + b * epsilon);
    }
    Ok(out)
}

/// Single-`s` form of [`prediction_error_bounds`].
pub fn prediction_error_bound(
    m: &Matrix,
    zk: &[f64],
    zk1: &[f64],
    z_star: &[f64],
    epsilon: f64,
    c: &[f64],
    s: usize,
) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    Ok(*prediction_error_bounds(m, zk, zk1, z_star, epsilon, c, s)?
        .last()
        .unwrap())
}

/// Error bounds for `s = 1..=s_max` for an exactly linear sequence, from the expansion
/// `z_bar_{k,s} - z* = M^s (z_k - z*) + sum_{i=0}^{s} M^i e g_i` with `e` the fit residual
/// and `g_i = sum_{j=max(i,1)}^{s} (C^{j-i})_{11}`.
///
/// Entry `s - 1` is `|M^s (z_k - z*)| + eps sum_i |M^i| |g_i|`.
pub fn convolution_error_bounds(
    m: &Matrix,
    zk: &[f64],
    z_star: &[f64],
    epsilon: f64,
    c: &[f64],
    s_max: usize,
) -> Result<Vec<f64>> {
    let n = m.rows();
    let comp = crate::accel::companion(c);
    let ek = sub(zk, z_star);
    // (C^t)_{11} and |M^t| for t = 0..=s_max
    let mut c11 = Vec::with_capacity(s_max + 1);
    let mut mnorm = Vec::with_capacity(s_max + 1);
    let mut cp = Matrix::identity(c.len());
    let mut mp = Matrix::identity(n);
    for _ in 0..=s_max {
        c11.push(cp[(0, 0)]);
        mnorm.push(mp.norm2()?);
        cp = comp.matmul(&cp);
        mp = m.matmul(&mp);
    }
    let mut out = Vec::with_capacity(s_max);
    let mut mpow = Matrix::identity(n);
    for s in 1..=s_max {
        mpow = m.matmul(&mpow);
        let mut tail = 0.0;
        for i in 0..=s {
            let g: f64 = (i.max(1)..=s).map(|j| c11[j - i]).sum();
            tail += mnorm[i] * g.abs();
        }
        out.push(norm(&mpow.matvec(&ek)) + epsilon * tail);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn angles() {
        assert!((angle_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(angle_between(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let a = 0.3f64;
        let ang = angle_between(&[1.0, 0.0], &[a.cos(), a.sin()]).unwrap();
        assert!((ang - a).abs() < 1e-12);
        assert!(matches!(angle_between(&[0.0], &[1.0]), Err(Error::UndefinedAngle(_))));
        let t = angle_to_limit(&[0.5, 0.0], &[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn identification_examples() {
        assert_eq!(support_size(&[1.0, 1e-14, -2.0], 1e-10), 2);
        assert_eq!(numerical_rank(&Matrix::zeros(3, 3), 1e-10).unwrap(), 0);
        assert_eq!(numerical_rank(&Matrix::from_diag(&[5.0, 1e-12]), 1e-10).unwrap(), 1);
        let (s, r) = identification_metrics(&[1.0, 0.0, 0.0, 2.0], Some((2, 2)), 1e-8).unwrap();
        assert_eq!((s, r), (2, Some(2)));
    }

    #[test]
    fn classify_constants() {
        let cfg = ClassifyConfig::default();
        assert_eq!(classify_trajectory(&vec![1.0; 100], &cfg), TrajectoryType::TypeI);
        let c = (std::f64::consts::PI / 6.0).cos();
        assert_eq!(classify_trajectory(&vec![c; 100], &cfg), TrajectoryType::TypeII);
        let osc: Vec<f64> = (0..200).map(|k| 0.5 + 0.2 * (0.37 * k as f64).sin()).collect();
        assert_eq!(classify_trajectory(&osc, &cfg), TrajectoryType::TypeIII);
        assert_eq!(classify_trajectory(&[1.0; 10], &cfg), TrajectoryType::Undetermined);
    }

    #[test]
    fn bound_exact_fit() {
        let m = Matrix::from_diag(&[0.5, 0.25]);
        let z_star = [1.0, 1.0];
        let zk1 = [2.0, 3.0];
        let zk: Vec<f64> = m
            .matvec(&sub(&zk1, &z_star))
            .iter()
            .zip(&z_star)
            .map(|(a, b)| a + b)
            .collect();
        let b = prediction_error_bound(&m, &zk, &zk1, &z_star, 0.0, &[0.1, 0.2], 3).unwrap();
        let m3 = m.matmul(&m).matmul(&m);
        assert!((b - norm(&m3.matvec(&sub(&zk, &z_star)))).abs() < 1e-15);
    }
}
