//! Linear systems with prescribed trajectory geometry and their closed-form
//! angle predictions.

use std::f64::consts::PI;

use crate::diagnostics::TraceRecord;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Lu, Matrix};
use crate::problems::{random_orthogonal, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabKind {
    TypeI,
    TypeII,
    TypeIII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicted {
    /// Ratio of the second-largest to the largest modulus.
    pub eta: f64,
    pub limit_cos: Option<f64>,
    pub angle_interval: Option<(f64, f64)>,
    /// Largest eigenvalue modulus.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct LabMatrix {
    pub m: Matrix,
    pub kind: LabKind,
    pub predicted: Predicted,
    pub seed: u64,
    /// Orthonormal basis of the dominant invariant subspace.
    pub leading_basis: Vec<Vec<f64>>,
}

impl LabMatrix {
    /// `sum_i w_i b_i` over the leading basis vectors.
    pub fn leading_vector(&self, weights: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.m.rows()];
        for (b, w) in self.leading_basis.iter().zip(weights) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += w * bi;
            }
        }
        v
    }
}

fn conjugate(core: &Matrix, u: &Matrix) -> Matrix {
    u.matmul(core).matmul(&u.transpose())
}

/// `U diag(sigma) U^T` with a seeded random orthogonal `U`.
pub fn make_type1(sigmas: &[f64], seed: u64) -> Result<LabMatrix> {
    let n = sigmas.len();
    if n == 0 {
        return Err(Error::InvalidConfig("at least one eigenvalue is required".into()));
    }
    if sigmas.iter().any(|&s| !(s > -1.0 && s <= 1.0)) {
        return Err(Error::InvalidConfig("eigenvalues must lie in (-1, 1]".into()));
    }
    if sigmas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidConfig("eigenvalues must be given in descending order".into()));
    }
    let s1 = sigmas[0];
    let sn = sigmas[n - 1];
    if !(s1 > sn.abs() || n == 1) || sn == 0.0 || s1 <= 0.0 {
        return Err(Error::InvalidConfig(
            "need sigma_1 > |sigma_n| > 0 for a straight-line trajectory".into(),
        ));
    }
    let eta = if n == 1 {
        0.0
    } else {
        sigmas[1].max(sn.abs()) / s1
    };
    let u = random_orthogonal(n, &mut Rng::new(seed));
    let m = conjugate(&Matrix::from_diag(sigmas), &u);
    Ok(LabMatrix {
        m,
        kind: LabKind::TypeI,
        predicted: Predicted {
            eta,
            limit_cos: Some(1.0),
            angle_interval: None,
            rate: s1,
        },
        seed,
        leading_basis: vec![u.col(0)],
    })
}

/// Leading block `modulus [[cos psi, sin psi], [-sin psi, cos psi]]` plus a diagonal tail.
pub fn make_type2(psi: f64, modulus: f64, tail: &[f64], seed: u64) -> Result<LabMatrix> {
    if !(modulus > 0.0 && modulus < 1.0) {
        return Err(Error::InvalidConfig(format!("modulus {modulus} outside (0, 1)")));
    }
    if tail.iter().any(|t| !(t.abs() < modulus)) {
        return Err(Error::InvalidConfig(
            "tail moduli must be strictly smaller than the leading modulus".into(),
        ));
    }
    let n = 2 + tail.len();
    let mut core = Matrix::zeros(n, n);
    let (c, s) = (psi.cos(), psi.sin());
    core[(0, 0)] = modulus * c;
    core[(0, 1)] = modulus * s;
    core[(1, 0)] = -modulus * s;
    core[(1, 1)] = modulus * c;
    for (i, &t) in tail.iter().enumerate() {
        core[(2 + i, 2 + i)] = t;
    }
    let u = random_orthogonal(n, &mut Rng::new(seed));
    let eta = tail.iter().fold(0.0f64, |m, t| m.max(t.abs())) / modulus;
    Ok(LabMatrix {
        m: conjugate(&core, &u),
        kind: LabKind::TypeII,
        predicted: Predicted {
            eta,
            limit_cos: Some(c),
            angle_interval: None,
            rate: modulus,
        },
        seed,
        leading_basis: vec![u.col(0), u.col(1)],
    })
}

/// Elliptical rotation and the closed-form ranges of its norm ratio and rotation angle.
#[derive(Debug, Clone)]
pub struct Elliptical {
    pub r: Matrix,
    /// Range of `|R x|^2 / |x|^2`.
    pub ratio_interval: (f64, f64),
    /// Range of the angle between `x` and `R x`.
    pub chi_interval: (f64, f64),
}

/// `[[cos phi, r sin phi], [-sin(phi)/r, cos phi]]` with `r = s/l`.
pub fn elliptical_matrix(axis_ratio: f64, phi: f64) -> Matrix {
    let (c, s) = (phi.cos(), phi.sin());
    Matrix::from_rows(&[vec![c, axis_ratio * s], vec![-s / axis_ratio, c]])
}

/// Counter-clockwise rotation by `psi`.
pub fn rotation(psi: f64) -> Matrix {
    let (c, s) = (psi.cos(), psi.sin());
    Matrix::from_rows(&[vec![c, -s], vec![s, c]])
}

fn chi_bounds(axis_ratio: f64, phi: f64) -> (f64, f64) {
    let r = axis_ratio;
    let a = r / 2.0 + 1.0 / (2.0 * r);
    let b = (r / 2.0 - 1.0 / (2.0 * r)).abs();
    let (c, s) = (phi.cos(), phi.sin());
    let cos_of = |x: f64| x / (s * s + x * x).sqrt();
    let chi_max = cos_of(a * c - b).clamp(-1.0, 1.0).acos();
    let chi_min = cos_of(a * c + b).clamp(-1.0, 1.0).acos();
    (chi_min, chi_max)
}

pub fn elliptical_rotation(axis_ratio: f64, phi: f64) -> Result<Elliptical> {
    if !(axis_ratio > 0.0 && axis_ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!("axis ratio {axis_ratio} must be positive")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::InvalidConfig(format!("phi = {phi} outside (0, pi)")));
    }
    let r2 = axis_ratio * axis_ratio;
    let e = (r2 - 1.0) / (r2 + 1.0);
    let zeta = (-e * phi.cos()).clamp(-1.0, 1.0).acos();
    let lo = (e * (zeta - phi).cos() + 1.0) / (e * (zeta + phi).cos() + 1.0);
    let (lo, hi) = if lo <= 1.0 { (lo, 1.0 / lo) } else { (1.0 / lo, lo) };
    Ok(Elliptical {
        r: elliptical_matrix(axis_ratio, phi),
        ratio_interval: (lo, hi),
        chi_interval: chi_bounds(axis_ratio, phi),
    })
}

/// Angle range `[psi - chi_max, psi - chi_min]` of `rotation(psi) * elliptical(phi)`,
/// or `None` when the composite has real eigenvalues and is not a rotation.
pub fn composite_rotation_bounds(psi: f64, phi: f64, axis_ratio: f64) -> Option<(f64, f64)> {
    let r = axis_ratio;
    let disc = ((1.0 / r + r) * psi.sin() * phi.sin() + 2.0 * psi.cos() * phi.cos()).powi(2) - 4.0;
    if !(disc < 0.0) || !(r > 0.0) {
        return None;
    }
    let (chi_min, chi_max) = chi_bounds(r, phi);
    Some((psi - chi_max, psi - chi_min))
}

/// `modulus * rotation(psi) * elliptical(phi, axis_ratio)` factorisation of a 2x2 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockGeometry {
    pub modulus: f64,
    pub psi: f64,
    /// `(phi, axis_ratio)`, absent when no real elliptical factor exists.
    pub elliptical: Option<(f64, f64)>,
}

impl BlockGeometry {
    pub fn reconstruct(&self) -> Option<Matrix> {
        let (phi, r) = self.elliptical?;
        Some(
            rotation(self.psi)
                .matmul(&elliptical_matrix(r, phi))
                .scale(self.modulus),
        )
    }

    pub fn angle_interval(&self) -> Option<(f64, f64)> {
        let (phi, r) = self.elliptical?;
        composite_rotation_bounds(self.psi, phi, r)
    }
}

/// Factorises a 2x2 block with positive determinant.
///
/// `cot psi = (D21 + D12) / (D22 - D11)` for the normalised block `D`; the factor
/// `rotation(psi)^T D` must then be elliptical, which needs `|trace| <= 2`.
/// When the raw axis ratio comes out negative the branch `psi + pi` is used.
pub fn decompose_block(d: &Matrix) -> Result<BlockGeometry> {
    if d.rows() != 2 || d.cols() != 2 {
        return Err(Error::InvalidInput("block must be 2x2".into()));
    }
    let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
    if !(det > 0.0) {
        return Err(Error::InvalidInput(format!("block determinant {det} must be positive")));
    }
    let modulus = det.sqrt();
    let h = d.scale(1.0 / modulus);
    let num = h[(1, 0)] + h[(0, 1)];
    let den = h[(1, 1)] - h[(0, 0)];
    // cot psi = num / den, psi in [0, pi)
    let mut psi = den.atan2(num);
    if psi < 0.0 {
        psi += PI;
    }
    if num == 0.0 && den == 0.0 {
        // circular block: all of the rotation goes into psi
        let psi = h[(1, 0)].atan2(h[(0, 0)]).rem_euclid(2.0 * PI);
        return Ok(BlockGeometry {
            modulus,
            psi,
            elliptical: None,
        });
    }
    let e = rotation(psi).transpose().matmul(&h);
    let cphi = 0.5 * (e[(0, 0)] + e[(1, 1)]);
    if !(cphi.abs() < 1.0) {
        return Ok(BlockGeometry {
            modulus,
            psi,
            elliptical: None,
        });
    }
    let phi = cphi.acos();
    let mut r = e[(0, 1)] / phi.sin();
    let (mut psi, mut phi) = (psi, phi);
    if r < 0.0 {
        psi += PI;
        phi = PI - phi;
        r = -r;
    }
    Ok(BlockGeometry {
        modulus,
        psi,
        elliptical: Some((phi, r)),
    })
}

/// Block-structured matrix `[[A, -delta C^T], [tau C, B]]` with co-diagonalisable
/// `A`, `B`, `C` whose spectra are `a`, `b`, `c`.
pub fn make_type3(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    delta: f64,
    tau: f64,
    seed: u64,
) -> Result<LabMatrix> {
    let m = a.len();
    if m == 0 || b.len() != m || c.len() != m {
        return Err(Error::InvalidConfig("a, b and c must have the same positive length".into()));
    }
    if !(delta > 0.0 && tau > 0.0) {
        return Err(Error::InvalidConfig("delta and tau must be positive".into()));
    }
    let mut moduli = Vec::with_capacity(m);
    for i in 0..m {
        let (ai, bi, ci) = (a[i], b[i], c[i]);
        let tr = ai + bi;
        let det = ai * bi + delta * tau * ci * ci;
        let disc = tr * tr - 4.0 * det;
        let md = if disc < 0.0 {
            if !(det < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "block {i}: modulus assumption violated, complex eigenvalues need delta tau c^2 + a b < 1, got {det}"
                )));
            }
            det.sqrt()
        } else {
            let sq = disc.sqrt();
            ((tr + sq) / 2.0).abs().max(((tr - sq) / 2.0).abs())
        };
        if !(md < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "block {i}: eigenvalue modulus {md} is not below 1"
            )));
        }
        moduli.push(md);
    }
    let lead = (0..m)
        .max_by(|&i, &j| moduli[i].total_cmp(&moduli[j]))
        .unwrap();
    let rate = moduli[lead];
    let eta = (0..m)
        .filter(|&i| i != lead)
        .map(|i| moduli[i])
        .fold(0.0f64, f64::max)
        / rate;
    let block = Matrix::from_rows(&[
        vec![a[lead], -delta * c[lead]],
        vec![tau * c[lead], b[lead]],
    ]);
    let complex_lead = (a[lead] - b[lead]).powi(2) < 4.0 * delta * tau * c[lead] * c[lead];
    let geometry = if complex_lead {
        Some(decompose_block(&block)?)
    } else {
        None
    };

    let mut rng = Rng::new(seed);
    let u = random_orthogonal(m, &mut rng);
    let w = random_orthogonal(m, &mut rng);
    let n = 2 * m;
    // core in coordinates (U e_i, W e_i); block i couples coordinates i and m + i
    let mut core = Matrix::zeros(n, n);
    for i in 0..m {
        core[(i, i)] = a[i];
        core[(i, m + i)] = -delta * c[i];
        core[(m + i, i)] = tau * c[i];
        core[(m + i, m + i)] = b[i];
    }
    let q = Matrix::from_fn(n, n, |i, j| match (i < m, j < m) {
        (true, true) => u[(i, j)],
        (false, false) => w[(i - m, j - m)],
        _ => 0.0,
    });
    let mm = conjugate(&core, &q);
    Ok(LabMatrix {
        m: mm,
        kind: LabKind::TypeIII,
        predicted: Predicted {
            eta,
            limit_cos: None,
            angle_interval: geometry.and_then(|g| g.angle_interval()),
            rate,
        },
        seed,
        leading_basis: vec![q.col(lead), q.col(m + lead)],
    })
}

/// Leading 2x2 block of the linearised primal-dual iteration and its geometry.
#[derive(Debug, Clone)]
pub struct PdBlock {
    pub block: Matrix,
    pub geometry: BlockGeometry,
    /// `sqrt(1 - tau gamma_J gamma_R sigma^2)`.
    pub modulus: f64,
}

pub fn pd_leading_block(gamma_r: f64, gamma_j: f64, tau: f64, sigma: f64) -> Result<PdBlock> {
    if !(gamma_r > 0.0 && gamma_j > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidConfig("steps and sigma must be positive".into()));
    }
    if !(gamma_r * gamma_j * sigma * sigma < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need gamma_R gamma_J sigma^2 < 1, got {}",
            gamma_r * gamma_j * sigma * sigma
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidConfig(format!("tau = {tau} outside [0, 1]")));
    }
    let g = gamma_r * gamma_j * sigma * sigma;
    let block = Matrix::from_rows(&[
        vec![1.0, -gamma_r * sigma],
        vec![gamma_j * sigma, 1.0 - (1.0 + tau) * g],
    ]);
    let geometry = decompose_block(&block)?;
    Ok(PdBlock {
        block,
        geometry,
        modulus: (1.0 - tau * g).sqrt(),
    })
}

/// Trace of `v_{k+1} = M v_k`, `z_{k+1} = z_k + v_{k+1}`.
#[derive(Debug, Clone)]
pub struct LinearRun {
    pub trace: Vec<TraceRecord>,
    /// `theta_k` computed from unit-vector differences, accurate near 0.
    pub theta: Vec<Option<f64>>,
    /// `1 - cos theta_k` computed without cancellation.
    pub one_minus_cos: Vec<Option<f64>>,
    pub z: Vec<f64>,
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Runs `K` steps from displacement `v0` and start `z0`.
///
/// `cos_vartheta` is the angle between `v_k` and `z* - z_k = M (I - M)^{-1} v_k`,
/// recorded when `I - M` is invertible. Vectors are rescaled internally so long runs
/// do not underflow; angles are unaffected.
pub fn run_linear(m: &Matrix, z0: &[f64], v0: &[f64], k_max: usize) -> Result<LinearRun> {
    let n = m.rows();
    if m.cols() != n || z0.len() != n || v0.len() != n {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if k_max < 2 {
        return Err(Error::InvalidInput("need at least two steps".into()));
    }
    let lu = Lu::new(&Matrix::identity(n).sub(m)).ok();
    let mut v = v0.to_vec();
    let mut log_scale = 0.0f64; // true vector = v * 2^log_scale
    let mut z = z0.to_vec();
    let mut trace = Vec::with_capacity(k_max);
    let mut theta = Vec::with_capacity(k_max);
    let mut omc = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let vn = m.matvec(&v);
        let true_norm = norm(&vn) * log_scale.exp2();
        if norm(&vn) == 0.0 {
            break;
        }
        for (zi, x) in z.iter_mut().zip(&vn) {
            *zi += x * log_scale.exp2();
        }
        let mut rec = TraceRecord::new(k, true_norm);
        let (uh, wh) = (unit(&vn), unit(&v));
        let (mut th, mut om) = (None, None);
        if let (Some(uh), Some(wh)) = (uh, wh) {
            let d = norm(&uh.iter().zip(&wh).map(|(a, b)| a - b).collect::<Vec<_>>());
            om = Some(0.5 * d * d);
            th = Some(2.0 * (0.5 * d).min(1.0).asin());
            rec.cos_theta = Some(dot(&uh, &wh).clamp(-1.0, 1.0));
        }
        if let Some(lu) = &lu {
            let w = lu.solve(&m.matvec(&vn));
            if let (Some(a), Some(b)) = (unit(&vn), unit(&w)) {
                rec.cos_vartheta = Some(dot(&a, &b).clamp(-1.0, 1.0));
            }
        }
        trace.push(rec);
        theta.push(th);
        omc.push(om);
        let zn = norm(&z);
        if !(zn <= 1e12) || !(true_norm <= 1e12) {
            return Err(Error::Divergence {
                k,
                norm: zn.max(true_norm),
                trace,
            });
        }
        v = vn;
        let nv = norm(&v);
        if nv < 1e-150 {
            let e = nv.log2().floor();
            for x in v.iter_mut() {
                *x *= (-e).exp2();
            }
            log_scale += e;
        }
    }
    Ok(LinearRun {
        trace,
        theta,
        one_minus_cos: omc,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type1_eta() {
        let l = make_type1(&[0.99, 0.99 * 0.98, 0.99 * 0.9], 1).unwrap();
        assert!((l.predicted.eta - 0.98).abs() < 1e-12);
        let l = make_type1(&[0.99, 0.99 * 0.98, -0.99 * 0.75], 1).unwrap();
        assert!((l.predicted.eta - 0.98).abs() < 1e-12);
        assert!(make_type1(&[0.5, 0.9], 1).is_err());
    }

    #[test]
    fn scalar_type1_is_collinear() {
        let l = make_type1(&[0.5], 3).unwrap();
        let run = run_linear(&l.m, &[0.0], &[1.0], 20).unwrap();
        assert!(run.one_minus_cos.iter().all(|x| *x == Some(0.0)));
    }

    #[test]
    fn pure_rotation_block() {
        let psi = 0.7;
        let l = make_type2(psi, 0.9, &[], 5).unwrap();
        let run = run_linear(&l.m, &[0.0, 0.0], &[1.0, 0.3], 10).unwrap();
        for r in &run.trace[1..] {
            assert!((r.cos_theta.unwrap() - psi.cos()).abs() < 1e-12);
        }
        let l = make_type2(std::f64::consts::FRAC_PI_2, 0.9, &[0.5], 5).unwrap();
        assert_eq!(l.predicted.limit_cos.unwrap().abs() < 1e-15, true);
    }

    #[test]
    fn circular_ellipse() {
        let e = elliptical_rotation(1.0, 0.4).unwrap();
        assert!((e.ratio_interval.0 - 1.0).abs() < 1e-15 && (e.ratio_interval.1 - 1.0).abs() < 1e-15);
        assert!((e.chi_interval.0 - 0.4).abs() < 1e-12 && (e.chi_interval.1 - 0.4).abs() < 1e-12);
        let (lo, hi) = composite_rotation_bounds(1.0, 0.4, 1.0).unwrap();
        assert!((lo - 0.6).abs() < 1e-12 && (hi - 0.6).abs() < 1e-12);
    }

    #[test]
    fn type3_unit_coupling_gives_quarter_turn() {
        let l = make_type3(&[0.95], &[0.75], &[0.35], 1.0, 1.0, 2).unwrap();
        let block = Matrix::from_rows(&[vec![0.95, -0.35], vec![0.35, 0.75]]);
        let g = decompose_block(&block).unwrap();
        assert!((g.psi - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(l.predicted.angle_interval.is_some());
        assert!(make_type3(&[0.95], &[0.95], &[0.5], 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn type3_without_coupling_is_diagonal() {
        let l = make_type3(&[0.9], &[0.5], &[0.0], 1.0, 1.0, 4).unwrap();
        assert!(l.predicted.angle_interval.is_none());
        let svd = crate::linalg::small_svd(&l.m).unwrap();
        assert!((svd.s[0] - 0.9).abs() < 1e-12 && (svd.s[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pd_tau_zero_is_unit_modulus() {
        let b = pd_leading_block(0.5, 0.5, 0.0, 1.0).unwrap();
        assert!((b.modulus - 1.0).abs() < 1e-15);
        assert!(pd_leading_block(2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_matrix_stops_at_first_zero_step() {
        let run = run_linear(&Matrix::zeros(2, 2), &[0.0, 0.0], &[1.0, 1.0], 10).unwrap();
        assert!(run.trace.is_empty());
    }
}
