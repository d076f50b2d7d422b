//! Proximity operators and smooth data-fit oracles.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, small_svd, sub, Matrix, Svd};

/// Soft thresholding: `sign(x_i) max(|x_i| - t, 0)`.
pub fn prox_l1(x: &[f64], t: f64) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            let m = xi.abs() - t;
            if m > 0.0 {
                m.copysign(xi)
            } else {
                0.0
            }
        })
        .collect()
}

/// Block soft thresholding over a partition of the indices.
pub fn prox_group_l12(x: &[f64], blocks: &[Range<usize>], t: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    for b in blocks {
        let nb = norm(&x[b.clone()]);
        let f = if nb > t { 1.0 - t / nb } else { 0.0 };
        for v in &mut out[b.clone()] {
            *v *= f;
        }
    }
    out
}

/// Singular value soft thresholding.
pub fn prox_nuclear(x: &Matrix, t: f64) -> Result<Matrix> {
    if t == 0.0 {
        return Ok(x.clone());
    }
    let mut svd = small_svd(x)?;
    for s in svd.s.iter_mut() {
        *s = (*s - t).max(0.0);
    }
    Ok(svd.reconstruct())
}

/// Gradient of `0.5 |A x - f|^2`.
pub fn grad_least_squares(a: &Matrix, f: &[f64], x: &[f64]) -> Vec<f64> {
    a.tmatvec(&sub(&a.matvec(x), f))
}

/// Affine set `{x : A x = b}` with the SVD of `A` cached.
#[derive(Debug, Clone)]
pub struct AffineSet {
    a: Matrix,
    b: Vec<f64>,
    svd: Svd,
}

impl AffineSet {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::InvalidProblem("affine constraint: b length mismatch".into()));
        }
        if a.rows() > a.cols() {
            return Err(Error::InvalidProblem(format!(
                "affine constraint with {} rows and {} columns cannot have full row rank",
                a.rows(),
                a.cols()
            )));
        }
        let svd = small_svd(&a)?;
        let smax = svd.s[0];
        let smin = *svd.s.last().unwrap();
        if smax == 0.0 || smin <= 1e-10 * smax {
            return Err(Error::InvalidProblem(format!(
                "affine constraint matrix is rank deficient (singular values {smax:e} .. {smin:e})"
            )));
        }
        Ok(AffineSet { a, b, svd })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    /// `x + A^T (A A^T)^{-1} (b - A x)`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let r = sub(&self.b, &self.a.matvec(x));
        let mut y = self.svd.u.tmatvec(&r);
        for (yi, s) in y.iter_mut().zip(&self.svd.s) {
            *yi /= s;
        }
        let d = self.svd.v.matvec(&y);
        x.iter().zip(&d).map(|(a, b)| a + b).collect()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        norm(&sub(&self.a.matvec(x), &self.b))
    }
}

/// Free-standing affine projection; factorises `A` on every call.
pub fn project_affine(x: &[f64], a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(AffineSet::new(a.clone(), b.to_vec())?.project(x))
}

/// `0.5 |A x - f|^2` with the SVD of `A` cached, so the prox is available for any step.
#[derive(Debug, Clone)]
pub struct QuadraticFit {
    a: Matrix,
    f: Vec<f64>,
    svd: Svd,
    atf: Vec<f64>,
}

impl QuadraticFit {
    pub fn new(a: Matrix, f: Vec<f64>) -> Result<Self> {
        if f.len() != a.rows() {
            return Err(Error::InvalidProblem("data vector length mismatch".into()));
        }
        let svd = small_svd(&a)?;
        let atf = a.tmatvec(&f);
        Ok(QuadraticFit { a, f, svd, atf })
    }

    pub fn lipschitz(&self) -> f64 {
        self.svd.s[0] * self.svd.s[0]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = norm(&sub(&self.a.matvec(x), &self.f));
        0.5 * r * r
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        grad_least_squares(&self.a, &self.f, x)
    }

    /// `(I + t A^T A)^{-1} (y + t A^T f)`.
    pub fn prox(&self, y: &[f64], t: f64) -> Vec<f64> {
        let rhs: Vec<f64> = y.iter().zip(&self.atf).map(|(a, b)| a + t * b).collect();
        let mut out = rhs.clone();
        let coef = self.svd.v.tmatvec(&rhs);
        for (j, (c, s)) in coef.iter().zip(&self.svd.s).enumerate() {
            let w = t * s * s / (1.0 + t * s * s);
            if w == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o -= w * c * self.svd.v[(i, j)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn data(&self) -> &[f64] {
        &self.f
    }
}

#[derive(Debug, Clone)]
pub enum ProxKind {
    L1,
    /// Contiguous groups of equal size.
    GroupL12 { block_size: usize },
    /// Vector holds a `rows x cols` matrix in row-major order.
    Nuclear { rows: usize, cols: usize },
    AffineIndicator(AffineSet),
    BoxNonneg,
    Zero,
    Quadratic(QuadraticFit),
}

/// `mu * R` for one of the supported functions `R`.
#[derive(Debug, Clone)]
pub struct ProxOracle {
    pub kind: ProxKind,
    pub scale: f64,
}

impl ProxOracle {
    pub fn new(kind: ProxKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("prox scale must be positive, got {scale}")));
        }
        if let ProxKind::GroupL12 { block_size: 0 } = kind {
            return Err(Error::InvalidConfig("group size must be positive".into()));
        }
        Ok(ProxOracle { kind, scale })
    }

    pub fn l1(mu: f64) -> Result<Self> {
        Self::new(ProxKind::L1, mu)
    }

    pub fn zero() -> Self {
        ProxOracle {
            kind: ProxKind::Zero,
            scale: 1.0,
        }
    }

    pub fn box_nonneg() -> Self {
        ProxOracle {
            kind: ProxKind::BoxNonneg,
            scale: 1.0,
        }
    }

    pub fn affine(a: Matrix, b: Vec<f64>) -> Result<Self> {
        Ok(ProxOracle {
            kind: ProxKind::AffineIndicator(AffineSet::new(a, b)?),
            scale: 1.0,
        })
    }

    fn groups(n: usize, bs: usize) -> Vec<Range<usize>> {
        (0..n).step_by(bs).map(|s| s..(s + bs).min(n)).collect()
    }

    /// `prox_{t * scale * R}(x)`.
    pub fn prox(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let tt = t * self.scale;
        Ok(match &self.kind {
            ProxKind::L1 => prox_l1(x, tt),
            ProxKind::GroupL12 { block_size } => {
                prox_group_l12(x, &Self::groups(x.len(), *block_size), tt)
            }
            ProxKind::Nuclear { rows, cols } => {
                let m = Matrix::new(*rows, *cols, x.to_vec())?;
                prox_nuclear(&m, tt)?.into_vec()
            }
            ProxKind::AffineIndicator(set) => set.project(x),
            ProxKind::BoxNonneg => x.iter().map(|v| v.max(0.0)).collect(),
            ProxKind::Zero => x.to_vec(),
            ProxKind::Quadratic(q) => q.prox(x, tt),
        })
    }

    /// Function value. Indicators contribute 0; see [`ProxOracle::violation`].
    pub fn value(&self, x: &[f64]) -> f64 {
        let mu = self.scale;
        match &self.kind {
            ProxKind::L1 => mu * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::GroupL12 { block_size } => {
                mu * Self::groups(x.len(), *block_size)
                    .into_iter()
                    .map(|g| norm(&x[g]))
                    .sum::<f64>()
            }
            ProxKind::Nuclear { rows, cols } => {
                let m = Matrix::new(*rows, *cols, x.to_vec()).expect("shape checked by caller");
                mu * small_svd(&m).map(|s| s.s.iter().sum()).unwrap_or(f64::NAN)
            }
            ProxKind::AffineIndicator(_) | ProxKind::BoxNonneg => 0.0,
            ProxKind::Zero => 0.0,
            ProxKind::Quadratic(q) => mu * q.value(x),
        }
    }
}

impl ProxOracle {
    /// Distance-like infeasibility for indicator kinds, 0 otherwise.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProxKind::AffineIndicator(set) => set.violation(x),
            ProxKind::BoxNonneg => norm(&x.iter().map(|v| v.min(0.0)).collect::<Vec<_>>()),
            _ => 0.0,
        }
    }
}

/// `prox_{t J^*}(w) = w - t prox_{J/t}(w/t)` by the Moreau decomposition.
pub fn prox_conjugate(j: &ProxOracle, w: &[f64], t: f64) -> Result<Vec<f64>> {
    let ws: Vec<f64> = w.iter().map(|v| v / t).collect();
    let p = j.prox(&ws, 1.0 / t)?;
    Ok(w.iter().zip(&p).map(|(a, b)| a - t * b).collect())
}

/// Smooth term `F` with `L`-Lipschitz gradient.
#[derive(Debug, Clone)]
pub enum SmoothOracle {
    LeastSquares(QuadraticFit),
    /// Moreau envelope (parameter 1) of `mu |.|_1` evaluated at `b - x`.
    L1Envelope { b: Vec<f64>, mu: f64 },
    Zero,
}

impl SmoothOracle {
    pub fn least_squares(a: Matrix, f: Vec<f64>) -> Result<Self> {
        Ok(SmoothOracle::LeastSquares(QuadraticFit::new(a, f)?))
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            SmoothOracle::LeastSquares(q) => q.lipschitz(),
            SmoothOracle::L1Envelope { .. } => 1.0,
            SmoothOracle::Zero => 0.0,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothOracle::LeastSquares(q) => q.gradient(x),
            SmoothOracle::L1Envelope { b, mu } => {
                let r = sub(b, x);
                let p = prox_l1(&r, *mu);
                sub(&p, &r)
            }
            SmoothOracle::Zero => vec![0.0; x.len()],
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SmoothOracle::LeastSquares(q) => q.value(x),
            SmoothOracle::L1Envelope { b, mu } => {
                let r = sub(b, x);
                let p = prox_l1(&r, *mu);
                let d = sub(&r, &p);
                mu * p.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * dot(&d, &d)
            }
            SmoothOracle::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(prox_l1(&[2.0, -0.5, 0.0], 1.0), vec![1.0, 0.0, 0.0]);
        assert_eq!(prox_l1(&[3.0, -2.0], 0.0), vec![3.0, -2.0]);
        assert_eq!(prox_l1(&[-3.0], 1.0), vec![-2.0]);
    }

    #[test]
    fn group_examples() {
        let b = [0..2];
        assert_eq!(prox_group_l12(&[3.0, 4.0], &b, 5.0), vec![0.0, 0.0]);
        let out = prox_group_l12(&[3.0, 4.0], &b, 2.5);
        assert!((out[0] - 1.5).abs() < 1e-15 && (out[1] - 2.0).abs() < 1e-15);
        assert_eq!(prox_group_l12(&[0.0, 0.0], &b, 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn nuclear_diag() {
        let out = prox_nuclear(&Matrix::from_diag(&[3.0, 1.0]), 1.0).unwrap();
        assert!(out.sub(&Matrix::from_diag(&[2.0, 0.0])).frobenius_norm() < 1e-14);
        let z = prox_nuclear(&Matrix::zeros(2, 3), 1.0).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn affine_examples() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let p = project_affine(&[0.0, 5.0], &a, &[1.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 5.0).abs() < 1e-15);
        let p2 = project_affine(&p, &a, &[1.0]).unwrap();
        assert_eq!(p, p2);
        let dup = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(AffineSet::new(dup, vec![0.0, 0.0]), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn conjugate_of_l1_is_box_projection() {
        let j = ProxOracle::l1(1.0).unwrap();
        assert!((prox_conjugate(&j, &[5.0], 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((prox_conjugate(&j, &[0.3], 1.0).unwrap()[0] - 0.3).abs() < 1e-15);
        assert!((prox_conjugate(&j, &[-7.0], 2.5).unwrap()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_trivial() {
        let a = Matrix::identity(3);
        assert_eq!(grad_least_squares(&a, &[0.0; 3], &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        let x = [1.0, 1.0];
        let f = a.matvec(&x);
        assert_eq!(grad_least_squares(&a, &f, &x), vec![0.0, 0.0]);
    }

    #[test]
    fn quadratic_prox_optimality() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0]]);
        let q = QuadraticFit::new(a, vec![1.0, -2.0]).unwrap();
        let y = [0.3, -0.7, 1.1];
        let t = 0.8;
        let p = q.prox(&y, t);
        // p - y + t grad(p) = 0
        let g = q.gradient(&p);
        for i in 0..3 {
            assert!((p[i] - y[i] + t * g[i]).abs() < 1e-12);
        }
    }
}
