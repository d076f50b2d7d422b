//! Small dense linear algebra: row-major matrices, pivoted QR least squares,
//! one-sided Jacobi SVD, LU solves and companion polynomial roots.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let n = cols.len();
        let m = cols.first().map_or(0, |c| c.len());
        Matrix::from_fn(m, n, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T * y`.
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, y.len(), "tmatvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { data, ..*self }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { data, ..*self }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { data, ..*self }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Spectral norm via the SVD.
    pub fn norm2(&self) -> Result<f64> {
        Ok(small_svd(self)?.s.first().copied().unwrap_or(0.0))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled to avoid overflow and underflow.
pub fn norm(a: &[f64]) -> f64 {
    let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if amax == 0.0 || !amax.is_finite() {
        return amax;
    }
    let s: f64 = a.iter().map(|x| (x / amax) * (x / amax)).sum();
    amax * s.sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

fn check_finite(label: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{label} has non-finite entries")))
    }
}

/// Householder reflector `I - beta v v^T` mapping `x` onto a multiple of e1.
/// Returns `(v, beta, alpha)` with the image equal to `alpha * e1`.
fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let nx = norm(x);
    let mut v = x.to_vec();
    if nx == 0.0 {
        return (v, 0.0, 0.0);
    }
    let alpha = if x[0] >= 0.0 { -nx } else { nx };
    v[0] -= alpha;
    let vv = dot(&v, &v);
    let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
    (v, beta, alpha)
}

/// Applies `I - beta v v^T` to rows `r0..` of column `j` for every listed column.
fn reflect_cols(a: &mut Matrix, v: &[f64], beta: f64, r0: usize, cols: std::ops::Range<usize>) {
    if beta == 0.0 {
        return;
    }
    for j in cols {
        let mut s = 0.0;
        for (t, vi) in v.iter().enumerate() {
            s += vi * a[(r0 + t, j)];
        }
        s *= beta;
        for (t, vi) in v.iter().enumerate() {
            a[(r0 + t, j)] -= s * vi;
        }
    }
}

fn reflect_vec(b: &mut [f64], v: &[f64], beta: f64, r0: usize) {
    if beta == 0.0 {
        return;
    }
    let s = beta * dot(v, &b[r0..r0 + v.len()]);
    axpy(-s, v, &mut b[r0..r0 + v.len()]);
}

/// Result of a linear least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

/// Minimises `|A c - b|`; returns the minimum-norm minimiser when `A` is rank deficient.
///
/// Householder QR with column pivoting, followed by a complete orthogonal
/// decomposition of the leading rows when the numerical rank is short.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("least squares needs a non-empty matrix".into()));
    }
    if b.len() != m {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, expected {m}",
            b.len()
        )));
    }
    check_finite("matrix", a.as_slice())?;
    check_finite("right-hand side", b)?;

    let tol = 1e-12 * a.frobenius_norm();
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let kmax = m.min(n);
    let mut rank = 0;
    for k in 0..kmax {
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..n {
            let cn = norm(&(k..m).map(|i| r[(i, j)]).collect::<Vec<_>>());
            if cn > best_norm {
                best_norm = cn;
                best = j;
            }
        }
        if best_norm <= tol {
            break;
        }
        if best != k {
            perm.swap(k, best);
            for i in 0..m {
                r.data.swap(i * n + k, i * n + best);
            }
        }
        let x: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        let (v, beta, _) = householder(&x);
        reflect_cols(&mut r, &v, beta, k, k..n);
        reflect_vec(&mut qtb, &v, beta, k);
        for i in k + 1..m {
            r[(i, k)] = 0.0;
        }
        rank = k + 1;
    }

    let mut xp = vec![0.0; n];
    if rank == n {
        for i in (0..n).rev() {
            let mut s = qtb[i];
            for j in i + 1..n {
                s -= r[(i, j)] * xp[j];
            }
            xp[i] = s / r[(i, i)];
        }
    } else if rank > 0 {
        // [R11 R12] = [T^T 0] Qw^T with W = [R11 R12]^T = Qw [T; 0].
        let mut w = Matrix::from_fn(n, rank, |i, j| r[(j, i)]);
        let mut refl = Vec::with_capacity(rank);
        for k in 0..rank {
            let x: Vec<f64> = (k..n).map(|i| w[(i, k)]).collect();
            let (v, beta, _) = householder(&x);
            reflect_cols(&mut w, &v, beta, k, k..rank);
            refl.push((v, beta));
        }
        // T^T y = (Q^T b)[..rank], lower triangular.
        let mut y = vec![0.0; n];
        for i in 0..rank {
            let mut s = qtb[i];
            for j in 0..i {
                s -= w[(j, i)] * y[j];
            }
            y[i] = s / w[(i, i)];
        }
        for k in (0..rank).rev() {
            let (v, beta) = &refl[k];
            reflect_vec(&mut y, v, *beta, k);
        }
        xp = y;
    }
    let mut coeffs = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        coeffs[p] = xp[k];
    }
    let residual_norm = dist(&a.matvec(&coeffs), b);
    Ok(LeastSquares {
        coeffs,
        residual_norm,
        rank,
    })
}

/// Thin singular value decomposition `M = U diag(s) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.s.len(), |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.transpose())
    }
}

/// One-sided Jacobi SVD. Intended for small matrices (a few dozen rows or columns).
pub fn small_svd(m: &Matrix) -> Result<Svd> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidInput("svd of an empty matrix".into()));
    }
    check_finite("matrix", m.as_slice())?;
    if m.rows() < m.cols() {
        let t = small_svd(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (rows, n) = (m.rows(), m.cols());
    // columns stored contiguously
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut a, &mut v] {
                    let (lo, hi) = cols.split_at_mut(j);
                    let (ci, cj) = (&mut lo[i], &mut hi[0]);
                    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                        let (xi, yj) = (*x, *y);
                        *x = c * xi - s * yj;
                        *y = s * xi + c * yj;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let smax = order[0].0;
    let mut u = Matrix::zeros(rows, n);
    let mut vm = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (k, &(sig, j)) in order.iter().enumerate() {
        vm.set_col(k, &v[j]);
        s.push(sig);
        if sig > 1e-14 * smax.max(f64::MIN_POSITIVE) {
            ucols.push(scale(&a[j], 1.0 / sig));
        } else {
            ucols.push(complete_basis(&ucols, rows));
        }
    }
    for (k, c) in ucols.iter().enumerate() {
        u.set_col(k, c);
    }
    Ok(Svd { u, s, v: vm })
}

/// A unit vector orthogonal to `basis`, found by Gram-Schmidt on canonical vectors.
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best = vec![0.0; dim];
    let mut best_norm = -1.0;
    for e in 0..dim {
        let mut w = vec![0.0; dim];
        w[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(b, &w);
                axpy(-p, b, &mut w);
            }
        }
        let nw = norm(&w);
        if nw > best_norm {
            best_norm = nw;
            best = w;
        }
        if nw > 0.5 {
            break;
        }
    }
    scale(&best, 1.0 / best_norm)
}

/// LU factorisation with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::InvalidInput("LU needs a square matrix".into()));
        }
        check_finite("matrix", a.as_slice())?;
        let thresh = 1e-12 * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap();
            let piv = lu[(p, k)];
            if piv.abs() <= thresh || piv == 0.0 {
                return Err(Error::SingularSystem(format!(
                    "pivot {piv:e} at column {k} below threshold {thresh:e}"
                )));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::InvalidInput("right-hand side length mismatch".into()));
    }
    check_finite("right-hand side", b)?;
    Ok(Lu::new(a)?.solve(b))
}

/// Roots of `z^q - c1 z^{q-1} - ... - cq` and whether Durand-Kerner converged.
#[derive(Debug, Clone)]
pub struct CompanionRoots {
    pub roots: Vec<Complex64>,
    pub max_modulus: f64,
    /// False when the iteration stalled and `max_modulus` is a Gershgorin bound instead.
    pub converged: bool,
}

/// Maximum root modulus of the companion polynomial, equal to the spectral radius of `H(c)`.
pub fn companion_max_modulus(c: &[f64]) -> Result<f64> {
    Ok(companion_roots(c)?.max_modulus)
}

pub fn companion_roots(c: &[f64]) -> Result<CompanionRoots> {
    if c.is_empty() {
        return Err(Error::InvalidInput("companion polynomial needs q >= 1".into()));
    }
    check_finite("coefficients", c)?;
    let q = c.len();
    // monic coefficients, highest degree first: 1, -c1, ..., -cq
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(c.iter().map(|x| -x)).collect();
    let mut roots = Vec::with_capacity(q);
    while poly.len() > 1 && *poly.last().unwrap() == 0.0 {
        poly.pop();
        roots.push(Complex64::new(0.0, 0.0));
    }
    let deg = poly.len() - 1;
    let mut converged = true;
    if deg > 0 {
        let (found, ok) = durand_kerner(&poly);
        converged = ok;
        roots.extend(found);
    }
    let max_modulus = if converged {
        roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        gershgorin_bound(c)
    };
    Ok(CompanionRoots {
        roots,
        max_modulus,
        converged,
    })
}

fn gershgorin_bound(c: &[f64]) -> f64 {
    let q = c.len();
    if q == 1 {
        return c[0].abs();
    }
    let mut b = c[0].abs() + 1.0;
    for (i, ci) in c.iter().enumerate().skip(1) {
        let r = if i + 1 < q { ci.abs() + 1.0 } else { ci.abs() };
        b = b.max(r);
    }
    b
}

fn horner(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(poly[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in &poly[1..] {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn horner_abs(poly: &[f64], r: f64) -> f64 {
    poly.iter().fold(0.0, |acc, a| acc * r + a.abs())
}

fn durand_kerner(poly: &[f64]) -> (Vec<Complex64>, bool) {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-12;
    let deg = poly.len() - 1;
    let radius = 1.0 + poly[1..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32) * (radius / seed.norm().powi(k as i32)).min(radius))
        .collect();
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        let mut backward_ok = true;
        for i in 0..deg {
            let (p, _) = horner(poly, z[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = p / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            let (pn, _) = horner(poly, z[i]);
            if pn.norm() > 1e-14 * horner_abs(poly, z[i].norm()) {
                backward_ok = false;
            }
        }
        if max_step <= TOL || backward_ok {
            converged = true;
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = horner(poly, *zi);
            if dp.norm() > 0.0 {
                let cand = *zi - p / dp;
                if horner(poly, cand).0.norm() < p.norm() {
                    *zi = cand;
                }
            }
        }
    }
    (z, converged)
}
