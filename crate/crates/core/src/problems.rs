//! Seeded problem generators.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
pub use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Lasso,
    BasisPursuit,
    GroupBp,
    LowrankBp,
    Feasibility2Lines,
    PcpToy,
    PdL1Affine,
}

impl ProblemKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::BasisPursuit => "basis_pursuit",
            ProblemKind::GroupBp => "group_bp",
            ProblemKind::LowrankBp => "lowrank_bp",
            ProblemKind::Feasibility2Lines => "feasibility_2lines",
            ProblemKind::PcpToy => "pcp_toy",
            ProblemKind::PdL1Affine => "pd_l1_affine",
        }
    }
}

/// Generator input. Fields not used by a kind are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    /// Nonzeros, active groups, or sparse-component entries.
    pub sparsity: usize,
    pub rank: usize,
    pub block_size: usize,
    /// Matrix shape for low-rank kinds; `rows * cols` must equal `n`.
    pub shape: Option<(usize, usize)>,
    pub noise: f64,
    pub mu: f64,
    /// Angle between the two lines.
    pub alpha: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, seed: u64) -> Self {
        ProblemSpec {
            kind,
            m: 48,
            n: 128,
            sparsity: 8,
            rank: 2,
            block_size: 4,
            shape: None,
            noise: 0.0,
            mu: 1.0,
            alpha: std::f64::consts::FRAC_PI_4,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemMeta {
    pub m: usize,
    pub n: usize,
    pub sparsity: usize,
    pub rank: usize,
    pub block_size: usize,
    pub shape: Option<(usize, usize)>,
    pub seed: u64,
    pub noise_level: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    /// Measurement operator. For the two-line problem its rows are the line normals;
    /// for the PCP toy it is the identity.
    pub a: Matrix,
    /// Observations, or the matrix `b` flattened row-major for the PCP toy.
    pub f: Vec<f64>,
    pub ground_truth: Option<Vec<f64>>,
    pub noise: Option<Vec<f64>>,
    pub mu: f64,
    /// Second weight for the PCP toy (nuclear norm).
    pub mu2: f64,
    pub start: Vec<f64>,
    pub meta: ProblemMeta,
}

/// i.i.d. standard normal entries, filled row by row from [`Rng`].
pub fn random_gaussian_matrix(m: usize, n: usize, seed: u64) -> Matrix {
    gaussian(m, n, &mut Rng::new(seed))
}

fn gaussian(m: usize, n: usize, rng: &mut Rng) -> Matrix {
    Matrix::new(m, n, rng.normals(m * n)).expect("shape matches data")
}

/// Orthogonal matrix from Gram-Schmidt (applied twice) on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = rng.normals(n);
        for _ in 0..2 {
            for q in &cols {
                let p = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= p * qi;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            cols.push(v.iter().map(|x| x / nv).collect());
        }
    }
    Matrix::from_columns(&cols)
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.into()))
    }
}

fn sparse_vector(n: usize, k: usize, rng: &mut Rng) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in rng.choose(n, k) {
        let mut v = rng.normal();
        while v.abs() < 0.1 {
            v = rng.normal();
        }
        x[i] = v;
    }
    x
}

fn low_rank(rows: usize, cols: usize, r: usize, rng: &mut Rng, nonneg: bool) -> Vec<f64> {
    let mut u = gaussian(rows, r, rng);
    let mut v = gaussian(cols, r, rng);
    if nonneg {
        u = Matrix::from_fn(rows, r, |i, j| u[(i, j)].abs());
        v = Matrix::from_fn(cols, r, |i, j| v[(i, j)].abs());
    }
    u.matmul(&v.transpose()).into_vec()
}

fn observe(a: &Matrix, x: &[f64], noise: f64, rng: &mut Rng) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut f = a.matvec(x);
    if noise > 0.0 {
        let w: Vec<f64> = rng.normals(f.len()).iter().map(|e| noise * e).collect();
        for (fi, wi) in f.iter_mut().zip(&w) {
            *fi += wi;
        }
        (f, Some(w))
    } else {
        (f, None)
    }
}

pub fn gen_problem(spec: &ProblemSpec) -> Result<ProblemInstance> {
    check(spec.noise >= 0.0 && spec.noise.is_finite(), "noise must be non-negative")?;
    check(spec.mu > 0.0 && spec.mu.is_finite(), "mu must be positive")?;
    let mut rng = Rng::new(spec.seed);
    let (m, n) = (spec.m, spec.n);
    let mut meta = ProblemMeta {
        m,
        n,
        sparsity: spec.sparsity,
        rank: spec.rank,
        block_size: spec.block_size,
        shape: spec.shape,
        seed: spec.seed,
        noise_level: spec.noise,
    };
    let inst = |a, f, gt, noise, meta, start| ProblemInstance {
        kind: spec.kind,
        a,
        f,
        ground_truth: gt,
        noise,
        mu: spec.mu,
        mu2: spec.mu,
        start,
        meta,
    };
    match spec.kind {
        ProblemKind::Lasso | ProblemKind::BasisPursuit | ProblemKind::PdL1Affine => {
            check(m >= 1 && n >= 1, "dimensions must be positive")?;
            check(spec.sparsity <= n, "sparsity exceeds n")?;
            let a = gaussian(m, n, &mut rng);
            let x = sparse_vector(n, spec.sparsity, &mut rng);
            let noise = if spec.kind == ProblemKind::Lasso { spec.noise } else { 0.0 };
            meta.noise_level = noise;
            let (f, w) = observe(&a, &x, noise, &mut rng);
            Ok(inst(a, f, Some(x), w, meta, vec![0.0; n]))
        }
        ProblemKind::GroupBp => {
            check(m >= 1 && n >= 1 && spec.block_size >= 1, "dimensions must be positive")?;
            check(n % spec.block_size == 0, "block size must divide n")?;
            let groups = n / spec.block_size;
            check(spec.sparsity <= groups, "active groups exceed group count")?;
            let a = gaussian(m, n, &mut rng);
            let mut x = vec![0.0; n];
            for g in rng.choose(groups, spec.sparsity) {
                for i in g * spec.block_size..(g + 1) * spec.block_size {
                    x[i] = rng.normal();
                }
            }
            let (f, w) = observe(&a, &x, spec.noise, &mut rng);
            Ok(inst(a, f, Some(x), w, meta, vec![0.0; n]))
        }
        ProblemKind::LowrankBp => {
            let (rows, cols) = spec
                .shape
                .ok_or_else(|| Error::InvalidConfig("low-rank problem needs a matrix shape".into()))?;
            check(rows >= 1 && cols >= 1 && m >= 1, "dimensions must be positive")?;
            check(rows * cols == n, "shape must match n")?;
            check(spec.rank <= rows.min(cols), "rank exceeds matrix dimensions")?;
            let a = gaussian(m, n, &mut rng);
            let x = low_rank(rows, cols, spec.rank, &mut rng, false);
            let (f, w) = observe(&a, &x, spec.noise, &mut rng);
            Ok(inst(a, f, Some(x), w, meta, vec![0.0; n]))
        }
        ProblemKind::Feasibility2Lines => {
            check(
                spec.alpha > 0.0 && spec.alpha < std::f64::consts::FRAC_PI_2,
                "alpha must lie in (0, pi/2)",
            )?;
            let base = 2.0 * std::f64::consts::PI * rng.uniform();
            let normal = |t: f64| vec![-t.sin(), t.cos()];
            let a = Matrix::from_rows(&[normal(base), normal(base + spec.alpha)]);
            meta.m = 2;
            meta.n = 2;
            let start = rng.normals(2);
            Ok(inst(a, vec![0.0, 0.0], Some(vec![0.0, 0.0]), None, meta, start))
        }
        ProblemKind::PcpToy => {
            let (rows, cols) = spec.shape.unwrap_or((n, n));
            check(rows >= 1 && cols >= 1, "dimensions must be positive")?;
            check(spec.rank <= rows.min(cols), "rank exceeds matrix dimensions")?;
            check(spec.sparsity <= rows * cols, "sparsity exceeds entry count")?;
            let size = rows * cols;
            let xl = low_rank(rows, cols, spec.rank, &mut rng, true);
            let xs: Vec<f64> = sparse_vector(size, spec.sparsity, &mut rng)
                .iter()
                .map(|v| 10.0 * v)
                .collect();
            let mut b: Vec<f64> = xl.iter().zip(&xs).map(|(l, s)| l + s).collect();
            let w = (spec.noise > 0.0).then(|| {
                let w: Vec<f64> = rng.normals(size).iter().map(|e| spec.noise * e).collect();
                for (bi, wi) in b.iter_mut().zip(&w) {
                    *bi += wi;
                }
                w
            });
            meta.m = size;
            meta.n = size;
            meta.shape = Some((rows, cols));
            let mut p = inst(Matrix::identity(size), b, Some(xl), w, meta, vec![0.0; size]);
            p.mu = 1.0 / (rows.max(cols) as f64).sqrt();
            p.mu2 = spec.mu;
            Ok(p)
        }
    }
}
