//! Fixed-point operators `z_{k+1} = F(z_k)` for the splitting methods, with
//! the relaxation and inertial building blocks used by the baselines.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm, Matrix};
use crate::prox::{prox_conjugate, ProxKind, ProxOracle, SmoothOracle};

/// Which identification metric is meaningful for a solver's primal variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    None,
    Support,
    Rank { rows: usize, cols: usize },
}

/// Quantities observed at a fixed-point variable.
#[derive(Debug, Clone, Default)]
pub struct Observation {
    pub objective: Option<f64>,
    /// Primal variable whose support or rank is tracked.
    pub structured: Option<Vec<f64>>,
}

/// Named auxiliary sequences produced by one application of `F`.
pub type Shadows = Vec<(&'static str, Vec<f64>)>;

pub trait FixedPointOperator: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// `F(z)` together with the solver's shadow sequences.
    fn apply_with_shadows(&self, z: &[f64]) -> Result<(Vec<f64>, Shadows)>;

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_with_shadows(z)?.0)
    }

    /// Solution estimate carried by `z`.
    fn primal(&self, z: &[f64]) -> Vec<f64>;

    fn observe(&self, _z: &[f64]) -> Observation {
        Observation::default()
    }

    fn structure(&self) -> Structure {
        Structure::None
    }

    /// Stopping residual between consecutive fixed-point variables.
    fn residual(&self, z_new: &[f64], z_old: &[f64]) -> f64 {
        dist(z_new, z_old)
    }

    /// Coordinate blocks fitted separately by the predictor.
    fn blocks(&self) -> Vec<Range<usize>> {
        vec![0..self.dim()]
    }
}

/// Fixed-point variable, shadow sequences and iteration counter of one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub z: Vec<f64>,
    pub shadows: Shadows,
    pub k: usize,
}

impl SolverState {
    pub fn new(z: Vec<f64>) -> Self {
        SolverState {
            z,
            shadows: Vec::new(),
            k: 0,
        }
    }

    pub fn shadow(&self, name: &str) -> Option<&[f64]> {
        self.shadows
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// One plain step `z_{k+1} = F(z_k)`.
pub fn step(op: &dyn FixedPointOperator, state: &SolverState) -> Result<SolverState> {
    let (z, shadows) = op.apply_with_shadows(&state.z)?;
    Ok(SolverState {
        z,
        shadows,
        k: state.k + 1,
    })
}

/// `z_{k+1} = z_k + lambda (F(z_k) - z_k)`.
pub fn km_relaxed_step(
    op: &dyn FixedPointOperator,
    state: &SolverState,
    lambda: f64,
) -> Result<SolverState> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("relaxation {lambda} must be non-negative")));
    }
    let (fz, shadows) = op.apply_with_shadows(&state.z)?;
    let z = state
        .z
        .iter()
        .zip(&fz)
        .map(|(a, b)| a + lambda * (b - a))
        .collect();
    Ok(SolverState {
        z,
        shadows,
        k: state.k + 1,
    })
}

/// `z_k + a (z_k - z_{k-1}) + b (z_{k-1} - z_{k-2})`; `points` is newest first.
/// Missing history is treated as zero displacement.
pub fn inertial_extrapolate(points: &[&[f64]], a: f64, b: f64) -> Vec<f64> {
    let zk = points[0];
    let mut out = zk.to_vec();
    if let Some(z1) = points.get(1) {
        for (o, (x, y)) in out.iter_mut().zip(zk.iter().zip(z1.iter())) {
            *o += a * (x - y);
        }
        if let Some(z2) = points.get(2) {
            for (o, (x, y)) in out.iter_mut().zip(z1.iter().zip(z2.iter())) {
                *o += b * (x - y);
            }
        }
    }
    out
}

/// FISTA momentum `t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2`, `a_k = (t_{k-1} - 1) / t_k`.
#[derive(Debug, Clone)]
pub struct FistaSchedule {
    t: f64,
}

impl Default for FistaSchedule {
    fn default() -> Self {
        FistaSchedule { t: 1.0 }
    }
}

impl FistaSchedule {
    pub fn next_coefficient(&mut self) -> f64 {
        let t_next = (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt()) / 2.0;
        let a = (self.t - 1.0) / t_next;
        self.t = t_next;
        a
    }
}

fn structure_of(r: &ProxOracle) -> Structure {
    match r.kind {
        ProxKind::L1 | ProxKind::GroupL12 { .. } => Structure::Support,
        ProxKind::Nuclear { rows, cols } => Structure::Rank { rows, cols },
        _ => Structure::None,
    }
}

/// `x_{k+1} = prox_{gamma R}(x_k - gamma grad F(x_k))`. Gradient descent is the case `R = 0`.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    pub r: ProxOracle,
    pub f: SmoothOracle,
    pub gamma: f64,
    dim: usize,
}

impl ForwardBackward {
    pub fn new(r: ProxOracle, f: SmoothOracle, gamma: f64, dim: usize) -> Result<Self> {
        let l = f.lipschitz();
        if !(gamma > 0.0) || (l > 0.0 && gamma >= 2.0 / l) {
            return Err(Error::InvalidConfig(format!(
                "forward-backward step {gamma} outside (0, 2/L) with L = {l}"
            )));
        }
        Ok(ForwardBackward { r, f, gamma, dim })
    }

    /// Step `1/L`, or 1 when `L = 0`.
    pub fn with_default_step(r: ProxOracle, f: SmoothOracle, dim: usize) -> Result<Self> {
        let l = f.lipschitz();
        let gamma = if l > 0.0 { 1.0 / l } else { 1.0 };
        Self::new(r, f, gamma, dim)
    }
}

impl FixedPointOperator for ForwardBackward {
    fn name(&self) -> &'static str {
        if matches!(self.r.kind, ProxKind::Zero) {
            "gd"
        } else {
            "fb"
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_with_shadows(&self, x: &[f64]) -> Result<(Vec<f64>, Shadows)> {
        let g = self.f.gradient(x);
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - self.gamma * b).collect();
        Ok((self.r.prox(&y, self.gamma)?, Vec::new()))
    }

    fn primal(&self, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }

    fn observe(&self, z: &[f64]) -> Observation {
        Observation {
            objective: Some(self.f.value(z) + self.r.value(z)),
            structured: Some(z.to_vec()),
        }
    }

    fn structure(&self) -> Structure {
        structure_of(&self.r)
    }
}

/// `u = prox_{gamma R}(2x - z)`, `z+ = z + u - x`, `x+ = prox_{gamma J}(z+)` with `x = prox_{gamma J}(z)`.
#[derive(Debug, Clone)]
pub struct DouglasRachford {
    pub r: ProxOracle,
    pub j: ProxOracle,
    pub gamma: f64,
    dim: usize,
}

impl DouglasRachford {
    pub fn new(r: ProxOracle, j: ProxOracle, gamma: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("Douglas-Rachford step {gamma} must be positive")));
        }
        Ok(DouglasRachford { r, j, gamma, dim })
    }

    /// Shadow `x_0 = prox_{gamma J}(z_0)`.
    pub fn initial_shadow(&self, z0: &[f64]) -> Result<Vec<f64>> {
        self.j.prox(z0, self.gamma)
    }

    fn reflect_step(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = self.j.prox(z, self.gamma)?;
        let refl: Vec<f64> = x.iter().zip(z).map(|(a, b)| 2.0 * a - b).collect();
        let u = self.r.prox(&refl, self.gamma)?;
        Ok((x, u))
    }
}

impl FixedPointOperator for DouglasRachford {
    fn name(&self) -> &'static str {
        "dr"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_with_shadows(&self, z: &[f64]) -> Result<(Vec<f64>, Shadows)> {
        let (x, u) = self.reflect_step(z)?;
        let zn: Vec<f64> = z
            .iter()
            .zip(u.iter().zip(&x))
            .map(|(zi, (ui, xi))| zi + ui - xi)
            .collect();
        let xn = self.j.prox(&zn, self.gamma)?;
        Ok((zn, vec![("u", u), ("x", xn)]))
    }

    fn primal(&self, z: &[f64]) -> Vec<f64> {
        self.j.prox(z, self.gamma).expect("prox evaluated before")
    }

    fn observe(&self, z: &[f64]) -> Observation {
        match self.reflect_step(z) {
            Ok((x, u)) => Observation {
                objective: Some(self.r.value(&x) + self.j.value(&x)),
                structured: Some(u),
            },
            Err(_) => Observation::default(),
        }
    }

    fn structure(&self) -> Structure {
        structure_of(&self.r)
    }
}

/// Primal-dual splitting on `z = (x, w)` for `min R(x) + J(L x)`.
#[derive(Debug, Clone)]
pub struct PrimalDual {
    pub r: ProxOracle,
    pub j: ProxOracle,
    pub l_op: Matrix,
    pub gamma_r: f64,
    pub gamma_j: f64,
    pub tau: f64,
}

impl PrimalDual {
    pub fn new(
        r: ProxOracle,
        j: ProxOracle,
        l_op: Matrix,
        gamma_r: f64,
        gamma_j: f64,
        tau: f64,
    ) -> Result<Self> {
        let ln = l_op.norm2()?;
        if !(gamma_r > 0.0 && gamma_j > 0.0) || gamma_r * gamma_j * ln * ln >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "primal-dual steps need gamma_R gamma_J |L|^2 < 1, got {}",
                gamma_r * gamma_j * ln * ln
            )));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidConfig(format!("tau = {tau} outside [0, 1]")));
        }
        Ok(PrimalDual {
            r,
            j,
            l_op,
            gamma_r,
            gamma_j,
            tau,
        })
    }

    /// `gamma_R = gamma_J = 0.99 / |L|`, `tau = 1`.
    pub fn with_default_steps(r: ProxOracle, j: ProxOracle, l_op: Matrix) -> Result<Self> {
        let g = 0.99 / l_op.norm2()?;
        Self::new(r, j, l_op, g, g, 1.0)
    }

    pub fn primal_dim(&self) -> usize {
        self.l_op.cols()
    }

    pub fn dual_dim(&self) -> usize {
        self.l_op.rows()
    }

    pub fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.primal_dim())
    }
}

impl FixedPointOperator for PrimalDual {
    fn name(&self) -> &'static str {
        "pd"
    }

    fn dim(&self) -> usize {
        self.primal_dim() + self.dual_dim()
    }

    fn apply_with_shadows(&self, z: &[f64]) -> Result<(Vec<f64>, Shadows)> {
        let (x, w) = self.split(z);
        let ltw = self.l_op.tmatvec(w);
        let y: Vec<f64> = x.iter().zip(&ltw).map(|(a, b)| a - self.gamma_r * b).collect();
        let xn = self.r.prox(&y, self.gamma_r)?;
        let xbar: Vec<f64> = xn
            .iter()
            .zip(x)
            .map(|(a, b)| a + self.tau * (a - b))
            .collect();
        let lx = self.l_op.matvec(&xbar);
        let wy: Vec<f64> = w.iter().zip(&lx).map(|(a, b)| a + self.gamma_j * b).collect();
        let wn = prox_conjugate(&self.j, &wy, self.gamma_j)?;
        let mut zn = xn.clone();
        zn.extend_from_slice(&wn);
        Ok((zn, vec![("x", xn), ("w", wn), ("xbar", xbar)]))
    }

    fn primal(&self, z: &[f64]) -> Vec<f64> {
        self.split(z).0.to_vec()
    }

    fn observe(&self, z: &[f64]) -> Observation {
        let x = self.split(z).0;
        Observation {
            objective: Some(self.r.value(x) + self.j.value(&self.l_op.matvec(x))),
            structured: Some(x.to_vec()),
        }
    }

    fn structure(&self) -> Structure {
        structure_of(&self.r)
    }
}

/// Generalized forward-backward on `z = (z_1, ..., z_m)` with `x = sum_i w_i z_i`.
#[derive(Debug, Clone)]
pub struct GeneralizedFb {
    pub f: SmoothOracle,
    pub rs: Vec<ProxOracle>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    n: usize,
}

impl GeneralizedFb {
    pub fn new(
        f: SmoothOracle,
        rs: Vec<ProxOracle>,
        weights: Vec<f64>,
        gamma: f64,
        n: usize,
    ) -> Result<Self> {
        if rs.is_empty() || rs.len() != weights.len() {
            return Err(Error::InvalidConfig(
                "generalized forward-backward needs one weight per nonsmooth term".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidConfig("weights must lie in (0, 1]".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, expected 1")));
        }
        let l = f.lipschitz();
        if !(gamma > 0.0) || (l > 0.0 && gamma >= 2.0 / l) {
            return Err(Error::InvalidConfig(format!(
                "generalized forward-backward step {gamma} outside (0, 2/L) with L = {l}"
            )));
        }
        Ok(GeneralizedFb {
            f,
            rs,
            weights,
            gamma,
            n,
        })
    }

    /// Equal weights and `gamma = 1/L` (1 when `L = 0`).
    pub fn with_defaults(f: SmoothOracle, rs: Vec<ProxOracle>, n: usize) -> Result<Self> {
        let m = rs.len();
        let l = f.lipschitz();
        let gamma = if l > 0.0 { 1.0 / l } else { 1.0 };
        Self::new(f, rs, vec![1.0 / m as f64; m], gamma, n)
    }

    /// Stacks `m` copies of `x0`.
    pub fn lift(&self, x0: &[f64]) -> Vec<f64> {
        x0.repeat(self.rs.len())
    }

    pub fn average(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, w) in self.weights.iter().enumerate() {
            for (xj, zj) in x.iter_mut().zip(&z[i * self.n..(i + 1) * self.n]) {
                *xj += w * zj;
            }
        }
        x
    }
}

impl FixedPointOperator for GeneralizedFb {
    fn name(&self) -> &'static str {
        "gfb"
    }

    fn dim(&self) -> usize {
        self.n * self.rs.len()
    }

    fn apply_with_shadows(&self, z: &[f64]) -> Result<(Vec<f64>, Shadows)> {
        let n = self.n;
        let x = self.average(z);
        let g = self.f.gradient(&x);
        let mut zn = Vec::with_capacity(z.len());
        for (i, (r, w)) in self.rs.iter().zip(&self.weights).enumerate() {
            let zi = &z[i * n..(i + 1) * n];
            let y: Vec<f64> = (0..n)
                .map(|j| 2.0 * x[j] - zi[j] - self.gamma * g[j])
                .collect();
            let u = r.prox(&y, self.gamma / w)?;
            zn.extend((0..n).map(|j| zi[j] + u[j] - x[j]));
        }
        let xn = self.average(&zn);
        Ok((zn, vec![("x", xn)]))
    }

    fn primal(&self, z: &[f64]) -> Vec<f64> {
        self.average(z)
    }

    fn observe(&self, z: &[f64]) -> Observation {
        let x = self.average(z);
        let obj = self.f.value(&x) + self.rs.iter().map(|r| r.value(&x)).sum::<f64>();
        Observation {
            objective: Some(obj),
            structured: Some(x),
        }
    }

    fn structure(&self) -> Structure {
        self.rs
            .iter()
            .map(structure_of)
            .find(|s| *s != Structure::None)
            .unwrap_or(Structure::None)
    }

    fn residual(&self, z_new: &[f64], z_old: &[f64]) -> f64 {
        self.blocks()
            .into_iter()
            .map(|b| dist(&z_new[b.clone()], &z_old[b]))
            .sum()
    }

    fn blocks(&self) -> Vec<Range<usize>> {
        (0..self.rs.len()).map(|i| i * self.n..(i + 1) * self.n).collect()
    }
}

/// Affine map `z -> T z + d`, used for synthetic tests of the drivers.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    pub t: Matrix,
    pub d: Vec<f64>,
}

impl AffineOperator {
    pub fn new(t: Matrix, d: Vec<f64>) -> Result<Self> {
        if t.rows() != t.cols() || t.rows() != d.len() {
            return Err(Error::InvalidInput("affine operator dimension mismatch".into()));
        }
        Ok(AffineOperator { t, d })
    }
}

impl FixedPointOperator for AffineOperator {
    fn name(&self) -> &'static str {
        "affine"
    }

    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply_with_shadows(&self, z: &[f64]) -> Result<(Vec<f64>, Shadows)> {
        let mut out = self.t.matvec(z);
        for (o, d) in out.iter_mut().zip(&self.d) {
            *o += d;
        }
        Ok((out, Vec::new()))
    }

    fn primal(&self, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }
}

/// `|F(z) - z|`.
pub fn fixed_point_residual(op: &dyn FixedPointOperator, z: &[f64]) -> Result<f64> {
    Ok(norm(&crate::linalg::sub(&op.apply(z)?, z)))
}
