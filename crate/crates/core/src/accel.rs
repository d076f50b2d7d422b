//! Trajectory-following linear prediction, its safeguard, and the MPE/RRE baselines.

use std::collections::VecDeque;
use std::ops::Range;

use crate::driver::{run, Accelerator, RunOptions, RunOutcome};
use crate::error::{Error, Result};
use crate::linalg::{companion_roots, dot, least_squares, norm, solve_linear, sub, Matrix};
use crate::splitting::FixedPointOperator;

/// The last `capacity` displacement vectors, newest first.
#[derive(Debug, Clone)]
pub struct DifferenceBuffer {
    capacity: usize,
    cols: VecDeque<Vec<f64>>,
}

impl DifferenceBuffer {
    pub fn new(capacity: usize) -> Self {
        DifferenceBuffer {
            capacity,
            cols: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn push(&mut self, v: Vec<f64>) {
        self.cols.push_front(v);
        self.cols.truncate(self.capacity);
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.cols.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Column `j`, i.e. `v_{k-j}` when the newest entry is `v_k`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    /// Matrix with the buffered columns `range`.
    pub fn matrix(&self, range: Range<usize>) -> Matrix {
        let cols: Vec<Vec<f64>> = range.map(|j| self.cols[j].clone()).collect();
        Matrix::from_columns(&cols)
    }

    pub fn clear(&mut self) {
        self.cols.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Fixed(f64),
    Safeguard { a: f64, b: f64, delta: f64 },
}

impl Gain {
    pub fn safeguard_default() -> Self {
        Gain::Safeguard {
            a: 1.0,
            b: 1e6,
            delta: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub q: usize,
    pub horizon: Horizon,
    pub gain: Gain,
    /// Extrapolate when `k mod (q + cadence_offset) == 0`.
    pub cadence_offset: usize,
    /// Accept only predictions making an acute angle with `v_k`.
    pub fb_angle_guard: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            q: 4,
            horizon: Horizon::Infinite,
            gain: Gain::Fixed(1.0),
            cadence_offset: 2,
            fb_angle_guard: false,
        }
    }
}

impl PredictorConfig {
    pub fn new(q: usize, horizon: Horizon) -> Self {
        PredictorConfig {
            q,
            horizon,
            ..Default::default()
        }
    }

    pub fn with_safeguard(mut self, a: f64, b: f64, delta: f64) -> Self {
        self.gain = Gain::Safeguard { a, b, delta };
        self
    }

    pub fn period(&self) -> usize {
        self.q + self.cadence_offset
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("q must be at least 1".into()));
        }
        if self.cadence_offset < 2 {
            return Err(Error::InvalidConfig("cadence offset must be at least 2".into()));
        }
        if let Horizon::Finite(0) = self.horizon {
            return Err(Error::InvalidConfig("finite horizon s must be at least 1".into()));
        }
        match self.gain {
            Gain::Fixed(a) if !(a >= 0.0 && a.is_finite()) => {
                Err(Error::InvalidConfig(format!("fixed gain {a} must be non-negative")))
            }
            Gain::Safeguard { a, b, delta } if !(a > 0.0 && b > 0.0 && delta > 0.0) => Err(
                Error::InvalidConfig("safeguard parameters a, b, delta must be positive".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Fitted coefficients `c` of `v_k ~ V_{k-1} c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub rho: f64,
    /// False when `rho` is a Gershgorin bound because root finding stalled.
    pub rho_exact: bool,
    pub one_minus_sum: f64,
}

impl FitResult {
    /// Evaluates the fit statistics of given coefficients.
    pub fn from_coefficients(v_prev: &Matrix, v_k: &[f64], c: Vec<f64>) -> Result<Self> {
        let epsilon = norm(&sub(&v_prev.matvec(&c), v_k));
        let roots = companion_roots(&c)?;
        let one_minus_sum = 1.0 - c.iter().sum::<f64>();
        Ok(FitResult {
            c,
            epsilon,
            rho: roots.max_modulus,
            rho_exact: roots.converged,
            one_minus_sum,
        })
    }
}

/// Least-squares fit with unit-normalised columns; zero columns get coefficient 0.
pub fn fit_coefficients(v_prev: &Matrix, v_k: &[f64]) -> Result<FitResult> {
    let q = v_prev.cols();
    if q == 0 || v_prev.rows() != v_k.len() {
        return Err(Error::InvalidInput("fit needs q >= 1 columns of matching length".into()));
    }
    let norms: Vec<f64> = (0..q).map(|j| norm(&v_prev.col(j))).collect();
    let active: Vec<usize> = (0..q).filter(|&j| norms[j] > 0.0).collect();
    let mut c = vec![0.0; q];
    if !active.is_empty() {
        let scaled = Matrix::from_fn(v_prev.rows(), active.len(), |i, t| {
            v_prev[(i, active[t])] / norms[active[t]]
        });
        let ls = least_squares(&scaled, v_k)?;
        for (t, &j) in active.iter().enumerate() {
            c[j] = ls.coeffs[t] / norms[j];
        }
    }
    FitResult::from_coefficients(v_prev, v_k, c)
}

/// `H(c)`: first column `c`, ones on the superdiagonal.
pub fn companion(c: &[f64]) -> Matrix {
    let q = c.len();
    let mut h = Matrix::zeros(q, q);
    for (i, &ci) in c.iter().enumerate() {
        h[(i, 0)] = ci;
        if i + 1 < q {
            h[(i, i + 1)] = 1.0;
        }
    }
    h
}

fn first_column(c: &Matrix) -> Vec<f64> {
    c.col(0)
}

fn e1(q: usize) -> Vec<f64> {
    let mut e = vec![0.0; q];
    e[0] = 1.0;
    e
}

/// First column of `sum_{i=1}^s C^i`.
pub fn power_sum_first_column(c: &Matrix, s: usize) -> Vec<f64> {
    let q = c.rows();
    let closed = (|| -> Option<Vec<f64>> {
        let i_minus_c = Matrix::identity(q).sub(c);
        let y = solve_linear(&i_minus_c, &e1(q)).ok()?;
        // (C - C^{s+1}) y
        let mut p = c.matvec(&y);
        let mut cp = p.clone();
        for _ in 0..s {
            cp = c.matvec(&cp);
        }
        for (a, b) in p.iter_mut().zip(&cp) {
            *a -= b;
        }
        p.iter().all(|x| x.is_finite()).then_some(p)
    })();
    closed.unwrap_or_else(|| {
        let mut acc = vec![0.0; q];
        let mut col = e1(q);
        for _ in 0..s {
            col = c.matvec(&col);
            for (a, b) in acc.iter_mut().zip(&col) {
                *a += b;
            }
        }
        acc
    })
}

/// `z_k + V_k (sum_{i=1}^s C^i)_{(:,1)}`.
pub fn predict_finite(zk: &[f64], vk: &Matrix, c: &Matrix, s: usize) -> Result<Vec<f64>> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let y = power_sum_first_column(c, s);
    let d = vk.matvec(&y);
    Ok(zk.iter().zip(&d).map(|(a, b)| a + b).collect())
}

/// Outcome of an extrapolation attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Point(Vec<f64>),
    /// Spectral radius of the companion matrix is not below 1.
    RhoGuard { rho: f64 },
    /// The normaliser `1 - sum c_i` (or `sum c_i` for MPE) vanishes.
    Degenerate { normalizer: f64 },
}

impl Prediction {
    pub fn point(self) -> Option<Vec<f64>> {
        match self {
            Prediction::Point(p) => Some(p),
            _ => None,
        }
    }
}

pub const RHO_MARGIN: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `z_{k-1} + V_k ((I - C)^{-1})_{(:,1)}`.
pub fn predict_infinite(zkm1: &[f64], vk: &Matrix, c: &Matrix) -> Result<Prediction> {
    let coeffs = first_column(c);
    let rho = companion_roots(&coeffs)?.max_modulus;
    if !(rho < 1.0 - RHO_MARGIN) {
        return Ok(Prediction::RhoGuard { rho });
    }
    let oms = 1.0 - coeffs.iter().sum::<f64>();
    if oms.abs() <= DEGENERACY_TOL {
        return Ok(Prediction::Degenerate { normalizer: oms });
    }
    let q = c.rows();
    let y = match solve_linear(&Matrix::identity(q).sub(c), &e1(q)) {
        Ok(y) => y,
        Err(Error::SingularSystem(_)) => return Ok(Prediction::Degenerate { normalizer: oms }),
        Err(e) => return Err(e),
    };
    let d = vk.matvec(&y);
    Ok(Prediction::Point(
        zkm1.iter().zip(&d).map(|(a, b)| a + b).collect(),
    ))
}

/// `min(a, b / (k^{1+delta} |E|))`, or `a` when `|E| = 0`.
pub fn safeguard_gain(k: usize, e_norm: f64, a: f64, b: f64, delta: f64) -> f64 {
    if e_norm == 0.0 {
        return a;
    }
    a.min(b / ((k as f64).powf(1.0 + delta) * e_norm))
}

/// Supplies the coefficients used at an extrapolation step.
pub trait CoefficientSource: Send {
    fn fit(&mut self, k: usize, v_prev: &Matrix, v_k: &[f64]) -> Result<FitResult>;
}

/// The least-squares fit of [`fit_coefficients`].
#[derive(Debug, Default, Clone)]
pub struct LeastSquaresFit;

impl CoefficientSource for LeastSquaresFit {
    fn fit(&mut self, _k: usize, v_prev: &Matrix, v_k: &[f64]) -> Result<FitResult> {
        fit_coefficients(v_prev, v_k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOutcome {
    Accepted,
    RhoGuard,
    Degenerate,
    AngleGuard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationEvent {
    pub k: usize,
    pub block: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub one_minus_sum: f64,
    pub e_norm: f64,
    pub gain: f64,
    pub outcome: EventOutcome,
}

/// The adaptive trajectory-following predictor as an [`Accelerator`].
pub struct A2Fom {
    cfg: PredictorConfig,
    blocks: Vec<Range<usize>>,
    buffers: Vec<DifferenceBuffer>,
    prev_z: Option<Vec<f64>>,
    source: Box<dyn CoefficientSource>,
    events: Vec<ExtrapolationEvent>,
}

impl A2Fom {
    pub fn new(cfg: PredictorConfig, blocks: Vec<Range<usize>>) -> Result<Self> {
        Self::with_source(cfg, blocks, Box::new(LeastSquaresFit))
    }

    pub fn for_operator(cfg: PredictorConfig, op: &dyn FixedPointOperator) -> Result<Self> {
        Self::new(cfg, op.blocks())
    }

    pub fn with_source(
        cfg: PredictorConfig,
        blocks: Vec<Range<usize>>,
        source: Box<dyn CoefficientSource>,
    ) -> Result<Self> {
        cfg.validate()?;
        if blocks.is_empty() {
            return Err(Error::InvalidConfig("at least one block is required".into()));
        }
        let buffers = blocks.iter().map(|_| DifferenceBuffer::new(cfg.q + 1)).collect();
        Ok(A2Fom {
            cfg,
            blocks,
            buffers,
            prev_z: None,
            source,
            events: Vec::new(),
        })
    }

    pub fn events(&self) -> &[ExtrapolationEvent] {
        &self.events
    }

    /// `sum a_k |E_k|` over accepted extrapolations.
    pub fn accumulated_perturbation(&self) -> f64 {
        self.events
            .iter()
            .filter(|e| e.outcome == EventOutcome::Accepted)
            .map(|e| e.gain * e.e_norm)
            .sum()
    }

    /// Direction `E` for one block, or the reason it was rejected.
    fn block_direction(
        &mut self,
        k: usize,
        b: usize,
        zk: &[f64],
        zkm1: &[f64],
    ) -> Result<(Option<Vec<f64>>, ExtrapolationEvent)> {
        let q = self.cfg.q;
        let buf = &self.buffers[b];
        let v_prev = buf.matrix(1..q + 1);
        let vk_mat = buf.matrix(0..q);
        let fit = self.source.fit(k, &v_prev, buf.column(0))?;
        let mut ev = ExtrapolationEvent {
            k,
            block: b,
            rho: fit.rho,
            epsilon: fit.epsilon,
            one_minus_sum: fit.one_minus_sum,
            e_norm: 0.0,
            gain: 0.0,
            outcome: EventOutcome::Accepted,
        };
        if !(fit.rho < 1.0 - RHO_MARGIN) {
            ev.outcome = EventOutcome::RhoGuard;
            return Ok((None, ev));
        }
        let cm = companion(&fit.c);
        let dir = match self.cfg.horizon {
            Horizon::Finite(s) => sub(&predict_finite(zk, &vk_mat, &cm, s)?, zk),
            Horizon::Infinite => match predict_infinite(zkm1, &vk_mat, &cm)? {
                Prediction::Point(p) => sub(&p, zk),
                Prediction::RhoGuard { .. } => {
                    ev.outcome = EventOutcome::RhoGuard;
                    return Ok((None, ev));
                }
                Prediction::Degenerate { .. } => {
                    ev.outcome = EventOutcome::Degenerate;
                    return Ok((None, ev));
                }
            },
        };
        ev.e_norm = norm(&dir);
        if self.cfg.fb_angle_guard && dot(buf.column(0), &dir) < 0.0 {
            ev.outcome = EventOutcome::AngleGuard;
            return Ok((None, ev));
        }
        ev.gain = match self.cfg.gain {
            Gain::Fixed(a) => a,
            Gain::Safeguard { a, b, delta } => safeguard_gain(k, ev.e_norm, a, b, delta),
        };
        Ok((Some(dir), ev))
    }
}

impl Accelerator for A2Fom {
    fn name(&self) -> String {
        let s = match self.cfg.horizon {
            Horizon::Finite(s) => s.to_string(),
            Horizon::Infinite => "inf".into(),
        };
        format!("a2fom(q={},s={})", self.cfg.q, s)
    }

    fn propose(&mut self, k: usize, z: &[f64]) -> Result<Option<Vec<f64>>> {
        let prev = self.prev_z.replace(z.to_vec());
        let Some(prev) = prev else {
            return Ok(None);
        };
        for (buf, r) in self.buffers.iter_mut().zip(&self.blocks) {
            buf.push(sub(&z[r.clone()], &prev[r.clone()]));
        }
        if k == 0 || k % self.cfg.period() != 0 || !self.buffers.iter().all(|b| b.is_full()) {
            return Ok(None);
        }
        let mut out = z.to_vec();
        let mut any = false;
        for b in 0..self.blocks.len() {
            let r = self.blocks[b].clone();
            let (dir, ev) = self.block_direction(k, b, &z[r.clone()], &prev[r.clone()])?;
            if let Some(d) = dir {
                if ev.gain > 0.0 {
                    for (o, di) in out[r].iter_mut().zip(&d) {
                        *o += ev.gain * di;
                    }
                    any = true;
                }
            }
            self.events.push(ev);
        }
        Ok(any.then_some(out))
    }
}

/// Result of [`a2fom_drive`].
#[derive(Debug, Clone)]
pub struct DriveOutcome {
    pub run: RunOutcome,
    pub events: Vec<ExtrapolationEvent>,
    pub accumulated_perturbation: f64,
}

/// Runs `op` with the adaptive predictor.
pub fn a2fom_drive(
    op: &dyn FixedPointOperator,
    cfg: PredictorConfig,
    z0: &[f64],
    opts: &RunOptions,
) -> Result<DriveOutcome> {
    let mut acc = A2Fom::for_operator(cfg, op)?;
    drive_with(op, &mut acc, z0, opts)
}

/// Runs `op` with a prepared predictor, e.g. one using a custom [`CoefficientSource`].
pub fn drive_with(
    op: &dyn FixedPointOperator,
    acc: &mut A2Fom,
    z0: &[f64],
    opts: &RunOptions,
) -> Result<DriveOutcome> {
    let run = run(op, z0, acc, opts)?;
    Ok(DriveOutcome {
        run,
        events: acc.events.clone(),
        accumulated_perturbation: acc.accumulated_perturbation(),
    })
}

fn differences(iterates: &[Vec<f64>]) -> Vec<Vec<f64>> {
    iterates.windows(2).map(|w| sub(&w[1], &w[0])).collect()
}

fn weighted_sum(iterates: &[Vec<f64>], gamma: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; iterates[0].len()];
    for (x, g) in iterates.iter().zip(gamma) {
        for (si, xi) in s.iter_mut().zip(x) {
            *si += g * xi;
        }
    }
    s
}

fn check_window(iterates: &[Vec<f64>]) -> Result<usize> {
    if iterates.len() < 3 {
        return Err(Error::InvalidInput("extrapolation needs r + 2 >= 3 iterates".into()));
    }
    let n = iterates[0].len();
    if iterates.iter().any(|x| x.len() != n) {
        return Err(Error::InvalidInput("iterates differ in length".into()));
    }
    Ok(iterates.len() - 2)
}

/// MPE weights `gamma_0..gamma_r` for `r + 2` iterates, or the vanishing normaliser.
pub fn mpe_weights(iterates: &[Vec<f64>]) -> Result<std::result::Result<Vec<f64>, f64>> {
    let r = check_window(iterates)?;
    let u = differences(iterates);
    let ur1 = Matrix::from_columns(&u[..r]);
    let rhs: Vec<f64> = u[r].iter().map(|x| -x).collect();
    let mut c = least_squares(&ur1, &rhs)?.coeffs;
    c.push(1.0);
    let sum: f64 = c.iter().sum();
    if sum.abs() <= 1e-12 {
        return Ok(Err(sum));
    }
    Ok(Ok(c.iter().map(|ci| ci / sum).collect()))
}

/// Minimal polynomial extrapolation from `r + 2` iterates `x_0..x_{r+1}`.
pub fn mpe(iterates: &[Vec<f64>]) -> Result<Prediction> {
    Ok(match mpe_weights(iterates)? {
        Ok(g) => Prediction::Point(weighted_sum(&iterates[..g.len()], &g)),
        Err(sum) => Prediction::Degenerate { normalizer: sum },
    })
}

/// RRE weights: `min |U_r gamma|` subject to `sum gamma = 1`.
pub fn rre_weights(iterates: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = check_window(iterates)?;
    let u = differences(iterates);
    let cols: Vec<Vec<f64>> = (0..r).map(|i| sub(&u[i], &u[r])).collect();
    let rhs: Vec<f64> = u[r].iter().map(|x| -x).collect();
    let g = least_squares(&Matrix::from_columns(&cols), &rhs)?.coeffs;
    let last = 1.0 - g.iter().sum::<f64>();
    let mut gamma = g;
    gamma.push(last);
    Ok(gamma)
}

/// Reduced rank extrapolation from `r + 2` iterates `x_0..x_{r+1}`.
pub fn rre(iterates: &[Vec<f64>]) -> Result<Vec<f64>> {
    let g = rre_weights(iterates)?;
    Ok(weighted_sum(&iterates[..g.len()], &g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorExtrapolation {
    Mpe,
    Rre,
}

/// MPE or RRE applied every `r + 2` iterations.
///
/// With `restart` the window is emptied after each extrapolation (cycling mode);
/// otherwise it slides like the predictor's difference buffer.
pub struct VectorExtrapolator {
    method: VectorExtrapolation,
    r: usize,
    restart: bool,
    window: VecDeque<Vec<f64>>,
    since: usize,
}

impl VectorExtrapolator {
    pub fn new(method: VectorExtrapolation, r: usize, restart: bool) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidConfig("extrapolation order r must be at least 1".into()));
        }
        Ok(VectorExtrapolator {
            method,
            r,
            restart,
            window: VecDeque::new(),
            since: 0,
        })
    }
}

impl Accelerator for VectorExtrapolator {
    fn name(&self) -> String {
        let m = match self.method {
            VectorExtrapolation::Mpe => "mpe",
            VectorExtrapolation::Rre => "rre",
        };
        format!("{m}(r={},restart={})", self.r, self.restart)
    }

    fn propose(&mut self, _k: usize, z: &[f64]) -> Result<Option<Vec<f64>>> {
        let len = self.r + 2;
        self.window.push_back(z.to_vec());
        while self.window.len() > len {
            self.window.pop_front();
        }
        self.since += 1;
        if self.window.len() < len || self.since < len {
            return Ok(None);
        }
        self.since = 0;
        let iterates: Vec<Vec<f64>> = self.window.iter().cloned().collect();
        if self.restart {
            self.window.clear();
        }
        let est = match self.method {
            VectorExtrapolation::Mpe => mpe(&iterates)?.point(),
            VectorExtrapolation::Rre => Some(rre(&iterates)?),
        };
        Ok(est.filter(|p| p.iter().all(|x| x.is_finite())))
    }
}
