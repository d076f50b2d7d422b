//! The fixed-point iteration loop shared by plain, inertial, relaxed and
//! extrapolated runs.

use crate::diagnostics::{cos_angle, identification_metrics, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{norm, sub};
use crate::splitting::{inertial_extrapolate, FistaSchedule, FixedPointOperator, Structure};

/// Chooses the point `z_bar_k` fed to the operator at each iteration.
pub trait Accelerator {
    fn name(&self) -> String;

    /// Sees the current iterate `z_k` and returns `Some(z_bar_k)` to replace it.
    fn propose(&mut self, k: usize, z: &[f64]) -> Result<Option<Vec<f64>>>;
}

/// Leaves every iterate untouched.
#[derive(Debug, Default, Clone)]
pub struct Plain;

impl Accelerator for Plain {
    fn name(&self) -> String {
        "plain".into()
    }

    fn propose(&mut self, _k: usize, _z: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InertiaSchedule {
    Fixed { a: f64, b: f64 },
    Fista,
}

/// `z_bar_k = z_k + a_k (z_k - z_{k-1}) + b_k (z_{k-1} - z_{k-2})`.
#[derive(Debug, Clone)]
pub struct Inertial {
    schedule: InertiaSchedule,
    fista: FistaSchedule,
    history: Vec<Vec<f64>>,
}

impl Inertial {
    pub fn new(schedule: InertiaSchedule) -> Self {
        Inertial {
            schedule,
            fista: FistaSchedule::default(),
            history: Vec::new(),
        }
    }
}

impl Accelerator for Inertial {
    fn name(&self) -> String {
        match self.schedule {
            InertiaSchedule::Fixed { a, b } if b == 0.0 => format!("inertial(a={a})"),
            InertiaSchedule::Fixed { a, b } => format!("inertial(a={a},b={b})"),
            InertiaSchedule::Fista => "fista".into(),
        }
    }

    fn propose(&mut self, _k: usize, z: &[f64]) -> Result<Option<Vec<f64>>> {
        self.history.insert(0, z.to_vec());
        self.history.truncate(3);
        let (a, b) = match self.schedule {
            InertiaSchedule::Fixed { a, b } => (a, b),
            InertiaSchedule::Fista => (self.fista.next_coefficient(), 0.0),
        };
        if self.history.len() < 2 || (a == 0.0 && b == 0.0) {
            return Ok(None);
        }
        let pts: Vec<&[f64]> = self.history.iter().map(|v| v.as_slice()).collect();
        Ok(Some(inertial_extrapolate(&pts, a, b)))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// KM relaxation `lambda`; 1 is the plain operator.
    pub relaxation: f64,
    pub support_tol: f64,
    pub rank_tol: f64,
    /// Evaluate objective and identification metrics every iteration.
    pub observe: bool,
    /// Known limit, enables `cos_vartheta`.
    pub z_star: Option<Vec<f64>>,
    pub divergence_bound: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: 1e-9,
            max_iter: 100_000,
            relaxation: 1.0,
            support_tol: 1e-8,
            rank_tol: 1e-8,
            observe: true,
            z_star: None,
            divergence_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub z: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl RunOutcome {
    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.v_norm)
    }
}

/// Runs `z_{k+1} = z_bar_k + lambda (F(z_bar_k) - z_bar_k)` until `|v_k| <= tol`.
pub fn run(
    op: &dyn FixedPointOperator,
    z0: &[f64],
    acc: &mut dyn Accelerator,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    if z0.len() != op.dim() {
        return Err(Error::InvalidInput(format!(
            "initial point has length {}, operator expects {}",
            z0.len(),
            op.dim()
        )));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "relaxation {} must be positive",
            opts.relaxation
        )));
    }
    let mut z = z0.to_vec();
    let mut prev_v: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    for k in 0..opts.max_iter {
        let bar = acc.propose(k, &z)?;
        let extrapolated = bar.is_some();
        let base = bar.as_deref().unwrap_or(&z);
        let fz = op.apply(base)?;
        let z_new: Vec<f64> = if opts.relaxation == 1.0 {
            fz
        } else {
            base.iter()
                .zip(&fz)
                .map(|(b, f)| b + opts.relaxation * (f - b))
                .collect()
        };
        let v = sub(&z_new, &z);
        let mut rec = TraceRecord::new(k + 1, op.residual(&z_new, &z));
        rec.extrapolated = extrapolated;
        if let Some(pv) = &prev_v {
            rec.cos_theta = cos_angle(&v, pv).ok();
        }
        if let Some(zs) = &opts.z_star {
            rec.cos_vartheta = cos_angle(&v, &sub(zs, &z_new)).ok();
        }
        if opts.observe {
            observe_into(op, &z_new, opts, &mut rec);
        }
        let zn = norm(&z_new);
        let blew_up = !(zn <= opts.divergence_bound);
        trace.push(rec);
        if blew_up {
            return Err(Error::Divergence {
                k: k + 1,
                norm: zn,
                trace,
            });
        }
        let done = trace.last().unwrap().v_norm <= opts.tol;
        z = z_new;
        if done {
            converged = true;
            break;
        }
        prev_v = Some(v);
    }
    let iterations = trace.len();
    Ok(RunOutcome {
        z,
        trace,
        iterations,
        converged,
    })
}

fn observe_into(op: &dyn FixedPointOperator, z: &[f64], opts: &RunOptions, rec: &mut TraceRecord) {
    let obs = op.observe(z);
    rec.objective = obs.objective;
    if let Some(x) = obs.structured {
        match op.structure() {
            Structure::Support => {
                rec.support_size = identification_metrics(&x, None, opts.support_tol)
                    .ok()
                    .map(|m| m.0);
            }
            Structure::Rank { rows, cols } => {
                if let Ok((s, r)) = identification_metrics(&x, Some((rows, cols)), opts.rank_tol) {
                    rec.support_size = Some(s);
                    rec.rank = r;
                }
            }
            Structure::None => {}
        }
    }
}

/// Plain iteration of `op` from `z0`.
pub fn run_plain(op: &dyn FixedPointOperator, z0: &[f64], opts: &RunOptions) -> Result<RunOutcome> {
    run(op, z0, &mut Plain, opts)
}

/// Inertial iteration with a fixed or FISTA schedule.
pub fn run_inertial(
    op: &dyn FixedPointOperator,
    z0: &[f64],
    schedule: InertiaSchedule,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    run(op, z0, &mut Inertial::new(schedule), opts)
}

/// KM-relaxed iteration.
pub fn run_relaxed(
    op: &dyn FixedPointOperator,
    z0: &[f64],
    lambda: f64,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let o = RunOptions {
        relaxation: lambda,
        ..opts.clone()
    };
    run(op, z0, &mut Plain, &o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::splitting::AffineOperator;

    fn contraction() -> AffineOperator {
        AffineOperator::new(
            Matrix::from_rows(&[vec![0.5, 0.1], vec![-0.1, 0.4]]),
            vec![1.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn plain_converges_and_records() {
        let op = contraction();
        let out = run_plain(&op, &[0.0, 0.0], &RunOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.len(), out.iterations);
        assert!(out.trace[0].cos_theta.is_none());
        assert!(out.trace[1].cos_theta.is_some());
        assert!(out.trace.iter().all(|r| !r.extrapolated));
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let op = AffineOperator::new(Matrix::from_diag(&[3.0]), vec![1.0]).unwrap();
        match run_plain(&op, &[1.0], &RunOptions::default()) {
            Err(Error::Divergence { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_inertia_matches_plain() {
        let op = contraction();
        let a = run_plain(&op, &[3.0, 1.0], &RunOptions::default()).unwrap();
        let b = run_inertial(
            &op,
            &[3.0, 1.0],
            InertiaSchedule::Fixed { a: 0.0, b: 0.0 },
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
