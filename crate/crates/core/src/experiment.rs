//! Builds an operator and accelerator from a problem instance and runs them.

use crate::accel::{
    a2fom_drive, ExtrapolationEvent, PredictorConfig, VectorExtrapolation, VectorExtrapolator,
};
use crate::driver::{run, Inertial, InertiaSchedule, Plain, RunOptions, RunOutcome};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problems::{ProblemInstance, ProblemKind};
use crate::prox::{ProxKind, ProxOracle, QuadraticFit, SmoothOracle};
use crate::splitting::{
    DouglasRachford, FixedPointOperator, ForwardBackward, GeneralizedFb, PrimalDual,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gd,
    Fb,
    Dr,
    Pd,
    Gfb,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Fb => "fb",
            Method::Dr => "dr",
            Method::Pd => "pd",
            Method::Gfb => "gfb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Acceleration {
    None,
    Inertial { a: f64, b: f64 },
    Fista,
    Relaxed { lambda: f64 },
    A2fom(PredictorConfig),
    Mpe { r: usize, restart: bool },
    Rre { r: usize, restart: bool },
}

/// Step-size overrides; unset fields take the method defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodParams {
    pub gamma: Option<f64>,
    /// `gamma = gamma_over_l / L` with `L` the Lipschitz constant of the smooth part
    /// (`|A|^2` for least squares).
    pub gamma_over_l: Option<f64>,
    pub gamma_r: Option<f64>,
    pub gamma_j: Option<f64>,
    pub tau: Option<f64>,
    pub weights: Option<Vec<f64>>,
}

pub struct Built {
    pub op: Box<dyn FixedPointOperator>,
    pub z0: Vec<f64>,
    pub z_star: Option<Vec<f64>>,
}

fn regulariser(inst: &ProblemInstance, scale: f64) -> Result<ProxOracle> {
    let kind = match inst.kind {
        ProblemKind::GroupBp => ProxKind::GroupL12 {
            block_size: inst.meta.block_size,
        },
        ProblemKind::LowrankBp => {
            let (rows, cols) = inst
                .meta
                .shape
                .ok_or_else(|| Error::InvalidProblem("low-rank instance lacks a shape".into()))?;
            ProxKind::Nuclear { rows, cols }
        }
        _ => ProxKind::L1,
    };
    ProxOracle::new(kind, scale)
}

fn step(params: &MethodParams, lipschitz: f64, default: f64) -> f64 {
    if let Some(g) = params.gamma {
        g
    } else if let Some(c) = params.gamma_over_l {
        if lipschitz > 0.0 {
            c / lipschitz
        } else {
            c
        }
    } else {
        default
    }
}

fn unsupported(method: Method, kind: ProblemKind) -> Error {
    Error::InvalidConfig(format!(
        "method {} does not apply to problem {}",
        method.label(),
        kind.label()
    ))
}

pub fn build_operator(method: Method, inst: &ProblemInstance, params: &MethodParams) -> Result<Built> {
    let n = inst.a.cols();
    let ls = || SmoothOracle::least_squares(inst.a.clone(), inst.f.clone());
    let regularised = matches!(
        inst.kind,
        ProblemKind::Lasso | ProblemKind::GroupBp | ProblemKind::LowrankBp
    );
    let plain = |op: Box<dyn FixedPointOperator>| Built {
        op,
        z0: inst.start.clone(),
        z_star: None,
    };
    match method {
        Method::Gd | Method::Fb => {
            if !regularised && !(method == Method::Gd && inst.kind != ProblemKind::PcpToy) {
                return Err(unsupported(method, inst.kind));
            }
            let f = ls()?;
            let l = f.lipschitz();
            let r = if method == Method::Gd {
                ProxOracle::zero()
            } else {
                regulariser(inst, inst.mu)?
            };
            let gamma = step(params, l, 1.0 / l);
            Ok(plain(Box::new(ForwardBackward::new(r, f, gamma, n)?)))
        }
        Method::Dr => {
            let (r, j, l) = match inst.kind {
                ProblemKind::Lasso => {
                    let q = QuadraticFit::new(inst.a.clone(), inst.f.clone())?;
                    let l = q.lipschitz();
                    (regulariser(inst, inst.mu)?, ProxOracle::new(ProxKind::Quadratic(q), 1.0)?, l)
                }
                ProblemKind::BasisPursuit
                | ProblemKind::GroupBp
                | ProblemKind::LowrankBp
                | ProblemKind::PdL1Affine => (
                    regulariser(inst, 1.0)?,
                    ProxOracle::affine(inst.a.clone(), inst.f.clone())?,
                    0.0,
                ),
                ProblemKind::Feasibility2Lines => {
                    let line = |i: usize| ProxOracle::affine(Matrix::from_rows(&[inst.a.row(i).to_vec()]), vec![0.0]);
                    let op = DouglasRachford::new(line(0)?, line(1)?, step(params, 0.0, 1.0), 2)?;
                    return Ok(Built {
                        op: Box::new(op),
                        z0: inst.start.clone(),
                        z_star: Some(vec![0.0, 0.0]),
                    });
                }
                ProblemKind::PcpToy => return Err(unsupported(method, inst.kind)),
            };
            let gamma = step(params, l, if l > 0.0 { 1.0 / l } else { 1.0 });
            Ok(plain(Box::new(DouglasRachford::new(r, j, gamma, n)?)))
        }
        Method::Pd => {
            let m = inst.a.rows();
            let (r, j) = match inst.kind {
                ProblemKind::Lasso => {
                    let q = QuadraticFit::new(Matrix::identity(m), inst.f.clone())?;
                    (regulariser(inst, inst.mu)?, ProxOracle::new(ProxKind::Quadratic(q), 1.0)?)
                }
                ProblemKind::BasisPursuit
                | ProblemKind::GroupBp
                | ProblemKind::LowrankBp
                | ProblemKind::PdL1Affine => (
                    regulariser(inst, 1.0)?,
                    ProxOracle::affine(Matrix::identity(m), inst.f.clone())?,
                ),
                _ => return Err(unsupported(method, inst.kind)),
            };
            let ln = inst.a.norm2()?;
            let g = params.gamma.unwrap_or(0.99 / ln);
            let op = PrimalDual::new(
                r,
                j,
                inst.a.clone(),
                params.gamma_r.unwrap_or(g),
                params.gamma_j.unwrap_or(g),
                params.tau.unwrap_or(1.0),
            )?;
            Ok(Built {
                op: Box::new(op),
                z0: vec![0.0; n + m],
                z_star: None,
            })
        }
        Method::Gfb => {
            let (f, rs, dim) = match inst.kind {
                ProblemKind::PcpToy => {
                    let (rows, cols) = inst.meta.shape.expect("pcp instances carry a shape");
                    let f = SmoothOracle::L1Envelope {
                        b: inst.f.clone(),
                        mu: inst.mu,
                    };
                    let rs = vec![
                        ProxOracle::new(ProxKind::Nuclear { rows, cols }, inst.mu2)?,
                        ProxOracle::box_nonneg(),
                    ];
                    (f, rs, rows * cols)
                }
                ProblemKind::Lasso | ProblemKind::GroupBp | ProblemKind::LowrankBp => {
                    (ls()?, vec![regulariser(inst, inst.mu)?], n)
                }
                _ => return Err(unsupported(method, inst.kind)),
            };
            let l = f.lipschitz();
            let gamma = step(params, l, if l > 0.0 { 1.0 / l } else { 1.0 });
            let m = rs.len();
            let weights = params
                .weights
                .clone()
                .unwrap_or_else(|| vec![1.0 / m as f64; m]);
            let op = GeneralizedFb::new(f, rs, weights, gamma, dim)?;
            let z0 = op.lift(&vec![0.0; dim]);
            Ok(Built {
                op: Box::new(op),
                z0,
                z_star: None,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub run: RunOutcome,
    pub accelerator: String,
    pub events: Vec<ExtrapolationEvent>,
}

/// Runs `built` under `acc`. A diverging run is returned as [`Error::Divergence`].
pub fn run_built(built: &Built, acc: &Acceleration, opts: &RunOptions) -> Result<ExperimentOutcome> {
    let mut opts = opts.clone();
    if opts.z_star.is_none() {
        opts.z_star = built.z_star.clone();
    }
    let op = built.op.as_ref();
    let z0 = &built.z0;
    let (run, name, events) = match acc {
        Acceleration::None => (run(op, z0, &mut Plain, &opts)?, "plain".to_string(), vec![]),
        Acceleration::Inertial { a, b } => {
            let mut i = Inertial::new(InertiaSchedule::Fixed { a: *a, b: *b });
            let name = crate::driver::Accelerator::name(&i);
            (run(op, z0, &mut i, &opts)?, name, vec![])
        }
        Acceleration::Fista => {
            let mut i = Inertial::new(InertiaSchedule::Fista);
            (run(op, z0, &mut i, &opts)?, "fista".into(), vec![])
        }
        Acceleration::Relaxed { lambda } => {
            opts.relaxation = *lambda;
            (run(op, z0, &mut Plain, &opts)?, format!("relaxed({lambda})"), vec![])
        }
        Acceleration::A2fom(cfg) => {
            let out = a2fom_drive(op, cfg.clone(), z0, &opts)?;
            let s = match cfg.horizon {
                crate::accel::Horizon::Finite(s) => s.to_string(),
                crate::accel::Horizon::Infinite => "inf".into(),
            };
            (out.run, format!("a2fom(q={},s={s})", cfg.q), out.events)
        }
        Acceleration::Mpe { r, restart } | Acceleration::Rre { r, restart } => {
            let method = if matches!(acc, Acceleration::Mpe { .. }) {
                VectorExtrapolation::Mpe
            } else {
                VectorExtrapolation::Rre
            };
            let mut x = VectorExtrapolator::new(method, *r, *restart)?;
            let name = crate::driver::Accelerator::name(&x);
            (run(op, z0, &mut x, &opts)?, name, vec![])
        }
    };
    Ok(ExperimentOutcome {
        run,
        accelerator: name,
        events,
    })
}

pub fn run_experiment(
    method: Method,
    inst: &ProblemInstance,
    params: &MethodParams,
    acc: &Acceleration,
    opts: &RunOptions,
) -> Result<ExperimentOutcome> {
    let built = build_operator(method, inst, params)?;
    run_built(&built, acc, opts)
}
