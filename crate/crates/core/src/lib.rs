//! Fixed-point splitting methods with trajectory diagnostics and adaptive
//! extrapolation.

pub mod accel;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod lab;
pub mod libsvm;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod splitting;

pub use accel::{
    a2fom_drive, fit_coefficients, mpe, predict_finite, predict_infinite, rre, A2Fom, Gain,
    Horizon, Prediction, PredictorConfig,
};
pub use diagnostics::{classify_trace, classify_trajectory, ClassifyConfig, TraceRecord, TrajectoryType};
pub use driver::{run, Accelerator, RunOptions, RunOutcome};
pub use error::{Error, Result};
pub use experiment::{Acceleration, Method, MethodParams};
pub use linalg::Matrix;
pub use problems::{gen_problem, ProblemInstance, ProblemKind, ProblemSpec};
pub use prox::{ProxOracle, SmoothOracle};
pub use splitting::FixedPointOperator;
