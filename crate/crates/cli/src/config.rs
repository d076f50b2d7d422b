//! TOML run, lab and suite files.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use trajaccel::accel::{Gain, Horizon, PredictorConfig};
use trajaccel::driver::RunOptions;
use trajaccel::experiment::{Acceleration, Method, MethodParams};
use trajaccel::problems::{ProblemKind, ProblemSpec};

/// Configuration errors map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: String,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub sparsity: Option<usize>,
    pub rank: Option<usize>,
    pub block_size: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub noise: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

impl ProblemSection {
    pub fn to_spec(&self) -> anyhow::Result<ProblemSpec> {
        let kind = match self.kind.as_str() {
            "lasso" => ProblemKind::Lasso,
            "basis_pursuit" => ProblemKind::BasisPursuit,
            "group_bp" => ProblemKind::GroupBp,
            "lowrank_bp" => ProblemKind::LowrankBp,
            "feasibility_2lines" => ProblemKind::Feasibility2Lines,
            "pcp_toy" => ProblemKind::PcpToy,
            "pd_l1_affine" => ProblemKind::PdL1Affine,
            other => return Err(bad(format!("unknown problem kind '{other}'"))),
        };
        let mut s = ProblemSpec::new(kind, self.seed.unwrap_or(1));
        s.m = self.m.unwrap_or(s.m);
        s.n = self.n.unwrap_or(s.n);
        s.sparsity = self.sparsity.unwrap_or(s.sparsity);
        s.rank = self.rank.unwrap_or(s.rank);
        s.block_size = self.block_size.unwrap_or(s.block_size);
        s.noise = self.noise.unwrap_or(s.noise);
        s.mu = self.mu.unwrap_or(s.mu);
        s.alpha = self.alpha.unwrap_or(s.alpha);
        match (self.rows, self.cols) {
            (Some(r), Some(c)) => {
                s.shape = Some((r, c));
                if kind == ProblemKind::LowrankBp {
                    s.n = r * c;
                }
            }
            (None, None) => {}
            _ => return Err(bad("rows and cols must be given together")),
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: String,
    pub gamma: Option<f64>,
    pub gamma_over_l: Option<f64>,
    pub gamma_r: Option<f64>,
    pub gamma_j: Option<f64>,
    pub tau: Option<f64>,
    pub weights: Option<Vec<f64>>,
}

impl SolverSection {
    pub fn method(&self) -> anyhow::Result<Method> {
        Ok(match self.method.as_str() {
            "gd" => Method::Gd,
            "fb" => Method::Fb,
            "dr" => Method::Dr,
            "pd" => Method::Pd,
            "gfb" => Method::Gfb,
            other => return Err(bad(format!("unknown method '{other}'"))),
        })
    }

    pub fn params(&self) -> MethodParams {
        MethodParams {
            gamma: self.gamma,
            gamma_over_l: self.gamma_over_l,
            gamma_r: self.gamma_r,
            gamma_j: self.gamma_j,
            tau: self.tau,
            weights: self.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HorizonValue {
    Steps(usize),
    Word(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelerationSection {
    pub kind: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<usize>,
    pub s: Option<HorizonValue>,
    pub cadence_offset: Option<usize>,
    pub gain: Option<f64>,
    pub safeguard: Option<bool>,
    pub safeguard_a: Option<f64>,
    pub safeguard_b: Option<f64>,
    pub safeguard_delta: Option<f64>,
    pub angle_guard: Option<bool>,
    pub r: Option<usize>,
    pub restart: Option<bool>,
}

impl AccelerationSection {
    pub fn to_acceleration(&self) -> anyhow::Result<Acceleration> {
        let kind = self.kind.as_deref().unwrap_or("none");
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| bad(format!("acceleration '{kind}' needs '{name}'")))
        };
        Ok(match kind {
            "none" => Acceleration::None,
            "inertial" => Acceleration::Inertial {
                a: need(self.a, "a")?,
                b: self.b.unwrap_or(0.0),
            },
            "fista" => Acceleration::Fista,
            "relaxed" => Acceleration::Relaxed {
                lambda: need(self.lambda, "lambda")?,
            },
            "a2fom" => {
                let mut cfg = PredictorConfig::default();
                if let Some(q) = self.q {
                    cfg.q = q;
                }
                cfg.horizon = match &self.s {
                    None => Horizon::Infinite,
                    Some(HorizonValue::Steps(s)) => Horizon::Finite(*s),
                    Some(HorizonValue::Word(w)) if w == "inf" => Horizon::Infinite,
                    Some(HorizonValue::Word(w)) => {
                        return Err(bad(format!("s must be a positive integer or \"inf\", got '{w}'")))
                    }
                };
                if let Some(c) = self.cadence_offset {
                    cfg.cadence_offset = c;
                }
                if let Some(g) = self.gain {
                    cfg.gain = Gain::Fixed(g);
                }
                if self.safeguard.unwrap_or(false) {
                    let Gain::Safeguard { a, b, delta } = Gain::safeguard_default() else {
                        unreachable!()
                    };
                    cfg.gain = Gain::Safeguard {
                        a: self.safeguard_a.unwrap_or(a),
                        b: self.safeguard_b.unwrap_or(b),
                        delta: self.safeguard_delta.unwrap_or(delta),
                    };
                }
                cfg.fb_angle_guard = self.angle_guard.unwrap_or(false);
                cfg.validate().map_err(|e| bad(e.to_string()))?;
                Acceleration::A2fom(cfg)
            }
            "mpe" | "rre" => {
                let r = self
                    .r
                    .ok_or_else(|| bad(format!("acceleration '{kind}' needs 'r'")))?;
                let restart = self.restart.unwrap_or(true);
                if kind == "mpe" {
                    Acceleration::Mpe { r, restart }
                } else {
                    Acceleration::Rre { r, restart }
                }
            }
            other => return Err(bad(format!("unknown acceleration '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub observe: Option<bool>,
    pub support_tol: Option<f64>,
    pub rank_tol: Option<f64>,
}

impl RunSection {
    pub fn options(&self) -> anyhow::Result<RunOptions> {
        let mut o = RunOptions::default();
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(bad("tol must be positive"));
            }
            o.tol = t;
        }
        o.max_iter = self.max_iter.unwrap_or(o.max_iter);
        o.observe = self.observe.unwrap_or(o.observe);
        o.support_tol = self.support_tol.unwrap_or(o.support_tol);
        o.rank_tol = self.rank_tol.unwrap_or(o.rank_tol);
        Ok(o)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub acceleration: AccelerationSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub sigmas: Option<Vec<f64>>,
    pub psi: Option<f64>,
    pub eta: Option<f64>,
    pub modulus: Option<f64>,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub axis_ratio: Option<f64>,
    pub phi: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    pub lab: LabSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SuiteProblem {
    pub name: String,
    #[serde(flatten)]
    pub problem: ProblemSection,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SuiteMember {
    pub problem: String,
    pub label: String,
    #[serde(flatten)]
    pub solver: SolverSection,
    #[serde(default)]
    pub acceleration: AccelerationSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: String,
    #[serde(default)]
    pub run: RunSection,
    #[serde(rename = "problem")]
    pub problems: Vec<SuiteProblem>,
    #[serde(rename = "member")]
    pub members: Vec<SuiteMember>,
}
