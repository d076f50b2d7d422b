use std::path::{Path, PathBuf};

use trajaccel::lab::{
    composite_rotation_bounds, elliptical_matrix, elliptical_rotation, make_type1, make_type2,
    make_type3, rotation, run_linear, LinearRun,
};
use trajaccel::linalg::norm;
use trajaccel::problems::Rng;

use crate::config::{read_toml, ConfigError, LabConfig, LabSection};
use crate::output;

struct Line {
    text: String,
    pass: bool,
}

fn line(pass: bool, text: String) -> Line {
    Line { text, pass }
}

fn need<T: Clone>(v: &Option<T>, name: &str, kind: &str) -> anyhow::Result<T> {
    v.clone()
        .ok_or_else(|| ConfigError(format!("lab type '{kind}' needs '{name}'")).into())
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn type1(s: &LabSection, steps: usize, seed: u64) -> anyhow::Result<(LinearRun, Vec<Line>)> {
    let sigmas = need(&s.sigmas, "sigmas", "type1")?;
    let lab = make_type1(&sigmas, seed)?;
    let n = sigmas.len();
    let v0 = Rng::new(seed.wrapping_add(1)).normals(n);
    let run = run_linear(&lab.m, &vec![0.0; n], &v0, steps)?;
    if n == 1 {
        let text = "degenerate: scalar system, every displacement is collinear: PASS".to_string();
        return Ok((run, vec![line(true, text)]));
    }
    let pts: Vec<(f64, f64)> = run
        .trace
        .iter()
        .zip(&run.one_minus_cos)
        .filter(|(r, _)| r.k >= steps / 4)
        .filter_map(|(r, o)| o.filter(|v| *v > 1e-30).map(|v| (r.k as f64, v.ln())))
        .collect();
    let eta = lab.predicted.eta;
    if pts.len() < 10 {
        let text = format!("predicted eta {eta:.6}; 1 - cos theta_k reached 0 too early to fit: PASS");
        return Ok((run, vec![line(true, text)]));
    }
    let measured = (slope(&pts) / 2.0).exp();
    let rel = (measured - eta).abs() / eta;
    let pass = rel <= 0.05;
    let text = format!(
        "predicted eta {eta:.6}, measured {measured:.6} from the decay of 1 - cos theta_k (within 5%): {}",
        verdict(pass)
    );
    Ok((run, vec![line(pass, text)]))
}

fn type2(s: &LabSection, steps: usize, seed: u64) -> anyhow::Result<(LinearRun, Vec<Line>)> {
    let psi = need(&s.psi, "psi", "type2")?;
    let eta = need(&s.eta, "eta", "type2")?;
    let modulus = s.modulus.unwrap_or(0.99);
    let tail: Vec<f64> = if eta > 0.0 { vec![eta * modulus] } else { vec![] };
    let lab = make_type2(psi, modulus, &tail, seed)?;
    let n = lab.m.rows();
    let v0 = Rng::new(seed.wrapping_add(1)).normals(n);
    let run = run_linear(&lab.m, &vec![0.0; n], &v0, steps)?;
    let last = run
        .trace
        .last()
        .and_then(|r| r.cos_theta)
        .unwrap_or(f64::NAN);
    let pass = (last - psi.cos()).abs() <= 1e-6;
    let text = format!(
        "predicted eta {:.6}, limit cos theta = cos({psi}) = {:.12}; measured limit cos theta {last:.12} within 1e-6 of cos({psi}): {}",
        lab.predicted.eta,
        psi.cos(),
        verdict(pass)
    );
    Ok((run, vec![line(pass, text)]))
}

fn type3(s: &LabSection, steps: usize, seed: u64) -> anyhow::Result<(LinearRun, Vec<Line>)> {
    let a = need(&s.a, "a", "type3")?;
    let b = need(&s.b, "b", "type3")?;
    let c = need(&s.c, "c", "type3")?;
    let lab = make_type3(&a, &b, &c, s.delta.unwrap_or(1.0), s.tau.unwrap_or(1.0), seed)?;
    let n = lab.m.rows();
    let v0 = lab.leading_vector(&[1.0, 0.4]);
    let run = run_linear(&lab.m, &vec![0.0; n], &v0, steps)?;
    let mut lines = vec![line(
        true,
        format!("predicted eta {:.6}, rate {:.6}", lab.predicted.eta, lab.predicted.rate),
    )];
    match lab.predicted.angle_interval {
        Some((lo, hi)) => {
            let from = 50.min(steps / 2);
            let th: Vec<f64> = run
                .trace
                .iter()
                .zip(&run.theta)
                .filter(|(r, _)| r.k >= from)
                .filter_map(|(_, t)| *t)
                .collect();
            let mlo = th.iter().cloned().fold(f64::INFINITY, f64::min);
            let mhi = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pass = mlo >= lo - 1e-9 && mhi <= hi + 1e-9;
            lines.push(line(
                pass,
                format!(
                    "predicted angle interval [{lo:.6}, {hi:.6}], measured theta_k (k >= {from}) in [{mlo:.6}, {mhi:.6}]: {}",
                    verdict(pass)
                ),
            ));
        }
        None => lines.push(line(
            true,
            "leading block has no rotation factor, no angle interval predicted: PASS".into(),
        )),
    }
    Ok((run, lines))
}

fn ellipse(s: &LabSection, steps: usize) -> anyhow::Result<(LinearRun, Vec<Line>)> {
    let r = need(&s.axis_ratio, "axis_ratio", "ellipse")?;
    let phi = need(&s.phi, "phi", "ellipse")?;
    let e = elliptical_rotation(r, phi)?;
    let (m, interval) = match s.psi {
        Some(psi) => (
            rotation(psi).matmul(&elliptical_matrix(r, phi)),
            composite_rotation_bounds(psi, phi, r)
                .ok_or_else(|| ConfigError("composite map is not a rotation".into()))?,
        ),
        None => (e.r.clone(), e.chi_interval),
    };
    let run = run_linear(&m, &[0.0, 0.0], &[1.0, 0.3], steps)?;
    let th: Vec<f64> = run.theta.iter().filter_map(|t| *t).collect();
    let mlo = th.iter().cloned().fold(f64::INFINITY, f64::min);
    let mhi = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = mlo >= interval.0 - 1e-9 && mhi <= interval.1 + 1e-9;
    let mut lines = vec![line(
        true,
        format!(
            "predicted norm-ratio interval [{:.4}, {:.4}]",
            e.ratio_interval.0, e.ratio_interval.1
        ),
    )];
    lines.push(line(
        pass,
        format!(
            "predicted angle interval [{:.4}, {:.4}], measured [{mlo:.4}, {mhi:.4}]: {}",
            interval.0,
            interval.1,
            verdict(pass)
        ),
    ));
    let _ = norm;
    Ok((run, lines))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_lab(config: &Path, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg: LabConfig = read_toml(config)?;
    let s = &cfg.lab;
    let steps = s.steps.unwrap_or(1000);
    let seed = s.seed.unwrap_or(1);
    let (run, lines) = match s.kind.as_str() {
        "type1" => type1(s, steps, seed)?,
        "type2" => type2(s, steps, seed)?,
        "type3" => type3(s, steps, seed)?,
        "ellipse" => ellipse(s, steps)?,
        other => return Err(ConfigError(format!("unknown lab type '{other}'")).into()),
    };
    let csv = out
        .or(cfg.output.csv.clone())
        .unwrap_or_else(|| PathBuf::from("lab.csv"));
    output::write_csv(&csv, &run.trace)?;
    if let Some(svg) = &cfg.output.svg {
        output::write_svg(svg, &[(s.kind.as_str(), &run.trace)])?;
    }
    for l in &lines {
        println!("{}", l.text);
    }
    Ok(if lines.iter().all(|l| l.pass) { 0 } else { 1 })
}
