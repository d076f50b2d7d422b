use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use trajaccel::diagnostics::{classify_trace, ClassifyConfig};
use trajaccel::experiment::run_experiment;
use trajaccel::problems::{gen_problem, ProblemInstance};
use trajaccel::Error;

use crate::config::{read_toml, ConfigError, Suite};
use crate::output;

/// One row of `summary.csv`.
struct Row {
    problem: String,
    method: String,
    iterations_to_tol: Option<usize>,
    final_objective: Option<f64>,
    trajectory: String,
    status: String,
}

fn threads() -> anyhow::Result<usize> {
    match std::env::var("ACCEL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| ConfigError(format!("ACCEL_THREADS must be a positive integer, got '{v}'")).into()),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn file_stem(problem: &str, label: &str) -> String {
    format!("{problem}__{label}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_bench(suite: &Path, outdir: &Path, plot: bool) -> anyhow::Result<u8> {
    let cfg: Suite = read_toml(suite)?;
    let opts = cfg.run.options()?;

    let mut instances: HashMap<&str, ProblemInstance> = HashMap::new();
    for p in &cfg.problems {
        if instances.contains_key(p.name.as_str()) {
            return Err(ConfigError(format!("duplicate problem name '{}'", p.name)).into());
        }
        instances.insert(p.name.as_str(), gen_problem(&p.problem.to_spec()?)?);
    }
    let mut jobs = Vec::with_capacity(cfg.members.len());
    for m in &cfg.members {
        let inst = instances
            .get(m.problem.as_str())
            .ok_or_else(|| ConfigError(format!("member '{}' names unknown problem '{}'", m.label, m.problem)))?;
        jobs.push((m, inst, m.solver.method()?, m.acceleration.to_acceleration()?));
    }

    std::fs::create_dir_all(outdir)?;
    println!("suite {}: {} members", cfg.name, jobs.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads()?).build()?;
    let classify = ClassifyConfig::default();
    let rows: Vec<anyhow::Result<Row>> = pool.install(|| {
        jobs.par_iter()
            .map(|(m, inst, method, acc)| {
                let stem = file_stem(&m.problem, &m.label);
                let base = Row {
                    problem: m.problem.clone(),
                    method: m.label.clone(),
                    iterations_to_tol: None,
                    final_objective: None,
                    trajectory: String::new(),
                    status: String::new(),
                };
                let (trace, row) = match run_experiment(*method, inst, &m.solver.params(), acc, &opts) {
                    Ok(res) => {
                        let row = Row {
                            iterations_to_tol: res.run.converged.then_some(res.run.iterations),
                            final_objective: res.run.trace.iter().rev().find_map(|r| r.objective),
                            trajectory: classify_trace(&res.run.trace, opts.tol, &classify)
                                .label()
                                .to_string(),
                            status: if res.run.converged { "ok" } else { "max_iter" }.into(),
                            ..base
                        };
                        (res.run.trace, row)
                    }
                    Err(Error::Divergence { trace, .. }) => (
                        trace,
                        Row {
                            status: "diverged".into(),
                            trajectory: "undetermined".into(),
                            ..base
                        },
                    ),
                    Err(e) => return Err(e.into()),
                };
                output::write_csv(&outdir.join(format!("{stem}.csv")), &trace)?;
                if plot {
                    output::write_svg(&outdir.join(format!("{stem}.svg")), &[(m.label.as_str(), &trace)])?;
                }
                Ok(row)
            })
            .collect()
    });

    let mut summary = String::from(
        "problem,method,iterations_to_tol,final_objective,classified_trajectory_type,status\n",
    );
    let mut failed = false;
    println!(
        "{:<20} {:<18} {:>10} {:>16} {:<14} status",
        "problem", "method", "iters", "objective", "trajectory"
    );
    for (row, (m, ..)) in rows.into_iter().zip(&jobs) {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                failed = true;
                eprintln!("error: {}/{}: {e:#}", m.problem, m.label);
                Row {
                    problem: m.problem.clone(),
                    method: m.label.clone(),
                    iterations_to_tol: None,
                    final_objective: None,
                    trajectory: "undetermined".into(),
                    status: "error".into(),
                }
            }
        };
        if row.status == "diverged" || row.status == "error" {
            failed = true;
        }
        let iters = row.iterations_to_tol.map(|k| k.to_string()).unwrap_or_default();
        let obj = row.final_objective.map(|f| format!("{f:.16e}")).unwrap_or_default();
        writeln!(
            summary,
            "{},{},{iters},{obj},{},{}",
            row.problem, row.method, row.trajectory, row.status
        )?;
        println!(
            "{:<20} {:<18} {:>10} {:>16} {:<14} {}",
            row.problem,
            row.method,
            if iters.is_empty() { "-" } else { &iters },
            row.final_objective.map(|f| format!("{f:.6e}")).unwrap_or_else(|| "-".into()),
            row.trajectory,
            row.status
        );
    }
    std::fs::write(outdir.join("summary.csv"), summary)?;
    Ok(if failed { 1 } else { 0 })
}
