//! Action execution and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aoii_core::optimizer::{sweep, SweepAxes, SweepModel, SweepResult, SweepSpec};
use aoii_core::sim::{simulate, simulate_traced, SimResult};
use aoii_core::{analyze, ChannelModel, GeneratorMatrix, Policy, PullPolicy, PushPolicy};

use crate::config::{Action, ExperimentConfig, ModelSpec, OneOrMany};
use crate::CliError;

pub const ANALYZE_VERSION: &str = "aoii-analyze/v1";
pub const SIMULATE_VERSION: &str = "aoii-simulate/v1";
pub const SWEEP_VERSION: &str = "aoii-sweep/v1";
pub const ARGMINS_VERSION: &str = "aoii-argmins/v1";
pub const OPTIMUM_VERSION: &str = "aoii-optimum/v1";

/// One policy evaluated by analyze/simulate.
#[derive(Debug, Clone)]
pub struct Point {
    pub k: Option<usize>,
    pub params: Vec<f64>,
    pub policy: Policy,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: Point,
    pub aoii: f64,
    pub rate: f64,
    pub sim: Option<SimResult>,
}

pub fn points(cfg: &ExperimentConfig, n: usize) -> Result<Vec<Point>, CliError> {
    let mut out = Vec::new();
    match &cfg.model {
        ModelSpec::Push { k, theta } => {
            for k in k.to_vec() {
                for params in theta.points(n, "theta")? {
                    let policy = Policy::Push(PushPolicy::new(k, params.clone())?);
                    out.push(Point {
                        k: Some(k),
                        params,
                        policy,
                    });
                }
            }
        }
        ModelSpec::Pull { lambda } => {
            for params in lambda.points(n, "lambda")? {
                let policy = Policy::Pull(PullPolicy::new(params.clone())?);
                out.push(Point {
                    k: None,
                    params,
                    policy,
                });
            }
        }
    }
    Ok(out)
}

pub fn analyze_points(
    q: &GeneratorMatrix,
    ch: &ChannelModel,
    points: Vec<Point>,
) -> Result<Vec<PointResult>, CliError> {
    points
        .into_iter()
        .map(|point| {
            let m = analyze(q, &point.policy, ch)?;
            Ok(PointResult {
                point,
                aoii: m.aoii,
                rate: m.rate,
                sim: None,
            })
        })
        .collect()
}

/// Point `i` uses seed `seed + i`, so each point has its own stream.
pub fn simulate_points(
    q: &GeneratorMatrix,
    ch: &ChannelModel,
    cfg: &ExperimentConfig,
    points: Vec<Point>,
    trace: Option<&Path>,
) -> Result<Vec<PointResult>, CliError> {
    let base = cfg.simulate.to_sim_config()?;
    points
        .into_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut sc = base.clone();
            sc.seed = base.seed.wrapping_add(i as u64);
            let sim = match trace {
                Some(path) if i == 0 => {
                    let mut w = BufWriter::new(File::create(path)?);
                    let r = simulate_traced(q, &point.policy, ch, &sc, &mut w)?;
                    w.flush()?;
                    r
                }
                _ => simulate(q, &point.policy, ch, &sc)?,
            };
            if sim.degenerate {
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "warning": "DegeneratePolicy",
                        "params": point.params,
                        "message": "policy never samples or no cycle completed",
                    })
                );
            }
            Ok(PointResult {
                aoii: sim.aoii.mean,
                rate: sim.rate.mean,
                sim: Some(sim),
                point,
            })
        })
        .collect()
}

/// A scalar when every state shares the value, else the values separated by spaces.
pub fn param_label(params: &[f64]) -> String {
    if params.windows(2).all(|w| w[0] == w[1]) {
        params.first().map_or_else(String::new, |v| v.to_string())
    } else {
        params
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn csv_writer(path: &Path, version: &str) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# {version}")?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes analyze (or, with simulation results present, simulate) rows. A
/// leading `source` column is added when `source` is given.
pub fn write_points(
    path: &Path,
    rows: &[(Option<&str>, PointResult)],
    push: bool,
) -> Result<(), CliError> {
    let simulated = rows.iter().any(|r| r.1.sim.is_some());
    let with_source = rows.iter().any(|r| r.0.is_some());
    let version = if simulated {
        SIMULATE_VERSION
    } else {
        ANALYZE_VERSION
    };
    let mut w = csv_writer(path, version)?;
    let mut header: Vec<&str> = Vec::new();
    if with_source {
        header.push("source");
    }
    header.extend(if push {
        &["k", "theta_mean"][..]
    } else {
        &["lambda_mean"][..]
    });
    header.extend(["aoii", "rate"]);
    if simulated {
        header.extend(["aoii_se", "rate_se", "cycles"]);
    }
    w.write_record(&header)?;
    for (src, r) in rows {
        let mut rec: Vec<String> = Vec::new();
        if with_source {
            rec.push(src.unwrap_or_default().to_string());
        }
        if push {
            rec.push(r.point.k.map_or_else(String::new, |k| k.to_string()));
        }
        rec.push(param_label(&r.point.params));
        rec.push(r.aoii.to_string());
        rec.push(r.rate.to_string());
        if let Some(s) = &r.sim {
            rec.push(s.aoii.se.to_string());
            rec.push(s.rate.se.to_string());
            rec.push(s.cycles.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_spec(cfg: &ExperimentConfig, n: usize) -> Result<SweepSpec, CliError> {
    let model = match &cfg.model {
        ModelSpec::Push { k, .. } => match k.to_vec().as_slice() {
            [k] => SweepModel::Push { k: *k },
            _ => {
                return Err(CliError::Config(
                    "sweep needs a single Erlang order k".into(),
                ))
            }
        },
        ModelSpec::Pull { .. } => SweepModel::Pull,
    };
    let grids = match &cfg.sweep.grid {
        OneOrMany::One(g) => vec![*g; n],
        OneOrMany::Many(gs) => gs.clone(),
    };
    let axes = if cfg.sweep.uniform {
        SweepAxes::Uniform(grids[0].to_grid()?)
    } else {
        SweepAxes::PerState(
            grids
                .into_iter()
                .map(|g| g.to_grid())
                .collect::<Result<_, _>>()?,
        )
    };
    Ok(SweepSpec {
        model,
        axes,
        budget: cfg.sweep.budget,
    })
}

/// Budget levels reported for a sweep: the main budget (∞ when absent)
/// followed by any extra levels.
pub fn budget_levels(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut levels = vec![cfg.sweep.budget.unwrap_or(f64::INFINITY)];
    for &b in &cfg.sweep.budgets {
        if !levels.contains(&b) {
            levels.push(b);
        }
    }
    levels
}

/// Sweep rows plus an `argmin_budgets` column listing the budgets (space
/// separated, `inf` for unconstrained) at which the row is the argmin.
pub fn write_sweep(path: &Path, result: &SweepResult, budgets: &[f64]) -> Result<(), CliError> {
    let n = result.rows.first().map_or(0, |r| r.params.len());
    let argmins = result.argmins(budgets);
    let mut w = csv_writer(path, SWEEP_VERSION)?;
    let mut header = vec!["model".to_string()];
    header.extend((1..=n).map(|i| format!("param_{i}")));
    header.extend(["aoii", "rate", "feasible", "error", "argmin_budgets"].map(String::from));
    w.write_record(&header)?;
    for (idx, r) in result.rows.iter().enumerate() {
        let mut rec = vec![result.model.name().to_string()];
        rec.extend(r.params.iter().map(|v| v.to_string()));
        rec.push(r.aoii.to_string());
        rec.push(r.rate.to_string());
        rec.push(r.feasible.to_string());
        rec.push(r.error.clone().unwrap_or_default());
        let flagged: Vec<String> = budgets
            .iter()
            .zip(&argmins)
            .filter(|(_, a)| **a == Some(idx))
            .map(|(b, _)| b.to_string())
            .collect();
        rec.push(flagged.join(" "));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_argmins(path: &Path, result: &SweepResult, budgets: &[f64]) -> Result<(), CliError> {
    let n = result.rows.first().map_or(0, |r| r.params.len());
    let mut w = csv_writer(path, ARGMINS_VERSION)?;
    let mut header = vec!["model".to_string(), "budget".to_string()];
    header.extend((1..=n).map(|i| format!("param_{i}")));
    header.extend(["aoii", "rate"].map(String::from));
    w.write_record(&header)?;
    for (b, a) in budgets.iter().zip(result.argmins(budgets)) {
        let mut rec = vec![result.model.name().to_string(), b.to_string()];
        match a {
            Some(i) => {
                let r = &result.rows[i];
                rec.extend(r.params.iter().map(|v| v.to_string()));
                rec.push(r.aoii.to_string());
                rec.push(r.rate.to_string());
            }
            None => rec.extend(std::iter::repeat_n(String::new(), n + 2)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let q = cfg.generator()?;
    let ch = cfg.channel()?;
    let n = q.n();
    std::fs::create_dir_all(out)?;
    let resolved = out.join("resolved_config.json");
    std::fs::write(
        &resolved,
        serde_json::to_string_pretty(cfg).expect("config serializes") + "\n",
    )?;
    let mut written: Vec<PathBuf> = vec![resolved];
    let push = matches!(cfg.model, ModelSpec::Push { .. });
    match cfg.action.expect("action resolved by the loader") {
        Action::Analyze => {
            let rows = analyze_points(&q, &ch, points(cfg, n)?)?;
            let path = out.join("analyze.csv");
            write_points(
                &path,
                &rows.into_iter().map(|r| (None, r)).collect::<Vec<_>>(),
                push,
            )?;
            written.push(path);
        }
        Action::Simulate => {
            let pts = points(cfg, n)?;
            let trace = cfg.simulate.trace.then(|| out.join("trace.csv"));
            let rows = simulate_points(&q, &ch, cfg, pts, trace.as_deref())?;
            let path = out.join("simulate.csv");
            write_points(
                &path,
                &rows.into_iter().map(|r| (None, r)).collect::<Vec<_>>(),
                push,
            )?;
            written.push(path);
            written.extend(trace);
        }
        Action::Sweep => {
            let result = sweep(&q, &sweep_spec(cfg, n)?, &ch)?;
            let budgets = budget_levels(cfg);
            let path = out.join("sweep.csv");
            write_sweep(&path, &result, &budgets)?;
            written.push(path);
            let path = out.join("argmins.csv");
            write_argmins(&path, &result, &budgets)?;
            written.push(path);
        }
        Action::Optimize => {
            let result = sweep(&q, &sweep_spec(cfg, n)?, &ch)?;
            let opt = result.optimum()?;
            let path = out.join("optimum.csv");
            let mut w = csv_writer(&path, OPTIMUM_VERSION)?;
            let mut header = vec!["model".to_string(), "budget".to_string()];
            header.extend((1..=n).map(|i| format!("param_{i}")));
            header.extend(["aoii", "rate"].map(String::from));
            w.write_record(&header)?;
            let mut rec = vec![
                result.model.name().to_string(),
                cfg.sweep.budget.unwrap_or(f64::INFINITY).to_string(),
            ];
            rec.extend(opt.params.iter().map(|v| v.to_string()));
            rec.push(opt.aoii.to_string());
            rec.push(opt.rate.to_string());
            w.write_record(&rec)?;
            w.flush()?;
            written.push(path);
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
