//! Canned experiment configs for `reproduce`.

use std::path::Path;

use aoii_core::optimizer::sweep;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::run::{
    analyze_points, budget_levels, points, simulate_points, sweep_spec, write_argmins,
    write_points, write_sweep,
};
use crate::CliError;

const PRESETS: [&str; 3] = ["q1", "q2", "q3"];
const BUDGETS: [f64; 7] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];

fn config(v: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_value(v).expect("canned config is valid")
}

fn curve_configs(figure: &str, seed: u64) -> Vec<ExperimentConfig> {
    PRESETS
        .iter()
        .enumerate()
        .map(|(s, preset)| {
            let model = if figure == "fig4" {
                json!({"push": {"k": [1, 2, 3], "theta": {"min": 0.125, "max": 8.0, "steps": 13}}})
            } else {
                json!({"pull": {"lambda": {"min": 0.125, "max": 8.0, "steps": 13}}})
            };
            config(json!({
                "source": {"preset": preset},
                "mu": 1.0,
                "model": model,
                "action": "simulate",
                "simulate": {"cycles": 100000, "seed": seed.wrapping_add(1000 * s as u64)},
            }))
        })
        .collect()
}

fn sweep_config(figure: &str) -> ExperimentConfig {
    let model = if figure == "fig5" {
        json!({"push": {"k": 3, "theta": 1.0}})
    } else {
        json!({"pull": {"lambda": 1.0}})
    };
    config(json!({
        "source": {"preset": "q3"},
        "mu": 1.0,
        "model": model,
        "action": "sweep",
        "sweep": {"grid": {"min": 0.05, "max": 20.0, "steps": 50, "spacing": "log"}, "budgets": BUDGETS},
    }))
}

pub fn reproduce(figure: &str, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    if !matches!(figure, "fig4" | "fig5" | "fig6" | "fig7") {
        return Err(CliError::UnknownFigure(figure.to_string()));
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    match figure {
        "fig4" | "fig6" => {
            let configs = curve_configs(figure, seed.unwrap_or(0));
            let mut analytical = Vec::new();
            let mut simulated = Vec::new();
            for (cfg, preset) in configs.iter().zip(PRESETS) {
                let q = cfg.generator()?;
                let ch = cfg.channel()?;
                let pts = points(cfg, q.n())?;
                for r in analyze_points(&q, &ch, pts.clone())? {
                    analytical.push((Some(preset), r));
                }
                for r in simulate_points(&q, &ch, cfg, pts, None)? {
                    simulated.push((Some(preset), r));
                }
            }
            let push = figure == "fig4";
            let path = out.join(format!("{figure}_analytical.csv"));
            write_points(&path, &analytical, push)?;
            written.push(path);
            let path = out.join(format!("{figure}_simulated.csv"));
            write_points(&path, &simulated, push)?;
            written.push(path);
            let path = out.join(format!("{figure}_configs.json"));
            std::fs::write(
                &path,
                serde_json::to_string_pretty(&configs).expect("serializes") + "\n",
            )?;
            written.push(path);
        }
        _ => {
            let cfg = sweep_config(figure);
            let q = cfg.generator()?;
            let result = sweep(&q, &sweep_spec(&cfg, q.n())?, &cfg.channel()?)?;
            let budgets = budget_levels(&cfg);
            let path = out.join(format!("{figure}_sweep.csv"));
            write_sweep(&path, &result, &budgets)?;
            written.push(path);
            let path = out.join(format!("{figure}_argmins.csv"));
            write_argmins(&path, &result, &budgets)?;
            written.push(path);
            let path = out.join(format!("{figure}_config.json"));
            std::fs::write(
                &path,
                serde_json::to_string_pretty(&cfg).expect("serializes") + "\n",
            )?;
            written.push(path);
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
