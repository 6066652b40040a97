mod config;
mod figures;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use config::{apply_override, fill_defaults, Action, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] aoii_core::Error),
    #[error("unknown figure `{0}` (expected fig4, fig5, fig6 or fig7)")]
    UnknownFigure(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "InvalidConfig",
            Self::Core(e) => e.kind(),
            Self::UnknownFigure(_) => "UnknownFigure",
            Self::Io(_) => "Io",
            Self::Csv(_) => "Csv",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) if e.is_degenerate() => 2,
            _ => 1,
        }
    }

    /// One-line JSON diagnostic.
    fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let Self::Core(e) = self {
            let mut cur = e;
            while let aoii_core::Error::InCycle { cycle, source } = cur {
                v["cycle"] = json!(cycle);
                cur = source;
            }
            if let aoii_core::Error::InvalidGenerator(violations) = cur {
                if let Some(row) = violations.iter().find_map(|x| x.row()) {
                    v["row"] = json!(row + 1);
                }
            }
        }
        v
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aoii",
    version,
    about = "Mean AoII and sampling rate of push/pull remote estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact AoII and sampling rate for each configured policy.
    Analyze(Common),
    /// Monte Carlo estimates for each configured policy.
    Simulate(Common),
    /// Evaluate a policy grid; flag budget argmins.
    Sweep(Common),
    /// Minimum-AoII grid point under the sampling-rate budget.
    Optimize(Common),
    /// Run the action named in the config.
    Run(Common),
    /// Regenerate the data behind one of the reference experiments.
    Reproduce {
        /// fig4, fig5, fig6 or fig7
        figure: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set model.pull.lambda=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Simulation seed; overrides `simulate.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

fn load(common: &Common, action: Option<Action>) -> Result<ExperimentConfig, CliError> {
    let mut doc = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => json!({}),
    };
    fill_defaults(&mut doc);
    for o in &common.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(seed) = common.out.seed {
        apply_override(&mut doc, &format!("simulate.seed={seed}"))?;
    }
    let mut cfg = ExperimentConfig::from_value(doc)?;
    if action.is_some() {
        cfg.action = action;
    }
    if cfg.action.is_none() {
        return Err(CliError::Config("no action given in the config".into()));
    }
    let base = common
        .config
        .as_ref()
        .and_then(|p| p.parent().map(|d| d.to_path_buf()))
        .unwrap_or_default();
    cfg.inline_source(&base)?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, action) = match cli.command {
        Command::Reproduce { figure, out } => {
            let Format::Csv = out.format;
            return figures::reproduce(&figure, &out.out, out.seed);
        }
        Command::Analyze(c) => (c, Some(Action::Analyze)),
        Command::Simulate(c) => (c, Some(Action::Simulate)),
        Command::Sweep(c) => (c, Some(Action::Sweep)),
        Command::Optimize(c) => (c, Some(Action::Optimize)),
        Command::Run(c) => (c, None),
    };
    let Format::Csv = common.out.format;
    let cfg = load(&common, action)?;
    run::execute(&cfg, &common.out.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
