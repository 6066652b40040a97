//! Experiment config: JSON schema, `--set` overrides and resolution into
//! core types.

use std::path::{Path, PathBuf};

use aoii_core::optimizer::{Grid, Spacing};
use aoii_core::sim::{Horizon, SimConfig};
use aoii_core::{sources, ChannelModel, GeneratorMatrix};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    #[serde(default = "default_mu")]
    pub mu: f64,
    pub model: ModelSpec,
    #[serde(default)]
    pub action: Option<Action>,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub sweep: SweepBlock,
}

fn default_mu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Analyze,
    Simulate,
    Sweep,
    Optimize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    /// One of `q1`, `q2`, `q3`.
    Preset(String),
    Matrix(Vec<Vec<f64>>),
    /// Headerless CSV, one matrix row per line.
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Push {
        k: OneOrMany<usize>,
        theta: ParamSpec,
    },
    Pull {
        lambda: ParamSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// A per-state parameter: a scalar broadcast to every state, an explicit
/// per-state vector, or a list of scalars (each broadcast) to iterate over.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ParamSpec {
    Scalar(f64),
    Vector(Vec<f64>),
    Values { values: Vec<f64> },
    Grid(GridSpec),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default)]
    pub spacing: SpacingSpec,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SpacingSpec {
    #[default]
    Log,
    Linear,
}

impl GridSpec {
    pub fn to_grid(self) -> Result<Grid, CliError> {
        let spacing = match self.spacing {
            SpacingSpec::Log => Spacing::Log,
            SpacingSpec::Linear => Spacing::Linear,
        };
        Ok(Grid::new(self.min, self.max, self.steps, spacing)?)
    }
}

impl ParamSpec {
    /// Expands into the list of per-state parameter vectors to evaluate.
    pub fn points(&self, n: usize, name: &str) -> Result<Vec<Vec<f64>>, CliError> {
        Ok(match self {
            Self::Scalar(v) => vec![vec![*v; n]],
            Self::Vector(v) => {
                if v.len() != n {
                    return Err(CliError::Config(format!(
                        "{name} has {} entries for a {n}-state source",
                        v.len()
                    )));
                }
                vec![v.clone()]
            }
            Self::Values { values } => values.iter().map(|&v| vec![v; n]).collect(),
            Self::Grid(g) => g
                .to_grid()?
                .points()
                .into_iter()
                .map(|v| vec![v; n])
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// Completed cycles per replication; ignored when `time` is set.
    pub cycles: Option<u64>,
    /// Simulated time per replication.
    pub time: Option<f64>,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
    pub check_invariants: bool,
    /// Also write an event trace of replication 0 for the first policy.
    pub trace: bool,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            cycles: Some(100_000),
            time: None,
            warmup: 0.1,
            replications: 1,
            seed: 0,
            check_invariants: false,
            trace: false,
        }
    }
}

impl SimulateSpec {
    pub fn to_sim_config(&self) -> Result<SimConfig, CliError> {
        let horizon = match (self.time, self.cycles) {
            (Some(t), _) => Horizon::Time(t),
            (None, Some(c)) => Horizon::Cycles(c),
            (None, None) => {
                return Err(CliError::Config("simulate needs `cycles` or `time`".into()))
            }
        };
        let cfg = SimConfig {
            horizon,
            seed: self.seed,
            warmup: self.warmup,
            replications: self.replications,
            check_invariants: self.check_invariants,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Per-state grid; a single object is reused for every state.
    pub grid: OneOrMany<GridSpec>,
    /// Sweep only the diagonal (common parameter) instead of the full product.
    pub uniform: bool,
    pub budget: Option<f64>,
    /// Extra budget levels whose argmins are reported in `argmins.csv`.
    pub budgets: Vec<f64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            grid: OneOrMany::One(GridSpec {
                min: 0.05,
                max: 20.0,
                steps: 50,
                spacing: SpacingSpec::Log,
            }),
            uniform: false,
            budget: None,
            budgets: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self, CliError> {
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Replaces a file source by its inline matrix so the resolved config is
    /// self-contained.
    pub fn inline_source(&mut self, base: &Path) -> Result<(), CliError> {
        if let SourceSpec::File(p) = &self.source {
            let path = if p.is_relative() {
                base.join(p)
            } else {
                p.clone()
            };
            self.source = SourceSpec::Matrix(read_matrix(&path)?);
        }
        Ok(())
    }

    pub fn generator(&self) -> Result<GeneratorMatrix, CliError> {
        match &self.source {
            SourceSpec::Preset(name) => sources::by_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown preset source `{name}`"))),
            SourceSpec::Matrix(rows) => Ok(GeneratorMatrix::new(rows)?),
            SourceSpec::File(p) => Ok(GeneratorMatrix::new(&read_matrix(p)?)?),
        }
    }

    pub fn channel(&self) -> Result<ChannelModel, CliError> {
        Ok(ChannelModel::new(self.mu)?)
    }
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{}: `{s}` is not a number", path.display()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Fills every key missing from `doc` with the defaults of the optional
/// blocks, so overrides such as `sweep.grid.steps=10` land in a complete
/// object.
pub fn fill_defaults(doc: &mut Value) {
    let defaults = serde_json::json!({
        "mu": default_mu(),
        "simulate": SimulateSpec::default(),
        "sweep": SweepBlock::default(),
    });
    merge_missing(doc, &defaults);
}

fn merge_missing(doc: &mut Value, defaults: &Value) {
    if let (Some(d), Some(src)) = (doc.as_object_mut(), defaults.as_object()) {
        for (k, v) in src {
            match d.get_mut(k) {
                Some(existing) => merge_missing(existing, v),
                None => {
                    d.insert(k.clone(), v.clone());
                }
            }
        }
    }
}

/// Applies `key.path=value`; the value is parsed as JSON, falling back to a
/// plain string. Numeric segments index into arrays.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return Err(CliError::Config(format!(
                "empty segment in override key `{path}`"
            )));
        }
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| {
                    CliError::Config(format!("`{seg}` in `{path}` is not an array index"))
                })?;
                items.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("index {idx} out of range in `{path}`"))
                })?
            }
            other => {
                if !other.is_object() {
                    *other = Value::Object(Default::default());
                }
                let map = other.as_object_mut().expect("object ensured above");
                map.entry(seg.to_string()).or_insert(Value::Null)
            }
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    Ok(())
}
