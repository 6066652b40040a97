//! Grid sweeps over per-state policy parameters and budget-constrained
//! selection of the minimum-AoII policy.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::GeneratorMatrix;
use crate::metrics::analyze;
use crate::policy::{ChannelModel, Policy, PullPolicy, PushPolicy};

/// Version tag written in the comment line of sweep CSV files.
pub const SWEEP_CSV_VERSION: &str = "aoii-sweep/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize, spacing: Spacing) -> Result<Self> {
        let g = Self {
            min,
            max,
            steps,
            spacing,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn log(min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::new(min, max, steps, Spacing::Log)
    }

    pub fn linear(min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::new(min, max, steps, Spacing::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidSweep("grid needs at least one step".into()));
        }
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite() && self.max >= self.min)
        {
            return Err(Error::InvalidSweep(format!(
                "grid range [{}, {}] must be positive and ordered",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|s| {
                let t = s as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepModel {
    /// Per-state parameters are mean thresholds `Θ_i`.
    Push { k: usize },
    /// Per-state parameters are request rates `λ_i`.
    Pull,
}

impl SweepModel {
    pub fn name(&self) -> &'static str {
        match self {
            SweepModel::Push { .. } => "push",
            SweepModel::Pull => "pull",
        }
    }

    pub fn policy(&self, params: Vec<f64>) -> Result<Policy> {
        Ok(match *self {
            SweepModel::Push { k } => Policy::Push(PushPolicy::new(k, params)?),
            SweepModel::Pull => Policy::Pull(PullPolicy::new(params)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxes {
    /// Cartesian product of one grid per source state.
    PerState(Vec<Grid>),
    /// One grid whose value is applied to every state.
    Uniform(Grid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: SweepModel,
    pub axes: SweepAxes,
    /// Maximum average sampling rate; `None` means unconstrained.
    pub budget: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let SweepModel::Push { k: 0 } = self.model {
            return Err(Error::InvalidSweep(
                "Erlang order k must be at least 1".into(),
            ));
        }
        match &self.axes {
            SweepAxes::PerState(grids) => {
                if grids.len() != n {
                    return Err(Error::InvalidSweep(format!(
                        "{} grids for a {n}-state source",
                        grids.len()
                    )));
                }
                grids.iter().try_for_each(Grid::validate)?;
            }
            SweepAxes::Uniform(g) => g.validate()?,
        }
        if let Some(b) = self.budget {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::InvalidSweep(format!(
                    "budget must be positive, got {b}"
                )));
            }
        }
        Ok(())
    }

    /// Grid points in row-major order (first state varies slowest).
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        match &self.axes {
            SweepAxes::Uniform(g) => g.points().into_iter().map(|v| vec![v; n]).collect(),
            SweepAxes::PerState(grids) => {
                let mut out: Vec<Vec<f64>> = vec![Vec::new()];
                for g in grids {
                    let pts = g.points();
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            pts.iter().map(move |&v| {
                                let mut p = prefix.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: Vec<f64>,
    /// NaN when `error` is set.
    pub aoii: f64,
    pub rate: f64,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub model: SweepModel,
    pub budget: Option<f64>,
    pub rows: Vec<SweepRow>,
    pub argmin: Option<usize>,
}

/// Evaluates the analytical model at every grid point. Per-point failures
/// are recorded in the row rather than aborting the sweep.
pub fn sweep(q: &GeneratorMatrix, spec: &SweepSpec, channel: &ChannelModel) -> Result<SweepResult> {
    spec.validate(q.n())?;
    let budget = spec.budget.unwrap_or(f64::INFINITY);
    let rows: Vec<SweepRow> = spec
        .points(q.n())
        .into_par_iter()
        .map(|params| {
            let outcome = spec
                .model
                .policy(params.clone())
                .and_then(|p| analyze(q, &p, channel));
            match outcome {
                Ok(m) => SweepRow {
                    params,
                    aoii: m.aoii,
                    rate: m.rate,
                    feasible: m.rate <= budget,
                    error: None,
                },
                Err(e) => SweepRow {
                    params,
                    aoii: f64::NAN,
                    rate: f64::NAN,
                    feasible: false,
                    error: Some(format!("{}: {e}", e.kind())),
                },
            }
        })
        .collect();
    let argmin = select_argmin(&rows, spec.budget);
    Ok(SweepResult {
        model: spec.model,
        budget: spec.budget,
        rows,
        argmin,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Index of the minimum-AoII row with `rate ≤ budget`; ties go to the
/// smaller rate, then to the lexicographically smaller parameter vector.
pub fn select_argmin(rows: &[SweepRow], budget: Option<f64>) -> Option<usize> {
    let budget = budget.unwrap_or(f64::INFINITY);
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.error.is_none() && r.rate <= budget)
        .min_by(|(_, a), (_, b)| {
            a.aoii
                .total_cmp(&b.aoii)
                .then(a.rate.total_cmp(&b.rate))
                .then_with(|| lexicographic(&a.params, &b.params))
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub row: usize,
    pub params: Vec<f64>,
    pub aoii: f64,
    pub rate: f64,
}

pub fn optimize_under_budget(
    q: &GeneratorMatrix,
    spec: &SweepSpec,
    channel: &ChannelModel,
) -> Result<Optimum> {
    let result = sweep(q, spec, channel)?;
    result.optimum()
}

impl SweepResult {
    pub fn optimum(&self) -> Result<Optimum> {
        let row = self.argmin.ok_or(Error::NoFeasiblePolicy {
            budget: self.budget.unwrap_or(f64::INFINITY),
        })?;
        let r = &self.rows[row];
        Ok(Optimum {
            row,
            params: r.params.clone(),
            aoii: r.aoii,
            rate: r.rate,
        })
    }

    /// Argmin row for each budget level, re-using the evaluated rows.
    pub fn argmins(&self, budgets: &[f64]) -> Vec<Option<usize>> {
        budgets
            .iter()
            .map(|&b| select_argmin(&self.rows, Some(b)))
            .collect()
    }

    /// Writes `model,param_1..param_N,aoii,rate,feasible,error` preceded by
    /// a `#` comment line carrying the schema version.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.rows.first().map_or(0, |r| r.params.len());
        writeln!(out, "# {SWEEP_CSV_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["model".to_string()];
        header.extend((1..=n).map(|i| format!("param_{i}")));
        header.extend(["aoii", "rate", "feasible", "error"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![self.model.name().to_string()];
            rec.extend(r.params.iter().map(|p| p.to_string()));
            rec.push(r.aoii.to_string());
            rec.push(r.rate.to_string());
            rec.push(r.feasible.to_string());
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()
    }
}
