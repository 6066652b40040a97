//! System-level mean AoII and sampling rate.
//!
//! Synchronization points form a DTMC over the synchronized value. With its
//! stationary vector `π`, renewal-reward over cycles gives
//! `AoII = Σ π_n a_n / Σ π_n d_n` and `R = Σ π_n r_n / Σ π_n d_n`.

use crate::cycle::CycleStats;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::markov::GeneratorMatrix;
use crate::policy::{ChannelModel, Policy};
use crate::{pull, push};

/// Largest tolerated `‖πP − π‖∞` before a chain is declared reducible.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpChain {
    p: Matrix,
    stats: Vec<CycleStats>,
}

impl SpChain {
    pub fn new(stats: Vec<CycleStats>) -> Result<Self> {
        let n = stats.len();
        if n == 0 {
            return Err(Error::InvalidChain("no cycles".into()));
        }
        let mut p = Matrix::zeros(n, n);
        for (i, s) in stats.iter().enumerate() {
            if s.p_row.len() != n {
                return Err(Error::InvalidChain(format!(
                    "cycle {} has {} transition probabilities, expected {n}",
                    i + 1,
                    s.p_row.len()
                )));
            }
            if ![s.a, s.d, s.r]
                .iter()
                .chain(&s.p_row)
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidChain(format!(
                    "cycle {} has non-finite stats",
                    i + 1
                )));
            }
            let sum: f64 = s.p_row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidChain(format!(
                    "transition row of cycle {} sums to {sum}",
                    i + 1
                )));
            }
            for (j, &v) in s.p_row.iter().enumerate() {
                p[(i, j)] = v;
            }
        }
        Ok(Self { p, stats })
    }

    pub fn transition_matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn stats(&self) -> &[CycleStats] {
        &self.stats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMetrics {
    /// Long-run mean AoII.
    pub aoii: f64,
    /// Long-run transmissions started per unit time.
    pub rate: f64,
    /// Stationary distribution of the synchronized value.
    pub pi: Vec<f64>,
}

/// Solves `π = 1ᵀ (P + 11ᵀ − I)⁻¹` and checks the residual `‖πP − π‖∞`.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    if !p.is_square() || n == 0 {
        return Err(Error::InvalidChain(
            "transition matrix must be square".into(),
        ));
    }
    let mut m = p.sub(&Matrix::identity(n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += 1.0;
        }
    }
    let lu = Lu::new(&m).map_err(|s| {
        Error::ReducibleChain(format!("P + 11ᵀ − I is singular (rcond {:e})", s.rcond))
    })?;
    let pi = lu.solve_row(&vec![1.0; n]);
    let pi_p = p.vec_mul(&pi);
    let residual = pi_p
        .iter()
        .zip(&pi)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if residual.is_nan() || residual >= STATIONARY_RESIDUAL_TOL {
        return Err(Error::ReducibleChain(format!(
            "stationary residual {residual:e}"
        )));
    }
    Ok(pi)
}

pub fn system_metrics(chain: &SpChain) -> Result<SystemMetrics> {
    let pi = stationary_distribution(&chain.p)?;
    let weighted = |f: fn(&CycleStats) -> f64| -> f64 {
        pi.iter().zip(&chain.stats).map(|(p, s)| p * f(s)).sum()
    };
    let d = weighted(|s| s.d);
    Ok(SystemMetrics {
        aoii: weighted(|s| s.a) / d,
        rate: weighted(|s| s.r) / d,
        pi,
    })
}

/// Per-cycle statistics for every synchronization value of `q`.
pub fn cycle_stats(
    q: &GeneratorMatrix,
    policy: &Policy,
    channel: &ChannelModel,
) -> Result<Vec<CycleStats>> {
    policy.check_len(q.n())?;
    match policy {
        Policy::Push(p) => push::all_cycle_stats(q, p, channel),
        Policy::Pull(p) => pull::all_cycle_stats(q, p, channel),
    }
}

/// Full analytical pipeline: cycle chains, SP chain, stationary metrics.
pub fn analyze(
    q: &GeneratorMatrix,
    policy: &Policy,
    channel: &ChannelModel,
) -> Result<SystemMetrics> {
    let stats = cycle_stats(q, policy, channel)?;
    system_metrics(&SpChain::new(stats)?)
}
