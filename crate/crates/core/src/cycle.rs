//! Per-cycle statistics shared by the push and pull models.
//!
//! A cycle starts at a synchronization point with value `i`, spends an
//! `Exp(σ_i)` holding time in sync and then an out-of-sync excursion whose
//! length is the absorption time of the cycle chain.

use crate::error::Result;
use crate::linalg::Matrix;
use crate::markov::{expected_visits, AbsorbingChain, GeneratorMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    /// Expected area under the AoII curve over the cycle.
    pub a: f64,
    /// Expected cycle duration, including the in-sync holding time.
    pub d: f64,
    /// Expected number of samples taken during the cycle.
    pub r: f64,
    /// Probabilities of the value at the next synchronization point.
    pub p_row: Vec<f64>,
}

/// Evaluates `(a, d, p_row)` and the visit count over `counted` states.
pub(crate) fn stats_from_chain(
    chain: &AbsorbingChain,
    holding_rate: f64,
    counted: &[bool],
) -> Result<CycleStats> {
    let f = chain.factor()?;
    let a = f.half_second_moment();
    let d = f.mean_time() + 1.0 / holding_rate;
    let p_row = f.absorption_probabilities();
    let r = expected_visits(chain, counted)?;
    Ok(CycleStats { a, d, r, p_row })
}

/// `Q` with row and column `i` removed.
pub(crate) fn reduced_generator(q: &GeneratorMatrix, i: usize) -> Matrix {
    let others = others(q.n(), i);
    let m = others.len();
    let mut out = Matrix::zeros(m, m);
    for (r, &j) in others.iter().enumerate() {
        for (c, &jj) in others.iter().enumerate() {
            out[(r, c)] = q.rate(j, jj);
        }
    }
    out
}

/// Source states other than `i`, ascending.
pub(crate) fn others(n: usize, i: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != i).collect()
}

pub(crate) fn check_state(q: &GeneratorMatrix, i: usize) -> Result<()> {
    if i >= q.n() {
        return Err(crate::Error::InvalidPolicy(format!(
            "state index {i} out of range for {} states",
            q.n()
        )));
    }
    Ok(())
}
