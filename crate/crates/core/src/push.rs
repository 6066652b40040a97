//! Push-based sampling with Erlang-`k` AoII thresholds.
//!
//! During an out-of-sync excursion in cycle-`i` the transient states are
//! pairs `(j, l)`: `j ≠ i` is the source state and `l ∈ {0..k}` the Erlang
//! stage, with `l = k` meaning the threshold has fired and a transmission
//! is in flight. States are laid out stage-major: block `l` holds `(j, l)`
//! for ascending `j`. Absorbing states are `S_1..S_N`.

use crate::cycle::{check_state, others, reduced_generator, stats_from_chain, CycleStats};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::markov::{AbsorbingChain, GeneratorMatrix};
use crate::policy::{ChannelModel, Policy, PushPolicy};

pub fn build_push_cycle_chain(
    q: &GeneratorMatrix,
    i: usize,
    policy: &PushPolicy,
    channel: &ChannelModel,
) -> Result<AbsorbingChain> {
    check_state(q, i)?;
    Policy::Push(policy.clone()).check_len(q.n())?;

    let n = q.n();
    let k = policy.k();
    let stage_rate = policy.stage_rate(i);
    let mu = channel.mu();
    let others = others(n, i);
    let m = others.len();
    let k1 = (k + 1) * m;
    let reduced = reduced_generator(q, i);
    let idx = |jpos: usize, l: usize| l * m + jpos;

    let mut a = Matrix::zeros(k1, k1);
    let mut b = Matrix::zeros(k1, n);
    for l in 0..=k {
        for (r, &j) in others.iter().enumerate() {
            let row = idx(r, l);
            for c in 0..m {
                a[(row, idx(c, l))] = reduced[(r, c)];
            }
            if l < k {
                a[(row, row)] -= stage_rate;
                a[(row, idx(r, l + 1))] = stage_rate;
            } else {
                a[(row, row)] -= mu;
                b[(row, j)] = mu;
            }
            b[(row, i)] = q.rate(j, i);
        }
    }

    let sigma = q.holding_rate(i);
    let mut beta = vec![0.0; k1];
    for (r, &j) in others.iter().enumerate() {
        beta[idx(r, 0)] = q.rate(i, j) / sigma;
    }

    let transient_labels = (0..=k)
        .flat_map(|l| others.iter().map(move |&j| format!("({},{l})", j + 1)))
        .collect();
    let absorbing_labels = (0..n).map(|s| format!("S{}", s + 1)).collect();
    AbsorbingChain::with_labels(a, b, beta, transient_labels, absorbing_labels)
}

/// Cycle-`i` statistics; `r` counts visits to the transmitting stage, so a
/// preemption that moves `(j,k) → (j',k)` counts as a fresh sample.
pub fn push_cycle_stats(
    q: &GeneratorMatrix,
    i: usize,
    policy: &PushPolicy,
    channel: &ChannelModel,
) -> Result<CycleStats> {
    let chain = build_push_cycle_chain(q, i, policy, channel)?;
    let m = q.n() - 1;
    let k = policy.k();
    let counted: Vec<bool> = (0..(k + 1) * m).map(|s| s >= k * m).collect();
    stats_from_chain(&chain, q.holding_rate(i), &counted)
}

pub(crate) fn all_cycle_stats(
    q: &GeneratorMatrix,
    policy: &PushPolicy,
    channel: &ChannelModel,
) -> Result<Vec<CycleStats>> {
    if policy.len() != q.n() {
        return Err(Error::InvalidPolicy(format!(
            "policy has {} thresholds, source has {} states",
            policy.len(),
            q.n()
        )));
    }
    (0..q.n())
        .map(|i| push_cycle_stats(q, i, policy, channel).map_err(|e| e.in_cycle(i + 1)))
        .collect()
}
