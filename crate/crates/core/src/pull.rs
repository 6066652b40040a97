//! Pull-based sampling driven by Poisson requests from the monitor.
//!
//! Out-of-sync states are `(j, l)` with `l = 0` waiting for a request and
//! `l = 1` transmitting; all `(j, 0)` come first. A source jump during a
//! transmission preempts it and drops back to the waiting layer. Requests
//! that arrive while in sync start redundant transmissions which are counted
//! through the two-state in-sync chain.

use crate::cycle::{check_state, others, reduced_generator, stats_from_chain, CycleStats};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::markov::{AbsorbingChain, GeneratorMatrix};
use crate::policy::{ChannelModel, Policy, PullPolicy};

pub fn build_pull_cycle_chain(
    q: &GeneratorMatrix,
    i: usize,
    policy: &PullPolicy,
    channel: &ChannelModel,
) -> Result<AbsorbingChain> {
    check_state(q, i)?;
    Policy::Pull(policy.clone()).check_len(q.n())?;

    let n = q.n();
    let lambda = policy.rate(i);
    let mu = channel.mu();
    let others = others(n, i);
    let m = others.len();
    let reduced = reduced_generator(q, i);

    let mut a = Matrix::zeros(2 * m, 2 * m);
    let mut b = Matrix::zeros(2 * m, n);
    for (r, &j) in others.iter().enumerate() {
        let (wait, busy) = (r, m + r);
        for c in 0..m {
            a[(wait, c)] = reduced[(r, c)];
            if c != r {
                // preemption: back to the waiting layer in the new state
                a[(busy, c)] = reduced[(r, c)];
            }
        }
        a[(wait, wait)] -= lambda;
        a[(wait, busy)] = lambda;
        a[(busy, busy)] = reduced[(r, r)] - mu;
        b[(wait, i)] = q.rate(j, i);
        b[(busy, i)] = q.rate(j, i);
        b[(busy, j)] = mu;
    }

    let sigma = q.holding_rate(i);
    let mut beta = vec![0.0; 2 * m];
    for (r, &j) in others.iter().enumerate() {
        beta[r] = q.rate(i, j) / sigma;
    }

    let transient_labels = (0..2)
        .flat_map(|l| others.iter().map(move |&j| format!("({},{l})", j + 1)))
        .collect();
    let absorbing_labels = (0..n).map(|s| format!("S{}", s + 1)).collect();
    AbsorbingChain::with_labels(a, b, beta, transient_labels, absorbing_labels)
}

/// In-sync chain: state 0 waits for a request, state 1 transmits; any source
/// jump (rate `σ`) absorbs.
pub fn build_insync_chain(sigma: f64, lambda: f64, mu: f64) -> Result<AbsorbingChain> {
    let a = Matrix::from_rows(&[[-sigma - lambda, lambda], [mu, -mu - sigma]]).expect("2x2");
    let b = Matrix::from_rows(&[[sigma], [sigma]]).expect("2x1");
    AbsorbingChain::with_labels(
        a,
        b,
        vec![1.0, 0.0],
        vec!["wait".into(), "transmit".into()],
        vec!["desync".into()],
    )
}

/// Closed form of the expected in-sync transmission count,
/// `λ(μ+σ) / (λσ + σμ + σ²)`.
pub fn insync_samples(sigma: f64, lambda: f64, mu: f64) -> f64 {
    lambda * (mu + sigma) / (lambda * sigma + sigma * mu + sigma * sigma)
}

pub fn pull_cycle_stats(
    q: &GeneratorMatrix,
    i: usize,
    policy: &PullPolicy,
    channel: &ChannelModel,
) -> Result<CycleStats> {
    let chain = build_pull_cycle_chain(q, i, policy, channel)?;
    let m = q.n() - 1;
    let counted: Vec<bool> = (0..2 * m).map(|s| s >= m).collect();
    let sigma = q.holding_rate(i);
    let mut stats = stats_from_chain(&chain, sigma, &counted)?;
    stats.r += insync_samples(sigma, policy.rate(i), channel.mu());
    Ok(stats)
}

pub(crate) fn all_cycle_stats(
    q: &GeneratorMatrix,
    policy: &PullPolicy,
    channel: &ChannelModel,
) -> Result<Vec<CycleStats>> {
    Policy::Pull(policy.clone()).check_len(q.n())?;
    (0..q.n())
        .map(|i| pull_cycle_stats(q, i, policy, channel).map_err(|e| e.in_cycle(i + 1)))
        .collect()
}
