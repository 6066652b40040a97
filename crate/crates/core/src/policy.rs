//! Sampling policies and the channel model.

use crate::error::{Error, Result};

/// Exponential transmission channel with completion rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    mu: f64,
}

impl ChannelModel {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "mu must be positive and finite, got {mu}"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Push sampling: transmit once the AoII exceeds an Erlang-`k` threshold
/// whose mean depends on the current estimate.
///
/// Thresholds are parameterized by their mean `Θ_i`; the Erlang stage rate
/// is `k / Θ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PushPolicy {
    k: usize,
    mean_threshold: Vec<f64>,
}

impl PushPolicy {
    pub fn new(k: usize, mean_threshold: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPolicy(
                "Erlang order k must be at least 1".into(),
            ));
        }
        if mean_threshold.is_empty() {
            return Err(Error::InvalidPolicy("threshold vector is empty".into()));
        }
        if let Some((i, t)) = mean_threshold
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t > 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidPolicy(format!(
                "mean threshold for state {} must be positive and finite, got {t}",
                i + 1
            )));
        }
        Ok(Self { k, mean_threshold })
    }

    /// Same mean threshold for every one of `n` states.
    pub fn uniform(k: usize, theta: f64, n: usize) -> Result<Self> {
        Self::new(k, vec![theta; n])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mean_thresholds(&self) -> &[f64] {
        &self.mean_threshold
    }

    /// Erlang stage rate `k / Θ_i` used while the estimate is `i`.
    pub fn stage_rate(&self, i: usize) -> f64 {
        self.k as f64 / self.mean_threshold[i]
    }

    pub fn len(&self) -> usize {
        self.mean_threshold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_threshold.is_empty()
    }
}

/// Pull sampling: the monitor issues Poisson requests at rate `λ_i` while
/// its estimate is `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullPolicy {
    lambda: Vec<f64>,
}

impl PullPolicy {
    /// Accepts zero rates; whether the resulting system has a stationary
    /// regime is decided when the synchronization-point chain is solved.
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidPolicy("request-rate vector is empty".into()));
        }
        if let Some((i, l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l >= 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidPolicy(format!(
                "request rate for state {} must be nonnegative and finite, got {l}",
                i + 1
            )));
        }
        Ok(Self { lambda })
    }

    pub fn uniform(lambda: f64, n: usize) -> Result<Self> {
        Self::new(vec![lambda; n])
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    pub fn rates(&self) -> &[f64] {
        &self.lambda
    }

    /// True when no state ever issues a request.
    pub fn never_samples(&self) -> bool {
        self.lambda.iter().all(|&l| l == 0.0)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Push(PushPolicy),
    Pull(PullPolicy),
}

impl Policy {
    pub fn len(&self) -> usize {
        match self {
            Policy::Push(p) => p.len(),
            Policy::Pull(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-state parameters: mean thresholds for push, request rates for pull.
    pub fn params(&self) -> &[f64] {
        match self {
            Policy::Push(p) => p.mean_thresholds(),
            Policy::Pull(p) => p.rates(),
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::InvalidPolicy(format!(
                "policy has {} per-state parameters, source has {n} states",
                self.len()
            )));
        }
        Ok(())
    }
}

impl From<PushPolicy> for Policy {
    fn from(p: PushPolicy) -> Self {
        Policy::Push(p)
    }
}

impl From<PullPolicy> for Policy {
    fn from(p: PullPolicy) -> Self {
        Policy::Pull(p)
    }
}
