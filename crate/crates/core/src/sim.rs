//! Event-driven Monte Carlo simulation of the push and pull protocols.
//!
//! All clocks are exponential, so each step draws the time to the next
//! event from the total rate and then picks the event in the fixed order
//! source jump, transmission completion, stage advance / pull request.
//! Statistics are gathered per completed cycle (synchronization point to
//! synchronization point); the partial cycle at start-up is discarded.
//!
//! Each replication owns a ChaCha8 stream selected by its index, so results
//! are reproducible for a given seed regardless of thread scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::GeneratorMatrix;
use crate::policy::{ChannelModel, Policy, PullPolicy, PushPolicy};

/// Batches per replication used for the batch-means standard error.
const BATCHES: usize = 100;
const MIN_CYCLES_PER_BATCH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Simulated time per replication.
    Time(f64),
    /// Measured (post-warmup) completed cycles per replication.
    Cycles(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: Horizon,
    pub seed: u64,
    /// Fraction of the horizon discarded before measuring.
    pub warmup: f64,
    pub replications: usize,
    /// Cross-check the accumulated AoII area against `T²/2` at every
    /// synchronization point and panic on mismatch.
    pub check_invariants: bool,
}

impl SimConfig {
    pub fn cycles(n: u64, seed: u64) -> Self {
        Self {
            horizon: Horizon::Cycles(n),
            seed,
            warmup: 0.1,
            replications: 1,
            check_invariants: false,
        }
    }

    pub fn time(t: f64, seed: u64) -> Self {
        Self {
            horizon: Horizon::Time(t),
            ..Self::cycles(1, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSimConfig(m.to_string()));
        match self.horizon {
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                return bad("time horizon must be positive")
            }
            Horizon::Cycles(0) => return bad("cycle horizon must be positive"),
            _ => {}
        }
        if !(0.0..=0.5).contains(&self.warmup) {
            return bad("warmup must lie in [0, 0.5]");
        }
        if self.replications == 0 {
            return bad("at least one replication is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Empirical per-synchronization-value statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateStats {
    /// Cycles that started at each value.
    pub counts: Vec<u64>,
    pub pi: Vec<f64>,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    /// Standard errors of `a`, `d` and `r`; cycles that start at the same
    /// value are i.i.d., so these are plain sample standard errors.
    pub a_se: Vec<f64>,
    pub d_se: Vec<f64>,
    pub r_se: Vec<f64>,
    /// `transitions[i][j]`: cycles starting at `i` that ended at `j`.
    pub transitions: Vec<Vec<u64>>,
}

impl PerStateStats {
    /// Empirical synchronization-point transition matrix.
    pub fn transition_frequencies(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .zip(&self.counts)
            .map(|(row, &c)| row.iter().map(|&t| t as f64 / c as f64).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub aoii: Estimate,
    pub rate: Estimate,
    pub cycles: u64,
    pub per_state: PerStateStats,
    /// Total measured time over all replications.
    pub measured_time: f64,
    /// Set when the policy can never start a transmission, or when no cycle
    /// could be completed within the event budget.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
struct CycleRecord {
    from: usize,
    to: usize,
    area: f64,
    duration: f64,
    samples: u64,
}

struct ReplicationOutput {
    records: Vec<CycleRecord>,
    stalled: bool,
}

#[derive(Debug, Clone)]
enum Protocol {
    Push { k: usize, stage_rate: Vec<f64> },
    Pull { lambda: Vec<f64> },
}

struct Engine {
    sigma: Vec<f64>,
    jump_cdf: Vec<Vec<f64>>,
    mu: f64,
    protocol: Protocol,
}

pub fn simulate_push(
    q: &GeneratorMatrix,
    policy: &PushPolicy,
    channel: &ChannelModel,
    cfg: &SimConfig,
) -> Result<SimResult> {
    simulate(q, &Policy::Push(policy.clone()), channel, cfg)
}

pub fn simulate_pull(
    q: &GeneratorMatrix,
    policy: &PullPolicy,
    channel: &ChannelModel,
    cfg: &SimConfig,
) -> Result<SimResult> {
    simulate(q, &Policy::Pull(policy.clone()), channel, cfg)
}

/// Runs all replications (in parallel) and pools them in replication order.
pub fn simulate(
    q: &GeneratorMatrix,
    policy: &Policy,
    channel: &ChannelModel,
    cfg: &SimConfig,
) -> Result<SimResult> {
    let engine = Engine::new(q, policy, channel, cfg)?;
    let outputs: Vec<ReplicationOutput> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| engine.run(rep as u64, cfg, None))
        .collect::<std::io::Result<_>>()
        .expect("no trace sink, so no I/O");
    Ok(engine.summarize(policy, &outputs))
}

/// Runs replication 0 only and writes one CSV line per event
/// (`time,event,x,xhat,aoii`, states 1-based) to `sink`.
pub fn simulate_traced<W: Write>(
    q: &GeneratorMatrix,
    policy: &Policy,
    channel: &ChannelModel,
    cfg: &SimConfig,
    sink: &mut W,
) -> Result<SimResult> {
    let engine = Engine::new(q, policy, channel, cfg)?;
    writeln!(sink, "time,event,x,xhat,aoii").map_err(io_err)?;
    let out = engine.run(0, cfg, Some(sink)).map_err(io_err)?;
    Ok(engine.summarize(policy, &[out]))
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidSimConfig(format!("trace output failed: {e}"))
}

impl Engine {
    fn new(
        q: &GeneratorMatrix,
        policy: &Policy,
        channel: &ChannelModel,
        cfg: &SimConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        policy.check_len(q.n())?;
        let n = q.n();
        let jump_cdf = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                q.jump_row(i)
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        let protocol = match policy {
            Policy::Push(p) => Protocol::Push {
                k: p.k(),
                stage_rate: (0..n).map(|i| p.stage_rate(i)).collect(),
            },
            Policy::Pull(p) => Protocol::Pull {
                lambda: p.rates().to_vec(),
            },
        };
        Ok(Self {
            sigma: q.holding_rates(),
            jump_cdf,
            mu: channel.mu(),
            protocol,
        })
    }

    fn next_state<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let cdf = &self.jump_cdf[from];
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
            // rounding at the top of the cdf: take the last reachable state
            (0..cdf.len())
                .rev()
                .find(|&j| j != from && cdf[j] > if j == 0 { 0.0 } else { cdf[j - 1] })
                .expect("every state has a positive holding rate")
        })
    }

    fn run(
        &self,
        rep: u64,
        cfg: &SimConfig,
        mut trace: Option<&mut dyn Write>,
    ) -> std::io::Result<ReplicationOutput> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep);

        let (warmup_cycles, target_cycles, time_limit, warmup_time) = match cfg.horizon {
            Horizon::Cycles(n) => ((cfg.warmup * n as f64).ceil() as u64, n, f64::INFINITY, 0.0),
            Horizon::Time(h) => (0, u64::MAX, h, cfg.warmup * h),
        };
        let event_budget = match cfg.horizon {
            Horizon::Cycles(n) => 10_000_000 + 10_000 * (n + warmup_cycles),
            Horizon::Time(_) => u64::MAX,
        };

        let mut s = RunState::start();
        let mut records = Vec::new();
        let mut completed = 0u64;
        let mut events = 0u64;
        let mut stalled = false;

        while (records.len() as u64) < target_cycles {
            if events >= event_budget {
                stalled = true;
                break;
            }
            events += 1;

            let r_jump = self.sigma[s.x];
            let r_comp = if s.transmitting { self.mu } else { 0.0 };
            let r_third = match &self.protocol {
                Protocol::Push { stage_rate, .. } if !s.in_sync && !s.transmitting => {
                    stage_rate[s.xhat]
                }
                Protocol::Push { .. } => 0.0,
                Protocol::Pull { lambda } if !s.transmitting => lambda[s.xhat],
                Protocol::Pull { .. } => 0.0,
            };
            let total = r_jump + r_comp + r_third;
            let dt = -(1.0 - rng.random::<f64>()).ln() / total;
            if s.t + dt > time_limit {
                break;
            }
            if !s.in_sync {
                let age = s.t - s.out_since;
                s.area += (age + 0.5 * dt) * dt;
            }
            s.t += dt;

            let u = rng.random::<f64>() * total;
            let mut synced = false;
            let event;
            if u < r_jump {
                let next = self.next_state(s.x, &mut rng);
                s.x = next;
                if s.in_sync {
                    s.in_sync = false;
                    s.out_since = s.t;
                    s.stage = 0;
                    event = if s.transmitting {
                        "jump_preempt"
                    } else {
                        "jump"
                    };
                    s.transmitting = false;
                } else if next == s.xhat {
                    s.transmitting = false;
                    synced = true;
                    event = "jump_sync";
                } else if s.transmitting {
                    match self.protocol {
                        Protocol::Push { .. } => {
                            s.samples += 1;
                            event = "jump_resample";
                        }
                        Protocol::Pull { .. } => {
                            s.transmitting = false;
                            event = "jump_preempt";
                        }
                    }
                } else {
                    event = "jump";
                }
            } else if u < r_jump + r_comp {
                s.transmitting = false;
                if s.in_sync {
                    event = "complete_insync";
                } else {
                    s.xhat = s.x;
                    synced = true;
                    event = "complete_sync";
                }
            } else {
                match self.protocol {
                    Protocol::Push { k, .. } => {
                        s.stage += 1;
                        if s.stage == k {
                            s.transmitting = true;
                            s.samples += 1;
                            event = "threshold_sample";
                        } else {
                            event = "stage";
                        }
                    }
                    Protocol::Pull { .. } => {
                        s.transmitting = true;
                        s.samples += 1;
                        event = "pull_sample";
                    }
                }
            }

            if synced {
                let excursion = s.t - s.out_since;
                if cfg.check_invariants {
                    let exact = 0.5 * excursion * excursion;
                    assert!(
                        (s.area - exact).abs() <= 1e-9 * (1.0 + exact),
                        "accumulated AoII area {} differs from T²/2 = {exact}",
                        s.area
                    );
                }
                let rec = CycleRecord {
                    from: s.cycle_from,
                    to: s.xhat,
                    area: s.area,
                    duration: s.t - s.cycle_start,
                    samples: s.samples,
                };
                if !s.partial {
                    completed += 1;
                    if completed > warmup_cycles && s.cycle_start >= warmup_time {
                        records.push(rec);
                    }
                }
                s.partial = false;
                s.in_sync = true;
                s.stage = 0;
                s.cycle_from = s.xhat;
                s.cycle_start = s.t;
                s.area = 0.0;
                s.samples = 0;
            }

            if let Some(w) = trace.as_deref_mut() {
                let aoii = if s.in_sync { 0.0 } else { s.t - s.out_since };
                writeln!(w, "{},{},{},{},{}", s.t, event, s.x + 1, s.xhat + 1, aoii)?;
            }
        }
        Ok(ReplicationOutput { records, stalled })
    }

    fn summarize(&self, policy: &Policy, outputs: &[ReplicationOutput]) -> SimResult {
        let n = self.sigma.len();
        let mut counts = vec![0u64; n];
        let mut sums = vec![[0.0f64; 3]; n];
        let mut squares = vec![[0.0f64; 3]; n];
        let mut transitions = vec![vec![0u64; n]; n];
        let (mut total_a, mut total_d, mut total_r) = (0.0, 0.0, 0.0);
        let mut batches_a = Vec::new();
        let mut batches_r = Vec::new();
        let mut batches_d = Vec::new();

        for out in outputs {
            for rec in &out.records {
                counts[rec.from] += 1;
                transitions[rec.from][rec.to] += 1;
                let s = &mut sums[rec.from];
                s[0] += rec.area;
                s[1] += rec.duration;
                s[2] += rec.samples as f64;
                let sq = &mut squares[rec.from];
                sq[0] += rec.area * rec.area;
                sq[1] += rec.duration * rec.duration;
                sq[2] += (rec.samples * rec.samples) as f64;
                total_a += rec.area;
                total_d += rec.duration;
                total_r += rec.samples as f64;
            }
            let len = out.records.len();
            let nb = BATCHES.min(len / MIN_CYCLES_PER_BATCH);
            for b in 0..nb {
                let chunk = &out.records[b * len / nb..(b + 1) * len / nb];
                batches_a.push(chunk.iter().map(|r| r.area).sum::<f64>());
                batches_d.push(chunk.iter().map(|r| r.duration).sum::<f64>());
                batches_r.push(chunk.iter().map(|r| r.samples as f64).sum::<f64>());
            }
        }

        let cycles: u64 = counts.iter().sum();
        let aoii = ratio_estimate(total_a, total_d, &batches_a, &batches_d);
        let rate = ratio_estimate(total_r, total_d, &batches_r, &batches_d);
        let mean = |i: usize, f: usize| {
            if counts[i] == 0 {
                f64::NAN
            } else {
                sums[i][f] / counts[i] as f64
            }
        };
        let se = |i: usize, f: usize| {
            let c = counts[i] as f64;
            if counts[i] < 2 {
                return f64::NAN;
            }
            let m = sums[i][f] / c;
            let var = ((squares[i][f] - c * m * m) / (c - 1.0)).max(0.0);
            (var / c).sqrt()
        };
        let per_state = PerStateStats {
            pi: counts
                .iter()
                .map(|&c| {
                    if cycles == 0 {
                        f64::NAN
                    } else {
                        c as f64 / cycles as f64
                    }
                })
                .collect(),
            a: (0..n).map(|i| mean(i, 0)).collect(),
            d: (0..n).map(|i| mean(i, 1)).collect(),
            r: (0..n).map(|i| mean(i, 2)).collect(),
            a_se: (0..n).map(|i| se(i, 0)).collect(),
            d_se: (0..n).map(|i| se(i, 1)).collect(),
            r_se: (0..n).map(|i| se(i, 2)).collect(),
            counts,
            transitions,
        };
        let never_samples = matches!(policy, Policy::Pull(p) if p.never_samples());
        SimResult {
            aoii,
            rate,
            cycles,
            per_state,
            measured_time: total_d,
            degenerate: never_samples || cycles == 0 || outputs.iter().any(|o| o.stalled),
        }
    }
}

// Batch-means standard error of a ratio of sums (delta method).
fn ratio_estimate(num: f64, den: f64, batch_num: &[f64], batch_den: &[f64]) -> Estimate {
    if den <= 0.0 {
        return Estimate {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = num / den;
    let nb = batch_num.len();
    if nb < 2 {
        return Estimate { mean, se: f64::NAN };
    }
    let mean_den = batch_den.iter().sum::<f64>() / nb as f64;
    let ss: f64 = batch_num
        .iter()
        .zip(batch_den)
        .map(|(a, d)| (a - mean * d).powi(2))
        .sum();
    let se = (ss / (nb as f64 * (nb as f64 - 1.0))).sqrt() / mean_den;
    Estimate { mean, se }
}

#[derive(Debug)]
struct RunState {
    t: f64,
    x: usize,
    xhat: usize,
    in_sync: bool,
    stage: usize,
    transmitting: bool,
    out_since: f64,
    area: f64,
    cycle_start: f64,
    cycle_from: usize,
    samples: u64,
    partial: bool,
}

impl RunState {
    // X = X̂ = state 1 at t = 0; the first cycle is partial.
    fn start() -> Self {
        Self {
            t: 0.0,
            x: 0,
            xhat: 0,
            in_sync: true,
            stage: 0,
            transmitting: false,
            out_since: 0.0,
            area: 0.0,
            cycle_start: 0.0,
            cycle_from: 0,
            samples: 0,
            partial: true,
        }
    }
}
