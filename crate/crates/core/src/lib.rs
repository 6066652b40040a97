//! Mean Age of Incorrect Information (AoII) and average sampling rate for
//! push- and pull-based sampling of a finite-state CTMC source.
//!
//! The analysis decomposes time into cycles between synchronization points,
//! models each out-of-sync excursion as an absorbing CTMC and combines the
//! per-cycle moments through the stationary distribution of the embedded
//! synchronization-point chain. A discrete-event simulator of the same
//! protocols serves as an independent check, and the optimizer module
//! searches policy grids under a sampling-rate budget.

pub mod cycle;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod metrics;
pub mod optimizer;
pub mod policy;
pub mod pull;
pub mod push;
pub mod sim;
pub mod sources;

pub use cycle::CycleStats;
pub use error::{Error, GeneratorViolation, Result};
pub use linalg::Matrix;
pub use markov::{AbsorbingChain, EmbeddedDtmc, GeneratorMatrix};
pub use metrics::{analyze, SpChain, SystemMetrics};
pub use policy::{ChannelModel, Policy, PullPolicy, PushPolicy};
