//! Tabu-list and elite-memory metaheuristic for noisy simulation optimisation.
//!
//! * [`objective`] – stochastic objective contract and replicated evaluation.
//! * [`memory`] – tabu list and elite memory.
//! * [`optimizer`] – the search loop.
//! * [`queue`] – M/M/k queue test problem with an Erlang C oracle.
//! * [`bench`] – random-search baseline, ablation suite and convergence curves.
//! * [`config`] and [`output`] – experiment files used by the `teso` binary.

pub mod bench;
pub mod config;
pub mod error;
pub mod memory;
pub mod objective;
pub mod optimizer;
pub mod output;
pub mod queue;
pub mod stream;

pub use error::{Error, Result};
pub use objective::{Candidate, DecisionSpace, Direction, Evaluation, StochasticObjective};
pub use optimizer::{OptimizationResult, TesoConfig};
pub use queue::{QueueModel, WaitMode};
pub use stream::Stream;
