//! Vehicular fog computing offloading simulator.
//!
//! Client vehicles drive on a grid-planned city and emit compute tasks which
//! travel through a FIFO queuing network: client uplink, a central road-side
//! unit (RSU) that decides where each task goes, and then one of the parked
//! service vehicles, the RSU's own processor, or the cloud. The RSU decision
//! is exposed as an event-driven MDP ([`env::Environment`]) and can be driven
//! by the baseline policies in [`policies`] or an exported MLP.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod metrics;
pub mod mobility;
pub mod policies;
pub mod protocol;
pub mod radio;
pub mod seeding;
pub mod simcore;
pub mod workload;

pub use config::ScenarioConfig;
pub use env::{ActionChoice, Environment, Observation, StepResult};
pub use error::{Error, Result};
pub use simcore::{run_episode, EpisodeResult, Simulation, TaskRecord};
