//! MDP facade over the simulator.
//!
//! A step begins when a task has fully arrived at the RSU. The agent sees
//! the task, the processing power and distance of every node and the current
//! queue loads, picks a destination, and receives `5 - d_total` for every
//! task that finished since its previous decision.

use serde::{Deserialize, Serialize};

use crate::config::{Normalization, ScenarioConfig};
use crate::error::{Error, Result};
use crate::simcore::{Destination, EpisodeResult, Simulation, Status};

/// Reward granted for each completed task, before subtracting its delay.
pub const COMPLETION_BONUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Size of the pending task, bits.
    pub sz: f64,
    /// Instruction count of the pending task, MI.
    pub cu: f64,
    /// MIPS of service vehicles 0..m, then RSU, then one cloud server.
    pub pp: Vec<f64>,
    /// Distance of each service vehicle to the RSU, meters.
    pub dt: Vec<f64>,
    /// Bits queued on each RSU outgoing link, then the cloud uplink.
    pub q_t: Vec<f64>,
    /// MI queued at each service vehicle, then at the RSU.
    pub q_p: Vec<f64>,
}

impl Observation {
    pub fn service_count(&self) -> usize {
        self.dt.len()
    }

    pub fn action_count(&self) -> usize {
        self.dt.len() + 2
    }

    fn from_simulation(sim: &Simulation) -> Option<Self> {
        let task = sim.pending_task()?;
        let cfg = sim.config();
        let mut pp: Vec<f64> = sim.service_vehicles().iter().map(|s| s.cpu).collect();
        pp.push(cfg.rsu_cpu_mips);
        pp.push(cfg.cloud_cpu_mips);
        let (q_t, q_p) = sim.queue_snapshot();
        Some(Observation {
            sz: task.size_bits,
            cu: task.cu,
            pp,
            dt: sim.service_distances().to_vec(),
            q_t,
            q_p,
        })
    }
}

/// Flattened observation length for `m` service vehicles:
/// `2 + (m + 2) + m + (m + 1) + (m + 1)`.
pub fn observation_len(m: usize) -> usize {
    4 * m + 6
}

/// Flattens `[sz, cu, pp.., dt.., q_t.., q_p..]`, each block divided by its
/// normalization constant.
pub fn observation_vector(obs: &Observation, norm: &Normalization) -> Vec<f64> {
    let mut v = Vec::with_capacity(observation_len(obs.service_count()));
    v.push(obs.sz / norm.sz);
    v.push(obs.cu / norm.cu);
    v.extend(obs.pp.iter().map(|x| x / norm.pp));
    v.extend(obs.dt.iter().map(|x| x / norm.dt));
    v.extend(obs.q_t.iter().map(|x| x / norm.q_t));
    v.extend(obs.q_p.iter().map(|x| x / norm.q_p));
    v
}

/// Action index: `0..m` service vehicles, `m` the RSU, `m + 1` the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionChoice {
    pub index: usize,
}

impl ActionChoice {
    pub fn new(index: usize) -> Self {
        ActionChoice { index }
    }

    pub fn rsu(m: usize) -> Self {
        ActionChoice { index: m }
    }

    pub fn cloud(m: usize) -> Self {
        ActionChoice { index: m + 1 }
    }

    pub fn destination(self, m: usize) -> Result<Destination> {
        match self.index {
            j if j < m => Ok(Destination::Service(j)),
            j if j == m => Ok(Destination::Rsu),
            j if j == m + 1 => Ok(Destination::Cloud),
            j => Err(Error::InvalidAction { index: j, limit: m + 2 }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub generated: usize,
    pub completed: usize,
    /// In flight when the episode ended; zero until `done`.
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub reward: f64,
    pub next_observation: Option<Observation>,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Environment {
    cfg: ScenarioConfig,
    norm: Normalization,
    event_log: bool,
    sim: Simulation,
    rewards: Vec<f64>,
}

impl Environment {
    pub fn new(cfg: &ScenarioConfig, seed: u64, event_log: bool) -> Result<Self> {
        let norm = cfg.normalization()?;
        let sim = Self::fresh(cfg, seed, event_log)?;
        Ok(Environment {
            cfg: cfg.clone(),
            norm,
            event_log,
            sim,
            rewards: Vec::new(),
        })
    }

    fn fresh(cfg: &ScenarioConfig, seed: u64, event_log: bool) -> Result<Simulation> {
        let sim = Simulation::new(cfg, seed)?;
        Ok(if event_log { sim.with_event_log() } else { sim })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn service_count(&self) -> usize {
        self.cfg.service_vehicles
    }

    pub fn is_done(&self) -> bool {
        self.sim.is_finished()
    }

    /// Starts the episode for the constructor's seed and returns the first
    /// observation, or `None` if no task ever reaches the RSU.
    pub fn reset(&mut self) -> Result<Option<Observation>> {
        let seed = self.sim.seed();
        self.reset_with_seed(seed)
    }

    pub fn reset_with_seed(&mut self, seed: u64) -> Result<Option<Observation>> {
        self.sim = Self::fresh(&self.cfg, seed, self.event_log)?;
        self.rewards.clear();
        // no task can complete before the first decision
        match self.sim.advance()? {
            Status::Decision { .. } => Ok(Observation::from_simulation(&self.sim)),
            Status::Finished => Ok(None),
        }
    }

    pub fn observation(&self) -> Option<Observation> {
        Observation::from_simulation(&self.sim)
    }

    pub fn observation_vector(&self, obs: &Observation) -> Vec<f64> {
        observation_vector(obs, &self.norm)
    }

    pub fn step(&mut self, action: ActionChoice) -> Result<StepResult> {
        if self.sim.is_finished() {
            return Err(Error::EpisodeDone);
        }
        let dest = action.destination(self.cfg.service_vehicles)?;
        self.sim.dispatch(dest)?;
        let status = self.sim.advance()?;

        let ids = self.sim.drain_completions().to_vec();
        let reward: f64 = ids
            .iter()
            .map(|&id| COMPLETION_BONUS - self.sim.total_delay(id).expect("drained tasks are complete"))
            .sum();
        self.rewards.push(reward);

        let done = status == Status::Finished;
        let generated = self.sim.generated();
        let completed = self.sim.completed();
        Ok(StepResult {
            reward,
            next_observation: if done {
                None
            } else {
                Observation::from_simulation(&self.sim)
            },
            done,
            info: StepInfo {
                generated,
                completed,
                censored: if done { generated - completed } else { 0 },
            },
        })
    }

    pub fn into_result(self) -> Result<EpisodeResult> {
        if !self.sim.is_finished() {
            return Err(Error::Protocol("episode still running".into()));
        }
        Ok(self.sim.into_result(self.rewards))
    }
}
