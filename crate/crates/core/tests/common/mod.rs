//! Time-stepped reference model of the offloading network.
//!
//! Work is drained tick by tick (`dt` seconds) from each single-server
//! queue; stages are visited upstream to downstream inside a tick so that a
//! task released mid-tick can start downstream in the same tick. It shares
//! nothing with the event engine except the mobility model and the inputs
//! (task arrivals, destinations, internet delays).

#![allow(dead_code)]

use rand::SeedableRng;
use vfcsim::config::{ScenarioConfig, ScriptedTask};
use vfcsim::mobility::{advance_vehicle, distance, ClientVehicleState};
use vfcsim::seeding::SimRng;
use vfcsim::simcore::{build_fleet, Destination, EpisodeResult};

#[derive(Debug, Clone)]
pub struct RefTask {
    pub id: usize,
    pub origin: usize,
    pub created: f64,
    pub cu: f64,
    pub size: f64,
    pub dest: Destination,
    pub internet_delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RefStamps {
    pub client_start: f64,
    pub client_end: f64,
    pub rsu_start: f64,
    pub rsu_end: f64,
    pub process_start: f64,
    pub process_end: f64,
}

impl RefStamps {
    pub fn total(&self, created: f64) -> f64 {
        self.process_end - created
    }
}

#[derive(Debug, Clone)]
struct Job {
    task: usize,
    remaining: f64,
    rate: f64,
}

#[derive(Debug, Default, Clone)]
struct Server {
    /// (available time, task, work) sorted by availability.
    queue: Vec<(f64, usize, f64)>,
    current: Option<Job>,
}

impl Server {
    fn arrive(&mut self, at: f64, task: usize, work: f64) {
        let pos = self.queue.partition_point(|(t, _, _)| *t <= at);
        self.queue.insert(pos, (at, task, work));
    }

    /// Spends the tick `[t0, t1)`. Returns `(task, start)` for each service
    /// start and `(task, finish)` for each completion.
    fn tick(
        &mut self,
        t0: f64,
        t1: f64,
        mut rate_at: impl FnMut(usize, f64) -> f64,
        starts: &mut Vec<(usize, f64)>,
        finishes: &mut Vec<(usize, f64)>,
    ) {
        let mut cursor = t0;
        loop {
            if self.current.is_none() {
                match self.queue.first() {
                    Some(&(avail, task, work)) if avail < t1 => {
                        self.queue.remove(0);
                        let s = cursor.max(avail);
                        cursor = s;
                        self.current = Some(Job {
                            task,
                            remaining: work,
                            rate: rate_at(task, s),
                        });
                        starts.push((task, s));
                    }
                    _ => return,
                }
            }
            let job = self.current.as_mut().unwrap();
            let capacity = job.rate * (t1 - cursor);
            if job.remaining <= capacity {
                cursor += job.remaining / job.rate;
                finishes.push((job.task, cursor));
                self.current = None;
            } else {
                job.remaining -= capacity;
                return;
            }
        }
    }

    fn idle(&self) -> bool {
        self.current.is_none() && self.queue.is_empty()
    }
}

/// Replays `tasks` through the network with tick length `dt`.
pub fn reference_run(cfg: &ScenarioConfig, seed: u64, tasks: &[RefTask], dt: f64) -> Vec<RefStamps> {
    let fleet = build_fleet(cfg, seed).unwrap();
    let budget = cfg.budget();
    let rsu = cfg.grid.rsu_position;
    let clamp = cfg.min_link_distance_m;
    let m = cfg.service_vehicles;
    let link_rates: Vec<f64> = fleet
        .services
        .iter()
        .map(|s| budget.link_rate(distance(s.position(), rsu).max(clamp)).unwrap())
        .collect();

    let mut clients: Vec<(ClientVehicleState, SimRng)> = fleet.clients.into_iter().zip(fleet.client_rngs).collect();
    let mut client_links = vec![Server::default(); cfg.clients];
    let mut rsu_links = vec![Server::default(); m];
    let mut cloud_uplink = Server::default();
    let mut rsu_cpu = Server::default();
    let mut service_cpus = vec![Server::default(); m];

    let mut stamps = vec![RefStamps::default(); tasks.len()];
    let mut done = vec![false; tasks.len()];
    for (k, t) in tasks.iter().enumerate() {
        client_links[t.origin].arrive(t.created, k, t.size);
    }

    let mut tick = 0u64;
    while done.iter().any(|d| !d) {
        let t0 = tick as f64 * dt;
        let t1 = (tick + 1) as f64 * dt;
        assert!(t0 < 1e4, "reference run did not drain");

        // client uplinks: rate from the client position at service start
        let mut released = Vec::new();
        for (i, link) in client_links.iter_mut().enumerate() {
            let (state, rng) = &clients[i];
            let mut starts = Vec::new();
            link.tick(
                t0,
                t1,
                |_, s| {
                    let mut r = rng.clone();
                    let at = advance_vehicle(state, s - t0, &cfg.grid, &mut r);
                    budget.link_rate(distance(at.position(), rsu).max(clamp)).unwrap()
                },
                &mut starts,
                &mut released,
            );
            for (k, s) in starts {
                stamps[k].client_start = s;
            }
        }
        for &(k, f) in &released {
            stamps[k].client_end = f;
            match tasks[k].dest {
                Destination::Service(j) => rsu_links[j].arrive(f, k, tasks[k].size),
                Destination::Cloud => cloud_uplink.arrive(f, k, tasks[k].size),
                Destination::Rsu => {
                    stamps[k].rsu_start = f;
                    stamps[k].rsu_end = f;
                    rsu_cpu.arrive(f, k, tasks[k].cu);
                }
            }
        }

        // RSU outgoing links
        for (j, link) in rsu_links.iter_mut().enumerate() {
            let (mut starts, mut fin) = (Vec::new(), Vec::new());
            link.tick(t0, t1, |_, _| link_rates[j], &mut starts, &mut fin);
            for (k, s) in starts {
                stamps[k].rsu_start = s;
            }
            for (k, f) in fin {
                stamps[k].rsu_end = f;
                service_cpus[j].arrive(f, k, tasks[k].cu);
            }
        }
        let (mut starts, mut fin) = (Vec::new(), Vec::new());
        cloud_uplink.tick(t0, t1, |_, _| cfg.cloud_uplink_bps, &mut starts, &mut fin);
        for (k, s) in starts {
            stamps[k].rsu_start = s;
        }
        for (k, f) in fin {
            stamps[k].rsu_end = f;
            let arrive = f + tasks[k].internet_delay.expect("cloud tasks carry a transit delay");
            stamps[k].process_start = arrive;
            stamps[k].process_end = arrive + tasks[k].cu / cfg.cloud_cpu_mips;
            done[k] = true;
        }

        // processors
        let mut cpus: Vec<(&mut Server, f64)> = service_cpus
            .iter_mut()
            .zip(fleet.services.iter().map(|s| s.cpu))
            .collect();
        cpus.push((&mut rsu_cpu, cfg.rsu_cpu_mips));
        for (cpu, speed) in cpus {
            let (mut starts, mut fin) = (Vec::new(), Vec::new());
            cpu.tick(t0, t1, |_, _| speed, &mut starts, &mut fin);
            for (k, s) in starts {
                stamps[k].process_start = s;
            }
            for (k, f) in fin {
                stamps[k].process_end = f;
                done[k] = true;
            }
        }

        for (state, rng) in clients.iter_mut() {
            *state = advance_vehicle(state, dt, &cfg.grid, rng);
        }
        tick += 1;
    }
    debug_assert!(client_links.iter().chain(&rsu_links).all(Server::idle));
    stamps
}

/// Reference inputs recovered from an engine run: arrivals and task
/// contents, the policy's destinations and the drawn internet delays.
pub fn inputs_from(result: &EpisodeResult) -> Vec<RefTask> {
    let mut tasks: Vec<RefTask> = result
        .records
        .iter()
        .map(|r| RefTask {
            id: r.id,
            origin: r.origin,
            created: r.t_created,
            cu: r.cu,
            size: r.size_bits,
            dest: r.destination,
            internet_delay: r.internet_delay,
        })
        .collect();
    tasks.sort_by_key(|t| t.id);
    tasks
}

/// Up to 2 clients and 2 service vehicles, at most 20 scripted tasks in the
/// first three seconds, and a horizon long enough to drain everything.
pub fn random_micro_scenario(case: u64) -> ScenarioConfig {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE + case);
    let clients = rng.random_range(1..=2);
    let services = rng.random_range(1..=2);
    let n_tasks = rng.random_range(1..=20);
    let catalog = vfcsim::workload::TaskCatalog::builtin(vfcsim::workload::DEFAULT_SCALE).unwrap();
    let script = (0..n_tasks)
        .map(|_| ScriptedTask {
            client: rng.random_range(0..clients),
            time: rng.random_range(0.0..3.0),
            cu: catalog.entries_mi()[rng.random_range(0..18)],
            size_bits: [2e7, 4e7][rng.random_range(0..2)],
        })
        .collect();
    ScenarioConfig {
        name: format!("micro{case}"),
        clients,
        service_vehicles: services,
        episode_s: 120.0,
        task_script: Some(script),
        ..ScenarioConfig::default()
    }
}
