//! Event-driven execution of the offloading queuing network.
//!
//! Each task is generated at a client, waits in the client uplink queue,
//! arrives at the RSU where the policy picks a destination, and then either
//! crosses an RSU outgoing link to a parked service vehicle's processor
//! queue, joins the RSU's own processor queue, or goes through the cloud
//! uplink plus an internet transit delay to an unlimited pool of cloud
//! servers. Every queue is single-server FIFO.

pub mod event;
pub mod log;
pub mod queue;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::mobility::{
    advance_vehicle, distance, kmh_to_mps, random_road_position, ClientVehicleState, ServiceVehicleState,
};
use crate::radio::LinkBudget;
use crate::seeding::{stream, SimRng, Stream};
use crate::workload::{next_arrival_gap, processing_delay, sample_task, Task, TaskCatalog};

pub use event::{Event, EventKind, EventQueue, Link, Processor};
pub use log::{check_conservation, check_fifo, EventLog, FlowCounts, NodeId};
pub use queue::FifoQueue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Destination {
    Service(usize),
    Rsu,
    Cloud,
}

impl std::fmt::Display for Destination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Destination::Service(j) => write!(f, "service:{j}"),
            Destination::Rsu => f.write_str("rsu"),
            Destination::Cloud => f.write_str("cloud"),
        }
    }
}

/// A completed task with its full timestamp chain and delay breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: usize,
    pub origin: usize,
    pub cu: f64,
    pub size_bits: f64,
    pub destination: Destination,
    pub t_created: f64,
    pub client_tx_start: f64,
    pub client_tx_end: f64,
    pub rsu_enqueue: f64,
    pub rsu_tx_start: f64,
    pub rsu_tx_end: f64,
    pub service_enqueue: f64,
    pub process_start: f64,
    pub process_end: f64,
    /// Internet transit time for cloud-bound tasks.
    pub internet_delay: Option<f64>,
    pub d_client_queue: f64,
    pub d_client_trans: f64,
    pub d_rsu_queue: f64,
    /// Includes internet transit on the cloud path.
    pub d_rsu_trans: f64,
    pub d_service_queue: f64,
    pub d_service_process: f64,
    pub d_client: f64,
    pub d_rsu: f64,
    pub d_service: f64,
    pub d_total: f64,
}

impl TaskRecord {
    fn from_task(task: &Task, destination: Destination, internet_delay: Option<f64>) -> Self {
        let s = &task.stamps;
        let get =
            |v: Option<f64>, what: &str| v.unwrap_or_else(|| panic!("completed task {} lacks {what} stamp", task.id));
        let client_tx_start = get(s.client_tx_start, "client_tx_start");
        let client_tx_end = get(s.client_tx_end, "client_tx_end");
        let rsu_enqueue = get(s.rsu_enqueue, "rsu_enqueue");
        let rsu_tx_start = get(s.rsu_tx_start, "rsu_tx_start");
        let rsu_tx_end = get(s.rsu_tx_end, "rsu_tx_end");
        let service_enqueue = get(s.service_enqueue, "service_enqueue");
        let process_start = get(s.process_start, "process_start");
        let process_end = get(s.process_end, "process_end");

        let d_client_queue = client_tx_start - task.t_created;
        let d_client_trans = client_tx_end - client_tx_start;
        let d_rsu_queue = rsu_tx_start - rsu_enqueue;
        let d_rsu_trans = service_enqueue - rsu_tx_start;
        let d_service_queue = process_start - service_enqueue;
        let d_service_process = process_end - process_start;
        let d_client = d_client_queue + d_client_trans;
        let d_rsu = d_rsu_queue + d_rsu_trans;
        let d_service = d_service_queue + d_service_process;
        TaskRecord {
            id: task.id,
            origin: task.origin,
            cu: task.cu,
            size_bits: task.size_bits,
            destination,
            t_created: task.t_created,
            client_tx_start,
            client_tx_end,
            rsu_enqueue,
            rsu_tx_start,
            rsu_tx_end,
            service_enqueue,
            process_start,
            process_end,
            internet_delay,
            d_client_queue,
            d_client_trans,
            d_rsu_queue,
            d_rsu_trans,
            d_service_queue,
            d_service_process,
            d_client,
            d_rsu,
            d_service,
            d_total: d_client + d_rsu + d_service,
        }
    }
}

/// Transmission-queue occupancy at one sample instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    /// Tasks waiting in client uplinks, RSU outgoing links and the cloud
    /// uplink, not counting the ones being transmitted.
    pub waiting_tasks: usize,
    /// Untransmitted bits in the same queues, including the unsent part of
    /// items in service.
    pub queued_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeResult {
    pub seed: u64,
    /// Completed tasks, in completion order.
    pub records: Vec<TaskRecord>,
    pub generated: usize,
    pub completed: usize,
    /// Tasks still in the network when the episode ended.
    pub censored: usize,
    pub trace: Vec<TraceSample>,
    /// Reward returned at each decision step.
    pub rewards: Vec<f64>,
    pub log: Option<EventLog>,
}

impl EpisodeResult {
    pub fn mean_delay(&self) -> Option<f64> {
        (!self.records.is_empty())
            .then(|| self.records.iter().map(|r| r.d_total).sum::<f64>() / self.records.len() as f64)
    }
}

/// Initial vehicles of an episode.
#[derive(Debug, Clone)]
pub struct Fleet {
    pub clients: Vec<ClientVehicleState>,
    /// Mobility stream of each client, positioned after its placement draws.
    pub client_rngs: Vec<SimRng>,
    pub services: Vec<ServiceVehicleState>,
}

/// Places the fleet for `seed`. Overrides in the config replace sampling.
pub fn build_fleet(cfg: &ScenarioConfig, seed: u64) -> Result<Fleet> {
    let grid = &cfg.grid;
    let mut clients = Vec::with_capacity(cfg.clients);
    let mut client_rngs = Vec::with_capacity(cfg.clients);
    for i in 0..cfg.clients {
        let mut rng = stream(seed, Stream::ClientMobility(i));
        let state = match cfg.client_overrides.as_ref().map(|o| o[i]) {
            Some(init) => ClientVehicleState {
                id: i,
                x: init.x,
                y: init.y,
                heading: init.heading,
                velocity: kmh_to_mps(init.velocity_kmh),
                rate: cfg.task_rate,
                odometer_m: 0.0,
            },
            None => {
                let (x, y, heading) = random_road_position(&mut rng, grid);
                let kmh = *cfg.velocities_kmh.choose(&mut rng).expect("validated nonempty");
                ClientVehicleState {
                    id: i,
                    x,
                    y,
                    heading,
                    velocity: kmh_to_mps(kmh),
                    rate: cfg.task_rate,
                    odometer_m: 0.0,
                }
            }
        };
        clients.push(state);
        client_rngs.push(rng);
    }

    let mut rng = stream(seed, Stream::Fleet);
    let mut services = Vec::with_capacity(cfg.service_vehicles);
    for j in 0..cfg.service_vehicles {
        let v = match cfg.service_overrides.as_ref().map(|o| o[j]) {
            Some(init) => ServiceVehicleState {
                id: j,
                x: init.x,
                y: init.y,
                cpu: init.cpu_mips,
            },
            None => {
                let (x, y) = loop {
                    let (x, y, _) = random_road_position(&mut rng, grid);
                    if distance((x, y), grid.rsu_position) >= cfg.min_link_distance_m {
                        break (x, y);
                    }
                };
                let cpu = *cfg
                    .service_cpu_choices_mips
                    .choose(&mut rng)
                    .expect("validated nonempty");
                ServiceVehicleState { id: j, x, y, cpu }
            }
        };
        services.push(v);
    }
    Ok(Fleet {
        clients,
        client_rngs,
        services,
    })
}

struct ClientSlot {
    state: ClientVehicleState,
    mobility: SimRng,
    tasks: SimRng,
    /// Time up to which `state` has been advanced.
    position_time: f64,
    uplink: FifoQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The RSU holds `task` and waits for [`Simulation::dispatch`].
    Decision {
        task: usize,
    },
    Finished,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    seed: u64,
    budget: LinkBudget,
    catalog: TaskCatalog,
    clock: f64,
    events: EventQueue,
    tasks: Vec<Task>,
    destinations: Vec<Option<Destination>>,
    internet_delays: Vec<Option<f64>>,
    clients: Vec<ClientSlot>,
    services: Vec<ServiceVehicleState>,
    service_distances: Vec<f64>,
    service_link_rates: Vec<f64>,
    rsu_links: Vec<FifoQueue>,
    cloud_uplink: FifoQueue,
    rsu_cpu: FifoQueue,
    service_cpus: Vec<FifoQueue>,
    internet_rng: SimRng,
    /// Tasks in internet transit or running on a cloud server.
    cloud_in_flight: usize,
    /// Tasks that reached the RSU but whose decision event has not fired.
    awaiting_decision: usize,
    completions: Vec<usize>,
    reported_completions: usize,
    pending: Option<usize>,
    finished: bool,
    trace: Vec<TraceSample>,
    next_sample: u64,
    log: Option<EventLog>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let catalog = cfg.catalog()?;
        let budget = cfg.budget();
        let fleet = build_fleet(cfg, seed)?;
        let rsu = cfg.grid.rsu_position;

        let service_distances: Vec<f64> = fleet.services.iter().map(|s| distance(s.position(), rsu)).collect();
        let service_link_rates = service_distances
            .iter()
            .map(|d| budget.link_rate(d.max(cfg.min_link_distance_m)))
            .collect::<Result<Vec<_>>>()?;

        let clients = fleet
            .clients
            .into_iter()
            .zip(fleet.client_rngs)
            .enumerate()
            .map(|(i, (state, mobility))| ClientSlot {
                state,
                mobility,
                tasks: stream(seed, Stream::ClientTasks(i)),
                position_time: 0.0,
                uplink: FifoQueue::new(),
            })
            .collect();

        let m = cfg.service_vehicles;
        let mut sim = Simulation {
            cfg: cfg.clone(),
            seed,
            budget,
            catalog,
            clock: 0.0,
            events: EventQueue::new(),
            tasks: Vec::new(),
            destinations: Vec::new(),
            internet_delays: Vec::new(),
            clients,
            services: fleet.services,
            service_distances,
            service_link_rates,
            rsu_links: vec![FifoQueue::new(); m],
            cloud_uplink: FifoQueue::new(),
            rsu_cpu: FifoQueue::new(),
            service_cpus: vec![FifoQueue::new(); m],
            internet_rng: stream(seed, Stream::Internet),
            cloud_in_flight: 0,
            awaiting_decision: 0,
            completions: Vec::new(),
            reported_completions: 0,
            pending: None,
            finished: false,
            trace: Vec::new(),
            next_sample: 0,
            log: None,
        };

        sim.events.schedule(cfg.episode_s, EventKind::EpisodeEnd);
        match &cfg.task_script {
            Some(script) => {
                let mut order: Vec<usize> = (0..script.len()).collect();
                order.sort_by(|&a, &b| script[a].time.total_cmp(&script[b].time));
                for k in order {
                    let t = &script[k];
                    sim.events.schedule(
                        t.time,
                        EventKind::TaskGenerated {
                            client: t.client,
                            script: Some(k),
                        },
                    );
                }
            }
            None => {
                for i in 0..cfg.clients {
                    let gap = next_arrival_gap(&mut sim.clients[i].tasks, cfg.task_rate)?;
                    if gap < cfg.episode_s {
                        sim.events.schedule(
                            gap,
                            EventKind::TaskGenerated {
                                client: i,
                                script: None,
                            },
                        );
                    }
                }
            }
        }
        Ok(sim)
    }

    /// Records every event and queue movement in an [`EventLog`].
    pub fn with_event_log(mut self) -> Self {
        self.log = Some(EventLog::default());
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.clock
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn service_vehicles(&self) -> &[ServiceVehicleState] {
        &self.services
    }

    /// Distance of each parked service vehicle to the RSU.
    pub fn service_distances(&self) -> &[f64] {
        &self.service_distances
    }

    pub fn service_link_rates(&self) -> &[f64] {
        &self.service_link_rates
    }

    pub fn catalog(&self) -> &TaskCatalog {
        &self.catalog
    }

    pub fn task(&self, id: usize) -> Option<&Task> {
        self.tasks.get(id)
    }

    pub fn pending_task(&self) -> Option<&Task> {
        self.pending.map(|id| &self.tasks[id])
    }

    pub fn generated(&self) -> usize {
        self.tasks.len()
    }

    pub fn completed(&self) -> usize {
        self.completions.len()
    }

    /// Live tasks counted by where they sit in the network.
    pub fn in_flight(&self) -> usize {
        let queued: usize = self.clients.iter().map(|c| c.uplink.len()).sum::<usize>()
            + self.rsu_links.iter().map(FifoQueue::len).sum::<usize>()
            + self.service_cpus.iter().map(FifoQueue::len).sum::<usize>()
            + self.cloud_uplink.len()
            + self.rsu_cpu.len();
        queued + self.cloud_in_flight + self.awaiting_decision + usize::from(self.pending.is_some())
    }

    /// Task ids completed since the previous call.
    pub fn drain_completions(&mut self) -> &[usize] {
        let start = self.reported_completions;
        self.reported_completions = self.completions.len();
        &self.completions[start..]
    }

    /// End-to-end delay of a completed task.
    pub fn total_delay(&self, id: usize) -> Option<f64> {
        let t = &self.tasks[id];
        let d = self.destinations[id]?;
        t.stamps.process_end?;
        Some(TaskRecord::from_task(t, d, self.internet_delays[id]).d_total)
    }

    /// Loads of the RSU outgoing links (service links, then the cloud
    /// uplink) in bits, and of the processors (service vehicles, then the
    /// RSU) in MI, including unfinished work of items in service.
    pub fn queue_snapshot(&self) -> (Vec<f64>, Vec<f64>) {
        let now = self.clock;
        let mut q_t: Vec<f64> = self.rsu_links.iter().map(|q| q.load(now)).collect();
        q_t.push(self.cloud_uplink.load(now));
        let mut q_p: Vec<f64> = self.service_cpus.iter().map(|q| q.load(now)).collect();
        q_p.push(self.rsu_cpu.load(now));
        (q_t, q_p)
    }

    fn log(&mut self, kind: &str, task: Option<usize>, node: Option<NodeId>) {
        if let Some(log) = self.log.as_mut() {
            log.push(self.clock, kind, task, node);
        }
    }

    fn sample_trace_before(&mut self, t: f64) {
        let cadence = self.cfg.trace_cadence_s;
        loop {
            let at = self.next_sample as f64 * cadence;
            if at >= t || at > self.cfg.episode_s {
                break;
            }
            let sample = self.transmission_occupancy(at);
            self.trace.push(sample);
            self.next_sample += 1;
        }
    }

    fn transmission_occupancy(&self, at: f64) -> TraceSample {
        let links = self
            .clients
            .iter()
            .map(|c| &c.uplink)
            .chain(self.rsu_links.iter())
            .chain(std::iter::once(&self.cloud_uplink));
        let (mut waiting_tasks, mut queued_bits) = (0, 0.0);
        for q in links {
            waiting_tasks += q.waiting_len();
            queued_bits += q.load(at);
        }
        TraceSample {
            t: at,
            waiting_tasks,
            queued_bits,
        }
    }

    /// Runs events until the RSU needs a decision or the episode ends.
    pub fn advance(&mut self) -> Result<Status> {
        if self.pending.is_some() {
            return Err(Error::DecisionPending);
        }
        while !self.finished {
            let ev = self.events.pop().expect("EpisodeEnd is always scheduled");
            debug_assert!(ev.time >= self.clock, "clock must not decrease");
            self.sample_trace_before(ev.time);
            self.clock = ev.time;
            if let Some(status) = self.handle(ev)? {
                return Ok(status);
            }
        }
        Ok(Status::Finished)
    }

    fn handle(&mut self, ev: Event) -> Result<Option<Status>> {
        let now = self.clock;
        match ev.kind {
            EventKind::TaskGenerated { client, script } => {
                let id = self.tasks.len();
                let task = match script {
                    Some(k) => {
                        let s = self.cfg.task_script.as_ref().expect("scripted event")[k];
                        Task::new(id, s.cu, s.size_bits, client, now)
                    }
                    None => {
                        let rng = &mut self.clients[client].tasks;
                        let task = sample_task(rng, &self.catalog, &self.cfg.sizes_bits, id, client, now);
                        let gap = next_arrival_gap(rng, self.cfg.task_rate)?;
                        if now + gap < self.cfg.episode_s {
                            self.events
                                .schedule(now + gap, EventKind::TaskGenerated { client, script: None });
                        }
                        task
                    }
                };
                let size = task.size_bits;
                self.tasks.push(task);
                self.destinations.push(None);
                self.internet_delays.push(None);
                self.log("TaskGenerated", Some(id), Some(NodeId::Client(client)));
                self.clients[client].uplink.push(id, size);
                self.log("Enqueue", Some(id), Some(NodeId::Client(client)));
                self.try_start_client(client)?;
            }
            EventKind::ClientTransDone { client } => {
                let done = self.clients[client].uplink.finish().expect("uplink was busy");
                let t = &mut self.tasks[done.task].stamps;
                t.client_tx_end = Some(now);
                t.rsu_enqueue = Some(now);
                self.log("ClientTransDone", Some(done.task), Some(NodeId::Client(client)));
                self.awaiting_decision += 1;
                self.events
                    .schedule(now, EventKind::RsuDecisionPoint { task: done.task });
                self.try_start_client(client)?;
            }
            EventKind::RsuDecisionPoint { task } => {
                self.awaiting_decision -= 1;
                self.pending = Some(task);
                self.log("RsuDecisionPoint", Some(task), None);
                return Ok(Some(Status::Decision { task }));
            }
            EventKind::RsuTransDone { link } => match link {
                Link::Service(j) => {
                    let done = self.rsu_links[j].finish().expect("link was busy");
                    let st = &mut self.tasks[done.task].stamps;
                    st.rsu_tx_end = Some(now);
                    st.service_enqueue = Some(now);
                    self.log("RsuTransDone", Some(done.task), Some(NodeId::RsuLink(j)));
                    let cu = self.tasks[done.task].cu;
                    self.service_cpus[j].push(done.task, cu);
                    self.log("Enqueue", Some(done.task), Some(NodeId::ServiceCpu(j)));
                    self.try_start_processor(Processor::Service(j));
                    self.try_start_link(Link::Service(j));
                }
                Link::Cloud => {
                    let done = self.cloud_uplink.finish().expect("uplink was busy");
                    self.tasks[done.task].stamps.rsu_tx_end = Some(now);
                    self.log("RsuTransDone", Some(done.task), Some(NodeId::CloudUplink));
                    let [lo, hi] = self.cfg.internet_delay_s;
                    let delay = self.internet_rng.random_range(lo..=hi);
                    self.internet_delays[done.task] = Some(delay);
                    self.cloud_in_flight += 1;
                    self.log("Enqueue", Some(done.task), Some(NodeId::Internet));
                    self.events
                        .schedule(now + delay, EventKind::InternetDelayDone { task: done.task });
                    self.try_start_link(Link::Cloud);
                }
            },
            EventKind::InternetDelayDone { task } => {
                self.log("InternetDelayDone", Some(task), Some(NodeId::Internet));
                let cu = self.tasks[task].cu;
                let st = &mut self.tasks[task].stamps;
                st.service_enqueue = Some(now);
                st.process_start = Some(now);
                self.log("Enqueue", Some(task), Some(NodeId::Cloud));
                self.log("Start", Some(task), Some(NodeId::Cloud));
                let end = now + processing_delay(cu, self.cfg.cloud_cpu_mips)?;
                self.events.schedule(
                    end,
                    EventKind::ProcessingDone {
                        processor: Processor::Cloud(task),
                    },
                );
            }
            EventKind::ProcessingDone { processor } => {
                let (task, node) = match processor {
                    Processor::Rsu => (self.rsu_cpu.finish().expect("rsu cpu busy").task, NodeId::RsuCpu),
                    Processor::Service(j) => (
                        self.service_cpus[j].finish().expect("service cpu busy").task,
                        NodeId::ServiceCpu(j),
                    ),
                    Processor::Cloud(task) => {
                        self.cloud_in_flight -= 1;
                        (task, NodeId::Cloud)
                    }
                };
                self.tasks[task].stamps.process_end = Some(now);
                self.completions.push(task);
                self.log("ProcessingDone", Some(task), Some(node));
                if !matches!(processor, Processor::Cloud(_)) {
                    self.try_start_processor(processor);
                }
            }
            EventKind::EpisodeEnd => {
                self.log("EpisodeEnd", None, None);
                self.finished = true;
                self.sample_trace_before(f64::INFINITY);
                return Ok(Some(Status::Finished));
            }
        }
        Ok(None)
    }

    fn client_position(&mut self, client: usize) -> (f64, f64) {
        let now = self.clock;
        let slot = &mut self.clients[client];
        if now > slot.position_time {
            slot.state = advance_vehicle(
                &slot.state,
                now - slot.position_time,
                &self.cfg.grid,
                &mut slot.mobility,
            );
            slot.position_time = now;
        }
        slot.state.position()
    }

    /// Client position at the current clock, advancing its trajectory.
    pub fn client_state(&mut self, client: usize) -> &ClientVehicleState {
        self.client_position(client);
        &self.clients[client].state
    }

    fn try_start_client(&mut self, client: usize) -> Result<()> {
        let q = &self.clients[client].uplink;
        if q.is_busy() || q.peek().is_none() {
            return Ok(());
        }
        let pos = self.client_position(client);
        let d = distance(pos, self.cfg.grid.rsu_position).max(self.cfg.min_link_distance_m);
        let rate = self.budget.link_rate(d)?;
        let now = self.clock;
        let s = self.clients[client]
            .uplink
            .start_next(now, |_| rate)
            .expect("idle with work");
        self.tasks[s.task].stamps.client_tx_start = Some(now);
        self.log("Start", Some(s.task), Some(NodeId::Client(client)));
        self.events.schedule(s.end, EventKind::ClientTransDone { client });
        Ok(())
    }

    fn try_start_link(&mut self, link: Link) {
        let now = self.clock;
        let (queue, rate, node) = match link {
            Link::Service(j) => (&mut self.rsu_links[j], self.service_link_rates[j], NodeId::RsuLink(j)),
            Link::Cloud => (&mut self.cloud_uplink, self.cfg.cloud_uplink_bps, NodeId::CloudUplink),
        };
        if let Some(s) = queue.start_next(now, |_| rate) {
            self.tasks[s.task].stamps.rsu_tx_start = Some(now);
            self.log("Start", Some(s.task), Some(node));
            self.events.schedule(s.end, EventKind::RsuTransDone { link });
        }
    }

    fn try_start_processor(&mut self, processor: Processor) {
        let now = self.clock;
        let (queue, cpu, node) = match processor {
            Processor::Rsu => (&mut self.rsu_cpu, self.cfg.rsu_cpu_mips, NodeId::RsuCpu),
            Processor::Service(j) => (&mut self.service_cpus[j], self.services[j].cpu, NodeId::ServiceCpu(j)),
            Processor::Cloud(_) => unreachable!("cloud servers never queue"),
        };
        if let Some(s) = queue.start_next(now, |_| cpu) {
            self.tasks[s.task].stamps.process_start = Some(now);
            self.log("Start", Some(s.task), Some(node));
            self.events.schedule(s.end, EventKind::ProcessingDone { processor });
        }
    }

    /// Sends the pending task to `dest`.
    pub fn dispatch(&mut self, dest: Destination) -> Result<()> {
        let m = self.services.len();
        if let Destination::Service(j) = dest {
            if j >= m {
                return Err(Error::InvalidAction { index: j, limit: m + 2 });
            }
        }
        let id = self.pending.take().ok_or(Error::NoPendingDecision)?;
        let now = self.clock;
        self.destinations[id] = Some(dest);
        let (size, cu) = (self.tasks[id].size_bits, self.tasks[id].cu);
        match dest {
            Destination::Service(j) => {
                self.log("Dispatch", Some(id), Some(NodeId::RsuLink(j)));
                self.rsu_links[j].push(id, size);
                self.log("Enqueue", Some(id), Some(NodeId::RsuLink(j)));
                self.try_start_link(Link::Service(j));
            }
            Destination::Cloud => {
                self.log("Dispatch", Some(id), Some(NodeId::CloudUplink));
                self.cloud_uplink.push(id, size);
                self.log("Enqueue", Some(id), Some(NodeId::CloudUplink));
                self.try_start_link(Link::Cloud);
            }
            Destination::Rsu => {
                let st = &mut self.tasks[id].stamps;
                st.rsu_tx_start = Some(now);
                st.rsu_tx_end = Some(now);
                st.service_enqueue = Some(now);
                self.log("Dispatch", Some(id), Some(NodeId::RsuCpu));
                self.rsu_cpu.push(id, cu);
                self.log("Enqueue", Some(id), Some(NodeId::RsuCpu));
                self.try_start_processor(Processor::Rsu);
            }
        }
        Ok(())
    }

    pub fn into_result(self, rewards: Vec<f64>) -> EpisodeResult {
        let records = self
            .completions
            .iter()
            .map(|&id| {
                let dest = self.destinations[id].expect("completed tasks were dispatched");
                TaskRecord::from_task(&self.tasks[id], dest, self.internet_delays[id])
            })
            .collect::<Vec<_>>();
        let generated = self.tasks.len();
        let completed = records.len();
        EpisodeResult {
            seed: self.seed,
            records,
            generated,
            completed,
            censored: generated - completed,
            trace: self.trace,
            rewards,
            log: self.log,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub event_log: bool,
}

/// Simulates one episode under `policy`.
pub fn run_episode(cfg: &ScenarioConfig, policy: &mut dyn crate::policies::Policy, seed: u64) -> Result<EpisodeResult> {
    run_episode_with(cfg, policy, seed, RunOptions::default())
}

pub fn run_episode_with(
    cfg: &ScenarioConfig,
    policy: &mut dyn crate::policies::Policy,
    seed: u64,
    opts: RunOptions,
) -> Result<EpisodeResult> {
    let mut env = crate::env::Environment::new(cfg, seed, opts.event_log)?;
    let mut obs = env.reset()?;
    while let Some(o) = obs {
        let action = policy.choose(&o);
        let step = env.step(crate::env::ActionChoice::new(action))?;
        obs = step.next_observation;
    }
    env.into_result()
}
