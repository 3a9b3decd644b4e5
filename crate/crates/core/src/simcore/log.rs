//! Line-oriented event log (`time kind task_id node_id`) and the invariant
//! checks run over it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Client(usize),
    RsuLink(usize),
    CloudUplink,
    RsuCpu,
    ServiceCpu(usize),
    Internet,
    Cloud,
}

impl NodeId {
    /// Whether the node is a single-server FIFO queue.
    pub fn is_fifo(self) -> bool {
        !matches!(self, NodeId::Internet | NodeId::Cloud)
    }

    pub fn is_transmission(self) -> bool {
        matches!(self, NodeId::Client(_) | NodeId::RsuLink(_) | NodeId::CloudUplink)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Client(i) => write!(f, "client:{i}"),
            NodeId::RsuLink(j) => write!(f, "rsu_link:{j}"),
            NodeId::CloudUplink => f.write_str("cloud_uplink"),
            NodeId::RsuCpu => f.write_str("rsu_cpu"),
            NodeId::ServiceCpu(j) => write!(f, "service_cpu:{j}"),
            NodeId::Internet => f.write_str("internet"),
            NodeId::Cloud => f.write_str("cloud"),
        }
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Protocol(format!("unknown node id {s:?}"));
        let indexed = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
        match s.split_once(':') {
            Some(("client", i)) => Ok(NodeId::Client(indexed(i)?)),
            Some(("rsu_link", j)) => Ok(NodeId::RsuLink(indexed(j)?)),
            Some(("service_cpu", j)) => Ok(NodeId::ServiceCpu(indexed(j)?)),
            Some(_) => Err(bad()),
            None => match s {
                "cloud_uplink" => Ok(NodeId::CloudUplink),
                "rsu_cpu" => Ok(NodeId::RsuCpu),
                "internet" => Ok(NodeId::Internet),
                "cloud" => Ok(NodeId::Cloud),
                _ => Err(bad()),
            },
        }
    }
}

/// Event names plus the bookkeeping entries `Enqueue`, `Start` and `Dispatch`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub time: f64,
    pub kind: String,
    pub task: Option<usize>,
    pub node: Option<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn push(&mut self, time: f64, kind: &str, task: Option<usize>, node: Option<NodeId>) {
        self.entries.push(LogEntry {
            time,
            kind: kind.to_string(),
            task,
            node,
        });
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.entries {
            let task = e.task.map_or_else(|| "-".to_string(), |t| t.to_string());
            let node = e.node.map_or_else(|| "-".to_string(), |n| n.to_string());
            writeln!(out, "{} {} {} {}", e.time, e.kind, task, node)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("log text is ASCII")
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut log = EventLog::default();
        for (n, line) in text.lines().enumerate() {
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [time, kind, task, node] = cols[..] else {
                return Err(Error::Protocol(format!("log line {}: expected 4 columns", n + 1)));
            };
            let time = time
                .parse()
                .map_err(|_| Error::Protocol(format!("log line {}: bad time", n + 1)))?;
            let task = match task {
                "-" => None,
                t => Some(
                    t.parse()
                        .map_err(|_| Error::Protocol(format!("log line {}: bad task", n + 1)))?,
                ),
            };
            let node = match node {
                "-" => None,
                s => Some(s.parse()?),
            };
            log.push(time, kind, task, node);
        }
        Ok(log)
    }
}

/// Departure kinds that close service at a FIFO node.
fn is_departure(kind: &str) -> bool {
    matches!(kind, "ClientTransDone" | "RsuTransDone" | "ProcessingDone")
}

/// Checks that every FIFO node starts and releases tasks in arrival order,
/// never serves two tasks at once, and that the clock never runs backwards.
pub fn check_fifo(log: &EventLog) -> std::result::Result<(), String> {
    #[derive(Default)]
    struct Node {
        arrivals: Vec<usize>,
        starts: Vec<usize>,
        departures: Vec<usize>,
        busy: Option<usize>,
    }
    let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
    let mut last_time = f64::NEG_INFINITY;
    for e in &log.entries {
        if e.time < last_time {
            return Err(format!("clock moved backwards at {} {}", e.time, e.kind));
        }
        last_time = e.time;
        let (Some(node), Some(task)) = (e.node, e.task) else {
            continue;
        };
        if !node.is_fifo() {
            continue;
        }
        let st = nodes.entry(node).or_default();
        match e.kind.as_str() {
            "Enqueue" => st.arrivals.push(task),
            "Start" => {
                if let Some(other) = st.busy {
                    return Err(format!("{node}: task {task} started while {other} in service"));
                }
                st.busy = Some(task);
                st.starts.push(task);
            }
            k if is_departure(k) => {
                if st.busy != Some(task) {
                    return Err(format!("{node}: task {task} departed without being in service"));
                }
                st.busy = None;
                st.departures.push(task);
            }
            _ => {}
        }
    }
    for (node, st) in &nodes {
        if !st.arrivals.starts_with(&st.starts) {
            return Err(format!("{node}: service order differs from arrival order"));
        }
        if !st.starts.starts_with(&st.departures) {
            return Err(format!("{node}: departure order differs from arrival order"));
        }
    }
    Ok(())
}

/// Summary of task flow reconstructed from a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowCounts {
    pub generated: usize,
    pub dispatched: usize,
    pub completed: usize,
    pub in_flight_at_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Place {
    /// Between two nodes: just generated, awaiting the RSU decision, or
    /// released by a link before entering the next node.
    Between,
    At(NodeId),
}

/// Replays task locations: every live task sits in exactly one place, a task
/// leaves only the node that holds it, and nothing but bookkeeping follows
/// `EpisodeEnd`. At the end `generated = completed + in flight`.
pub fn check_conservation(log: &EventLog) -> std::result::Result<FlowCounts, String> {
    let mut place: HashMap<usize, Place> = HashMap::new();
    let mut seen = HashSet::new();
    let mut dispatched = HashSet::new();
    let mut completed = 0usize;
    let mut ended = false;
    for e in &log.entries {
        if ended {
            return Err(format!("event {} at {} after EpisodeEnd", e.kind, e.time));
        }
        let Some(t) = e.task else {
            ended |= e.kind == "EpisodeEnd";
            continue;
        };
        let here = place.get(&t).copied();
        match e.kind.as_str() {
            "TaskGenerated" => {
                if !seen.insert(t) {
                    return Err(format!("task {t} generated twice"));
                }
                place.insert(t, Place::Between);
            }
            "Enqueue" => {
                if here != Some(Place::Between) {
                    return Err(format!("task {t} enqueued at {:?} while at {here:?}", e.node));
                }
                let node = e.node.ok_or_else(|| format!("task {t} enqueued without node"))?;
                place.insert(t, Place::At(node));
            }
            "Start" => {
                if here != e.node.map(Place::At) {
                    return Err(format!("task {t} started at {:?} while at {here:?}", e.node));
                }
            }
            "Dispatch" => {
                if here != Some(Place::Between) || !dispatched.insert(t) {
                    return Err(format!("task {t} dispatched twice or while queued"));
                }
            }
            "ClientTransDone" | "RsuTransDone" | "InternetDelayDone" => {
                if here != e.node.map(Place::At) {
                    return Err(format!("task {t} left {:?} while at {here:?}", e.node));
                }
                place.insert(t, Place::Between);
            }
            "ProcessingDone" => {
                if here != e.node.map(Place::At) || !dispatched.contains(&t) {
                    return Err(format!("task {t} completed at {:?} while at {here:?}", e.node));
                }
                place.remove(&t);
                completed += 1;
            }
            _ => {}
        }
        if seen.len() != completed + place.len() {
            return Err(format!("conservation broken at t={}", e.time));
        }
    }
    Ok(FlowCounts {
        generated: seen.len(),
        dispatched: dispatched.len(),
        completed,
        in_flight_at_end: place.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_ids_round_trip() {
        for n in [
            NodeId::Client(3),
            NodeId::RsuLink(0),
            NodeId::CloudUplink,
            NodeId::RsuCpu,
            NodeId::ServiceCpu(7),
            NodeId::Internet,
            NodeId::Cloud,
        ] {
            assert_eq!(n.to_string().parse::<NodeId>().unwrap(), n);
        }
        assert!("client:x".parse::<NodeId>().is_err());
        assert!("moon".parse::<NodeId>().is_err());
    }

    #[test]
    fn fifo_violation_is_detected() {
        let mut log = EventLog::default();
        log.push(0.0, "Enqueue", Some(1), Some(NodeId::RsuCpu));
        log.push(0.0, "Enqueue", Some(2), Some(NodeId::RsuCpu));
        log.push(0.0, "Start", Some(2), Some(NodeId::RsuCpu));
        assert!(check_fifo(&log).is_err());

        let mut ok = EventLog::default();
        ok.push(0.0, "Enqueue", Some(1), Some(NodeId::RsuCpu));
        ok.push(0.0, "Start", Some(1), Some(NodeId::RsuCpu));
        ok.push(0.0, "Enqueue", Some(2), Some(NodeId::RsuCpu));
        ok.push(1.0, "ProcessingDone", Some(1), Some(NodeId::RsuCpu));
        ok.push(1.0, "Start", Some(2), Some(NodeId::RsuCpu));
        assert!(check_fifo(&ok).is_ok());
        let parsed = EventLog::parse_text(&ok.to_text()).unwrap();
        assert_eq!(parsed, ok);
    }

    #[test]
    fn double_completion_is_detected() {
        let mut log = EventLog::default();
        log.push(0.0, "TaskGenerated", Some(0), Some(NodeId::Client(0)));
        log.push(0.0, "Enqueue", Some(0), Some(NodeId::Client(0)));
        log.push(0.0, "Start", Some(0), Some(NodeId::Client(0)));
        log.push(0.1, "ClientTransDone", Some(0), Some(NodeId::Client(0)));
        log.push(0.1, "Dispatch", Some(0), Some(NodeId::RsuCpu));
        log.push(0.1, "Enqueue", Some(0), Some(NodeId::RsuCpu));
        log.push(0.1, "Start", Some(0), Some(NodeId::RsuCpu));
        log.push(0.2, "ProcessingDone", Some(0), Some(NodeId::RsuCpu));
        assert_eq!(check_conservation(&log).unwrap().completed, 1);
        log.push(0.3, "ProcessingDone", Some(0), Some(NodeId::RsuCpu));
        assert!(check_conservation(&log).is_err());
    }
}
