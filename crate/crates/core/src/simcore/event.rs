use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Outgoing RSU transmission link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Service(usize),
    Cloud,
}

/// A processor that can finish a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Processor {
    Rsu,
    Service(usize),
    /// One of the unlimited cloud servers, identified by the task it runs.
    Cloud(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// `script` indexes the scripted task list; `None` means a Poisson arrival.
    TaskGenerated {
        client: usize,
        script: Option<usize>,
    },
    ClientTransDone {
        client: usize,
    },
    RsuDecisionPoint {
        task: usize,
    },
    RsuTransDone {
        link: Link,
    },
    ProcessingDone {
        processor: Processor,
    },
    InternetDelayDone {
        task: usize,
    },
    EpisodeEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::TaskGenerated { .. } => "TaskGenerated",
            EventKind::ClientTransDone { .. } => "ClientTransDone",
            EventKind::RsuDecisionPoint { .. } => "RsuDecisionPoint",
            EventKind::RsuTransDone { .. } => "RsuTransDone",
            EventKind::ProcessingDone { .. } => "ProcessingDone",
            EventKind::InternetDelayDone { .. } => "InternetDelayDone",
            EventKind::EpisodeEnd => "EpisodeEnd",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Future event set ordered by `(time, seq)`; `seq` is assigned on insertion.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
