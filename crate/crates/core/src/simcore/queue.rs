use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InService {
    pub task: usize,
    pub start: f64,
    pub end: f64,
    /// Work units (bits or MI) per second.
    pub rate: f64,
}

/// Single-server FIFO queue. Work is measured in bits for links and in
/// million instructions for processors.
#[derive(Debug, Clone, Default)]
pub struct FifoQueue {
    waiting: VecDeque<(usize, f64)>,
    waiting_work: f64,
    in_service: Option<InService>,
}

impl FifoQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, task: usize, work: f64) {
        self.waiting.push_back((task, work));
        self.waiting_work += work;
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    pub fn in_service(&self) -> Option<&InService> {
        self.in_service.as_ref()
    }

    pub fn waiting_len(&self) -> usize {
        self.waiting.len()
    }

    /// Tasks held by the queue, including the one in service.
    pub fn len(&self) -> usize {
        self.waiting.len() + usize::from(self.in_service.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Work still to be done at `now`: everything waiting plus the unfinished
    /// part of the item in service.
    pub fn load(&self, now: f64) -> f64 {
        let remaining = self
            .in_service
            .map(|s| (s.rate * (s.end - now)).max(0.0))
            .unwrap_or(0.0);
        self.waiting_work.max(0.0) + remaining
    }

    /// Head task id without starting it.
    pub fn peek(&self) -> Option<usize> {
        self.waiting.front().map(|(t, _)| *t)
    }

    /// Moves the head of the line into service. `rate` is evaluated once, at
    /// service start, and frozen for the whole item.
    pub fn start_next(&mut self, now: f64, rate: impl FnOnce(usize) -> f64) -> Option<InService> {
        if self.in_service.is_some() {
            return None;
        }
        let (task, work) = self.waiting.pop_front()?;
        self.waiting_work -= work;
        if self.waiting.is_empty() {
            self.waiting_work = 0.0;
        }
        let rate = rate(task);
        let s = InService {
            task,
            start: now,
            end: now + work / rate,
            rate,
        };
        self.in_service = Some(s);
        Some(s)
    }

    pub fn finish(&mut self) -> Option<InService> {
        self.in_service.take()
    }
}
