//! Delay statistics, queue traces and traffic intensity.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simcore::{EpisodeResult, TraceSample};

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStatistics {
    /// Mean over episodes of the per-episode mean task delay.
    pub mean_delay: f64,
    pub ci95_halfwidth: f64,
    /// Episodes that completed at least one task.
    pub n_samples: usize,
    /// Completed over generated tasks, pooled across episodes.
    pub completion_ratio: f64,
    pub mean_d_client: f64,
    pub mean_d_rsu: f64,
    pub mean_d_service: f64,
}

/// Sample mean and 95% half-width `1.96 s / sqrt(n)`; the half-width is zero
/// for a single sample.
pub fn mean_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Z95 * var.sqrt() / (n as f64).sqrt())
}

pub fn aggregate(results: &[EpisodeResult]) -> Result<RunStatistics> {
    if results.is_empty() {
        return Err(Error::Empty("aggregate needs at least one episode"));
    }
    let mut means = Vec::with_capacity(results.len());
    let (mut client, mut rsu, mut service) = (Vec::new(), Vec::new(), Vec::new());
    for r in results.iter().filter(|r| !r.records.is_empty()) {
        let n = r.records.len() as f64;
        means.push(r.records.iter().map(|t| t.d_total).sum::<f64>() / n);
        client.push(r.records.iter().map(|t| t.d_client).sum::<f64>() / n);
        rsu.push(r.records.iter().map(|t| t.d_rsu).sum::<f64>() / n);
        service.push(r.records.iter().map(|t| t.d_service).sum::<f64>() / n);
    }
    let generated: usize = results.iter().map(|r| r.generated).sum();
    let completed: usize = results.iter().map(|r| r.completed).sum();
    let (mean_delay, ci95_halfwidth) = mean_ci95(&means);
    Ok(RunStatistics {
        mean_delay,
        ci95_halfwidth,
        n_samples: means.len(),
        completion_ratio: if generated == 0 {
            f64::NAN
        } else {
            completed as f64 / generated as f64
        },
        mean_d_client: mean_ci95(&client).0,
        mean_d_rsu: mean_ci95(&rsu).0,
        mean_d_service: mean_ci95(&service).0,
    })
}

/// `a L / R`: arrival rate (tasks/s) times mean size (Mb) over link rate
/// (Mbps). Above 1 the queue grows without bound.
pub fn traffic_intensity(a: f64, l: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("transmission rate must be positive, got {r}")));
    }
    Ok(a * l / r)
}

/// Total transmission-queue occupancy of an episode at the configured cadence.
pub fn queue_trace(result: &EpisodeResult) -> &[TraceSample] {
    &result.trace
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn trace_slope(trace: &[TraceSample]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace.iter().map(|s| (s.t, s.waiting_tasks as f64)).collect();
    linear_slope(&pts)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow<'a> {
    pub scenario: &'a str,
    pub policy: &'a str,
    pub mean: f64,
    pub ci95: f64,
    pub completion_ratio: f64,
    pub d_client: f64,
    pub d_rsu: f64,
    pub d_service: f64,
    pub n_episodes: usize,
}

impl<'a> SummaryRow<'a> {
    pub fn new(scenario: &'a str, policy: &'a str, stats: &RunStatistics) -> Self {
        SummaryRow {
            scenario,
            policy,
            mean: stats.mean_delay,
            ci95: stats.ci95_halfwidth,
            completion_ratio: stats.completion_ratio,
            d_client: stats.mean_d_client,
            d_rsu: stats.mean_d_rsu,
            d_service: stats.mean_d_service,
            n_episodes: stats.n_samples,
        }
    }
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    seed: u64,
    t: f64,
    total_queue_len: usize,
    total_queue_bits: f64,
}

/// `seed,t,total_queue_len,total_queue_bits`, episodes in the given order.
pub fn write_traces<W: Write>(out: W, results: &[EpisodeResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        for s in &r.trace {
            w.serialize(TraceRow {
                seed: r.seed,
                t: s.t,
                total_queue_len: s.waiting_tasks,
                total_queue_bits: s.queued_bits,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EpisodeRow {
    seed: u64,
    mean_delay: f64,
    generated: usize,
    completed: usize,
    censored: usize,
    total_reward: f64,
}

/// One row per episode: `seed,mean_delay,generated,completed,censored,total_reward`.
pub fn write_episodes<W: Write>(out: W, results: &[EpisodeResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(EpisodeRow {
            seed: r.seed,
            mean_delay: r.mean_delay().unwrap_or(f64::NAN),
            generated: r.generated,
            completed: r.completed,
            censored: r.censored,
            total_reward: r.rewards.iter().sum(),
        })?;
    }
    w.flush()?;
    Ok(())
}
