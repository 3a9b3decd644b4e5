//! Experiment runner and environment server behind the `vfcsim` binary.

use std::fs;
use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, write_episodes, write_summary, write_traces, RunStatistics, SummaryRow};
use crate::policies::PolicySpec;
use crate::protocol::{serve_connection, Flow};
use crate::simcore::{run_episode_with, EpisodeResult, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "vfcsim", about = "Vehicular fog computing offloading simulator")]
pub struct Args {
    /// Scenario config file (JSON).
    #[arg(long)]
    pub config: PathBuf,

    /// random | cloud | greedy | mlp:<weight file>
    #[arg(long, default_value = "greedy")]
    pub policy: String,

    /// Inclusive seed range `A..B`, or a single seed.
    #[arg(long)]
    pub seeds: Option<String>,

    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Serve the environment protocol on `stdio` or a socket address
    /// instead of running an experiment.
    #[arg(long)]
    pub serve: Option<String>,

    /// Queue trace sampling interval in seconds (overrides the config).
    #[arg(long)]
    pub trace_cadence: Option<f64>,

    /// Worker threads for running seeds in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Also write one event log per seed under `<out>/events/`.
    #[arg(long)]
    pub event_logs: bool,
}

/// Parses `A..B` (inclusive) or `N`.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed range {text:?}; expected A..B"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let n: u64 = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// Runs `policy` on every seed, in parallel when `jobs > 1`. Results come
/// back in seed order regardless of scheduling.
pub fn run_seeds(
    cfg: &ScenarioConfig,
    policy: &PolicySpec,
    seeds: &[u64],
    jobs: usize,
    event_logs: bool,
) -> Result<Vec<EpisodeResult>> {
    policy.check(cfg)?;
    let opts = RunOptions { event_log: event_logs };
    let one = |&seed: &u64| -> Result<EpisodeResult> {
        let mut p = policy.instantiate(cfg, seed)?;
        run_episode_with(cfg, &mut *p, seed, opts)
    };
    if jobs <= 1 {
        return seeds.iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(one).collect())
}

pub struct ExperimentOutput {
    pub stats: RunStatistics,
    pub results: Vec<EpisodeResult>,
}

/// Runs the sweep and writes `summary.csv`, `episodes.csv` and `trace.csv`
/// into `out_dir`.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    policy: &PolicySpec,
    seeds: &[u64],
    out_dir: &Path,
    jobs: usize,
    event_logs: bool,
) -> Result<ExperimentOutput> {
    let results = run_seeds(cfg, policy, seeds, jobs, event_logs)?;
    let stats = aggregate(&results)?;
    fs::create_dir_all(out_dir)?;
    let row = SummaryRow::new(&cfg.name, policy.name(), &stats);
    write_summary(fs::File::create(out_dir.join("summary.csv"))?, &[row])?;
    write_episodes(fs::File::create(out_dir.join("episodes.csv"))?, &results)?;
    write_traces(fs::File::create(out_dir.join("trace.csv"))?, &results)?;
    if event_logs {
        let dir = out_dir.join("events");
        fs::create_dir_all(&dir)?;
        for r in &results {
            if let Some(log) = &r.log {
                log.write_text(io::BufWriter::new(fs::File::create(
                    dir.join(format!("seed_{}.log", r.seed)),
                )?))?;
            }
        }
    }
    Ok(ExperimentOutput { stats, results })
}

/// Serves the protocol on stdio or on a TCP address, one connection at a
/// time, until a client sends `close`.
pub fn serve_env(cfg: &ScenarioConfig, transport: &str) -> Result<()> {
    if transport == "stdio" {
        let stdin = io::stdin();
        let flow = serve_connection(cfg, stdin.lock(), io::stdout().lock())?;
        return match flow {
            Flow::Reset => Err(Error::Protocol("connection reset after ordering violation".into())),
            _ => Ok(()),
        };
    }
    let listener = TcpListener::bind(transport)?;
    eprintln!("serving on {}", listener.local_addr()?);
    for conn in listener.incoming() {
        let conn = conn?;
        conn.set_nodelay(true)?;
        let reader = BufReader::new(conn.try_clone()?);
        match serve_connection(cfg, reader, io::BufWriter::new(&conn)) {
            Ok(Flow::Close) => return Ok(()),
            Ok(_) => {}
            Err(e) => eprintln!("connection error: {e}"),
        }
    }
    Ok(())
}

pub fn main_with(args: Args) -> Result<()> {
    let mut cfg = ScenarioConfig::from_file(&args.config)?;
    if let Some(c) = args.trace_cadence {
        cfg.trace_cadence_s = c;
        cfg.validate()?;
    }
    if let Some(transport) = &args.serve {
        return serve_env(&cfg, transport);
    }
    let policy: PolicySpec = args.policy.parse()?;
    let range = args
        .seeds
        .clone()
        .or_else(|| cfg.seeds.clone())
        .unwrap_or_else(|| "0..99".into());
    let seeds = parse_seed_range(&range)?;
    let out = run_experiment(&cfg, &policy, &seeds, &args.out, args.jobs, args.event_logs)?;
    let mut stdout = io::stdout().lock();
    write_summary(&mut stdout, &[SummaryRow::new(&cfg.name, policy.name(), &out.stats)])?;
    Ok(())
}
