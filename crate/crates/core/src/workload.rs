//! Task generation: Poisson arrivals per client and SPEC CPU 95 derived
//! instruction counts.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CATALOG_LEN: usize = 18;
pub const DEFAULT_SCALE: f64 = 0.05;
pub const BUILTIN_CATALOG: &str = include_str!("../data/spec_cpu95.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct TaskCatalog {
    names: Vec<String>,
    billions: Vec<f64>,
    entries_mi: Vec<f64>,
    scale: f64,
}

impl TaskCatalog {
    /// Parses `name billions` rows (with `#` comments) and scales them to MI.
    pub fn parse(text: &str, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!("catalog scale must be positive, got {scale}")));
        }
        let mut names = Vec::new();
        let mut billions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(name), Some(count), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Config(format!(
                    "catalog line {}: expected `name count`",
                    lineno + 1
                )));
            };
            let count: f64 = count
                .parse()
                .map_err(|_| Error::Config(format!("catalog line {}: bad count {count:?}", lineno + 1)))?;
            if !(count > 0.0 && count.is_finite()) {
                return Err(Error::Config(format!(
                    "catalog line {}: count must be positive",
                    lineno + 1
                )));
            }
            names.push(name.to_string());
            billions.push(count);
        }
        if billions.len() != CATALOG_LEN {
            return Err(Error::Config(format!(
                "catalog must have {CATALOG_LEN} entries, found {}",
                billions.len()
            )));
        }
        let entries_mi = billions.iter().map(|b| b * 1000.0 * scale).collect();
        Ok(TaskCatalog {
            names,
            billions,
            entries_mi,
            scale,
        })
    }

    pub fn builtin(scale: f64) -> Result<Self> {
        Self::parse(BUILTIN_CATALOG, scale)
    }

    pub fn entries_mi(&self) -> &[f64] {
        &self.entries_mi
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn billions(&self) -> &[f64] {
        &self.billions
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_mi(&self) -> f64 {
        self.entries_mi.iter().copied().fold(0.0, f64::max)
    }
}

/// Timestamps of a task's trip through the network. `None` until reached.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stamps {
    pub client_tx_start: Option<f64>,
    pub client_tx_end: Option<f64>,
    pub rsu_enqueue: Option<f64>,
    pub rsu_tx_start: Option<f64>,
    pub rsu_tx_end: Option<f64>,
    pub service_enqueue: Option<f64>,
    pub process_start: Option<f64>,
    pub process_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    /// Million instructions.
    pub cu: f64,
    pub size_bits: f64,
    pub origin: usize,
    pub t_created: f64,
    pub stamps: Stamps,
}

impl Task {
    pub fn new(id: usize, cu: f64, size_bits: f64, origin: usize, now: f64) -> Self {
        Task {
            id,
            cu,
            size_bits,
            origin,
            t_created: now,
            stamps: Stamps::default(),
        }
    }
}

pub fn next_arrival_gap<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> Result<f64> {
    let exp = Exp::new(rate)
        .ok()
        .filter(|_| rate > 0.0)
        .ok_or_else(|| Error::Domain(format!("arrival rate must be positive, got {rate}")))?;
    Ok(exp.sample(rng))
}

/// Draws instruction count uniformly from the catalog and size uniformly
/// from `sizes_bits`.
pub fn sample_task<R: Rng + ?Sized>(
    rng: &mut R,
    catalog: &TaskCatalog,
    sizes_bits: &[f64],
    id: usize,
    origin: usize,
    now: f64,
) -> Task {
    let cu = *catalog.entries_mi.choose(rng).expect("catalog is never empty");
    let size = *sizes_bits.choose(rng).expect("size set validated nonempty");
    Task::new(id, cu, size, origin, now)
}

pub fn processing_delay(cu: f64, cpu: f64) -> Result<f64> {
    if !(cpu > 0.0) {
        return Err(Error::Domain(format!("processor speed must be positive, got {cpu}")));
    }
    Ok(cu / cpu)
}
