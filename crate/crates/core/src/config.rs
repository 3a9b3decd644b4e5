//! Scenario configuration. Files use the same JSON notation as the
//! environment wire protocol; every field has a default so presets can stay
//! short.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::{GridNetwork, Heading};
use crate::radio::{db_to_linear, LinkBudget};
use crate::workload::TaskCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_dbm_per_hz: f64,
    pub carrier_hz: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            bandwidth_hz: 40e6,
            tx_power_w: 1.0,
            tx_gain_dbi: 5.0,
            rx_gain_dbi: 5.0,
            noise_dbm_per_hz: -174.0,
            carrier_hz: 5.9e9,
        }
    }
}

impl RadioConfig {
    pub fn budget(&self) -> LinkBudget {
        LinkBudget {
            bandwidth_hz: self.bandwidth_hz,
            tx_power_w: self.tx_power_w,
            tx_gain: db_to_linear(self.tx_gain_dbi),
            rx_gain: db_to_linear(self.rx_gain_dbi),
            noise_dbm_per_hz: self.noise_dbm_per_hz,
            carrier_hz: self.carrier_hz,
        }
    }
}

/// Divisors applied to each observation block before it reaches a policy
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub sz: f64,
    pub cu: f64,
    pub pp: f64,
    pub dt: f64,
    pub q_t: f64,
    pub q_p: f64,
}

impl Normalization {
    pub const UNIT: Normalization = Normalization {
        sz: 1.0,
        cu: 1.0,
        pp: 1.0,
        dt: 1.0,
        q_t: 1.0,
        q_p: 1.0,
    };

    pub fn for_catalog(catalog: &TaskCatalog) -> Self {
        Normalization {
            sz: 4e7,
            cu: catalog.max_mi(),
            pp: 100_000.0,
            dt: 710.0,
            q_t: 4e8,
            q_p: 10.0 * catalog.max_mi(),
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.sz, self.cu, self.pp, self.dt, self.q_t, self.q_p];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("normalization constants must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientInit {
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
    pub velocity_kmh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceInit {
    pub x: f64,
    pub y: f64,
    pub cpu_mips: f64,
}

/// A task injected at a fixed time instead of the Poisson process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedTask {
    pub client: usize,
    pub time: f64,
    pub cu: f64,
    pub size_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridNetwork,
    /// Client vehicles (n).
    pub clients: usize,
    /// Parked service vehicles (m).
    pub service_vehicles: usize,
    /// Tasks per second per client.
    pub task_rate: f64,
    pub velocities_kmh: Vec<f64>,
    pub max_speed_kmh: f64,
    pub sizes_bits: Vec<f64>,
    pub radio: RadioConfig,
    pub cloud_uplink_bps: f64,
    /// Bounds of the uniform internet transit delay, seconds.
    pub internet_delay_s: [f64; 2],
    pub rsu_cpu_mips: f64,
    pub cloud_cpu_mips: f64,
    pub service_cpu_choices_mips: Vec<f64>,
    pub catalog_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog_path: Option<PathBuf>,
    pub episode_s: f64,
    pub trace_cadence_s: f64,
    /// Distances below this are clamped before evaluating a link rate.
    pub min_link_distance_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    /// Default seed range, `A..B` inclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub client_overrides: Option<Vec<ClientInit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service_overrides: Option<Vec<ServiceInit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task_script: Option<Vec<ScriptedTask>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario1".into(),
            grid: GridNetwork::default(),
            clients: 5,
            service_vehicles: 2,
            task_rate: 3.0,
            velocities_kmh: vec![10.0, 20.0, 25.0, 40.0],
            max_speed_kmh: 48.0,
            sizes_bits: vec![2e7, 4e7],
            radio: RadioConfig::default(),
            cloud_uplink_bps: 1e9,
            internet_delay_s: [0.05, 0.2],
            rsu_cpu_mips: 18_375.0,
            cloud_cpu_mips: 100_000.0,
            service_cpu_choices_mips: vec![18_375.0, 42_820.0, 71_120.0],
            catalog_scale: crate::workload::DEFAULT_SCALE,
            catalog_path: None,
            episode_s: 60.0,
            trace_cadence_s: 0.1,
            min_link_distance_m: 1.0,
            normalization: None,
            seeds: None,
            client_overrides: None,
            service_overrides: None,
            task_script: None,
        }
    }
}

impl ScenarioConfig {
    /// One of the three evaluation scenarios: (5, 2), (10, 4) or (20, 8)
    /// clients and service vehicles.
    pub fn scenario(index: usize) -> Result<Self> {
        let (n, m) = match index {
            1 => (5, 2),
            2 => (10, 4),
            3 => (20, 8),
            other => return Err(Error::Config(format!("no scenario {other}"))),
        };
        Ok(ScenarioConfig {
            name: format!("scenario{index}"),
            clients: n,
            service_vehicles: m,
            ..ScenarioConfig::default()
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text)?;
        if let (Some(p), Some(dir)) = (cfg.catalog_path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn catalog(&self) -> Result<TaskCatalog> {
        match &self.catalog_path {
            None => TaskCatalog::builtin(self.catalog_scale),
            Some(path) => TaskCatalog::parse(&std::fs::read_to_string(path)?, self.catalog_scale),
        }
    }

    pub fn normalization(&self) -> Result<Normalization> {
        match self.normalization {
            Some(n) => Ok(n),
            None => Ok(Normalization::for_catalog(&self.catalog()?)),
        }
    }

    pub fn budget(&self) -> LinkBudget {
        self.radio.budget()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.grid.validate()?;
        self.budget().validate()?;
        if !(self.task_rate > 0.0) {
            return bad(format!("task_rate must be positive, got {}", self.task_rate));
        }
        if self.velocities_kmh.is_empty()
            || self
                .velocities_kmh
                .iter()
                .any(|v| !(*v > 0.0) || *v > self.max_speed_kmh)
        {
            return bad(format!("velocities must lie in (0, {}] km/h", self.max_speed_kmh));
        }
        if self.sizes_bits.is_empty() || self.sizes_bits.iter().any(|s| !(*s > 0.0)) {
            return bad("sizes_bits must be nonempty and positive".into());
        }
        if self.service_vehicles > 0
            && (self.service_cpu_choices_mips.is_empty() || self.service_cpu_choices_mips.iter().any(|c| !(*c > 0.0)))
        {
            return bad("service_cpu_choices_mips must be nonempty and positive".into());
        }
        for (name, v) in [
            ("cloud_uplink_bps", self.cloud_uplink_bps),
            ("rsu_cpu_mips", self.rsu_cpu_mips),
            ("cloud_cpu_mips", self.cloud_cpu_mips),
            ("episode_s", self.episode_s),
            ("trace_cadence_s", self.trace_cadence_s),
            ("min_link_distance_m", self.min_link_distance_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let [lo, hi] = self.internet_delay_s;
        if !(lo >= 0.0 && hi >= lo) {
            return bad(format!(
                "internet_delay_s must satisfy 0 <= min <= max, got [{lo}, {hi}]"
            ));
        }
        if let Some(n) = &self.normalization {
            n.validate()?;
        }
        if let Some(clients) = &self.client_overrides {
            if clients.len() != self.clients {
                return bad(format!(
                    "{} client overrides for {} clients",
                    clients.len(),
                    self.clients
                ));
            }
            for c in clients {
                if !self.grid.is_on_road(c.x, c.y) {
                    return bad(format!("client override ({}, {}) is off road", c.x, c.y));
                }
                if !(c.velocity_kmh >= 0.0 && c.velocity_kmh <= self.max_speed_kmh) {
                    return bad(format!("client override speed {} km/h out of range", c.velocity_kmh));
                }
            }
        }
        if let Some(services) = &self.service_overrides {
            if services.len() != self.service_vehicles {
                return bad(format!(
                    "{} service overrides for {} service vehicles",
                    services.len(),
                    self.service_vehicles
                ));
            }
            if services
                .iter()
                .any(|s| !(s.cpu_mips > 0.0) || !self.grid.is_on_road(s.x, s.y))
            {
                return bad("service overrides need positive cpu and on-road positions".into());
            }
        }
        if let Some(script) = &self.task_script {
            for t in script {
                if t.client >= self.clients || !(0.0..self.episode_s).contains(&t.time) {
                    return bad(format!("scripted task {t:?} has bad client or time"));
                }
                if !(t.cu >= 0.0 && t.size_bits >= 0.0) {
                    return bad(format!("scripted task {t:?} has negative work"));
                }
            }
        }
        self.catalog()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_environment_table() {
        let c = ScenarioConfig::default();
        assert_eq!(
            (c.grid.length_m, c.grid.width_m, c.grid.block_m),
            (1000.0, 1000.0, 200.0)
        );
        assert_eq!(c.task_rate, 3.0);
        assert_eq!(c.velocities_kmh, vec![10.0, 20.0, 25.0, 40.0]);
        assert!(c.velocities_kmh.iter().all(|v| *v <= 48.0));
        assert_eq!(c.sizes_bits, vec![2e7, 4e7]);
        assert_eq!(c.radio.bandwidth_hz, 40e6);
        assert_eq!(c.rsu_cpu_mips, 18_375.0);
        assert_eq!(c.cloud_cpu_mips, 100_000.0);
        assert_eq!(c.cloud_uplink_bps, 1e9);
        c.validate().unwrap();
    }

    #[test]
    fn presets_and_json_round_trip() {
        for (i, (n, m)) in [(1, (5, 2)), (2, (10, 4)), (3, (20, 8))] {
            let c = ScenarioConfig::scenario(i).unwrap();
            assert_eq!((c.clients, c.service_vehicles), (n, m));
            let back = ScenarioConfig::from_json(&c.to_json_pretty()).unwrap();
            assert_eq!(back, c);
        }
        assert!(ScenarioConfig::scenario(4).is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c = ScenarioConfig::from_json(r#"{"clients": 2, "service_vehicles": 1}"#).unwrap();
        assert_eq!(c.task_rate, 3.0);
        assert_eq!(c.service_vehicles, 1);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"task_rate": 0}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"velocities_kmh": [60]}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"clients": 1, "client_overrides": []}"#).is_err());
        assert!(ScenarioConfig::from_json(
            r#"{"clients": 1, "task_script": [{"client": 3, "time": 0.0, "cu": 1, "size_bits": 1}]}"#
        )
        .is_err());
    }
}
