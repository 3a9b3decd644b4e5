//! Offloading policies: random, cloud-only and greedy baselines, plus an
//! argmax evaluator for exported MLP weights.

use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Normalization, ScenarioConfig};
use crate::env::{observation_len, observation_vector, Observation};
use crate::error::{Error, Result};
use crate::seeding::{stream, SimRng, Stream};

pub trait Policy {
    /// Returns an action index in `0..m + 2`.
    fn choose(&mut self, obs: &Observation) -> usize;
}

impl<F: FnMut(&Observation) -> usize> Policy for F {
    fn choose(&mut self, obs: &Observation) -> usize {
        self(obs)
    }
}

/// Uniform over every destination, RSU and cloud included.
pub struct RandomPolicy {
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(rng: SimRng) -> Self {
        RandomPolicy { rng }
    }

    pub fn for_episode(seed: u64) -> Self {
        Self::new(stream(seed, Stream::Policy))
    }
}

impl Policy for RandomPolicy {
    fn choose(&mut self, obs: &Observation) -> usize {
        self.rng.random_range(0..obs.action_count())
    }
}

pub struct CloudOnlyPolicy;

impl Policy for CloudOnlyPolicy {
    fn choose(&mut self, obs: &Observation) -> usize {
        obs.service_count() + 1
    }
}

/// Picks the node with the least normalized transmission plus processing
/// backlog. The RSU has no transmission stage and the cloud no processing
/// queue, so each is scored on its single queue. Ties go to the lowest index.
pub struct GreedyPolicy {
    norm_t: f64,
    norm_p: f64,
}

impl GreedyPolicy {
    pub fn new(norm: &Normalization) -> Self {
        GreedyPolicy {
            norm_t: norm.q_t,
            norm_p: norm.q_p,
        }
    }

    pub fn scores(&self, obs: &Observation) -> Vec<f64> {
        let m = obs.service_count();
        let mut scores: Vec<f64> = (0..m)
            .map(|j| obs.q_t[j] / self.norm_t + obs.q_p[j] / self.norm_p)
            .collect();
        scores.push(obs.q_p[m] / self.norm_p);
        scores.push(obs.q_t[m] / self.norm_t);
        scores
    }
}

/// Index of the smallest score, first one wins ties.
pub fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value, first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl Policy for GreedyPolicy {
    fn choose(&mut self, obs: &Observation) -> usize {
        argmin(&self.scores(obs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

/// One affine layer, `y = W x + b` with `W` stored row-major as
/// `rows x cols` (outputs x inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Applied after hidden layers; the output layer must stay linear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyWeights {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<Layer>,
    /// Constants the observation was scaled with during training.
    pub normalization: Normalization,
}

impl PolicyWeights {
    pub fn from_json(text: &str) -> Result<Self> {
        let w: PolicyWeights = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Weights(m));
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        let mut width = self.input_dim;
        for (k, l) in self.layers.iter().enumerate() {
            if l.cols != width {
                return bad(format!(
                    "layer {k} expects {} inputs, previous width is {width}",
                    l.cols
                ));
            }
            if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return bad(format!("layer {k} has malformed weight or bias lengths"));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return bad(format!("layer {k} has non-finite values"));
            }
            width = l.rows;
        }
        if width != self.output_dim {
            return bad(format!(
                "last layer width {width} differs from output_dim {}",
                self.output_dim
            ));
        }
        let last = self.layers.last().expect("nonempty");
        if !matches!(last.activation, None | Some(Activation::Identity)) {
            return bad("output layer must be linear".into());
        }
        Ok(())
    }

    /// Checks the network fits an environment with `m` service vehicles and
    /// was trained with the same observation scaling.
    pub fn check_compatible(&self, m: usize, norm: &Normalization) -> Result<()> {
        if self.input_dim != observation_len(m) || self.output_dim != m + 2 {
            return Err(Error::Weights(format!(
                "network is {}->{}, environment needs {}->{}",
                self.input_dim,
                self.output_dim,
                observation_len(m),
                m + 2
            )));
        }
        if &self.normalization != norm {
            return Err(Error::Weights(format!(
                "normalization {:?} differs from run config {:?}",
                self.normalization, norm
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut x = input.to_vec();
        for (k, l) in self.layers.iter().enumerate() {
            let act = if k == last {
                Activation::Identity
            } else {
                l.activation.unwrap_or_default()
            };
            x = (0..l.rows)
                .map(|r| {
                    let row = &l.weights[r * l.cols..(r + 1) * l.cols];
                    let mut acc = l.bias[r];
                    for (w, xi) in row.iter().zip(&x) {
                        acc += w * xi;
                    }
                    act.apply(acc)
                })
                .collect();
        }
        x
    }
}

pub struct MlpPolicy {
    weights: PolicyWeights,
}

impl MlpPolicy {
    pub fn new(weights: PolicyWeights, m: usize, norm: &Normalization) -> Result<Self> {
        weights.validate()?;
        weights.check_compatible(m, norm)?;
        Ok(MlpPolicy { weights })
    }

    pub fn logits(&self, obs: &Observation) -> Vec<f64> {
        self.weights
            .forward(&observation_vector(obs, &self.weights.normalization))
    }
}

impl Policy for MlpPolicy {
    fn choose(&mut self, obs: &Observation) -> usize {
        argmax(&self.logits(obs))
    }
}

/// Policy named on the command line: `random`, `cloud`, `greedy` or
/// `mlp:<weight file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Random,
    Cloud,
    Greedy,
    Mlp(PolicyWeights),
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PolicySpec::Random),
            "cloud" => Ok(PolicySpec::Cloud),
            "greedy" => Ok(PolicySpec::Greedy),
            other => match other.strip_prefix("mlp:") {
                Some(path) if !path.is_empty() => Ok(PolicySpec::Mlp(PolicyWeights::load(Path::new(path))?)),
                _ => Err(Error::Config(format!(
                    "unknown policy {other:?}; expected random, cloud, greedy or mlp:<file>"
                ))),
            },
        }
    }
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Random => "random",
            PolicySpec::Cloud => "cloud",
            PolicySpec::Greedy => "greedy",
            PolicySpec::Mlp(_) => "mlp",
        }
    }

    /// Fails early if the policy cannot run under `cfg`.
    pub fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        if let PolicySpec::Mlp(w) = self {
            w.check_compatible(cfg.service_vehicles, &cfg.normalization()?)?;
        }
        Ok(())
    }

    /// Fresh policy for the episode with `seed`.
    pub fn instantiate(&self, cfg: &ScenarioConfig, seed: u64) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            PolicySpec::Random => Box::new(RandomPolicy::for_episode(seed)),
            PolicySpec::Cloud => Box::new(CloudOnlyPolicy),
            PolicySpec::Greedy => Box::new(GreedyPolicy::new(&cfg.normalization()?)),
            PolicySpec::Mlp(w) => Box::new(MlpPolicy::new(w.clone(), cfg.service_vehicles, &cfg.normalization()?)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(m: usize) -> Observation {
        Observation {
            sz: 2e7,
            cu: 500.0,
            pp: vec![18_375.0; m + 2],
            dt: vec![300.0; m],
            q_t: vec![0.0; m + 1],
            q_p: vec![0.0; m + 1],
        }
    }

    #[test]
    fn random_is_uniform_and_in_range() {
        let o = obs(2);
        let mut p = RandomPolicy::for_episode(42);
        let n = 40_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let a = p.choose(&o);
            assert!(a < 4);
            counts[a] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.25).abs() < 3.0 * sigma, "{counts:?}");
        }
        let a: Vec<usize> = (0..50).map(|_| RandomPolicy::for_episode(1).choose(&o)).collect();
        let mut q = RandomPolicy::for_episode(1);
        let first = q.choose(&o);
        assert!(a.iter().all(|&x| x == first));
    }

    #[test]
    fn cloud_only_is_constant() {
        assert_eq!(CloudOnlyPolicy.choose(&obs(2)), 3);
        assert_eq!(CloudOnlyPolicy.choose(&obs(8)), 9);
        let mut busy = obs(2);
        busy.q_t[2] = 1e12;
        assert_eq!(CloudOnlyPolicy.choose(&busy), 3);
    }

    #[test]
    fn greedy_examples() {
        let mut g = GreedyPolicy {
            norm_t: 1.0,
            norm_p: 1.0,
        };
        assert_eq!(g.choose(&obs(2)), 0);

        // service0 = 6, service1 = 4, rsu = 5, cloud = 5
        let mut o = obs(2);
        o.q_t = vec![2.0, 1.0, 5.0];
        o.q_p = vec![4.0, 3.0, 5.0];
        assert_eq!(g.scores(&o), vec![6.0, 4.0, 5.0, 5.0]);
        assert_eq!(g.choose(&o), 1);

        // service1 ties with rsu at 4
        o.q_p[2] = 4.0;
        assert_eq!(g.choose(&o), 1);
    }

    #[test]
    fn greedy_normalizes_by_queue_type() {
        let norm = Normalization {
            q_t: 4e8,
            q_p: 260_000.0,
            ..Normalization::UNIT
        };
        let mut g = GreedyPolicy::new(&norm);
        let mut o = obs(1);
        o.q_t = vec![4e8, 0.0];
        o.q_p = vec![0.0, 26_000.0];
        // service0 = 1.0, rsu = 0.1, cloud = 0.0
        assert_eq!(g.choose(&o), 2);
    }

    fn constant_net(m: usize, k: usize) -> PolicyWeights {
        let (inp, out) = (observation_len(m), m + 2);
        let mut bias = vec![0.0; out];
        bias[k] = 1.0;
        PolicyWeights {
            input_dim: inp,
            output_dim: out,
            layers: vec![Layer {
                rows: out,
                cols: inp,
                weights: vec![0.0; out * inp],
                bias,
                activation: None,
            }],
            normalization: Normalization::UNIT,
        }
    }

    #[test]
    fn constant_logits_pick_one_hot_bias() {
        for k in 0..4 {
            let mut p = MlpPolicy::new(constant_net(2, k), 2, &Normalization::UNIT).unwrap();
            assert_eq!(p.choose(&obs(2)), k);
        }
    }

    #[test]
    fn bias_shift_keeps_argmax() {
        let mut w = constant_net(2, 2);
        w.layers[0]
            .weights
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = (i as f64 * 0.37).sin() * 1e-7);
        let before = MlpPolicy::new(w.clone(), 2, &Normalization::UNIT)
            .unwrap()
            .choose(&obs(2));
        w.layers[0].bias.iter_mut().for_each(|b| *b += 123.0);
        let after = MlpPolicy::new(w, 2, &Normalization::UNIT).unwrap().choose(&obs(2));
        assert_eq!(before, after);
    }

    #[test]
    fn weight_validation() {
        let mut w = constant_net(2, 0);
        assert!(w.check_compatible(3, &Normalization::UNIT).is_err());
        let other = Normalization {
            dt: 2.0,
            ..Normalization::UNIT
        };
        assert!(w.check_compatible(2, &other).is_err());
        w.layers[0].bias.pop();
        assert!(w.validate().is_err());
        let mut w = constant_net(2, 0);
        w.layers[0].activation = Some(Activation::Tanh);
        assert!(w.validate().is_err());
        assert!(PolicyWeights::from_json(&constant_net(1, 0).to_json()).is_ok());
    }

    #[test]
    fn policy_names() {
        assert_eq!("greedy".parse::<PolicySpec>().unwrap(), PolicySpec::Greedy);
        assert_eq!("cloud".parse::<PolicySpec>().unwrap(), PolicySpec::Cloud);
        assert!("best".parse::<PolicySpec>().is_err());
        assert!("mlp:".parse::<PolicySpec>().is_err());
        assert!("mlp:/does/not/exist.json".parse::<PolicySpec>().is_err());
    }
}
