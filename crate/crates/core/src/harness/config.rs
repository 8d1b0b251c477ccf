use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;
use crate::freq::{ProcessNoise, HILBERT_WINDOW, INITIAL_FREQUENCY_HZ};
use crate::grid::{Circularity, GridEvent, GridScenario, NoiseSpec, PhaseCondition, SpikeSpec};
use crate::network::{Network, Topology, WeightRule};

use super::metrics::DEFAULT_STEADY_FRACTION;
use super::run::{parse_algorithms, Algorithm, EstimatorSettings, DEFAULT_PROCESS_NOISE};

/// Named or explicit three-phase operating condition. Angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionSpec {
    Named(String),
    Explicit { va: f64, vb: f64, vc: f64, delta_b_deg: f64, delta_c_deg: f64 },
}

impl Default for ConditionSpec {
    fn default() -> Self {
        ConditionSpec::Named("balanced".into())
    }
}

impl ConditionSpec {
    pub fn resolve(&self) -> Result<PhaseCondition, HarnessError> {
        match self {
            ConditionSpec::Named(name) => match name.to_ascii_lowercase().as_str() {
                "balanced" => Ok(PhaseCondition::balanced()),
                "type_c" | "c" => Ok(PhaseCondition::type_c()),
                "type_d" | "d" => Ok(PhaseCondition::type_d()),
                other => Err(HarnessError::Config(format!(
                    "unknown condition '{other}' (expected balanced, type_c or type_d)"
                ))),
            },
            ConditionSpec::Explicit { va, vb, vc, delta_b_deg, delta_c_deg } => {
                Ok(PhaseCondition::new(*va, *vb, *vc, delta_b_deg.to_radians(), delta_c_deg.to_radians()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
}

/// A complete run description, read from TOML.
///
/// Scalar keys sit at the top level; grid events form an ordered
/// `[[event]]` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nominal_frequency_hz: f64,
    pub sampling_rate_hz: f64,
    pub duration_s: f64,
    pub initial_phase_deg: f64,
    pub initial_condition: ConditionSpec,

    pub nodes: usize,
    /// Edge-list file (1-based ids). Absent: the built-in five-node graph, or
    /// a fully connected graph for other node counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    /// `uniform` or `metropolis`.
    pub weights: String,

    /// Per-node SNR in dB; noiseless when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    /// Real-to-imaginary Clarke noise power ratio; circular when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noncircular_ratio: Option<f64>,
    pub correlation: f64,
    /// 1-based ids of the nodes that receive impulsive spikes.
    pub spike_nodes: Vec<usize>,
    pub spike_probability: f64,
    pub spike_amplitude: f64,

    pub algorithms: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    pub q_coefficient: f64,
    pub q_voltage: f64,
    pub initial_scale: f64,
    pub initial_frequency_hz: f64,
    pub hilbert_window: usize,
    /// `a`, `b` or `c`.
    pub hilbert_phase: String,
    pub steady_fraction: f64,
    /// Keep full trajectories for export (disable for large Monte Carlo runs).
    pub record_trajectories: bool,

    #[serde(rename = "event", skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let settings = EstimatorSettings::default();
        let spikes = SpikeSpec::default();
        Self {
            nominal_frequency_hz: 50.0,
            sampling_rate_hz: 5000.0,
            duration_s: 0.5,
            initial_phase_deg: 0.0,
            initial_condition: ConditionSpec::default(),
            nodes: 5,
            topology: None,
            weights: "uniform".into(),
            snr_db: None,
            noncircular_ratio: None,
            correlation: 0.0,
            spike_nodes: Vec::new(),
            spike_probability: spikes.probability,
            spike_amplitude: spikes.amplitude,
            algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
            trials: 1,
            seed: 0,
            q_coefficient: DEFAULT_PROCESS_NOISE.q_coefficient,
            q_voltage: DEFAULT_PROCESS_NOISE.q_voltage,
            initial_scale: settings.initial_scale,
            initial_frequency_hz: INITIAL_FREQUENCY_HZ,
            hilbert_window: HILBERT_WINDOW,
            hilbert_phase: "a".into(),
            steady_fraction: DEFAULT_STEADY_FRACTION,
            record_trajectories: true,
            events: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }

    /// Reads a config file; a relative topology path resolves against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg =
            Self::from_toml(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(t), Some(dir)) = (&cfg.topology, path.parent()) {
            if t.is_relative() {
                cfg.topology = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trial count must be at least 1".into()));
        }
        self.algorithm_set()?;
        self.scenario()?.validate()?;
        self.settings()?;
        Ok(())
    }

    pub fn sampling_interval_s(&self) -> f64 {
        1.0 / self.sampling_rate_hz
    }

    pub fn algorithm_set(&self) -> Result<Vec<Algorithm>, HarnessError> {
        parse_algorithms(&self.algorithms.join(","))
    }

    pub fn scenario(&self) -> Result<GridScenario, HarnessError> {
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            return Err(HarnessError::Config(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(HarnessError::Config(format!("duration must be positive, got {}", self.duration_s)));
        }
        let t = self.sampling_interval_s();
        let samples = (self.duration_s / t).round() as usize;
        let circularity = match self.noncircular_ratio {
            Some(ratio) => Circularity::Noncircular { ratio },
            None => Circularity::Circular,
        };
        let base = NoiseSpec { snr_db: self.snr_db, circularity, spikes: None };
        if let Some(&bad) = self.spike_nodes.iter().find(|&&k| k == 0 || k > self.nodes) {
            return Err(HarnessError::Config(format!(
                "spike node {bad} out of range for {} nodes",
                self.nodes
            )));
        }
        let node_noise = if self.spike_nodes.is_empty() {
            vec![base]
        } else {
            (0..self.nodes)
                .map(|k| NoiseSpec {
                    spikes: self.spike_nodes.contains(&(k + 1)).then_some(SpikeSpec {
                        probability: self.spike_probability,
                        amplitude: self.spike_amplitude,
                    }),
                    ..base
                })
                .collect()
        };
        let events = self
            .events
            .iter()
            .map(|e| {
                Ok(GridEvent {
                    time_s: e.time_s,
                    condition: e.condition.as_ref().map(ConditionSpec::resolve).transpose()?,
                    frequency_hz: e.frequency_hz,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let scenario = GridScenario {
            nominal_frequency_hz: self.nominal_frequency_hz,
            sampling_interval_s: t,
            initial_phase_rad: self.initial_phase_deg.to_radians(),
            samples,
            initial_condition: self.initial_condition.resolve()?,
            events,
            node_count: self.nodes,
            node_noise,
            correlation: self.correlation,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn network(&self) -> Result<Network, HarnessError> {
        let rule = match self.weights.to_ascii_lowercase().as_str() {
            "uniform" => WeightRule::Uniform,
            "metropolis" => WeightRule::Metropolis,
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown weight rule '{other}' (expected uniform or metropolis)"
                )))
            }
        };
        let topology = match &self.topology {
            Some(path) => Topology::from_file(path)?,
            None if self.nodes == 5 => Topology::default_five_node(),
            None => Topology::fully_connected(self.nodes)?,
        };
        if topology.node_count() != self.nodes {
            return Err(HarnessError::Config(format!(
                "topology has {} nodes, config declares {}",
                topology.node_count(),
                self.nodes
            )));
        }
        Ok(Network::new(topology, rule))
    }

    pub fn settings(&self) -> Result<EstimatorSettings, HarnessError> {
        let hilbert_phase = match self.hilbert_phase.to_ascii_lowercase().as_str() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            other => {
                return Err(HarnessError::Config(format!("hilbert_phase must be a, b or c, got '{other}'")))
            }
        };
        let positive = [
            ("q_coefficient", self.q_coefficient),
            ("q_voltage", self.q_voltage),
            ("initial_scale", self.initial_scale),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
        }
        if self.hilbert_window == 0 {
            return Err(HarnessError::Config("hilbert_window must be at least 1".into()));
        }
        Ok(EstimatorSettings {
            process: ProcessNoise { q_coefficient: self.q_coefficient, q_voltage: self.q_voltage },
            initial_scale: self.initial_scale,
            initial_frequency_hz: self.initial_frequency_hz,
            hilbert_window: self.hilbert_window,
            hilbert_phase,
            ..EstimatorSettings::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
        duration_s = 0.5
        snr_db = 40.0
        trials = 3
        seed = 7
        algorithms = ["D-ACEKF", "cekf"]

        [[event]]
        time_s = 0.1
        condition = "type_c"

        [[event]]
        time_s = 0.3
        condition = { va = 0.8, vb = 0.9, vc = 0.9, delta_b_deg = 5.0, delta_c_deg = -5.0 }
    "#;

    #[test]
    fn parses_flat_keys_and_events() {
        let cfg = RunConfig::from_toml(EXAMPLE).unwrap();
        cfg.validate().unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.samples, 2500);
        assert_eq!(s.seed, 7);
        assert_eq!(s.events.len(), 2);
        assert_eq!(s.events[0].condition, Some(PhaseCondition::type_c()));
        let d = s.events[1].condition.unwrap();
        let want = PhaseCondition::type_d();
        assert!((d.delta_b - want.delta_b).abs() < 1e-15 && d.va == want.va);
        assert_eq!(cfg.algorithm_set().unwrap(), vec![Algorithm::Dacekf, Algorithm::Cekf]);
    }

    #[test]
    fn hash_round_trips_and_tracks_changes() {
        let cfg = RunConfig::from_toml(EXAMPLE).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let e = RunConfig::from_toml("sead = 3").unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let cfg = RunConfig { trials: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        let cfg = RunConfig { algorithms: vec!["KF".into()], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg =
            RunConfig { initial_condition: ConditionSpec::Named("type_z".into()), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn spike_nodes_get_their_own_noise_spec() {
        let cfg = RunConfig { snr_db: Some(30.0), spike_nodes: vec![2], ..Default::default() };
        let s = cfg.scenario().unwrap();
        assert_eq!(s.node_noise.len(), 5);
        assert!(s.node_noise[1].spikes.is_some());
        assert!(s.node_noise[0].spikes.is_none());
        assert_eq!(s.node_noise[0].snr_db, Some(30.0));
    }

    #[test]
    fn relative_topology_resolves_next_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ring.txt"), "1 2\n2 3\n3 1\n").unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "nodes = 3\ntopology = \"ring.txt\"\n").unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.network().unwrap().node_count(), 3);
    }
}
