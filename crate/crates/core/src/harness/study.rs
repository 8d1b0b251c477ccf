use std::ops::Range;

use rayon::prelude::*;

use crate::error::HarnessError;

use super::config::{ConditionSpec, EventSpec, RunConfig};
use super::metrics::{steady_windows, window_errors, Metrics, MetricsAccumulator, TrialSummary};
use super::run::{run_algorithm, Algorithm};

/// Trials evaluated concurrently before their results are merged in order.
const TRIAL_BATCH: usize = 32;

/// `f_hat[node][n]` of every algorithm in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialTrajectories {
    pub trial: u64,
    pub estimates: Vec<(Algorithm, Vec<Vec<f64>>)>,
}

/// Steady-state statistics of one algorithm at one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub algorithm: Algorithm,
    pub node: usize,
    pub metrics: Metrics,
    pub summaries: Vec<TrialSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub config: RunConfig,
    pub config_hash: String,
    pub algorithms: Vec<Algorithm>,
    pub sampling_interval_s: f64,
    pub f_true: Vec<f64>,
    /// Sample ranges the aggregates are computed over.
    pub windows: Vec<Range<usize>>,
    /// Empty unless the config records trajectories.
    pub trajectories: Vec<TrialTrajectories>,
    /// Ordered by algorithm (config order), then node.
    pub aggregates: Vec<Aggregate>,
}

impl RunResult {
    pub fn aggregate(&self, algorithm: Algorithm, node: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.algorithm == algorithm && a.node == node)
    }

    pub fn estimates(&self, trial: u64, algorithm: Algorithm) -> Option<&[Vec<f64>]> {
        self.trajectories
            .iter()
            .find(|t| t.trial == trial)?
            .estimates
            .iter()
            .find(|(a, _)| *a == algorithm)
            .map(|(_, e)| e.as_slice())
    }
}

struct TrialOutput {
    trajectories: Option<TrialTrajectories>,
    /// `errors[algorithm][node]`
    errors: Vec<Vec<Vec<f64>>>,
}

/// Runs every configured algorithm over every trial.
///
/// Trials run in parallel and are merged in trial order, so results do not
/// depend on the thread count.
pub fn run(config: &RunConfig) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let scenario = config.scenario()?;
    let network = config.network()?;
    let settings = config.settings()?;
    let mut algorithms = Vec::new();
    for a in config.algorithm_set()? {
        if !algorithms.contains(&a) {
            algorithms.push(a);
        }
    }
    let timeline = scenario.timeline();
    let windows = steady_windows(&timeline, config.steady_fraction)?;
    let f_true = timeline.frequency_hz;
    let nodes = scenario.node_count;

    let one_trial = |trial: u64| -> Result<TrialOutput, HarnessError> {
        let realization = scenario.realize(trial)?;
        let mut errors = Vec::with_capacity(algorithms.len());
        let mut estimates = Vec::new();
        for &alg in &algorithms {
            let est = run_algorithm(alg, &scenario, &realization, &network, &settings)?;
            errors.push(
                est.iter().map(|row| window_errors(row, &f_true, &windows)).collect::<Result<Vec<_>, _>>()?,
            );
            if config.record_trajectories {
                estimates.push((alg, est));
            }
        }
        Ok(TrialOutput {
            trajectories: config.record_trajectories.then_some(TrialTrajectories { trial, estimates }),
            errors,
        })
    };

    let mut acc = vec![vec![MetricsAccumulator::new(); nodes]; algorithms.len()];
    let mut trajectories = Vec::new();
    let trials: Vec<u64> = (0..config.trials as u64).collect();
    for batch in trials.chunks(TRIAL_BATCH) {
        let outputs = batch.par_iter().map(|&t| one_trial(t)).collect::<Result<Vec<_>, _>>()?;
        for out in outputs {
            for (a, per_node) in out.errors.iter().enumerate() {
                for (node, e) in per_node.iter().enumerate() {
                    acc[a][node].push(e)?;
                }
            }
            trajectories.extend(out.trajectories);
        }
    }

    let mut aggregates = Vec::with_capacity(algorithms.len() * nodes);
    for (a, per_node) in acc.iter().enumerate() {
        for (node, m) in per_node.iter().enumerate() {
            aggregates.push(Aggregate {
                algorithm: algorithms[a],
                node,
                metrics: m.finish()?,
                summaries: m.summaries().to_vec(),
            });
        }
    }
    Ok(RunResult {
        config: config.clone(),
        config_hash: config.hash(),
        algorithms,
        sampling_interval_s: scenario.sampling_interval_s,
        f_true,
        windows,
        trajectories,
        aggregates,
    })
}

/// Changes applied on top of a study's canonical configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub snr_db: Option<f64>,
    /// SNR levels of the bias/variance study.
    pub snr_levels: Option<Vec<f64>>,
}

impl StudyOverrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = &self.algorithms {
            cfg.algorithms = a.iter().map(|a| a.name().to_string()).collect();
        }
        if let Some(snr) = self.snr_db {
            cfg.snr_db = Some(snr);
        }
    }
}

pub const DEFAULT_SWEEP_LEVELS: [f64; 4] = [20.0, 30.0, 40.0, 50.0];

fn event(time_s: f64, condition: Option<&str>, frequency_hz: Option<f64>) -> EventSpec {
    EventSpec { time_s, condition: condition.map(|c| ConditionSpec::Named(c.into())), frequency_hz }
}

/// Canonical configurations of the case studies, labelled.
pub fn case_study_configs(study: u32) -> Result<Vec<(String, RunConfig)>, HarnessError> {
    let base = RunConfig { seed: study as u64, ..RunConfig::default() };
    let configs = match study {
        1 => vec![(
            "sags".to_string(),
            RunConfig {
                snr_db: Some(40.0),
                events: vec![event(0.1, Some("type_c"), None), event(0.3, Some("type_d"), None)],
                ..base
            },
        )],
        2 => vec![
            ("gaussian".to_string(), RunConfig { snr_db: Some(30.0), ..base.clone() }),
            ("spikes".to_string(), RunConfig { spike_nodes: vec![2], ..base }),
        ],
        3 => vec![(
            "step".to_string(),
            RunConfig { snr_db: Some(40.0), events: vec![event(0.2, None, Some(51.0))], ..base },
        )],
        4 => vec![(
            "hilbert".to_string(),
            RunConfig { snr_db: Some(30.0), events: vec![event(0.25, Some("type_d"), None)], ..base },
        )],
        5 => {
            let cfg = RunConfig {
                duration_s: 0.3,
                initial_condition: ConditionSpec::Named("type_d".into()),
                trials: 500,
                record_trajectories: false,
                algorithms: Algorithm::KALMAN.iter().map(|a| a.name().to_string()).collect(),
                ..base
            };
            sweep_configs(&DEFAULT_SWEEP_LEVELS, &cfg)?
        }
        other => return Err(HarnessError::Config(format!("case study must be 1 to 5, got {other}"))),
    };
    Ok(configs)
}

/// Runs a case study; most produce one run, study 2 adds a spike-noise run
/// and study 5 one run per SNR level.
pub fn case_study(study: u32, overrides: &StudyOverrides) -> Result<Vec<(String, RunResult)>, HarnessError> {
    let mut configs = case_study_configs(study)?;
    if study == 5 {
        let mut base = configs[0].1.clone();
        overrides.apply(&mut base);
        let levels = match (&overrides.snr_levels, overrides.snr_db) {
            (Some(l), _) => l.clone(),
            (None, Some(snr)) => vec![snr],
            (None, None) => DEFAULT_SWEEP_LEVELS.to_vec(),
        };
        configs = sweep_configs(&levels, &base)?;
    } else {
        for (_, cfg) in &mut configs {
            overrides.apply(cfg);
        }
    }
    configs.into_iter().map(|(label, cfg)| Ok((label, run(&cfg)?))).collect()
}

/// One configuration per SNR level; level `i` uses seed `base.seed + i`.
pub fn sweep_configs(levels: &[f64], base: &RunConfig) -> Result<Vec<(String, RunConfig)>, HarnessError> {
    if levels.is_empty() {
        return Err(HarnessError::Config("SNR level list is empty".into()));
    }
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let cfg = RunConfig { snr_db: Some(snr), seed: base.seed.wrapping_add(i as u64), ..base.clone() };
            (format!("snr_{snr}"), cfg)
        })
        .collect())
}

/// Repeats `base` at each SNR level.
pub fn sweep_snr(levels: &[f64], base: &RunConfig) -> Result<Vec<(f64, RunResult)>, HarnessError> {
    sweep_configs(levels, base)?
        .into_iter()
        .map(|(_, cfg)| Ok((cfg.snr_db.expect("sweep level"), run(&cfg)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            duration_s: 0.04,
            snr_db: Some(40.0),
            trials: 3,
            algorithms: vec!["ACEKF".into(), "D-CKF".into(), "HILBERT".into()],
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_fills_trajectories_and_aggregates() {
        let r = run(&small()).unwrap();
        assert_eq!(r.trajectories.len(), 3);
        assert_eq!(r.aggregates.len(), 15);
        assert_eq!(r.windows, vec![160..200]);
        let a = r.aggregate(Algorithm::Acekf, 4).unwrap();
        assert_eq!(a.metrics.trials, 3);
        assert_eq!(a.summaries.len(), 3);
        assert_eq!(r.estimates(2, Algorithm::Hilbert).unwrap().len(), 5);
        assert_eq!(r.config_hash, small().hash());
    }

    #[test]
    fn run_is_reproducible_across_thread_counts() {
        let cfg = small();
        let one =
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&cfg).unwrap());
        let three =
            rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run(&cfg).unwrap());
        assert_eq!(one, three);
    }

    #[test]
    fn unrecorded_runs_keep_only_aggregates() {
        let cfg = RunConfig { record_trajectories: false, ..small() };
        let r = run(&cfg).unwrap();
        assert!(r.trajectories.is_empty());
        assert_eq!(r.aggregates.len(), 15);
    }

    #[test]
    fn invalid_study_index_is_rejected() {
        assert!(matches!(case_study_configs(0), Err(HarnessError::Config(_))));
        assert!(case_study_configs(6).is_err());
    }

    #[test]
    fn case_study_defaults() {
        for n in 1..=5 {
            for (_, cfg) in case_study_configs(n).unwrap() {
                cfg.validate().unwrap();
                assert_eq!(cfg.nominal_frequency_hz, 50.0);
                assert_eq!(cfg.sampling_rate_hz, 5000.0);
                assert_eq!(cfg.initial_frequency_hz, 50.5);
                assert_eq!(cfg.nodes, 5);
            }
        }
        let cs1 = &case_study_configs(1).unwrap()[0].1;
        let s = cs1.scenario().unwrap();
        assert_eq!(s.sample_index(s.events[0].time_s), 500);
        assert_eq!(s.sample_index(s.events[1].time_s), 1500);
        let cs5 = case_study_configs(5).unwrap();
        assert_eq!(cs5.len(), 4);
        assert_eq!(cs5[0].1.trials, 500);
    }

    #[test]
    fn single_level_sweep_matches_its_run() {
        let base = small();
        let sweep = sweep_snr(&[30.0], &base).unwrap();
        let direct = run(&RunConfig { snr_db: Some(30.0), ..base.clone() }).unwrap();
        assert_eq!(sweep[0].1, direct);
        assert!(sweep_snr(&[], &base).is_err());
    }
}
