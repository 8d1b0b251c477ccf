use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use crate::error::HarnessError;
use crate::filters::{filter_step, FilterKind, FilterModel, NodeFilterState, StepInput};
use crate::freq::{
    build_sl_model, build_wl_model, freq_from_sl, freq_from_wl, hilbert_frequency, sl_initial_state,
    wl_initial_state, ProcessNoise, HILBERT_WINDOW, INITIAL_FREQUENCY_HZ,
};
use crate::grid::{GridScenario, Realization, NOMINAL_CLARKE_POWER};
use crate::linalg::{Complex, ComplexMatrix, ComplexVector, ZERO};
use crate::model::{LinearModel, ModelSchedule, NoiseModel};
use crate::network::{Network, ObservationNoise, Topology};

/// Estimators available to the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Cekf,
    Acekf,
    Dcekf,
    Dacekf,
    Dckf,
    Dackf,
    DackfInfo,
    Hilbert,
    DHilbert,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Cekf,
        Algorithm::Acekf,
        Algorithm::Dcekf,
        Algorithm::Dacekf,
        Algorithm::Dckf,
        Algorithm::Dackf,
        Algorithm::DackfInfo,
        Algorithm::Hilbert,
        Algorithm::DHilbert,
    ];

    /// The four extended Kalman variants.
    pub const KALMAN: [Algorithm; 4] =
        [Algorithm::Cekf, Algorithm::Acekf, Algorithm::Dcekf, Algorithm::Dacekf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cekf => "CEKF",
            Algorithm::Acekf => "ACEKF",
            Algorithm::Dcekf => "D-CEKF",
            Algorithm::Dacekf => "D-ACEKF",
            Algorithm::Dckf => "D-CKF",
            Algorithm::Dackf => "D-ACKF",
            Algorithm::DackfInfo => "D-ACKF-INFO",
            Algorithm::Hilbert => "HILBERT",
            Algorithm::DHilbert => "D-HILBERT",
        }
    }

    pub fn is_distributed(self) -> bool {
        !matches!(self, Algorithm::Cekf | Algorithm::Acekf | Algorithm::Hilbert)
    }

    fn filter_kind(self) -> Option<FilterKind> {
        match self {
            Algorithm::Cekf | Algorithm::Dcekf => Some(FilterKind::Dcekf),
            Algorithm::Acekf | Algorithm::Dacekf => Some(FilterKind::Dacekf),
            Algorithm::Dckf => Some(FilterKind::Dckf),
            Algorithm::Dackf => Some(FilterKind::Dackf),
            Algorithm::DackfInfo => Some(FilterKind::DackfInfo),
            Algorithm::Hilbert | Algorithm::DHilbert => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key || a.name().replace('-', "") == key.replace('-', ""))
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Parses a comma-separated algorithm list.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>, HarnessError> {
    let algos =
        list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>, _>>()?;
    if algos.is_empty() {
        return Err(HarnessError::Config("algorithm list is empty".into()));
    }
    Ok(algos)
}

/// Tuning shared by every estimator in a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorSettings {
    pub process: ProcessNoise,
    /// `M_0 = delta * I`.
    pub initial_scale: f64,
    pub initial_frequency_hz: f64,
    /// SNR assumed by the filters when the scenario has no Gaussian noise.
    pub noise_floor_snr_db: f64,
    pub hilbert_window: usize,
    /// Phase fed to the Hilbert estimator (0 = a, 1 = b, 2 = c).
    pub hilbert_phase: usize,
}

pub const DEFAULT_PROCESS_NOISE: ProcessNoise = ProcessNoise { q_coefficient: 2e-11, q_voltage: 3e-7 };

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            process: DEFAULT_PROCESS_NOISE,
            initial_scale: crate::filters::DEFAULT_INITIAL_SCALE,
            initial_frequency_hz: INITIAL_FREQUENCY_HZ,
            noise_floor_snr_db: 60.0,
            hilbert_window: HILBERT_WINDOW,
            hilbert_phase: 0,
        }
    }
}

/// Observation noise statistics the filters assume for a scenario.
pub fn filter_noise(
    scenario: &GridScenario,
    settings: &EstimatorSettings,
    with_cross: bool,
) -> Result<ObservationNoise, HarnessError> {
    let floor = NOMINAL_CLARKE_POWER * 10f64.powf(-settings.noise_floor_snr_db / 10.0);
    let mut cov = Vec::with_capacity(scenario.node_count);
    let mut pseudo = Vec::with_capacity(scenario.node_count);
    for i in 0..scenario.node_count {
        let spec = scenario.noise_for(i);
        let var = spec.clarke_variance();
        let (r, u) = if var > 0.0 { (var, spec.clarke_pseudo()) } else { (floor, 0.0) };
        cov.push(ComplexMatrix::scalar(Complex::new(r, 0.0)));
        pseudo.push(ComplexMatrix::scalar(Complex::new(u, 0.0)));
    }
    let mut noise = ObservationNoise::new(cov, pseudo)?;
    if with_cross && scenario.correlation > 0.0 {
        noise = noise.with_uniform_correlation(scenario.correlation)?;
    }
    Ok(noise)
}

/// Time-varying regression form of the frequency trackers used by the
/// linear filters: `v_n = x v_{n-1}` (one coefficient) or
/// `v_n = h v_{n-1} + g conj(v_{n-1})` (two coefficients), with the previous
/// observation of each node as its regressor.
struct RegressionSchedule<'a> {
    clarke: &'a [Vec<Complex>],
    widely_linear: bool,
    noise: NoiseModel,
}

impl ModelSchedule for RegressionSchedule<'_> {
    fn model_at(&self, step: usize) -> Cow<'_, LinearModel> {
        let l = if self.widely_linear { 2 } else { 1 };
        let observation = self
            .clarke
            .iter()
            .map(|v| {
                let prev = v[step - 1];
                let row = if self.widely_linear { vec![prev, prev.conj()] } else { vec![prev] };
                ComplexMatrix::new(1, l, row).expect("finite regressor")
            })
            .collect::<Vec<_>>();
        Cow::Owned(LinearModel {
            transition: ComplexMatrix::identity(l),
            conjugate_transition: ComplexMatrix::zeros(l, l),
            conjugate_observation: vec![ComplexMatrix::zeros(1, l); observation.len()],
            observation,
            noise: self.noise.clone(),
        })
    }
}

/// Frequency estimates `f_hat[node][n]` of one algorithm on one realization.
pub fn run_algorithm(
    algorithm: Algorithm,
    scenario: &GridScenario,
    realization: &Realization,
    network: &Network,
    settings: &EstimatorSettings,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let t = scenario.sampling_interval_s;
    let nodes = scenario.node_count;
    if network.node_count() != nodes {
        return Err(HarnessError::Config(format!(
            "topology has {} nodes, scenario has {nodes}",
            network.node_count()
        )));
    }
    let samples = scenario.samples;
    match algorithm {
        Algorithm::Hilbert | Algorithm::DHilbert => {
            let phase = settings.hilbert_phase;
            let mut est = Vec::with_capacity(nodes);
            for node in 0..nodes {
                let x: Vec<f64> = realization.phases[node]
                    .iter()
                    .map(|s| match phase {
                        0 => s.a,
                        1 => s.b,
                        _ => s.c,
                    })
                    .collect();
                est.push(hilbert_frequency(&x, t, settings.hilbert_window)?);
            }
            if algorithm == Algorithm::DHilbert {
                let mut out = vec![vec![0.0; samples]; nodes];
                for (i, row) in out.iter_mut().enumerate() {
                    for &k in network.topology.neighborhood(i)? {
                        let c = network.weights.weight(k, i);
                        for (o, e) in row.iter_mut().zip(&est[k]) {
                            *o += c * e;
                        }
                    }
                }
                est = out;
            }
            Ok(est)
        }
        _ => run_kalman(algorithm, scenario, realization, network, settings),
    }
}

fn run_kalman(
    algorithm: Algorithm,
    scenario: &GridScenario,
    realization: &Realization,
    network: &Network,
    settings: &EstimatorSettings,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let kind = algorithm.filter_kind().expect("kalman algorithm");
    let t = scenario.sampling_interval_s;
    let nodes = scenario.node_count;
    let samples = scenario.samples;
    let isolated;
    let network = if algorithm.is_distributed() {
        network
    } else {
        isolated = Network::new(Topology::isolated(nodes)?, Default::default());
        &isolated
    };
    let with_cross = kind != FilterKind::DackfInfo;
    let obs_noise = filter_noise(scenario, settings, with_cross)?;
    let clarke = &realization.clarke;
    let f0 = settings.initial_frequency_hz;
    let widely_linear = kind.is_augmented();

    let sl;
    let wl;
    let regression;
    let (model, initial): (FilterModel<'_>, ComplexVector) = match kind {
        FilterKind::Dcekf => {
            sl = build_sl_model(settings.process, obs_noise)?;
            (FilterModel::Nonlinear(&sl), sl_initial_state(ZERO, f0, t))
        }
        FilterKind::Dacekf => {
            wl = build_wl_model(settings.process, obs_noise)?;
            (FilterModel::Nonlinear(&wl), wl_initial_state(ZERO, f0, t))
        }
        FilterKind::Dckf | FilterKind::Dackf | FilterKind::DackfInfo => {
            let l = if widely_linear { 2 } else { 1 };
            let q = settings.process.q_coefficient;
            let noise = NoiseModel::new(
                ComplexMatrix::scalar_identity(l, Complex::new(q, 0.0)),
                ComplexMatrix::zeros(l, l),
                obs_noise,
            )?;
            regression = RegressionSchedule { clarke, widely_linear, noise };
            let mut x0 = vec![crate::freq::rotation(f0, t)];
            if widely_linear {
                x0.push(ZERO);
            }
            (FilterModel::Linear(&regression), ComplexVector::new(x0).expect("finite"))
        }
    };

    let extended = kind.is_extended();
    let voltage_index = initial.len() - 1;
    let mut states: Vec<NodeFilterState> = (0..nodes)
        .map(|i| {
            let mut x0 = initial.clone();
            if extended {
                x0[voltage_index] = clarke[i][0];
            }
            NodeFilterState::for_kind(kind, &x0, settings.initial_scale)
        })
        .collect();

    let extract = |s: &NodeFilterState| -> f64 {
        let x = &s.estimate;
        match kind {
            FilterKind::Dcekf | FilterKind::Dckf => freq_from_sl(x[0], t),
            _ => freq_from_wl(x[0], x[1], t),
        }
    };
    let mut out = vec![Vec::with_capacity(samples); nodes];
    for (row, s) in out.iter_mut().zip(&states) {
        row.push(extract(s));
    }
    for n in 1..samples {
        let input = StepInput::scalars(n, &clarke.iter().map(|v| v[n]).collect::<Vec<_>>());
        filter_step(kind, &mut states, model, network, &input)?;
        for (row, s) in out.iter_mut().zip(&states) {
            row.push(extract(s));
        }
    }
    Ok(out)
}
