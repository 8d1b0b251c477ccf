//! Diffusion Kalman filters over a node network.
//!
//! Every step is synchronous: each node predicts and updates with the stacked
//! observations of its closed neighbourhood, then all local estimates are
//! combined with the diffusion weights. Only the estimates are diffused; the
//! `M` matrices stay local.

mod dackf;
mod dckf;
mod ekf;
mod info;

pub use dackf::dackf_step;
pub use dckf::dckf_step;
pub use ekf::{dacekf_step, dcekf_step};
pub use info::dackf_info_step;

use std::fmt;
use std::str::FromStr;

use crate::error::{FilterError, LinalgError};
use crate::linalg::{solve_hermitian, Complex, ComplexMatrix, ComplexVector, ZERO};
use crate::model::{ModelSchedule, NonlinearModel};
use crate::network::{Network, Topology};

/// Initial `M = delta * I`.
pub const DEFAULT_INITIAL_SCALE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    /// Strictly linear diffusion Kalman filter.
    Dckf,
    /// Augmented (widely linear) diffusion Kalman filter.
    Dackf,
    /// Information form of [`FilterKind::Dackf`].
    DackfInfo,
    /// Strictly linear diffusion extended Kalman filter.
    Dcekf,
    /// Augmented diffusion extended Kalman filter.
    Dacekf,
}

impl FilterKind {
    pub fn is_augmented(self) -> bool {
        !matches!(self, FilterKind::Dckf | FilterKind::Dcekf)
    }

    pub fn is_extended(self) -> bool {
        matches!(self, FilterKind::Dcekf | FilterKind::Dacekf)
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Dckf => "D-CKF",
            FilterKind::Dackf => "D-ACKF",
            FilterKind::DackfInfo => "D-ACKF-INFO",
            FilterKind::Dcekf => "D-CEKF",
            FilterKind::Dacekf => "D-ACEKF",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "D-CKF" | "DCKF" => Ok(FilterKind::Dckf),
            "D-ACKF" | "DACKF" => Ok(FilterKind::Dackf),
            "D-ACKF-INFO" | "DACKF-INFO" => Ok(FilterKind::DackfInfo),
            "D-CEKF" | "DCEKF" => Ok(FilterKind::Dcekf),
            "D-ACEKF" | "DACEKF" => Ok(FilterKind::Dacekf),
            _ => Err(FilterError::Config(format!("unknown filter '{s}'"))),
        }
    }
}

/// Per-node estimate and `M` matrix between steps.
///
/// For augmented filters `estimate` has length `2L` and keeps the
/// `[x; conj(x)]` structure; for strictly linear filters it has length `L`.
/// `M` is a filter-internal matrix, not necessarily an error covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeFilterState {
    pub estimate: ComplexVector,
    pub covariance: ComplexMatrix,
    pub predicted_estimate: Option<ComplexVector>,
    pub predicted_covariance: Option<ComplexMatrix>,
}

impl NodeFilterState {
    pub fn new(estimate: ComplexVector, covariance: ComplexMatrix) -> Self {
        Self { estimate, covariance, predicted_estimate: None, predicted_covariance: None }
    }

    /// State for a strictly linear filter with `M = delta * I`.
    pub fn strict(x0: &ComplexVector, delta: f64) -> Self {
        Self::new(x0.clone(), ComplexMatrix::scalar_identity(x0.len(), Complex::new(delta, 0.0)))
    }

    /// State for an augmented filter with `x^a = [x0; conj(x0)]`, `M = delta * I`.
    pub fn augmented(x0: &ComplexVector, delta: f64) -> Self {
        let full = crate::linalg::augment_vector(x0).into_full();
        let n = full.len();
        Self::new(full, ComplexMatrix::scalar_identity(n, Complex::new(delta, 0.0)))
    }

    pub fn for_kind(kind: FilterKind, x0: &ComplexVector, delta: f64) -> Self {
        if kind.is_augmented() {
            Self::augmented(x0, delta)
        } else {
            Self::strict(x0, delta)
        }
    }

    /// The un-augmented part of the estimate.
    pub fn state(&self, augmented: bool) -> ComplexVector {
        if augmented {
            self.estimate.segment(0, self.estimate.len() / 2)
        } else {
            self.estimate.clone()
        }
    }

    /// `max |bottom - conj(top)|` of an augmented estimate.
    pub fn mirror_defect(&self) -> f64 {
        let l = self.estimate.len() / 2;
        (0..l).map(|k| (self.estimate[l + k] - self.estimate[k].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Observations of every node at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInput {
    pub step: usize,
    pub observations: Vec<ComplexVector>,
}

impl StepInput {
    pub fn new(step: usize, observations: Vec<ComplexVector>) -> Self {
        Self { step, observations }
    }

    /// One scalar observation per node.
    pub fn scalars(step: usize, values: &[Complex]) -> Self {
        Self::new(
            step,
            values.iter().map(|&v| ComplexVector::new(vec![v]).expect("finite observation")).collect(),
        )
    }

    fn check(&self, nodes: usize) -> Result<(), FilterError> {
        if self.observations.len() != nodes {
            return Err(FilterError::MissingObservations {
                step: self.step,
                expected: nodes,
                actual: self.observations.len(),
            });
        }
        Ok(())
    }
}

/// Result of a local measurement update.
pub(crate) struct LocalUpdate {
    pub estimate: ComplexVector,
    pub covariance: ComplexMatrix,
}

/// `S = H Mp H^H + R`, `G = Mp H^H S^-1`, `x = xp + G e`, `M = Mp - G H Mp`.
pub(crate) fn measurement_update(
    predicted: &ComplexVector,
    predicted_cov: &ComplexMatrix,
    observation: &ComplexMatrix,
    noise: &ComplexMatrix,
    innovation: &ComplexVector,
) -> Result<LocalUpdate, LinalgError> {
    let hm = observation.matmul(predicted_cov)?;
    let s = hm.matmul(&observation.hermitian_transpose())?.try_add(noise)?.hermitian_part();
    let gain = solve_hermitian(&s, &hm)?.solution.hermitian_transpose();
    let estimate = predicted + &gain.mul_vec(innovation)?;
    let covariance = predicted_cov.try_sub(&gain.matmul(&hm)?)?.hermitian_part();
    Ok(LocalUpdate { estimate, covariance })
}

/// `F M F^H + Q`, projected onto the Hermitian matrices.
pub(crate) fn predict_covariance(
    transition: &ComplexMatrix,
    covariance: &ComplexMatrix,
    noise: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    Ok(transition
        .matmul(covariance)?
        .matmul(&transition.hermitian_transpose())?
        .try_add(noise)?
        .hermitian_part())
}

/// Replaces an augmented vector by the nearest `[x; conj(x)]`.
pub fn symmetrize(v: &mut ComplexVector) {
    let l = v.len() / 2;
    for k in 0..l {
        let top = (v[k] + v[l + k].conj()) * 0.5;
        v[k] = top;
        v[l + k] = top.conj();
    }
}

/// `x_i = sum_{k in N_i} c[k, i] x_k`, summed in neighbourhood order. With
/// `augmented` set the mirror structure is restored afterwards.
pub fn diffuse(locals: &[ComplexVector], network: &Network, augmented: bool) -> Vec<ComplexVector> {
    diffuse_with(locals, &network.topology, |k, i| network.weights.weight(k, i), augmented)
}

pub(crate) fn diffuse_with(
    locals: &[ComplexVector],
    topology: &Topology,
    weight: impl Fn(usize, usize) -> f64,
    augmented: bool,
) -> Vec<ComplexVector> {
    (0..locals.len())
        .map(|i| {
            let len = locals[i].len();
            let mut acc = vec![ZERO; len];
            for &k in topology.neighborhood(i).expect("node in range") {
                let c = weight(k, i);
                for (a, x) in acc.iter_mut().zip(locals[k].iter()) {
                    *a += x * c;
                }
            }
            let mut out = ComplexVector::new(acc).expect("finite weighted sum");
            if augmented {
                symmetrize(&mut out);
            }
            out
        })
        .collect()
}

/// Writes the local updates into `states` after diffusion.
pub(crate) fn finish_step(
    states: &mut [NodeFilterState],
    locals: Vec<LocalUpdate>,
    network: &Network,
    augmented: bool,
) {
    let estimates: Vec<ComplexVector> = locals.iter().map(|u| u.estimate.clone()).collect();
    let diffused = diffuse(&estimates, network, augmented);
    for ((state, local), x) in states.iter_mut().zip(locals).zip(diffused) {
        state.estimate = x;
        state.covariance = local.covariance;
    }
}

pub(crate) fn solve_error(step: usize, node: usize) -> impl FnOnce(LinalgError) -> FilterError {
    move |source| FilterError::Solve { step, node, source }
}

/// Model driving [`run_filter`].
#[derive(Clone, Copy)]
pub enum FilterModel<'a> {
    Linear(&'a dyn ModelSchedule),
    Nonlinear(&'a dyn NonlinearModel),
}

/// Per-step, per-node estimates recorded by [`run_filter`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    /// `estimates[n][i]` is the diffused estimate of node `i` after step `n`,
    /// in the filter's native (augmented or strict) form.
    pub estimates: Vec<Vec<ComplexVector>>,
}

pub fn filter_step(
    kind: FilterKind,
    states: &mut [NodeFilterState],
    model: FilterModel<'_>,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    match (kind, model) {
        (FilterKind::Dckf, FilterModel::Linear(m)) => {
            dckf_step(states, &m.model_at(input.step), network, input)
        }
        (FilterKind::Dackf, FilterModel::Linear(m)) => {
            dackf_step(states, &m.model_at(input.step), network, input)
        }
        (FilterKind::DackfInfo, FilterModel::Linear(m)) => {
            dackf_info_step(states, &m.model_at(input.step), network, input)
        }
        (FilterKind::Dcekf, FilterModel::Nonlinear(m)) => dcekf_step(states, m, network, input),
        (FilterKind::Dacekf, FilterModel::Nonlinear(m)) => dacekf_step(states, m, network, input),
        (FilterKind::Dcekf, FilterModel::Linear(m)) => {
            dcekf_step(states, &*m.model_at(input.step), network, input)
        }
        (FilterKind::Dacekf, FilterModel::Linear(m)) => {
            dacekf_step(states, &*m.model_at(input.step), network, input)
        }
        (kind, FilterModel::Nonlinear(_)) => Err(FilterError::Config(format!("{kind} needs a linear model"))),
    }
}

/// Runs `kind` over `inputs`, returning the final states and the diffused
/// estimates after every step. Errors carry the failing step index.
pub fn run_filter(
    inputs: &[StepInput],
    kind: FilterKind,
    model: FilterModel<'_>,
    network: &Network,
    mut states: Vec<NodeFilterState>,
) -> Result<(Vec<NodeFilterState>, Trajectory), FilterError> {
    if states.len() != network.node_count() {
        return Err(FilterError::Config(format!(
            "{} initial states for {} nodes",
            states.len(),
            network.node_count()
        )));
    }
    let mut trajectory = Trajectory { estimates: Vec::with_capacity(inputs.len()) };
    for input in inputs {
        filter_step(kind, &mut states, model, network, input)?;
        trajectory.estimates.push(states.iter().map(|s| s.estimate.clone()).collect());
    }
    Ok((states, trajectory))
}
