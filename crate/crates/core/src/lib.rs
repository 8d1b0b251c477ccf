//! Diffusion widely linear Kalman filtering for three-phase grid frequency
//! estimation.
//!
//! The crate is layered: [`linalg`] provides small dense complex matrices,
//! [`model`] the strictly/widely linear and nonlinear state spaces,
//! [`network`] topologies and diffusion weights, [`filters`] the diffusion
//! filters, [`grid`] and [`freq`] the power-system signals and frequency
//! models, and [`harness`] Monte Carlo runs, metrics and CSV export.

pub mod error;
pub mod filters;
pub mod freq;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod network;

pub use error::{FilterError, HarnessError, LinalgError, ModelError, NetworkError, SignalError};
pub use filters::{run_filter, FilterKind, FilterModel, NodeFilterState, StepInput, Trajectory};
pub use grid::{GridEvent, GridScenario, NoiseSpec, PhaseCondition, Realization};
pub use harness::{Algorithm, EstimatorSettings, RunConfig, RunResult};
pub use linalg::{Complex, ComplexMatrix, ComplexVector};
pub use model::{LinearModel, NoiseModel, NonlinearModel};
pub use network::{Network, ObservationNoise, Topology, WeightRule};
