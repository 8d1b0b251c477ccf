//! Shared fixtures for the benchmarks in `benches/`.

use wlgrid_core::grid::{NoiseSpec, PhaseCondition, Realization};
use wlgrid_core::{GridScenario, Network, Topology, WeightRule};

/// Five-node Type D scenario at `snr_db`, one realization.
pub fn grid_fixture(samples: usize, snr_db: f64) -> (GridScenario, Realization, Network) {
    let scenario = GridScenario {
        samples,
        initial_condition: PhaseCondition::type_d(),
        node_noise: vec![NoiseSpec::circular(snr_db)],
        seed: 1,
        ..GridScenario::default()
    };
    let realization = scenario.realize(0).expect("valid scenario");
    let network = Network::new(Topology::default_five_node(), WeightRule::Uniform);
    (scenario, realization, network)
}
