use super::{finish_step, predict_covariance, solve_error, LocalUpdate, NodeFilterState, StepInput};
use crate::error::FilterError;
use crate::linalg::{invert_hermitian, ComplexMatrix, ComplexVector};
use crate::model::{augment_pair, LinearModel};
use crate::network::Network;

/// One step of the information form of the augmented diffusion Kalman filter.
///
/// Only the per-node noise blocks `R^a_k` are used; cross-nodal correlations
/// are ignored.
pub fn dackf_info_step(
    states: &mut [NodeFilterState],
    model: &LinearModel,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    let step = input.step;
    input.check(network.node_count())?;
    let transition = augment_pair(&model.transition, &model.conjugate_transition);
    let state_noise = model.noise.augmented_state_covariance();

    // H_k^aH R_k^a^-1 H_k^a and H_k^aH R_k^a^-1 y_k^a per node
    let mut information = Vec::with_capacity(states.len());
    for k in 0..states.len() {
        let h = augment_pair(&model.observation[k], &model.conjugate_observation[k]);
        let r_inv =
            invert_hermitian(&model.noise.observation.augmented(k)).map_err(solve_error(step, k))?.solution;
        let y = &input.observations[k];
        if y.len() != h.rows() / 2 {
            return Err(FilterError::Network {
                step,
                source: crate::error::NetworkError::ObservationLength {
                    node: k,
                    expected: h.rows() / 2,
                    actual: y.len(),
                },
            });
        }
        let y_aug = crate::linalg::augment_vector(y).into_full();
        let ht_rinv = h.hermitian_transpose().matmul(&r_inv).map_err(solve_error(step, k))?;
        let s = ht_rinv.matmul(&h).map_err(solve_error(step, k))?;
        let r = ht_rinv.mul_vec(&y_aug).map_err(solve_error(step, k))?;
        information.push((s, r));
    }

    let mut locals = Vec::with_capacity(states.len());
    for (i, state) in states.iter_mut().enumerate() {
        let err = solve_error(step, i);
        let predicted = transition.mul_vec(&state.estimate).map_err(solve_error(step, i))?;
        let predicted_cov =
            predict_covariance(&transition, &state.covariance, &state_noise).map_err(solve_error(step, i))?;

        let dim = predicted.len();
        let mut s = ComplexMatrix::zeros(dim, dim);
        let mut r = ComplexVector::zeros(dim);
        for &k in network.topology.neighborhood(i).expect("node in range") {
            s = &s + &information[k].0;
            r = &r + &information[k].1;
        }
        let s = s.hermitian_part();
        let prior_information = invert_hermitian(&predicted_cov).map_err(solve_error(step, i))?.solution;
        let covariance = invert_hermitian(&(&prior_information + &s).hermitian_part())
            .map_err(err)?
            .solution
            .hermitian_part();
        let correction = &r - &(&s * &predicted);
        let estimate = &predicted + &(&covariance * &correction);
        state.predicted_estimate = Some(predicted);
        state.predicted_covariance = Some(predicted_cov);
        locals.push(LocalUpdate { estimate, covariance });
    }
    finish_step(states, locals, network, true);
    Ok(())
}
