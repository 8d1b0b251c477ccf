use super::{finish_step, measurement_update, predict_covariance, solve_error, NodeFilterState, StepInput};
use crate::error::FilterError;
use crate::model::{augment_pair, LinearModel};
use crate::network::{stack_neighborhood, stack_neighborhood_observations, Network};

/// One step of the augmented diffusion Kalman filter.
pub fn dackf_step(
    states: &mut [NodeFilterState],
    model: &LinearModel,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    let step = input.step;
    input.check(network.node_count())?;
    let net_err = |source| FilterError::Network { step, source };
    let transition = augment_pair(&model.transition, &model.conjugate_transition);
    let state_noise = model.noise.augmented_state_covariance();
    let mut locals = Vec::with_capacity(states.len());
    for (i, state) in states.iter_mut().enumerate() {
        let predicted = transition.mul_vec(&state.estimate).map_err(solve_error(step, i))?;
        let predicted_cov =
            predict_covariance(&transition, &state.covariance, &state_noise).map_err(solve_error(step, i))?;

        let stack = stack_neighborhood(
            &network.topology,
            &model.observation,
            &model.conjugate_observation,
            &model.noise.observation,
            i,
        )
        .map_err(net_err)?;
        let (_, y) = stack_neighborhood_observations(&stack.nodes, &input.observations, |k| {
            model.observation[k].rows()
        })
        .map_err(net_err)?;
        let h = &stack.observation.augmented;
        let innovation = &y - &h.mul_vec(&predicted).map_err(solve_error(step, i))?;
        let update = measurement_update(&predicted, &predicted_cov, h, &stack.noise.augmented, &innovation)
            .map_err(solve_error(step, i))?;
        state.predicted_estimate = Some(predicted);
        state.predicted_covariance = Some(predicted_cov);
        locals.push(update);
    }
    finish_step(states, locals, network, true);
    Ok(())
}
