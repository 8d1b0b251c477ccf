use super::{
    finish_step, measurement_update, predict_covariance, solve_error, LocalUpdate, NodeFilterState, StepInput,
};
use crate::error::{FilterError, ModelError};
use crate::model::LinearModel;
use crate::network::{stack_neighborhood, stack_neighborhood_observations, Network};

/// One step of the strictly linear diffusion Kalman filter. The model must
/// have `A = 0` and `B_i = 0`; pseudocovariances are ignored.
pub fn dckf_step(
    states: &mut [NodeFilterState],
    model: &LinearModel,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    let step = input.step;
    input.check(network.node_count())?;
    if !model.is_strictly_linear() {
        return Err(FilterError::Model {
            step,
            node: 0,
            source: ModelError::NotStrictlyLinear("D-CKF requires A = 0 and B = 0"),
        });
    }
    let net_err = |source| FilterError::Network { step, source };
    let mut locals = Vec::with_capacity(states.len());
    for (i, state) in states.iter_mut().enumerate() {
        let predicted = model.transition.mul_vec(&state.estimate).map_err(solve_error(step, i))?;
        let predicted_cov =
            predict_covariance(&model.transition, &state.covariance, &model.noise.state_covariance)
                .map_err(solve_error(step, i))?;

        let stack = stack_neighborhood(
            &network.topology,
            &model.observation,
            &model.conjugate_observation,
            &model.noise.observation,
            i,
        )
        .map_err(net_err)?;
        let (y, _) = stack_neighborhood_observations(&stack.nodes, &input.observations, |k| {
            model.observation[k].rows()
        })
        .map_err(net_err)?;
        let h = &stack.observation.observation;
        let innovation = &y - &h.mul_vec(&predicted).map_err(solve_error(step, i))?;
        let update: LocalUpdate =
            measurement_update(&predicted, &predicted_cov, h, &stack.noise.covariance, &innovation)
                .map_err(solve_error(step, i))?;
        state.predicted_estimate = Some(predicted);
        state.predicted_covariance = Some(predicted_cov);
        locals.push(update);
    }
    finish_step(states, locals, network, false);
    Ok(())
}
