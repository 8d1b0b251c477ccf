use super::{finish_step, measurement_update, predict_covariance, solve_error, NodeFilterState, StepInput};
use crate::error::FilterError;
use crate::linalg::{augment_vector, ComplexMatrix, ComplexVector};
use crate::model::{augment_pair, check_finite, NonlinearModel};
use crate::network::{stack_neighborhood_observations, stack_noise, stack_observation_matrices, Network};

/// One step of the augmented diffusion extended Kalman filter.
pub fn dacekf_step(
    states: &mut [NodeFilterState],
    model: &dyn NonlinearModel,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    extended_step(states, model, network, input, true)
}

/// One step of the strictly linear diffusion extended Kalman filter. Only the
/// holomorphic Jacobians and the noise covariances are used.
pub fn dcekf_step(
    states: &mut [NodeFilterState],
    model: &dyn NonlinearModel,
    network: &Network,
    input: &StepInput,
) -> Result<(), FilterError> {
    extended_step(states, model, network, input, false)
}

fn extended_step(
    states: &mut [NodeFilterState],
    model: &dyn NonlinearModel,
    network: &Network,
    input: &StepInput,
    augmented: bool,
) -> Result<(), FilterError> {
    let step = input.step;
    input.check(network.node_count())?;
    let net_err = |source| FilterError::Network { step, source };
    let noise = model.noise();
    let state_noise =
        if augmented { noise.augmented_state_covariance() } else { noise.state_covariance.clone() };
    let mut locals = Vec::with_capacity(states.len());
    for (i, state) in states.iter_mut().enumerate() {
        let model_err = |source| FilterError::Model { step, node: i, source };
        let previous = state.state(augmented);
        let fj = model.transition_jacobians(&previous);
        check_finite("df/dx", &fj.direct).map_err(model_err)?;
        check_finite("df/dx*", &fj.conjugate).map_err(model_err)?;
        let fx = model.transition(&previous);
        let (transition, predicted) = if augmented {
            (augment_pair(&fj.direct, &fj.conjugate), augment_vector(&fx).into_full())
        } else {
            (fj.direct, fx.clone())
        };
        let predicted_cov =
            predict_covariance(&transition, &state.covariance, &state_noise).map_err(solve_error(step, i))?;

        let nodes = network.topology.neighborhood(i).map_err(net_err)?;
        let mut hs = Vec::with_capacity(nodes.len());
        let mut bs = Vec::with_capacity(nodes.len());
        let mut hx = Vec::with_capacity(nodes.len());
        for &k in nodes {
            let hj = model.observation_jacobians(k, &fx);
            check_finite("dh/dx", &hj.direct).map_err(model_err)?;
            check_finite("dh/dx*", &hj.conjugate).map_err(model_err)?;
            hs.push(hj.direct);
            bs.push(hj.conjugate);
            hx.push(model.observe(k, &fx));
        }
        let (y, y_aug) =
            stack_neighborhood_observations(nodes, &input.observations, |k| model.observation_dim(k))
                .map_err(net_err)?;
        let hx_refs: Vec<&ComplexVector> = hx.iter().collect();
        let h_pred = ComplexVector::concat(&hx_refs).map_err(solve_error(step, i))?;
        let stacked_noise = stack_noise(&noise.observation, nodes).map_err(net_err)?;

        let (h, r, innovation) = if augmented {
            let hs_refs: Vec<&ComplexMatrix> = hs.iter().collect();
            let bs_refs: Vec<&ComplexMatrix> = bs.iter().collect();
            let stacked = stack_observation_matrices(&hs_refs, &bs_refs).map_err(net_err)?;
            let h_pred_aug = augment_vector(&h_pred).into_full();
            (stacked.augmented, stacked_noise.augmented, &y_aug - &h_pred_aug)
        } else {
            let hs_refs: Vec<&ComplexMatrix> = hs.iter().collect();
            let h = ComplexMatrix::vstack(&hs_refs).map_err(solve_error(step, i))?;
            (h, stacked_noise.covariance, &y - &h_pred)
        };
        let update = measurement_update(&predicted, &predicted_cov, &h, &r, &innovation)
            .map_err(solve_error(step, i))?;
        state.predicted_estimate = Some(predicted);
        state.predicted_covariance = Some(predicted_cov);
        locals.push(update);
    }
    finish_step(states, locals, network, augmented);
    Ok(())
}
