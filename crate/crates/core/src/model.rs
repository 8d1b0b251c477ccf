//! Strictly linear, widely linear and nonlinear state-space models.
//!
//! Complex derivatives follow the Wirtinger convention: `d/dx` treats `conj(x)`
//! as a constant and `d/dconj(x)` treats `x` as a constant.

use std::borrow::Cow;

use crate::error::ModelError;
use crate::linalg::{
    augment_covariance, augment_vector, is_positive_semidefinite, Complex, ComplexMatrix, ComplexVector,
};
use crate::network::ObservationNoise;

/// State noise covariance and pseudocovariance plus the observation noise
/// statistics of every node.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub state_covariance: ComplexMatrix,
    pub state_pseudo: ComplexMatrix,
    pub observation: ObservationNoise,
}

impl NoiseModel {
    pub fn new(
        state_covariance: ComplexMatrix,
        state_pseudo: ComplexMatrix,
        observation: ObservationNoise,
    ) -> Result<Self, ModelError> {
        let aug = augment_covariance(&state_covariance, &state_pseudo)?;
        if !is_positive_semidefinite(&aug) {
            return Err(ModelError::NotPsd { what: "augmented state noise covariance".into(), bound: 0.0 });
        }
        Ok(Self { state_covariance, state_pseudo, observation })
    }

    pub fn state_dim(&self) -> usize {
        self.state_covariance.rows()
    }

    pub fn augmented_state_covariance(&self) -> ComplexMatrix {
        augment_covariance(&self.state_covariance, &self.state_pseudo).expect("validated at construction")
    }
}

/// `x_n = F x_{n-1} + A conj(x_{n-1}) + w_n`,
/// `y_{i,n} = H_i x_n + B_i conj(x_n) + v_{i,n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub transition: ComplexMatrix,
    pub conjugate_transition: ComplexMatrix,
    pub observation: Vec<ComplexMatrix>,
    pub conjugate_observation: Vec<ComplexMatrix>,
    pub noise: NoiseModel,
}

fn check_shape(
    what: impl Into<String>,
    m: &ComplexMatrix,
    expected: (usize, usize),
) -> Result<(), ModelError> {
    if m.shape() != expected {
        return Err(ModelError::Shape { what: what.into(), expected, actual: m.shape() });
    }
    Ok(())
}

impl LinearModel {
    pub fn new(
        transition: ComplexMatrix,
        conjugate_transition: ComplexMatrix,
        observation: Vec<ComplexMatrix>,
        conjugate_observation: Vec<ComplexMatrix>,
        noise: NoiseModel,
    ) -> Result<Self, ModelError> {
        let l = transition.rows();
        check_shape("F", &transition, (l, l))?;
        check_shape("A", &conjugate_transition, (l, l))?;
        check_shape("Q", &noise.state_covariance, (l, l))?;
        if observation.len() != noise.observation.node_count()
            || conjugate_observation.len() != observation.len()
        {
            return Err(ModelError::Shape {
                what: "per-node observation models".into(),
                expected: (noise.observation.node_count(), 1),
                actual: (observation.len(), conjugate_observation.len()),
            });
        }
        for (i, (h, b)) in observation.iter().zip(&conjugate_observation).enumerate() {
            let k = noise.observation.covariance(i).rows();
            check_shape(format!("H_{i}"), h, (k, l))?;
            check_shape(format!("B_{i}"), b, (k, l))?;
        }
        Ok(Self { transition, conjugate_transition, observation, conjugate_observation, noise })
    }

    /// Model with `A = 0` and `B_i = 0`.
    pub fn strictly_linear(
        transition: ComplexMatrix,
        observation: Vec<ComplexMatrix>,
        noise: NoiseModel,
    ) -> Result<Self, ModelError> {
        let l = transition.rows();
        let conj_obs = observation.iter().map(|h| ComplexMatrix::zeros(h.rows(), h.cols())).collect();
        Self::new(transition, ComplexMatrix::zeros(l, l), observation, conj_obs, noise)
    }

    pub fn state_dim(&self) -> usize {
        self.transition.rows()
    }

    pub fn node_count(&self) -> usize {
        self.observation.len()
    }

    pub fn is_strictly_linear(&self) -> bool {
        self.conjugate_transition.is_zero() && self.conjugate_observation.iter().all(ComplexMatrix::is_zero)
    }
}

/// Source of the (possibly time-varying) linear model used at each step.
pub trait ModelSchedule {
    fn model_at(&self, step: usize) -> Cow<'_, LinearModel>;
}

impl ModelSchedule for LinearModel {
    fn model_at(&self, _step: usize) -> Cow<'_, LinearModel> {
        Cow::Borrowed(self)
    }
}

/// Time-varying model given as a function of the step index.
pub struct FnSchedule<F>(pub F);

impl<F: Fn(usize) -> LinearModel> ModelSchedule for FnSchedule<F> {
    fn model_at(&self, step: usize) -> Cow<'_, LinearModel> {
        Cow::Owned((self.0)(step))
    }
}

/// Augmented (`2L`-dimensional) form of a [`LinearModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedModel {
    pub transition: ComplexMatrix,
    pub observation: Vec<ComplexMatrix>,
    pub state_noise: ComplexMatrix,
    pub observation_noise: Vec<ComplexMatrix>,
}

/// `[[M, N], [conj(N), conj(M)]]`.
pub fn augment_pair(m: &ComplexMatrix, n: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_quadrants(m, n, &n.conjugate(), &m.conjugate()).expect("paired blocks share a shape")
}

pub fn augment_model(model: &LinearModel) -> Result<AugmentedModel, ModelError> {
    let state_noise = model.noise.augmented_state_covariance();
    if !is_positive_semidefinite(&state_noise) {
        return Err(ModelError::NotPsd { what: "Q^a".into(), bound: 0.0 });
    }
    let observation_noise: Vec<_> =
        (0..model.node_count()).map(|i| model.noise.observation.augmented(i)).collect();
    for (i, r) in observation_noise.iter().enumerate() {
        if !is_positive_semidefinite(r) {
            return Err(ModelError::NotPsd { what: format!("R^a_{i}"), bound: 0.0 });
        }
    }
    Ok(AugmentedModel {
        transition: augment_pair(&model.transition, &model.conjugate_transition),
        observation: model
            .observation
            .iter()
            .zip(&model.conjugate_observation)
            .map(|(h, b)| augment_pair(h, b))
            .collect(),
        state_noise,
        observation_noise,
    })
}

/// Wirtinger Jacobian pair of a map `C^n -> C^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobians {
    /// `d f / d x`
    pub direct: ComplexMatrix,
    /// `d f / d conj(x)`
    pub conjugate: ComplexMatrix,
}

/// `x_n = f[x_{n-1}] + w_n`, `y_{i,n} = h_i[x_n] + v_{i,n}` with analytic
/// Wirtinger Jacobians.
pub trait NonlinearModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn node_count(&self) -> usize;
    fn observation_dim(&self, node: usize) -> usize;
    fn transition(&self, x: &ComplexVector) -> ComplexVector;
    fn transition_jacobians(&self, x: &ComplexVector) -> Jacobians;
    fn observe(&self, node: usize, x: &ComplexVector) -> ComplexVector;
    fn observation_jacobians(&self, node: usize, x: &ComplexVector) -> Jacobians;
    fn noise(&self) -> &NoiseModel;
}

impl NonlinearModel for LinearModel {
    fn state_dim(&self) -> usize {
        LinearModel::state_dim(self)
    }

    fn node_count(&self) -> usize {
        LinearModel::node_count(self)
    }

    fn observation_dim(&self, node: usize) -> usize {
        self.observation[node].rows()
    }

    fn transition(&self, x: &ComplexVector) -> ComplexVector {
        &(&self.transition * x) + &(&self.conjugate_transition * &x.conjugate())
    }

    fn transition_jacobians(&self, _x: &ComplexVector) -> Jacobians {
        Jacobians { direct: self.transition.clone(), conjugate: self.conjugate_transition.clone() }
    }

    fn observe(&self, node: usize, x: &ComplexVector) -> ComplexVector {
        &(&self.observation[node] * x) + &(&self.conjugate_observation[node] * &x.conjugate())
    }

    fn observation_jacobians(&self, node: usize, _x: &ComplexVector) -> Jacobians {
        Jacobians {
            direct: self.observation[node].clone(),
            conjugate: self.conjugate_observation[node].clone(),
        }
    }

    fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

type VecFn = Box<dyn Fn(&ComplexVector) -> ComplexVector + Send + Sync>;
type JacFn = Box<dyn Fn(&ComplexVector) -> Jacobians + Send + Sync>;

/// Nonlinear model assembled from closures; one observation function shared
/// by every node.
pub struct ClosureModel {
    state_dim: usize,
    observation_dim: usize,
    node_count: usize,
    f: VecFn,
    f_jac: JacFn,
    h: VecFn,
    h_jac: JacFn,
    noise: NoiseModel,
}

impl ClosureModel {
    pub fn new(
        noise: NoiseModel,
        observation_dim: usize,
        f: impl Fn(&ComplexVector) -> ComplexVector + Send + Sync + 'static,
        f_jac: impl Fn(&ComplexVector) -> Jacobians + Send + Sync + 'static,
        h: impl Fn(&ComplexVector) -> ComplexVector + Send + Sync + 'static,
        h_jac: impl Fn(&ComplexVector) -> Jacobians + Send + Sync + 'static,
    ) -> Self {
        Self {
            state_dim: noise.state_dim(),
            observation_dim,
            node_count: noise.observation.node_count(),
            noise,
            f: Box::new(f),
            f_jac: Box::new(f_jac),
            h: Box::new(h),
            h_jac: Box::new(h_jac),
        }
    }
}

impl NonlinearModel for ClosureModel {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn node_count(&self) -> usize {
        self.node_count
    }
    fn observation_dim(&self, _node: usize) -> usize {
        self.observation_dim
    }
    fn transition(&self, x: &ComplexVector) -> ComplexVector {
        (self.f)(x)
    }
    fn transition_jacobians(&self, x: &ComplexVector) -> Jacobians {
        (self.f_jac)(x)
    }
    fn observe(&self, _node: usize, x: &ComplexVector) -> ComplexVector {
        (self.h)(x)
    }
    fn observation_jacobians(&self, _node: usize, x: &ComplexVector) -> Jacobians {
        (self.h_jac)(x)
    }
    fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

/// First-order expansion of a nonlinear model around the current estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    /// `[[F, A], [conj(A), conj(F)]]` at the previous estimate.
    pub transition: ComplexMatrix,
    /// `[[H, B], [conj(B), conj(H)]]` at the predicted estimate.
    pub observation: ComplexMatrix,
    /// `f[x] - F x - A conj(x)`
    pub state_offset: ComplexVector,
    /// `h[x] - H x - B conj(x)`
    pub observation_offset: ComplexVector,
}

impl Linearization {
    pub fn augmented_state_offset(&self) -> ComplexVector {
        augment_vector(&self.state_offset).into_full()
    }

    pub fn augmented_observation_offset(&self) -> ComplexVector {
        augment_vector(&self.observation_offset).into_full()
    }
}

pub(crate) fn check_finite(partial: &'static str, m: &ComplexMatrix) -> Result<(), ModelError> {
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(ModelError::NonFiniteJacobian { partial, row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn linearize(
    model: &dyn NonlinearModel,
    previous_estimate: &ComplexVector,
    predicted_estimate: &ComplexVector,
    node: usize,
) -> Result<Linearization, ModelError> {
    if node >= model.node_count() {
        return Err(ModelError::UnknownNode { node });
    }
    let fj = model.transition_jacobians(previous_estimate);
    check_finite("df/dx", &fj.direct)?;
    check_finite("df/dx*", &fj.conjugate)?;
    let hj = model.observation_jacobians(node, predicted_estimate);
    check_finite("dh/dx", &hj.direct)?;
    check_finite("dh/dx*", &hj.conjugate)?;

    let state_offset = &(&model.transition(previous_estimate) - &(&fj.direct * previous_estimate))
        - &(&fj.conjugate * &previous_estimate.conjugate());
    let observation_offset = &(&model.observe(node, predicted_estimate) - &(&hj.direct * predicted_estimate))
        - &(&hj.conjugate * &predicted_estimate.conjugate());
    Ok(Linearization {
        transition: augment_pair(&fj.direct, &fj.conjugate),
        observation: augment_pair(&hj.direct, &hj.conjugate),
        state_offset,
        observation_offset,
    })
}

/// Finite-difference step used by [`jacobian_check`].
pub const FD_STEP: f64 = 1e-6;

/// Central-difference Wirtinger Jacobians of `g` at `x`.
pub fn finite_difference_jacobians(
    g: impl Fn(&ComplexVector) -> ComplexVector,
    x: &ComplexVector,
    step: f64,
) -> Jacobians {
    let n = x.len();
    let m = g(x).len();
    let mut direct = ComplexMatrix::zeros(m, n);
    let mut conjugate = ComplexMatrix::zeros(m, n);
    let half = Complex::new(0.5, 0.0);
    let j = Complex::new(0.0, 1.0);
    for k in 0..n {
        let perturbed = |delta: Complex| {
            let mut y = x.clone();
            y[k] += delta;
            g(&y)
        };
        let d_re = (&perturbed(Complex::new(step, 0.0)) - &perturbed(Complex::new(-step, 0.0)))
            .scale(Complex::new(0.5 / step, 0.0));
        let d_im = (&perturbed(Complex::new(0.0, step)) - &perturbed(Complex::new(0.0, -step)))
            .scale(Complex::new(0.5 / step, 0.0));
        for r in 0..m {
            direct[(r, k)] = half * (d_re[r] - j * d_im[r]);
            conjugate[(r, k)] = half * (d_re[r] + j * d_im[r]);
        }
    }
    Jacobians { direct, conjugate }
}

fn deviation(analytic: &ComplexMatrix, numeric: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..analytic.rows() {
        for c in 0..analytic.cols() {
            let diff = (analytic[(r, c)] - numeric[(r, c)]).norm();
            worst = worst.max(diff / numeric[(r, c)].norm().max(1.0));
        }
    }
    worst
}

/// Largest deviation between the analytic Jacobians of `f` and every `h_i`
/// and their central finite differences at `x`. Entries are compared
/// absolutely below unit magnitude and relatively above it.
pub fn jacobian_check(model: &dyn NonlinearModel, x: &ComplexVector) -> f64 {
    let fa = model.transition_jacobians(x);
    let fd = finite_difference_jacobians(|v| model.transition(v), x, FD_STEP);
    let mut worst = deviation(&fa.direct, &fd.direct).max(deviation(&fa.conjugate, &fd.conjugate));
    for node in 0..model.node_count() {
        let ha = model.observation_jacobians(node, x);
        let hd = finite_difference_jacobians(|v| model.observe(node, v), x, FD_STEP);
        worst = worst.max(deviation(&ha.direct, &hd.direct)).max(deviation(&ha.conjugate, &hd.conjugate));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn scalar_noise(q: f64, p: f64) -> NoiseModel {
        NoiseModel::new(
            ComplexMatrix::scalar(c(q, 0.0)),
            ComplexMatrix::scalar(c(p, 0.0)),
            ObservationNoise::uniform(1, ComplexMatrix::scalar(ONE), ComplexMatrix::scalar(ZERO)).unwrap(),
        )
        .unwrap()
    }

    fn scalar_model(f: Complex, a: Complex, q: f64, p: f64) -> LinearModel {
        LinearModel::new(
            ComplexMatrix::scalar(f),
            ComplexMatrix::scalar(a),
            vec![ComplexMatrix::scalar(ONE)],
            vec![ComplexMatrix::scalar(ZERO)],
            scalar_noise(q, p),
        )
        .unwrap()
    }

    #[test]
    fn augment_model_examples() {
        let cval = c(0.3, -0.7);
        let aug = augment_model(&scalar_model(cval, ZERO, 1.0, 0.0)).unwrap();
        assert_eq!(
            aug.transition,
            ComplexMatrix::from_rows(&[vec![cval, ZERO], vec![ZERO, cval.conj()]]).unwrap()
        );

        let aug = augment_model(&scalar_model(ZERO, ONE, 1.0, 0.0)).unwrap();
        assert_eq!(aug.transition, ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap());

        let aug = augment_model(&scalar_model(ONE, ZERO, 1.0, 0.5)).unwrap();
        assert_eq!(aug.state_noise, ComplexMatrix::from_real_rows(&[&[1.0, 0.5], &[0.5, 1.0]]).unwrap());
    }

    #[test]
    fn improper_state_noise_beyond_psd_is_rejected() {
        let err = NoiseModel::new(
            ComplexMatrix::scalar(ONE),
            ComplexMatrix::scalar(c(2.0, 0.0)),
            ObservationNoise::uniform(1, ComplexMatrix::scalar(ONE), ComplexMatrix::scalar(ZERO)).unwrap(),
        );
        assert!(matches!(err, Err(ModelError::NotPsd { .. })));
    }

    #[test]
    fn augmentation_blocks_round_trip() {
        let f = ComplexMatrix::from_rows(&[vec![c(1.0, 0.5), c(0.0, -1.0)], vec![c(2.0, 0.0), c(0.1, 0.1)]])
            .unwrap();
        let a =
            ComplexMatrix::from_rows(&[vec![c(0.2, 0.0), c(0.0, 0.3)], vec![ZERO, c(-0.4, 0.4)]]).unwrap();
        let aug = augment_pair(&f, &a);
        assert_eq!(aug.block(0, 0, 2, 2), f);
        assert_eq!(aug.block(0, 2, 2, 2), a);
        assert_eq!(aug.block(2, 0, 2, 2), a.conjugate());
        assert_eq!(aug.block(2, 2, 2, 2), f.conjugate());
    }

    #[test]
    fn shape_errors_are_reported() {
        let err = LinearModel::new(
            ComplexMatrix::identity(2),
            ComplexMatrix::zeros(2, 2),
            vec![ComplexMatrix::identity(1)],
            vec![ComplexMatrix::zeros(1, 1)],
            NoiseModel::new(
                ComplexMatrix::identity(2),
                ComplexMatrix::zeros(2, 2),
                ObservationNoise::uniform(1, ComplexMatrix::scalar(ONE), ComplexMatrix::scalar(ZERO))
                    .unwrap(),
            )
            .unwrap(),
        );
        assert!(matches!(err, Err(ModelError::Shape { .. })));
    }

    #[test]
    fn linear_model_linearizes_to_itself() {
        let m = scalar_model(c(0.9, 0.1), ZERO, 1.0, 0.0);
        let x = ComplexVector::new(vec![c(1.3, -2.0)]).unwrap();
        let lin = linearize(&m, &x, &x, 0).unwrap();
        assert_eq!(lin.transition.block(0, 1, 1, 1), ComplexMatrix::scalar(ZERO));
        assert!(lin.state_offset.max_abs() < 1e-15);
        assert!(lin.observation_offset.max_abs() < 1e-15);
        assert!(jacobian_check(&m, &x) <= 1e-8);
    }

    #[test]
    fn conjugation_map_has_pure_conjugate_jacobian() {
        let m = ClosureModel::new(
            scalar_noise(1.0, 0.0),
            1,
            |x| x.conjugate(),
            |_| Jacobians { direct: ComplexMatrix::scalar(ZERO), conjugate: ComplexMatrix::scalar(ONE) },
            |x| x.clone(),
            |_| Jacobians { direct: ComplexMatrix::scalar(ONE), conjugate: ComplexMatrix::scalar(ZERO) },
        );
        let x = ComplexVector::new(vec![c(0.4, 0.8)]).unwrap();
        let fd = finite_difference_jacobians(|v| m.transition(v), &x, FD_STEP);
        assert!(fd.direct[(0, 0)].norm() < 1e-9);
        assert!((fd.conjugate[(0, 0)] - ONE).norm() < 1e-9);
        let lin = linearize(&m, &x, &x, 0).unwrap();
        assert!(lin.state_offset.max_abs() < 1e-15);
    }

    #[test]
    fn square_map_derivatives() {
        let m = ClosureModel::new(
            scalar_noise(1.0, 0.0),
            1,
            |x| ComplexVector::new(vec![x[0] * x[0]]).unwrap(),
            |x| Jacobians {
                direct: ComplexMatrix::scalar(x[0] * 2.0),
                conjugate: ComplexMatrix::scalar(ZERO),
            },
            |x| x.clone(),
            |_| Jacobians { direct: ComplexMatrix::scalar(ONE), conjugate: ComplexMatrix::scalar(ZERO) },
        );
        let x = ComplexVector::new(vec![c(1.0, 1.0)]).unwrap();
        let fd = finite_difference_jacobians(|v| m.transition(v), &x, FD_STEP);
        assert!((fd.direct[(0, 0)] - c(2.0, 2.0)).norm() < 1e-6);
        assert!(fd.conjugate[(0, 0)].norm() < 1e-6);
        assert!(jacobian_check(&m, &x) < 1e-6);
        // offset of x^2 around x0 is -x0^2
        let lin = linearize(&m, &x, &x, 0).unwrap();
        assert!((lin.state_offset[0] + x[0] * x[0]).norm() < 1e-12);
    }

    #[test]
    fn non_finite_jacobian_is_named() {
        let m = ClosureModel::new(
            scalar_noise(1.0, 0.0),
            1,
            |x| x.clone(),
            |_| Jacobians { direct: ComplexMatrix::scalar(ONE), conjugate: ComplexMatrix::scalar(ZERO) },
            |x| x.clone(),
            |_| Jacobians {
                direct: ComplexMatrix::scalar(ONE),
                // bypasses the constructor check on purpose
                conjugate: ComplexMatrix::scalar(ONE).scale(c(f64::NAN, 0.0)),
            },
        );
        let x = ComplexVector::new(vec![ONE]).unwrap();
        assert_eq!(
            linearize(&m, &x, &x, 0),
            Err(ModelError::NonFiniteJacobian { partial: "dh/dx*", row: 0, col: 0 })
        );
    }

    #[test]
    fn strict_linearity_flag() {
        assert!(scalar_model(ONE, ZERO, 1.0, 0.0).is_strictly_linear());
        assert!(!scalar_model(ONE, ONE, 1.0, 0.0).is_strictly_linear());
    }
}
