//! Frequency-tracking state-space models and frequency extraction.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{ModelError, SignalError};
use crate::linalg::{Complex, ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::model::{Jacobians, NoiseModel, NonlinearModel};
use crate::network::ObservationNoise;

/// Below this `|g|` the widely linear extraction falls back to the strictly
/// linear formula.
pub const G_EPSILON: f64 = 1e-12;

/// Default start-up frequency of the trackers.
pub const INITIAL_FREQUENCY_HZ: f64 = 50.5;

/// Hilbert moving-average window in samples.
pub const HILBERT_WINDOW: usize = 50;

/// Process noise of the frequency models: `q_coefficient` drives the
/// rotation coefficients (`x`, or `h` and `g`), `q_voltage` the voltage state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcessNoise {
    pub q_coefficient: f64,
    pub q_voltage: f64,
}

impl ProcessNoise {
    pub fn uniform(q: f64) -> Self {
        Self { q_coefficient: q, q_voltage: q }
    }
}

fn diagonal_noise(diag: &[f64], observation: ObservationNoise) -> Result<NoiseModel, ModelError> {
    let l = diag.len();
    let q = ComplexMatrix::from_diagonal(&diag.iter().map(|&d| Complex::new(d, 0.0)).collect::<Vec<_>>());
    NoiseModel::new(q, ComplexMatrix::zeros(l, l), observation)
}

/// State `(x, u)`: `x_n = x_{n-1}`, `u_n = u_{n-1} x_{n-1}`, observation `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlModel {
    noise: NoiseModel,
}

pub fn build_sl_model(process: ProcessNoise, observation: ObservationNoise) -> Result<SlModel, ModelError> {
    check_scalar_observations(&observation)?;
    Ok(SlModel { noise: diagonal_noise(&[process.q_coefficient, process.q_voltage], observation)? })
}

/// State `(h, g, u)`: `h` and `g` constant, `u_n = u_{n-1} h + conj(u_{n-1}) g`,
/// observation `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct WlModel {
    noise: NoiseModel,
}

pub fn build_wl_model(process: ProcessNoise, observation: ObservationNoise) -> Result<WlModel, ModelError> {
    check_scalar_observations(&observation)?;
    Ok(WlModel {
        noise: diagonal_noise(
            &[process.q_coefficient, process.q_coefficient, process.q_voltage],
            observation,
        )?,
    })
}

fn check_scalar_observations(observation: &ObservationNoise) -> Result<(), ModelError> {
    for i in 0..observation.node_count() {
        let shape = observation.covariance(i).shape();
        if shape != (1, 1) {
            return Err(ModelError::Shape { what: format!("R_{i}"), expected: (1, 1), actual: shape });
        }
    }
    Ok(())
}

fn select_last(l: usize) -> Jacobians {
    let mut direct = ComplexMatrix::zeros(1, l);
    direct[(0, l - 1)] = ONE;
    Jacobians { direct, conjugate: ComplexMatrix::zeros(1, l) }
}

fn vector(v: Vec<Complex>) -> ComplexVector {
    ComplexVector::new(v).expect("finite state")
}

impl NonlinearModel for SlModel {
    fn state_dim(&self) -> usize {
        2
    }
    fn node_count(&self) -> usize {
        self.noise.observation.node_count()
    }
    fn observation_dim(&self, _node: usize) -> usize {
        1
    }
    fn transition(&self, s: &ComplexVector) -> ComplexVector {
        vector(vec![s[0], s[1] * s[0]])
    }
    fn transition_jacobians(&self, s: &ComplexVector) -> Jacobians {
        Jacobians {
            direct: ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![s[1], s[0]]]).expect("2x2"),
            conjugate: ComplexMatrix::zeros(2, 2),
        }
    }
    fn observe(&self, _node: usize, s: &ComplexVector) -> ComplexVector {
        vector(vec![s[1]])
    }
    fn observation_jacobians(&self, _node: usize, _s: &ComplexVector) -> Jacobians {
        select_last(2)
    }
    fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

impl NonlinearModel for WlModel {
    fn state_dim(&self) -> usize {
        3
    }
    fn node_count(&self) -> usize {
        self.noise.observation.node_count()
    }
    fn observation_dim(&self, _node: usize) -> usize {
        1
    }
    fn transition(&self, s: &ComplexVector) -> ComplexVector {
        let (h, g, u) = (s[0], s[1], s[2]);
        vector(vec![h, g, u * h + u.conj() * g])
    }
    fn transition_jacobians(&self, s: &ComplexVector) -> Jacobians {
        let (h, g, u) = (s[0], s[1], s[2]);
        let direct =
            ComplexMatrix::from_rows(&[vec![ONE, ZERO, ZERO], vec![ZERO, ONE, ZERO], vec![u, u.conj(), h]])
                .expect("3x3");
        let mut conjugate = ComplexMatrix::zeros(3, 3);
        conjugate[(2, 2)] = g;
        Jacobians { direct, conjugate }
    }
    fn observe(&self, _node: usize, s: &ComplexVector) -> ComplexVector {
        vector(vec![s[2]])
    }
    fn observation_jacobians(&self, _node: usize, _s: &ComplexVector) -> Jacobians {
        select_last(3)
    }
    fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

/// `e^{j 2 pi f T}`.
pub fn rotation(frequency_hz: f64, sampling_interval_s: f64) -> Complex {
    Complex::from_polar(1.0, 2.0 * PI * frequency_hz * sampling_interval_s)
}

/// `(x0, u0)` with `x0` rotating at `f0`.
pub fn sl_initial_state(first_observation: Complex, f0: f64, t: f64) -> ComplexVector {
    vector(vec![rotation(f0, t), first_observation])
}

/// `(h0, g0, u0)` with `h0` rotating at `f0` and `g0 = 0`.
pub fn wl_initial_state(first_observation: Complex, f0: f64, t: f64) -> ComplexVector {
    vector(vec![rotation(f0, t), ZERO, first_observation])
}

pub fn freq_from_sl(x: Complex, t: f64) -> f64 {
    x.im.clamp(-1.0, 1.0).asin() / (2.0 * PI * t)
}

/// Frequency from the widely linear coefficients. A negative radicand is
/// taken through the principal complex square root.
pub fn freq_from_wl(h: Complex, g: Complex, t: f64) -> f64 {
    if g.norm() < G_EPSILON {
        return freq_from_sl(h, t);
    }
    let j = Complex::new(0.0, 1.0);
    let radicand = Complex::new(h.im * h.im - g.norm_sqr(), 0.0);
    let a = (-j * h.im + j * radicand.sqrt()) / g;
    freq_from_sl(h + a * g, t)
}

/// True when the square root in [`freq_from_wl`] has a negative argument.
pub fn wl_radicand_negative(h: Complex, g: Complex) -> bool {
    g.norm() >= G_EPSILON && h.im * h.im < g.norm_sqr()
}

/// Instantaneous frequency of a real signal from the phase of its analytic
/// signal, smoothed by a trailing moving average of `window` samples.
pub fn hilbert_frequency(signal: &[f64], t: f64, window: usize) -> Result<Vec<f64>, SignalError> {
    const MIN: usize = 64;
    let n = signal.len();
    if n < MIN {
        return Err(SignalError::TooShort { required: MIN, actual: n });
    }
    if window == 0 {
        return Err(SignalError::InvalidScenario("smoothing window must be positive".into()));
    }
    let analytic = analytic_signal(signal);
    let mut raw = Vec::with_capacity(n);
    for k in 1..n {
        let d = (analytic[k] * analytic[k - 1].conj()).arg();
        raw.push(d / (2.0 * PI * t));
    }
    raw.insert(0, raw[0]);

    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    for k in 0..n {
        sum += raw[k];
        if k >= window {
            sum -= raw[k - window];
        }
        out.push(sum / (k + 1).min(window) as f64);
    }
    Ok(out)
}

/// Analytic signal by zeroing the negative-frequency half of the spectrum.
pub fn analytic_signal(signal: &[f64]) -> Vec<Complex> {
    let n = signal.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= w / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}
