//! Synthetic three-phase voltages, the Clarke transform and noise generation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::SignalError;
use crate::linalg::Complex;

/// Mean Clarke-domain power of the nominal balanced 1 p.u. system.
pub const NOMINAL_CLARKE_POWER: f64 = 1.5;

const SQRT_2_3: f64 = 0.816_496_580_927_726;
const SQRT_6_6: f64 = 0.408_248_290_463_863;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreePhaseSample {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ThreePhaseSample {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }
}

impl std::ops::Add for ThreePhaseSample {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }
}

/// Amplitudes (p.u.) and phase offsets (rad) of the three phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseCondition {
    pub va: f64,
    pub vb: f64,
    pub vc: f64,
    pub delta_b: f64,
    pub delta_c: f64,
}

impl PhaseCondition {
    pub fn new(va: f64, vb: f64, vc: f64, delta_b: f64, delta_c: f64) -> Self {
        Self { va, vb, vc, delta_b, delta_c }
    }

    pub fn balanced() -> Self {
        Self::new(1.0, 1.0, 1.0, 0.0, 0.0)
    }

    /// 20% drop on phases b and c with +-10 degree offsets.
    pub fn type_c() -> Self {
        Self::new(1.0, 0.8, 0.8, 10f64.to_radians(), -10f64.to_radians())
    }

    /// 20% drop on phase a, 10% on b and c, +-5 degree offsets.
    pub fn type_d() -> Self {
        Self::new(0.8, 0.9, 0.9, 5f64.to_radians(), -5f64.to_radians())
    }

    /// Coefficients of `v = A e^{j theta} + B e^{-j theta}`.
    pub fn coefficients(&self) -> (Complex, Complex) {
        ab_coefficients(self.va, self.vb, self.vc, self.delta_b, self.delta_c)
    }

    fn validate(&self) -> Result<(), SignalError> {
        let all = [self.va, self.vb, self.vc, self.delta_b, self.delta_c];
        if all.iter().any(|v| !v.is_finite()) || self.va < 0.0 || self.vb < 0.0 || self.vc < 0.0 {
            return Err(SignalError::InvalidScenario(format!(
                "amplitudes must be finite and non-negative: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Change of operating condition from `time_s` onwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridEvent {
    pub time_s: f64,
    pub condition: Option<PhaseCondition>,
    pub frequency_hz: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Circularity {
    Circular,
    /// Ratio of real to imaginary noise power in the Clarke domain.
    Noncircular {
        ratio: f64,
    },
}

/// Random spikes on one uniformly chosen phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeSpec {
    pub probability: f64,
    /// Spike height as a fraction of the nominal peak.
    pub amplitude: f64,
}

impl Default for SpikeSpec {
    fn default() -> Self {
        Self { probability: 0.005, amplitude: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub circularity: Circularity,
    pub spikes: Option<SpikeSpec>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self { snr_db: None, circularity: Circularity::Circular, spikes: None }
    }

    pub fn circular(snr_db: f64) -> Self {
        Self { snr_db: Some(snr_db), ..Self::noiseless() }
    }

    /// Complex Gaussian noise variance `E|z|^2` in the Clarke domain.
    pub fn clarke_variance(&self) -> f64 {
        match self.snr_db {
            Some(snr) => NOMINAL_CLARKE_POWER * 10f64.powf(-snr / 10.0),
            None => 0.0,
        }
    }

    /// Clarke-domain pseudocovariance `E{z^2}` of the Gaussian part.
    pub fn clarke_pseudo(&self) -> f64 {
        match self.circularity {
            Circularity::Circular => 0.0,
            Circularity::Noncircular { ratio } => self.clarke_variance() * (ratio - 1.0) / (ratio + 1.0),
        }
    }

    /// Standard deviations of the (alpha, beta, zero-sequence) components.
    fn component_std(&self) -> [f64; 3] {
        let var = self.clarke_variance();
        match self.circularity {
            Circularity::Circular => [(var / 2.0).sqrt(); 3],
            Circularity::Noncircular { ratio } => {
                [(var * ratio / (1.0 + ratio)).sqrt(), (var / (1.0 + ratio)).sqrt(), (var / 2.0).sqrt()]
            }
        }
    }

    fn validate(&self) -> Result<(), SignalError> {
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(SignalError::InvalidScenario(
                    "SNR must be finite (omit it for a noiseless run)".into(),
                ));
            }
        }
        if let Circularity::Noncircular { ratio } = self.circularity {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(SignalError::InvalidScenario(format!(
                    "noncircularity ratio must be positive, got {ratio}"
                )));
            }
        }
        if let Some(s) = self.spikes {
            if !(0.0..=1.0).contains(&s.probability) || !s.amplitude.is_finite() {
                return Err(SignalError::InvalidScenario(format!("invalid spike spec {s:?}")));
            }
        }
        Ok(())
    }
}

/// Three-phase signal script shared by all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridScenario {
    pub nominal_frequency_hz: f64,
    pub sampling_interval_s: f64,
    pub initial_phase_rad: f64,
    pub samples: usize,
    pub initial_condition: PhaseCondition,
    pub events: Vec<GridEvent>,
    pub node_count: usize,
    /// One entry shared by every node, or one per node.
    pub node_noise: Vec<NoiseSpec>,
    /// Cross-nodal noise correlation in `[0, 1)`.
    pub correlation: f64,
    pub seed: u64,
}

impl Default for GridScenario {
    fn default() -> Self {
        Self {
            nominal_frequency_hz: 50.0,
            sampling_interval_s: 2e-4,
            initial_phase_rad: 0.0,
            samples: 2500,
            initial_condition: PhaseCondition::balanced(),
            events: Vec::new(),
            node_count: 5,
            node_noise: vec![NoiseSpec::noiseless()],
            correlation: 0.0,
            seed: 0,
        }
    }
}

impl GridScenario {
    pub fn duration_s(&self) -> f64 {
        self.samples as f64 * self.sampling_interval_s
    }

    pub fn sample_index(&self, time_s: f64) -> usize {
        (time_s / self.sampling_interval_s).round() as usize
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.sampling_interval_s
    }

    pub fn noise_for(&self, node: usize) -> &NoiseSpec {
        if self.node_noise.len() == 1 {
            &self.node_noise[0]
        } else {
            &self.node_noise[node]
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = |m: String| Err(SignalError::InvalidScenario(m));
        if !(self.sampling_interval_s > 0.0 && self.sampling_interval_s.is_finite()) {
            return bad(format!("sampling interval must be positive, got {}", self.sampling_interval_s));
        }
        if !self.nominal_frequency_hz.is_finite() || !self.initial_phase_rad.is_finite() {
            return bad("frequency and phase must be finite".into());
        }
        if self.samples == 0 {
            return bad("duration must be at least one sample".into());
        }
        if self.node_count == 0 {
            return bad("at least one node is required".into());
        }
        if self.node_noise.len() != 1 && self.node_noise.len() != self.node_count {
            return bad(format!("{} noise specs for {} nodes", self.node_noise.len(), self.node_count));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad(format!("correlation must lie in [0, 1), got {}", self.correlation));
        }
        self.initial_condition.validate()?;
        for e in &self.events {
            if !(e.time_s >= 0.0 && e.time_s < self.duration_s()) {
                return bad(format!("event at {} s outside the run", e.time_s));
            }
            if let Some(c) = e.condition {
                c.validate()?;
            }
            if let Some(f) = e.frequency_hz {
                if !f.is_finite() {
                    return bad("event frequency must be finite".into());
                }
            }
        }
        for spec in &self.node_noise {
            spec.validate()?;
        }
        Ok(())
    }

    /// Frequency, accumulated phase and active condition at every sample.
    pub fn timeline(&self) -> Timeline {
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        let mut next = 0;
        let mut condition = self.initial_condition;
        let mut frequency = self.nominal_frequency_hz;
        let mut out = Timeline {
            theta: Vec::with_capacity(self.samples),
            frequency_hz: Vec::with_capacity(self.samples),
            condition: Vec::with_capacity(self.samples),
        };
        let mut theta = self.initial_phase_rad;
        for n in 0..self.samples {
            while next < events.len() && self.sample_index(events[next].time_s) <= n {
                if let Some(c) = events[next].condition {
                    condition = c;
                }
                if let Some(f) = events[next].frequency_hz {
                    frequency = f;
                }
                next += 1;
            }
            if n > 0 {
                theta += 2.0 * PI * frequency * self.sampling_interval_s;
            }
            out.theta.push(theta);
            out.frequency_hz.push(frequency);
            out.condition.push(condition);
        }
        out
    }

    /// Noise-free phase voltages at sample `n`.
    pub fn clean_sample(&self, timeline: &Timeline, n: usize) -> ThreePhaseSample {
        phase_voltages(&timeline.condition[n], timeline.theta[n])
    }

    /// Every node's noisy samples and Clarke voltages for one Monte Carlo trial.
    pub fn realize(&self, trial: u64) -> Result<Realization, SignalError> {
        self.validate()?;
        let timeline = self.timeline();
        let clean: Vec<ThreePhaseSample> =
            (0..self.samples).map(|n| self.clean_sample(&timeline, n)).collect();
        let mut shared = NoiseStream::new(self.seed, trial, SHARED_NODE, STREAM_GAUSSIAN);
        let shared_draws: Vec<[f64; 3]> = if self.correlation > 0.0 {
            (0..self.samples).map(|_| shared.standard_triple()).collect()
        } else {
            Vec::new()
        };
        let mut phases = Vec::with_capacity(self.node_count);
        let mut clarke_v = Vec::with_capacity(self.node_count);
        for node in 0..self.node_count {
            let mut noise = NodeNoise::new(self, trial, node);
            let samples: Vec<ThreePhaseSample> = clean
                .iter()
                .enumerate()
                .map(|(n, s)| *s + noise.next(shared_draws.get(n).copied()))
                .collect();
            clarke_v.push(samples.iter().map(|&s| clarke(s)).collect());
            phases.push(samples);
        }
        Ok(Realization { timeline, phases, clarke: clarke_v })
    }
}

/// Per-sample frequency, accumulated phase and operating condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    pub theta: Vec<f64>,
    pub frequency_hz: Vec<f64>,
    pub condition: Vec<PhaseCondition>,
}

/// One Monte Carlo draw of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub timeline: Timeline,
    /// `phases[node][n]`
    pub phases: Vec<Vec<ThreePhaseSample>>,
    /// `clarke[node][n]`
    pub clarke: Vec<Vec<Complex>>,
}

pub fn phase_voltages(c: &PhaseCondition, theta: f64) -> ThreePhaseSample {
    ThreePhaseSample::new(
        c.va * theta.cos(),
        c.vb * (theta - 2.0 * PI / 3.0 + c.delta_b).cos(),
        c.vc * (theta + 2.0 * PI / 3.0 + c.delta_c).cos(),
    )
}

/// Noise-free sample `n` of node-independent scenario voltages. Builds the
/// phase track up to `n`; use [`GridScenario::realize`] for whole runs.
pub fn generate(scenario: &GridScenario, n: usize) -> ThreePhaseSample {
    let s = GridScenario {
        samples: n + 1,
        events: scenario.events.iter().copied().filter(|e| scenario.sample_index(e.time_s) <= n).collect(),
        ..scenario.clone()
    };
    let t = s.timeline();
    s.clean_sample(&t, n)
}

/// `v_alpha + j v_beta`.
pub fn clarke(s: ThreePhaseSample) -> Complex {
    let alpha = SQRT_2_3 * (s.a - 0.5 * s.b - 0.5 * s.c);
    let beta = SQRT_2_3 * (3f64.sqrt() / 2.0) * (s.b - s.c);
    Complex::new(alpha, beta)
}

pub fn ab_coefficients(va: f64, vb: f64, vc: f64, delta_b: f64, delta_c: f64) -> (Complex, Complex) {
    let k = SQRT_6_6;
    let a = (Complex::new(va, 0.0) + Complex::from_polar(vb, delta_b) + Complex::from_polar(vc, delta_c)) * k;
    let b = (Complex::new(va, 0.0)
        + Complex::from_polar(vb, -(delta_b + 2.0 * PI / 3.0))
        + Complex::from_polar(vc, -(delta_c - 2.0 * PI / 3.0)))
        * k;
    (a, b)
}

/// Degree of noncircularity `|E{v^2}| / E{|v|^2}` of the window, with the
/// expectations taken over a uniformly distributed phase: `(A, B)` of
/// `v_n = A e^{j theta_n} + B e^{-j theta_n}` are fitted by least squares and
/// the degree is `2|A B| / (|A|^2 + |B|^2)`.
pub fn noncircularity(samples: &[Complex], theta: &[f64]) -> Result<f64, SignalError> {
    const MIN: usize = 100;
    let n = samples.len().min(theta.len());
    if n < MIN {
        return Err(SignalError::TooShort { required: MIN, actual: n });
    }
    // normal equations of the 2-parameter complex least-squares fit
    let (mut g11, mut g12, mut r1, mut r2) =
        (0.0, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
    for k in 0..n {
        let e = Complex::from_polar(1.0, theta[k]);
        g11 += 1.0;
        g12 += e.conj() * e.conj();
        r1 += e.conj() * samples[k];
        r2 += e * samples[k];
    }
    // [[n, g12], [conj(g12), n]] [A; B] = [r1; r2]
    let det = g11 * g11 - g12.norm_sqr();
    if det.abs() <= 1e-12 * g11 * g11 {
        return Err(SignalError::InvalidScenario("phase track does not separate the two tones".into()));
    }
    let a = (r1 * g11 - g12 * r2) / det;
    let b = (r2 * g11 - g12.conj() * r1) / det;
    let power = a.norm_sqr() + b.norm_sqr();
    if power == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * (a * b).norm() / power)
}

const SHARED_NODE: u64 = u64::MAX;
const STREAM_GAUSSIAN: u64 = 1;
const STREAM_SPIKES: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for one (trial, node, stream) combination.
pub fn child_seed(master: u64, trial: u64, node: u64, stream: u64) -> u64 {
    let mut h = splitmix(master);
    for part in [trial, node, stream] {
        h = splitmix(h ^ splitmix(part));
    }
    h
}

struct NoiseStream(ChaCha8Rng);

impl NoiseStream {
    fn new(master: u64, trial: u64, node: u64, stream: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(child_seed(master, trial, node, stream)))
    }

    fn standard_triple(&mut self) -> [f64; 3] {
        [self.0.sample(StandardNormal), self.0.sample(StandardNormal), self.0.sample(StandardNormal)]
    }
}

/// Sequential noise source of one node in one trial.
pub struct NodeNoise {
    spec: NoiseSpec,
    private_weight: f64,
    shared_weight: f64,
    gaussian: NoiseStream,
    spikes: NoiseStream,
}

impl NodeNoise {
    pub fn new(scenario: &GridScenario, trial: u64, node: usize) -> Self {
        Self {
            spec: *scenario.noise_for(node),
            private_weight: (1.0 - scenario.correlation).sqrt(),
            shared_weight: scenario.correlation.sqrt(),
            gaussian: NoiseStream::new(scenario.seed, trial, node as u64, STREAM_GAUSSIAN),
            spikes: NoiseStream::new(scenario.seed, trial, node as u64, STREAM_SPIKES),
        }
    }

    /// Next per-phase noise triple. `shared` is the common standard normal
    /// draw when the scenario is cross-correlated.
    pub fn next(&mut self, shared: Option<[f64; 3]>) -> ThreePhaseSample {
        let mut out = ThreePhaseSample::new(0.0, 0.0, 0.0);
        if self.spec.snr_db.is_some() {
            let mut z = self.gaussian.standard_triple();
            if let Some(s) = shared {
                for k in 0..3 {
                    z[k] = self.private_weight * z[k] + self.shared_weight * s[k];
                }
            }
            out = shape_noise(&self.spec, z);
        }
        if let Some(spike) = self.spec.spikes {
            let rng = &mut self.spikes.0;
            if rng.gen_bool(spike.probability) {
                let height = if rng.gen_bool(0.5) { spike.amplitude } else { -spike.amplitude };
                match rng.gen_range(0..3) {
                    0 => out.a += height,
                    1 => out.b += height,
                    _ => out.c += height,
                }
            }
        }
        out
    }
}

/// Maps standard normal (alpha, beta, zero-sequence) draws to phase noise
/// with the requested Clarke-domain statistics.
fn shape_noise(spec: &NoiseSpec, z: [f64; 3]) -> ThreePhaseSample {
    let [sa, sb, s0] = spec.component_std();
    let (alpha, beta, zero) = (sa * z[0], sb * z[1], s0 * z[2]);
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    // transpose of the orthonormal Clarke matrix with zero-sequence row
    ThreePhaseSample::new(
        SQRT_2_3 * alpha + inv_sqrt3 * zero,
        SQRT_2_3 * (-0.5 * alpha + half_sqrt3 * beta) + inv_sqrt3 * zero,
        SQRT_2_3 * (-0.5 * alpha - half_sqrt3 * beta) + inv_sqrt3 * zero,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn balanced_sample_at_zero_phase() {
        let s = generate(&GridScenario::default(), 0);
        assert!(close(s.a, 1.0, 1e-15));
        assert!(close(s.b, -0.5, 1e-15));
        assert!(close(s.c, -0.5, 1e-15));
    }

    #[test]
    fn zero_amplitudes_give_pure_noise() {
        let scenario = GridScenario {
            initial_condition: PhaseCondition::new(0.0, 0.0, 0.0, 0.0, 0.0),
            node_noise: vec![NoiseSpec::circular(20.0)],
            node_count: 1,
            samples: 200,
            ..GridScenario::default()
        };
        let clean = generate(&scenario, 17);
        assert_eq!(clean, ThreePhaseSample::new(0.0, 0.0, 0.0));
        let r = scenario.realize(0).unwrap();
        assert!(r.clarke[0].iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn type_c_sample_at_zero_phase() {
        let scenario =
            GridScenario { initial_condition: PhaseCondition::type_c(), ..GridScenario::default() };
        let s = generate(&scenario, 0);
        let d = 10f64.to_radians();
        assert!(close(s.a, 1.0, 1e-15));
        assert!(close(s.b, 0.8 * (-2.0 * PI / 3.0 + d).cos(), 1e-15));
        assert!(close(s.c, 0.8 * (2.0 * PI / 3.0 - d).cos(), 1e-15));
    }

    #[test]
    fn clarke_examples() {
        assert_eq!(clarke(ThreePhaseSample::new(0.0, 0.0, 0.0)), Complex::new(0.0, 0.0));
        let v = clarke(ThreePhaseSample::new(1.0, -0.5, -0.5));
        assert!(close(v.re, (2.0f64 / 3.0).sqrt() * 1.5, 1e-15));
        assert!(close(v.im, 0.0, 1e-15));
        assert!(clarke(ThreePhaseSample::new(1.0, 1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn ab_coefficient_examples() {
        let (a, b) = ab_coefficients(1.0, 1.0, 1.0, 0.0, 0.0);
        assert!(b.norm() < 1e-15);
        assert!((a - Complex::new(6f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);

        let (a, b) = ab_coefficients(1.0, 0.8, 0.8, 0.0, 0.0);
        let k = 6f64.sqrt() / 6.0;
        assert!((b - Complex::new(k * 0.2, 0.0)).norm() < 1e-15);
        assert!((a - Complex::new(k * 2.6, 0.0)).norm() < 1e-15);

        // direct evaluation of the e^{-j theta} coefficient
        let (a, b) = ab_coefficients(0.0, 1.0, 1.0, 0.0, 0.0);
        let w = Complex::from_polar(1.0, 2.0 * PI / 3.0);
        let oracle_b = (w.conj() + w) * k;
        assert!((b - oracle_b).norm() < 1e-15);
        assert!(b.norm() > 0.1);
        assert!((a - Complex::new(2.0 * k, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn type_d_coefficients() {
        let (a, b) = PhaseCondition::type_d().coefficients();
        assert!(close(a.re, 1.0587, 1e-4) && close(a.im, 0.0, 1e-12));
        assert!(close(b.re, -0.0949, 1e-4));
    }

    #[test]
    fn timeline_accumulates_phase_across_steps() {
        let scenario = GridScenario {
            samples: 10,
            events: vec![GridEvent { time_s: 1e-3, condition: None, frequency_hz: Some(51.0) }],
            ..GridScenario::default()
        };
        let t = scenario.timeline();
        assert_eq!(t.frequency_hz[4], 50.0);
        assert_eq!(t.frequency_hz[5], 51.0);
        let step = t.theta[6] - t.theta[5];
        assert!(close(step, 2.0 * PI * 51.0 * 2e-4, 1e-14));
        assert!(close(t.theta[5] - t.theta[4], 2.0 * PI * 51.0 * 2e-4, 1e-14));
        assert!(close(t.theta[4] - t.theta[3], 2.0 * PI * 50.0 * 2e-4, 1e-14));
    }

    #[test]
    fn noiseless_realization_has_no_noise() {
        let scenario = GridScenario { samples: 50, ..GridScenario::default() };
        let r = scenario.realize(3).unwrap();
        let t = scenario.timeline();
        for n in 0..50 {
            assert_eq!(r.phases[2][n], scenario.clean_sample(&t, n));
        }
    }

    #[test]
    fn noncircularity_examples() {
        let theta: Vec<f64> = (0..400).map(|n| 2.0 * PI * 50.0 * 2e-4 * n as f64 + 0.3).collect();
        let tone = |a: Complex, b: Complex| -> Vec<Complex> {
            theta
                .iter()
                .map(|&t| a * Complex::from_polar(1.0, t) + b * Complex::from_polar(1.0, -t))
                .collect()
        };
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        assert!(noncircularity(&tone(one, zero), &theta).unwrap() <= 1e-10);
        assert!(noncircularity(&tone(zero, one), &theta).unwrap() <= 1e-10);

        let (a, b) = ab_coefficients(1.0, 0.8, 0.8, 0.0, 0.0);
        let degree = noncircularity(&tone(a, b), &theta).unwrap();
        let oracle = 2.0 * (a * b).norm() / (a.norm_sqr() + b.norm_sqr());
        assert!(close(degree, oracle, 1e-12));
        assert!(degree > 0.0);

        assert!(matches!(
            noncircularity(&tone(one, zero)[..50], &theta[..50]),
            Err(SignalError::TooShort { required: 100, actual: 50 })
        ));
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let bad = GridScenario { correlation: 1.0, ..GridScenario::default() };
        assert!(bad.validate().is_err());
        let bad = GridScenario { sampling_interval_s: 0.0, ..GridScenario::default() };
        assert!(bad.validate().is_err());
        let bad = GridScenario {
            events: vec![GridEvent { time_s: 10.0, condition: None, frequency_hz: None }],
            ..GridScenario::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn child_seeds_differ_per_stream() {
        let a = child_seed(1, 0, 0, STREAM_GAUSSIAN);
        assert_ne!(a, child_seed(1, 0, 0, STREAM_SPIKES));
        assert_ne!(a, child_seed(1, 1, 0, STREAM_GAUSSIAN));
        assert_ne!(a, child_seed(1, 0, 1, STREAM_GAUSSIAN));
        assert_ne!(a, child_seed(2, 0, 0, STREAM_GAUSSIAN));
        assert_eq!(a, child_seed(1, 0, 0, STREAM_GAUSSIAN));
    }
}
