//! Synthetic ground truth and observed data.
//!
//! The generator burns the model in to its attractor from fractional
//! initial conditions, restarts the clock at zero, and walks the horizon
//! month by month: the incidence accumulator is reset at each interval
//! start, the chosen observation operator is read at the interval end, and
//! the result is corrupted with the noise model. Dense state samples are
//! kept for plotting; the samples at observation times feed the error
//! scores.

use crate::dynamics::{
    self, burn_in, BetaSource, DynamicsError, EpidemicState, ModelParams, Tolerances,
};
use crate::observation::{corrupt, observe, NoiseModel, ObservationCase, ObservationError};
use crate::rng::{RngFactory, StreamDomain};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MONTHS_PER_YEAR: usize = 12;
/// Dense truth sampling density used for plotting.
pub const SAMPLES_PER_MONTH: usize = 10;

/// How the pre-data burn-in is initialized and bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnInSpec {
    pub init_fraction_s: f64,
    pub init_fraction_i: f64,
    pub max_years: usize,
}

impl Default for BurnInSpec {
    fn default() -> Self {
        Self {
            init_fraction_s: 0.95,
            init_fraction_i: 0.02,
            max_years: 200,
        }
    }
}

/// Dense ground-truth trajectory samples (including all observation times).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthStates {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    /// Truth at the observation times only, aligned with `observations`.
    pub s_at_obs: Vec<f64>,
    pub i_at_obs: Vec<f64>,
}

/// A generated data set: observation times and noisy observations plus the
/// full ground truth and provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    /// Observation times in years, uniform monthly spacing.
    pub times: Vec<f64>,
    /// Noisy observations (cases).
    pub observations: Vec<f64>,
    /// Dense ground-truth trajectory.
    pub truth_states: TruthStates,
    /// True accumulated incidence per observation interval (not scaled by
    /// the reporting probability).
    pub truth_monthly_cases: Vec<f64>,
    /// Truth state at the restart time t = 0 (end of burn-in).
    pub initial_state: EpidemicState,
    pub gen_case: ObservationCase,
    pub noise: NoiseModel,
    pub params: ModelParams,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn n_obs(&self) -> usize {
        self.times.len()
    }

    /// Check the uniform monthly grid invariant.
    pub fn validate_grid(&self) -> Result<(), SynthesisError> {
        let m = self.times.len();
        if m == 0 || self.observations.len() != m || self.truth_monthly_cases.len() != m {
            return Err(SynthesisError::Invalid(
                "times, observations and truth_monthly_cases must be non-empty and aligned".into(),
            ));
        }
        let dt = 1.0 / MONTHS_PER_YEAR as f64;
        for (j, t) in self.times.iter().enumerate() {
            if (t - (j + 1) as f64 * dt).abs() > 1e-9 {
                return Err(SynthesisError::Invalid(format!(
                    "observation {j} at t = {t} is off the monthly grid"
                )));
            }
        }
        Ok(())
    }
}

/// Everything `generate_dataset` needs, serializable for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_gen_case")]
    pub gen_case: ObservationCase,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    #[serde(default = "default_horizon")]
    pub horizon_years: usize,
    #[serde(default)]
    pub burn_in: BurnInSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_gen_case() -> ObservationCase {
    ObservationCase::UnderReportedIncidence
}

fn default_noise() -> NoiseModel {
    NoiseModel::Additive { sigma: 0.1 }
}

fn default_horizon() -> usize {
    10
}

impl Default for GenerationSpec {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            gen_case: default_gen_case(),
            noise: default_noise(),
            horizon_years: default_horizon(),
            burn_in: BurnInSpec::default(),
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Generate a synthetic data set per `spec`.
pub fn generate_dataset(spec: &GenerationSpec) -> Result<SyntheticDataset, SynthesisError> {
    spec.params.validate()?;
    spec.noise.validate()?;
    if spec.horizon_years == 0 {
        return Err(SynthesisError::Invalid("horizon_years must be >= 1".into()));
    }

    let initial = burn_in(
        &spec.params,
        spec.burn_in.init_fraction_s,
        spec.burn_in.init_fraction_i,
        spec.burn_in.max_years,
        &spec.tolerances,
    )?;

    let factory = RngFactory::new(spec.seed);
    let n_obs = spec.horizon_years * MONTHS_PER_YEAR;
    let dt = 1.0 / MONTHS_PER_YEAR as f64;
    let sample_dt = dt / SAMPLES_PER_MONTH as f64;

    let mut times = Vec::with_capacity(n_obs);
    let mut observations = Vec::with_capacity(n_obs);
    let mut monthly_cases = Vec::with_capacity(n_obs);
    let mut truth = TruthStates {
        times: Vec::with_capacity(n_obs * SAMPLES_PER_MONTH + 1),
        s: Vec::new(),
        i: Vec::new(),
        s_at_obs: Vec::with_capacity(n_obs),
        i_at_obs: Vec::with_capacity(n_obs),
    };
    truth.times.push(0.0);
    truth.s.push(initial.s);
    truth.i.push(initial.i);

    let mut state = initial;
    for j in 1..=n_obs {
        let t_start = (j - 1) as f64 * dt;
        state = dynamics::reset_incidence(&state);
        for k in 1..=SAMPLES_PER_MONTH {
            let t0 = t_start + (k - 1) as f64 * sample_dt;
            let t1 = t_start + k as f64 * sample_dt;
            state = dynamics::integrate(
                &state,
                &spec.params,
                t0,
                t1,
                BetaSource::Seasonal,
                &spec.tolerances,
            )?;
            truth.times.push(t1);
            truth.s.push(state.s);
            truth.i.push(state.i);
        }
        let t_obs = j as f64 * dt;
        let expected = observe(spec.gen_case, &state, &spec.params)?;
        let mut rng = factory.stream(StreamDomain::DataNoise, j as u64, 0);
        let datum = corrupt(expected, &spec.noise, &mut rng)?;

        times.push(t_obs);
        observations.push(datum);
        monthly_cases.push(state.c);
        truth.s_at_obs.push(state.s);
        truth.i_at_obs.push(state.i);
    }

    Ok(SyntheticDataset {
        times,
        observations,
        truth_states: truth,
        truth_monthly_cases: monthly_cases,
        initial_state: initial,
        gen_case: spec.gen_case,
        noise: spec.noise,
        params: spec.params,
        seed: spec.seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisError {
    Invalid(String),
    Dynamics(DynamicsError),
    Observation(ObservationError),
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::Invalid(msg) => write!(f, "invalid generation spec: {msg}"),
            SynthesisError::Dynamics(e) => write!(f, "{e}"),
            SynthesisError::Observation(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SynthesisError {}

impl From<DynamicsError> for SynthesisError {
    fn from(e: DynamicsError) -> Self {
        SynthesisError::Dynamics(e)
    }
}

impl From<ObservationError> for SynthesisError {
    fn from(e: ObservationError) -> Self {
        SynthesisError::Observation(e)
    }
}
