//! Observation operators mapping epidemic states to expected case counts,
//! plus the noise models used to corrupt them.
//!
//! Four operators cover the data-collection assumptions met in practice:
//! direct prevalence counts, under-reported prevalence, per-interval
//! incidence, and under-reported incidence. The incidence operators read
//! the state's accumulator, which must have been reset at the start of the
//! reporting interval.

use crate::dynamics::{EpidemicState, ModelParams};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The four observation operators.
///
/// Numbering follows the usual progression from the simplest assumption to
/// the most detailed: prevalence, under-reported prevalence, incidence,
/// under-reported incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservationCase {
    /// Case 1: direct measurement of the infectious population `I(t_j)`.
    Prevalence,
    /// Case 2: `rho I(t_j)`.
    UnderReportedPrevalence,
    /// Case 3: new infections accumulated over `[t_{j-1}, t_j]`.
    Incidence,
    /// Case 4: `rho` times the accumulated new infections.
    UnderReportedIncidence,
}

impl ObservationCase {
    pub const ALL: [ObservationCase; 4] = [
        ObservationCase::Prevalence,
        ObservationCase::UnderReportedPrevalence,
        ObservationCase::Incidence,
        ObservationCase::UnderReportedIncidence,
    ];

    /// 1-based case number.
    pub fn number(&self) -> u8 {
        match self {
            ObservationCase::Prevalence => 1,
            ObservationCase::UnderReportedPrevalence => 2,
            ObservationCase::Incidence => 3,
            ObservationCase::UnderReportedIncidence => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(n.checked_sub(1)? as usize).copied()
    }

    /// Whether the operator reads the incidence accumulator.
    pub fn uses_accumulator(&self) -> bool {
        matches!(
            self,
            ObservationCase::Incidence | ObservationCase::UnderReportedIncidence
        )
    }
}

impl fmt::Display for ObservationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case{}", self.number())
    }
}

/// Expected (noise-free) observation for `case` at an observation time.
///
/// For the incidence cases the state's accumulator must hold the new
/// infections of the current reporting interval; an accumulator that was
/// never reset (non-finite or negative) is rejected.
pub fn observe(
    case: ObservationCase,
    state: &EpidemicState,
    params: &ModelParams,
) -> Result<f64, ObservationError> {
    if case.uses_accumulator() && (state.c.is_nan() || state.c < 0.0) {
        return Err(ObservationError::AccumulatorUnset { c: state.c });
    }
    Ok(match case {
        ObservationCase::Prevalence => state.i,
        ObservationCase::UnderReportedPrevalence => params.rho * state.i,
        ObservationCase::Incidence => state.c,
        ObservationCase::UnderReportedIncidence => params.rho * state.c,
    })
}

/// Measurement-noise model applied to expected observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `y = g + e`, `e ~ N(0, sigma^2)`.
    Additive { sigma: f64 },
    /// `y = g exp(e)`, `e ~ N(0, sigma_log^2)`; additive on the log scale
    /// and strictly positive for positive `g`.
    Multiplicative { sigma_log: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ObservationError> {
        let sd = match self {
            NoiseModel::Additive { sigma } => sigma,
            NoiseModel::Multiplicative { sigma_log } => sigma_log,
        };
        if !(sd.is_finite() && *sd >= 0.0) {
            return Err(ObservationError::InvalidNoise(format!(
                "standard deviation must be finite and >= 0, got {sd}"
            )));
        }
        Ok(())
    }
}

/// Corrupt an expected observation with measurement noise.
pub fn corrupt<R: Rng>(
    value: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64, ObservationError> {
    noise.validate()?;
    match noise {
        NoiseModel::Additive { sigma } => {
            if *sigma == 0.0 {
                return Ok(value);
            }
            let e = Normal::new(0.0, *sigma)
                .expect("validated sigma")
                .sample(rng);
            Ok(value + e)
        }
        NoiseModel::Multiplicative { sigma_log } => {
            if value.is_nan() || value <= 0.0 {
                return Err(ObservationError::DomainError {
                    value,
                    reason: "multiplicative noise requires a positive value",
                });
            }
            if *sigma_log == 0.0 {
                return Ok(value);
            }
            let e = Normal::new(0.0, *sigma_log)
                .expect("validated sigma")
                .sample(rng);
            Ok(value * e.exp())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationError {
    /// An incidence operator was applied to a state whose accumulator was
    /// never reset within the current reporting interval.
    AccumulatorUnset {
        c: f64,
    },
    DomainError {
        value: f64,
        reason: &'static str,
    },
    InvalidNoise(String),
}

impl fmt::Display for ObservationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationError::AccumulatorUnset { c } => write!(
                f,
                "incidence accumulator not reset for the current interval (c = {c})"
            ),
            ObservationError::DomainError { value, reason } => {
                write!(f, "domain error on value {value}: {reason}")
            }
            ObservationError::InvalidNoise(msg) => write!(f, "invalid noise model: {msg}"),
        }
    }
}

impl std::error::Error for ObservationError {}
