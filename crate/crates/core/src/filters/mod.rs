//! Kalman filtering over a generic state-space contract: the classic
//! linear filter, a stochastic ensemble filter with perturbed
//! observations, and augmented variants that estimate parameters jointly
//! with states (constant parameters via cross-covariance, time-varying
//! parameters via random-walk drift).

mod enkf;
mod kf;
mod run;

pub use enkf::{
    analyze_with_perturbed, enkf_analyze, enkf_predict, parameter_drift, AnalysisOutput,
    AnalyzeDraws, Ensemble, Layout, Prediction, Propagated,
};
pub use kf::{kf_step, GaussianBelief};
pub use run::{run_filter, CaseEstimates, FilterMode, FilterResult, NoiseSpec, PriorSpec, RunSpec};

use crate::dynamics::DynamicsError;
use crate::observation::ObservationError;
use std::fmt;

/// Why a per-member map (propagation or observation) failed.
#[derive(Debug, Clone, PartialEq)]
pub enum MemberFailure {
    Dynamics(DynamicsError),
    Observation(ObservationError),
}

impl fmt::Display for MemberFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberFailure::Dynamics(e) => write!(f, "{e}"),
            MemberFailure::Observation(e) => write!(f, "{e}"),
        }
    }
}

impl From<DynamicsError> for MemberFailure {
    fn from(e: DynamicsError) -> Self {
        MemberFailure::Dynamics(e)
    }
}

impl From<ObservationError> for MemberFailure {
    fn from(e: ObservationError) -> Self {
        MemberFailure::Observation(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterError {
    InvalidInput(String),
    /// The innovation variance is numerically singular or non-finite.
    SingularInnovation {
        variance: f64,
    },
    /// A member-level map failed; carries the member index.
    Member {
        index: usize,
        source: MemberFailure,
    },
    /// A failure while assimilating a specific observation step.
    AtStep {
        step: usize,
        source: Box<FilterError>,
    },
}

impl FilterError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        FilterError::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            FilterError::SingularInnovation { variance } => {
                write!(f, "singular innovation variance ({variance})")
            }
            FilterError::Member { index, source } => {
                write!(f, "member {index} failed: {source}")
            }
            FilterError::AtStep { step, source } => {
                write!(f, "at observation step {step}: {source}")
            }
        }
    }
}

impl std::error::Error for FilterError {}
