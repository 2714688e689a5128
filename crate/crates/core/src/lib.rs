//! Sequential data assimilation for SIR epidemic models.
//!
//! This crate implements a Kalman-filtering stack — the classic linear
//! filter, a stochastic ensemble filter with perturbed observations, and
//! augmented variants for constant and time-varying parameter estimation —
//! wired to a seasonally forced SIR forward model and four observation
//! operators (prevalence, under-reported prevalence, incidence,
//! under-reported incidence). A simulation harness generates synthetic
//! epidemic data and runs the filtering scenarios, scoring state and
//! parameter recovery under deliberate observation-operator mismatch.

pub mod diagnostics;
pub mod dynamics;
pub mod filters;
pub mod harness;
pub mod observation;
pub mod rng;
pub mod synthesis;

pub use dynamics::{EpidemicState, ModelParams};
pub use filters::{Ensemble, FilterMode, FilterResult, GaussianBelief, Layout, NoiseSpec};
pub use observation::{NoiseModel, ObservationCase};
pub use synthesis::SyntheticDataset;
