//! Scoring and filter-consistency diagnostics.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Innovation steps below this are excluded from the consistency average
/// (and counted) rather than dividing by almost-zero.
pub const DEGENERATE_INNOVATION: f64 = 1e-12;

/// Per-step record of the innovation statistic and the variances it is
/// compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationRecord {
    /// Innovation statistic: the mean squared mismatch between perturbed
    /// observations and observation predictions, `(1/N) sum (y^n - yhat^n)^2`.
    pub nu: f64,
    /// Forecast error variance of the observation-prediction ensemble.
    pub phi_yy: f64,
    /// Observation noise variance assumed by the filter at this step.
    pub d_obs: f64,
}

/// Mean squared error between aligned series.
pub fn mse(truth: &[f64], estimate: &[f64]) -> Result<f64, DiagnosticsError> {
    if truth.len() != estimate.len() {
        return Err(DiagnosticsError::LengthMismatch {
            truth: truth.len(),
            estimate: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(DiagnosticsError::LengthMismatch {
            truth: 0,
            estimate: 0,
        });
    }
    let sum: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    Ok(sum / truth.len() as f64)
}

/// `|estimate - true_value| / |true_value|`.
pub fn relative_error(true_value: f64, estimate: f64) -> Result<f64, DiagnosticsError> {
    if true_value == 0.0 {
        return Err(DiagnosticsError::DomainError(
            "relative error undefined for a zero true value".into(),
        ));
    }
    Ok((estimate - true_value).abs() / true_value.abs())
}

/// Consistency summary: the ratio statistic plus how many degenerate steps
/// were excluded from the average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    /// Steps skipped because the innovation was below the degeneracy cutoff.
    pub excluded: usize,
}

/// Filter-consistency ratio: the time average of
/// `(d_obs + phi_yy) / nu`. A well-calibrated filter scores near one;
/// values below one indicate innovations larger than the filter's
/// predicted error budget.
pub fn consistency_gamma(records: &[InnovationRecord]) -> Result<GammaReport, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::DomainError(
            "consistency ratio needs at least one innovation record".into(),
        ));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for r in records {
        if r.nu < DEGENERATE_INNOVATION {
            continue;
        }
        sum += (r.d_obs + r.phi_yy) / r.nu;
        used += 1;
    }
    if used == 0 {
        return Err(DiagnosticsError::DegenerateInnovation {
            steps: records.len(),
        });
    }
    Ok(GammaReport {
        gamma: sum / used as f64,
        excluded: records.len() - used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    LengthMismatch {
        truth: usize,
        estimate: usize,
    },
    DomainError(String),
    /// Every innovation in the sequence was (numerically) zero.
    DegenerateInnovation {
        steps: usize,
    },
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::LengthMismatch { truth, estimate } => write!(
                f,
                "series lengths differ or are empty (truth {truth}, estimate {estimate})"
            ),
            DiagnosticsError::DomainError(msg) => write!(f, "{msg}"),
            DiagnosticsError::DegenerateInnovation { steps } => {
                write!(f, "all {steps} innovation steps are degenerate")
            }
        }
    }
}

impl std::error::Error for DiagnosticsError {}
