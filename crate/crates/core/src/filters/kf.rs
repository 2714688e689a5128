//! Classic Kalman filter for linear-Gaussian state-space models.

use super::FilterError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Gaussian distribution over a state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianBelief {
    /// Build a belief, checking that the covariance is square, symmetric to
    /// machine tolerance, and has no eigenvalue below `-1e-10 tr`.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, FilterError> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(FilterError::InvalidInput(format!(
                "covariance must be {d}x{d}, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(FilterError::InvalidInput(format!(
                "covariance not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let trace = covariance.trace();
        let min_eig = covariance
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(FilterError::InvalidInput(format!(
                "covariance has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// One predict–update cycle of the classic Kalman filter.
///
/// Prediction: `x_p = F x`, `G_p = F G F^T + C`. Update with gain
/// `K = G_p H^T (H G_p H^T + D)^{-1}`: `x += K (y - H x_p)`,
/// `G = (I - K H) G_p` (symmetrized).
pub fn kf_step(
    belief: &GaussianBelief,
    f_matrix: &DMatrix<f64>,
    g_matrix: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<GaussianBelief, FilterError> {
    let n = belief.dim();
    let m = g_matrix.nrows();
    if f_matrix.nrows() != n || f_matrix.ncols() != n {
        return Err(FilterError::InvalidInput("F must be d x d".into()));
    }
    if c.nrows() != n || c.ncols() != n {
        return Err(FilterError::InvalidInput("C must be d x d".into()));
    }
    if g_matrix.ncols() != n {
        return Err(FilterError::InvalidInput("G must be m x d".into()));
    }
    if d.nrows() != m || d.ncols() != m {
        return Err(FilterError::InvalidInput("D must be m x m".into()));
    }
    if y.len() != m {
        return Err(FilterError::InvalidInput("y must have length m".into()));
    }

    let mean_pred = f_matrix * &belief.mean;
    let cov_pred = f_matrix * &belief.covariance * f_matrix.transpose() + c;

    let innovation_cov = g_matrix * &cov_pred * g_matrix.transpose() + d;
    let inv = innovation_cov.clone().try_inverse().ok_or({
        FilterError::SingularInnovation {
            variance: innovation_cov.amax(),
        }
    })?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::SingularInnovation {
            variance: innovation_cov.amax(),
        });
    }

    let gain = &cov_pred * g_matrix.transpose() * inv;
    let mean = &mean_pred + &gain * (y - g_matrix * &mean_pred);
    let cov = (DMatrix::identity(n, n) - &gain * g_matrix) * &cov_pred;
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianBelief::new(mean, cov)
}
