//! Stochastic (perturbed-observation) ensemble Kalman filter operations.
//!
//! An ensemble holds joint samples over a state block and an optional
//! parameter block. Prediction propagates each member through a caller
//! supplied forward map and adds Gaussian process noise to the state
//! block; parameters pass through unchanged (constant mode) or receive a
//! random-walk drift (tracking mode). Analysis corrects every member with
//! a perturbed copy of the datum and the cross-covariance Kalman gain.
//!
//! Observations are scalar throughout: the innovation "inverse" is a
//! plain division.

use super::{FilterError, MemberFailure};
use crate::diagnostics::InnovationRecord;
use crate::rng::{RngFactory, StreamDomain};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Component labels partitioning a member vector into its state block
/// (indices `0..state.len()`) and parameter block (the rest).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub state: Vec<String>,
    pub params: Vec<String>,
}

impl Layout {
    pub fn state_only<S: Into<String>>(state: Vec<S>) -> Self {
        Self {
            state: state.into_iter().map(Into::into).collect(),
            params: Vec::new(),
        }
    }

    pub fn augmented<S: Into<String>>(state: Vec<S>, params: Vec<S>) -> Self {
        Self {
            state: state.into_iter().map(Into::into).collect(),
            params: params.into_iter().map(Into::into).collect(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state.len()
    }

    pub fn param_dim(&self) -> usize {
        self.params.len()
    }

    pub fn dim(&self) -> usize {
        self.state.len() + self.params.len()
    }

    /// Index of a labelled component, searching state then parameter block.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.state
            .iter()
            .chain(&self.params)
            .position(|l| l == label)
    }
}

/// N joint samples over the components named by a [`Layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    members: Vec<DVector<f64>>,
    layout: Layout,
}

impl Ensemble {
    pub fn new(members: Vec<DVector<f64>>, layout: Layout) -> Result<Self, FilterError> {
        if members.len() < 2 {
            return Err(FilterError::InvalidInput(format!(
                "ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        let dim = layout.dim();
        if dim == 0 {
            return Err(FilterError::InvalidInput(
                "layout names no components".into(),
            ));
        }
        if let Some(bad) = members.iter().position(|m| m.len() != dim) {
            return Err(FilterError::InvalidInput(format!(
                "member {bad} has dimension {}, layout expects {dim}",
                members[bad].len()
            )));
        }
        Ok(Self { members, layout })
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn members(&self) -> &[DVector<f64>] {
        &self.members
    }

    /// Apply an in-place transform to every member (post-update clamping).
    pub fn map_members(&mut self, f: impl Fn(usize, &mut DVector<f64>)) {
        for (n, m) in self.members.iter_mut().enumerate() {
            f(n, m);
        }
    }

    /// Ensemble mean, `(1/N) sum of members`.
    pub fn mean(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim());
        for m in &self.members {
            acc += m;
        }
        acc / self.n() as f64
    }

    /// Ensemble covariance with the 1/(N-1) convention.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let d = self.dim();
        let mut acc = DMatrix::zeros(d, d);
        for m in &self.members {
            let a = m - &mean;
            acc += &a * a.transpose();
        }
        acc / (self.n() as f64 - 1.0)
    }

    /// Per-component mean and standard deviation (1/(N-1) variance).
    pub fn component_stats(&self, index: usize) -> (f64, f64) {
        let n = self.n() as f64;
        let mean = self.members.iter().map(|m| m[index]).sum::<f64>() / n;
        let var = self
            .members
            .iter()
            .map(|m| (m[index] - mean) * (m[index] - mean))
            .sum::<f64>()
            / (n - 1.0);
        (mean, var.max(0.0).sqrt())
    }
}

/// Result of a member's forward propagation over one observation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    /// New state block (dimension = layout state_dim).
    pub state: DVector<f64>,
    /// Interval-accumulated payload for observation maps that need more
    /// than the endpoint state (the SIR incidence accumulator). Unused
    /// observation maps ignore it.
    pub obs_aux: f64,
}

/// Prediction-step output: the forecast ensemble plus each member's
/// interval observation payload.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub ensemble: Ensemble,
    pub obs_aux: Vec<f64>,
}

/// Propagate every member through the forward map and add process noise
/// `N(0, sigma_c^2 I)` to the state block; parameter blocks pass through
/// unchanged. With `nonneg_states`, state components are clamped to zero
/// from below after the noise.
///
/// Noise draws come from per-member streams addressed by `(step, member)`,
/// so results do not depend on the parallel schedule.
pub fn enkf_predict<F>(
    ensemble: &Ensemble,
    propagate: F,
    sigma_c: f64,
    nonneg_states: bool,
    factory: &RngFactory,
    step: u64,
) -> Result<Prediction, FilterError>
where
    F: Fn(usize, &DVector<f64>) -> Result<Propagated, MemberFailure> + Sync,
{
    if !(sigma_c >= 0.0 && sigma_c.is_finite()) {
        return Err(FilterError::InvalidInput(format!(
            "sigma_c must be finite and >= 0, got {sigma_c}"
        )));
    }
    let d = ensemble.layout().state_dim();
    let results: Vec<Result<Propagated, MemberFailure>> = ensemble
        .members
        .par_iter()
        .enumerate()
        .map(|(n, member)| propagate(n, member))
        .collect();

    let mut propagated = Vec::with_capacity(ensemble.n());
    for (n, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) if p.state.len() == d => propagated.push(p),
            Ok(p) => {
                return Err(FilterError::InvalidInput(format!(
                    "propagate returned state of dimension {} for member {n}, expected {d}",
                    p.state.len()
                )))
            }
            Err(source) => return Err(FilterError::Member { index: n, source }),
        }
    }

    let noise = if sigma_c > 0.0 {
        Some(Normal::new(0.0, sigma_c).expect("validated sigma_c"))
    } else {
        None
    };
    let mut members = Vec::with_capacity(ensemble.n());
    let mut obs_aux = Vec::with_capacity(ensemble.n());
    for (n, (old, p)) in ensemble.members.iter().zip(&propagated).enumerate() {
        let mut z = old.clone();
        for i in 0..d {
            z[i] = p.state[i];
        }
        if let Some(normal) = &noise {
            let mut rng = factory.stream(StreamDomain::ProcessNoise, step, n as u64);
            for i in 0..d {
                z[i] += normal.sample(&mut rng);
            }
        }
        if nonneg_states {
            for i in 0..d {
                if z[i] < 0.0 {
                    z[i] = 0.0;
                }
            }
        }
        members.push(z);
        obs_aux.push(p.obs_aux);
    }
    Ok(Prediction {
        ensemble: Ensemble::new(members, ensemble.layout.clone())?,
        obs_aux,
    })
}

/// Random-walk drift on the parameter block: each parameter component
/// receives `N(0, sigma_e^2)`. State blocks are untouched; `sigma_e = 0`
/// is the identity.
pub fn parameter_drift(
    ensemble: &Ensemble,
    sigma_e: f64,
    factory: &RngFactory,
    step: u64,
) -> Result<Ensemble, FilterError> {
    if !(sigma_e >= 0.0 && sigma_e.is_finite()) {
        return Err(FilterError::InvalidInput(format!(
            "sigma_e must be finite and >= 0, got {sigma_e}"
        )));
    }
    if sigma_e == 0.0 || ensemble.layout.param_dim() == 0 {
        return Ok(ensemble.clone());
    }
    let normal = Normal::new(0.0, sigma_e).expect("validated sigma_e");
    let d = ensemble.layout.state_dim();
    let dim = ensemble.dim();
    let members = ensemble
        .members
        .iter()
        .enumerate()
        .map(|(n, old)| {
            let mut z = old.clone();
            let mut rng = factory.stream(StreamDomain::ParamDrift, step, n as u64);
            for i in d..dim {
                z[i] += normal.sample(&mut rng);
            }
            z
        })
        .collect();
    Ensemble::new(members, ensemble.layout.clone())
}

/// Per-member artificial observations and predictions recorded during an
/// analysis step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeDraws {
    pub obs_preds: Vec<f64>,
    pub perturbed_obs: Vec<f64>,
}

/// Analysis-step output.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub ensemble: Ensemble,
    pub innovation: InnovationRecord,
    /// Mean of the observation-prediction ensemble.
    pub obs_pred_mean: f64,
    /// Raw draws, kept only when requested.
    pub draws: Option<AnalyzeDraws>,
}

/// Correct every member with a perturbed copy of the scalar datum `y`:
/// `z^n += K (y^n - yhat^n)` with `y^n = y + w^n`, `w^n ~ N(0, sigma_d^2)`,
/// `yhat^n = observe_member(n, z^n)`, and the cross-covariance gain
/// `K = Phi_xy / (Phi_yy + sigma_d^2)`. State and parameter blocks update
/// jointly.
pub fn enkf_analyze<G>(
    ensemble: &Ensemble,
    observe_member: G,
    y: f64,
    sigma_d: f64,
    factory: &RngFactory,
    step: u64,
    record_draws: bool,
) -> Result<AnalysisOutput, FilterError>
where
    G: Fn(usize, &DVector<f64>) -> Result<f64, MemberFailure>,
{
    if !(sigma_d > 0.0 && sigma_d.is_finite()) {
        return Err(FilterError::InvalidInput(format!(
            "sigma_d must be finite and > 0, got {sigma_d}"
        )));
    }
    let mut obs_preds = Vec::with_capacity(ensemble.n());
    for (n, member) in ensemble.members.iter().enumerate() {
        let yhat =
            observe_member(n, member).map_err(|source| FilterError::Member { index: n, source })?;
        obs_preds.push(yhat);
    }
    let normal = Normal::new(0.0, sigma_d).expect("validated sigma_d");
    let perturbed: Vec<f64> = (0..ensemble.n())
        .map(|n| {
            let mut rng = factory.stream(StreamDomain::ObsPerturbation, step, n as u64);
            y + normal.sample(&mut rng)
        })
        .collect();
    let (ensemble, innovation, obs_pred_mean) =
        analyze_with_perturbed(ensemble, &obs_preds, &perturbed, sigma_d * sigma_d)?;
    Ok(AnalysisOutput {
        ensemble,
        innovation,
        obs_pred_mean,
        draws: record_draws.then_some(AnalyzeDraws {
            obs_preds,
            perturbed_obs: perturbed,
        }),
    })
}

/// Deterministic core of the analysis step, taking the observation
/// predictions and already-perturbed observations. Exposed so oracle tests
/// can drive the update with hand-picked perturbations.
pub fn analyze_with_perturbed(
    ensemble: &Ensemble,
    obs_preds: &[f64],
    perturbed_obs: &[f64],
    d_var: f64,
) -> Result<(Ensemble, InnovationRecord, f64), FilterError> {
    let n = ensemble.n();
    if obs_preds.len() != n || perturbed_obs.len() != n {
        return Err(FilterError::InvalidInput(format!(
            "observation arrays must match ensemble size {n}"
        )));
    }
    let nf = n as f64;
    let yhat_mean = obs_preds.iter().sum::<f64>() / nf;

    // Anomaly covariances with the 1/(N-1) convention; the forecast error
    // variance is floored at zero against roundoff.
    let mean = ensemble.mean();
    let mut phi_yy = 0.0;
    let mut phi_xy = DVector::zeros(ensemble.dim());
    for (member, yhat) in ensemble.members.iter().zip(obs_preds) {
        let ya = yhat - yhat_mean;
        phi_yy += ya * ya;
        phi_xy += (member - &mean) * ya;
    }
    phi_yy = (phi_yy / (nf - 1.0)).max(0.0);
    phi_xy /= nf - 1.0;

    let denom = phi_yy + d_var;
    if !denom.is_finite() || denom <= 0.0 {
        return Err(FilterError::SingularInnovation { variance: denom });
    }
    let gain = phi_xy / denom;

    let mut nu = 0.0;
    let members = ensemble
        .members
        .iter()
        .enumerate()
        .map(|(k, member)| {
            let residual = perturbed_obs[k] - obs_preds[k];
            nu += residual * residual;
            member + &gain * residual
        })
        .collect::<Vec<_>>();
    nu /= nf;

    Ok((
        Ensemble::new(members, ensemble.layout.clone())?,
        InnovationRecord {
            nu,
            phi_yy,
            d_obs: d_var,
        },
        yhat_mean,
    ))
}
