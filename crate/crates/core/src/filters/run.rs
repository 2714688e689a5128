//! The SIR filtering scenarios: state estimation with known parameters,
//! joint estimation of the constant transmission parameters, and
//! random-walk tracking of the time-varying transmission rate.

use super::enkf::{enkf_analyze, enkf_predict, parameter_drift, Ensemble, Layout, Propagated};
use super::{AnalyzeDraws, FilterError, MemberFailure};
use crate::diagnostics::InnovationRecord;
use crate::dynamics::{self, BetaSource, EpidemicState, ModelParams, Tolerances};
use crate::observation::{observe, ObservationCase};
use crate::rng::{RngFactory, StreamDomain};
use crate::synthesis::SyntheticDataset;
use nalgebra::DVector;
use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

/// Which unknowns the filter estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// States only; all parameters known.
    State,
    /// States plus the constant transmission parameters b0 and b1.
    ConstantParams,
    /// States plus the transmission rate itself as a drifting parameter.
    Tracking,
}

impl FilterMode {
    pub fn layout(&self) -> Layout {
        match self {
            FilterMode::State => Layout::state_only(vec!["S", "I"]),
            FilterMode::ConstantParams => Layout::augmented(vec!["S", "I"], vec!["b0", "b1"]),
            FilterMode::Tracking => Layout::augmented(vec!["S", "I"], vec!["beta"]),
        }
    }
}

/// Uniform intervals the initial ensemble is drawn from. The state
/// intervals are multiplicative factors on the true initial values; the
/// parameter intervals are absolute. Defaults contain the generating truth
/// without being centered on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub s_factor: (f64, f64),
    pub i_factor: (f64, f64),
    pub b0_range: (f64, f64),
    pub b1_range: (f64, f64),
    pub beta_range: (f64, f64),
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            s_factor: (0.95, 1.06),
            i_factor: (0.5, 2.0),
            b0_range: (1200.0, 2600.0),
            b1_range: (0.01, 0.20),
            beta_range: (1200.0, 2600.0),
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<(), FilterError> {
        for (name, (lo, hi)) in [
            ("s_factor", self.s_factor),
            ("i_factor", self.i_factor),
            ("b0_range", self.b0_range),
            ("b1_range", self.b1_range),
            ("beta_range", self.beta_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(FilterError::InvalidInput(format!(
                    "prior interval {name} must satisfy lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Noise standard deviations assumed by the filter: process noise on the
/// state block (`C = sigma_c^2 I`), observation noise (`D = sigma_d^2`),
/// and parameter drift in tracking mode (`E = sigma_e^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_c: f64,
    pub sigma_d: f64,
    pub sigma_e: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_c: 0.2,
            sigma_d: 1.0,
            sigma_e: 45.0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.sigma_c >= 0.0 && self.sigma_c.is_finite()) {
            return Err(FilterError::InvalidInput(format!(
                "sigma_c must be finite and >= 0, got {}",
                self.sigma_c
            )));
        }
        if !(self.sigma_d > 0.0 && self.sigma_d.is_finite()) {
            return Err(FilterError::InvalidInput(format!(
                "sigma_d must be finite and > 0, got {}",
                self.sigma_d
            )));
        }
        if !(self.sigma_e >= 0.0 && self.sigma_e.is_finite()) {
            return Err(FilterError::InvalidInput(format!(
                "sigma_e must be finite and >= 0, got {}",
                self.sigma_e
            )));
        }
        Ok(())
    }
}

/// Full specification of one filter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub mode: FilterMode,
    pub case: ObservationCase,
    /// Parameter values the filter treats as known (the reporting
    /// probability, recovery and vital rates; also the transmission
    /// parameters in state mode).
    pub params_known: ModelParams,
    pub priors: PriorSpec,
    pub noise: NoiseSpec,
    pub n_ensemble: usize,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Keep per-step observation/perturbation draws in the result.
    #[serde(default)]
    pub record_draws: bool,
}

/// Per-step ensemble statistics of the predicted monthly case counts
/// (incidence cases only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEstimates {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Posterior summaries of one filter run, one record per assimilated
/// observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub layout: Layout,
    pub times: Vec<f64>,
    /// Posterior means, step-major, each of dimension `layout.dim()`.
    pub posterior_mean: Vec<Vec<f64>>,
    /// Posterior standard deviations (sqrt of covariance diagonal).
    pub posterior_sd: Vec<Vec<f64>>,
    /// Posterior covariances, row-major `dim x dim` per step.
    pub posterior_cov: Vec<Vec<f64>>,
    /// Mean of the observation-prediction ensemble per step.
    pub obs_pred_mean: Vec<f64>,
    pub innovations: Vec<InnovationRecord>,
    /// Predicted monthly case counts (incidence cases only).
    pub case_estimates: Option<CaseEstimates>,
    pub seed: u64,
    pub draws: Option<Vec<AnalyzeDraws>>,
}

impl FilterResult {
    pub fn n_steps(&self) -> usize {
        self.times.len()
    }

    /// Posterior-mean series of a labelled component.
    pub fn mean_series(&self, label: &str) -> Option<Vec<f64>> {
        let idx = self.layout.index_of(label)?;
        Some(self.posterior_mean.iter().map(|m| m[idx]).collect())
    }

    /// Posterior-sd series of a labelled component.
    pub fn sd_series(&self, label: &str) -> Option<Vec<f64>> {
        let idx = self.layout.index_of(label)?;
        Some(self.posterior_sd.iter().map(|m| m[idx]).collect())
    }
}

// Keeps member b1 values inside the dynamics domain [0, 1).
const B1_MAX: f64 = 1.0 - 1e-9;

/// Run the stochastic ensemble filter over a data set.
///
/// Each observation interval runs prediction (per-member SIR propagation
/// with the incidence accumulator reset at interval start, then process
/// noise on the state block), parameter drift in tracking mode, and the
/// perturbed-observation analysis. Members are clamped to the dynamics
/// domain where updates can leave it: states at zero from below, b1 to
/// [0, 1), the tracked transmission rate at zero.
pub fn run_filter(spec: &RunSpec, dataset: &SyntheticDataset) -> Result<FilterResult, FilterError> {
    spec.params_known
        .validate()
        .map_err(|e| FilterError::InvalidInput(e.to_string()))?;
    spec.priors.validate()?;
    spec.noise.validate()?;
    if spec.n_ensemble < 2 {
        return Err(FilterError::InvalidInput(format!(
            "n_ensemble must be >= 2, got {}",
            spec.n_ensemble
        )));
    }
    dataset
        .validate_grid()
        .map_err(|e| FilterError::InvalidInput(e.to_string()))?;

    let layout = spec.mode.layout();
    let factory = RngFactory::new(spec.seed);
    let ensemble = initial_ensemble(spec, dataset, &layout, &factory)?;
    let uses_accumulator = spec.case.uses_accumulator();

    let mut result = FilterResult {
        layout: layout.clone(),
        times: dataset.times.clone(),
        posterior_mean: Vec::with_capacity(dataset.n_obs()),
        posterior_sd: Vec::with_capacity(dataset.n_obs()),
        posterior_cov: Vec::with_capacity(dataset.n_obs()),
        obs_pred_mean: Vec::with_capacity(dataset.n_obs()),
        innovations: Vec::with_capacity(dataset.n_obs()),
        case_estimates: uses_accumulator.then(|| CaseEstimates {
            mean: Vec::with_capacity(dataset.n_obs()),
            sd: Vec::with_capacity(dataset.n_obs()),
        }),
        seed: spec.seed,
        draws: spec.record_draws.then(Vec::new),
    };

    let mut ensemble = ensemble;
    for j in 1..=dataset.n_obs() {
        let t0 = if j == 1 { 0.0 } else { dataset.times[j - 2] };
        let t1 = dataset.times[j - 1];

        let propagate = |_n: usize, member: &DVector<f64>| -> Result<Propagated, MemberFailure> {
            let start = EpidemicState {
                s: member[0].max(0.0),
                i: member[1].max(0.0),
                c: 0.0,
            };
            let (params_eff, beta) = effective_model(spec.mode, &spec.params_known, member);
            let end = dynamics::integrate(&start, &params_eff, t0, t1, beta, &spec.tolerances)?;
            Ok(Propagated {
                state: DVector::from_vec(vec![end.s, end.i]),
                obs_aux: end.c,
            })
        };
        let predicted = enkf_predict(
            &ensemble,
            propagate,
            spec.noise.sigma_c,
            true,
            &factory,
            j as u64,
        )
        .map_err(|e| e.at_step(j))?;
        let mut forecast = predicted.ensemble;
        let aux = predicted.obs_aux;

        if spec.mode == FilterMode::Tracking {
            forecast = parameter_drift(&forecast, spec.noise.sigma_e, &factory, j as u64)
                .map_err(|e| e.at_step(j))?;
            forecast.map_members(|_, m| m[2] = m[2].max(0.0));
        }

        let observe_member = |n: usize, member: &DVector<f64>| -> Result<f64, MemberFailure> {
            let state = EpidemicState {
                s: member[0],
                i: member[1],
                c: aux[n],
            };
            observe(spec.case, &state, &spec.params_known).map_err(Into::into)
        };
        let analysis = enkf_analyze(
            &forecast,
            observe_member,
            dataset.observations[j - 1],
            spec.noise.sigma_d,
            &factory,
            j as u64,
            spec.record_draws,
        )
        .map_err(|e| e.at_step(j))?;
        ensemble = analysis.ensemble;
        match spec.mode {
            FilterMode::ConstantParams => {
                ensemble.map_members(|_, m| m[3] = m[3].clamp(0.0, B1_MAX));
            }
            FilterMode::Tracking => {
                ensemble.map_members(|_, m| m[2] = m[2].max(0.0));
            }
            FilterMode::State => {}
        }

        record_step(
            &mut result,
            &ensemble,
            &aux,
            &analysis.innovation,
            analysis.obs_pred_mean,
        );
        if let (Some(all), Some(draws)) = (result.draws.as_mut(), analysis.draws) {
            all.push(draws);
        }
    }
    Ok(result)
}

fn effective_model(
    mode: FilterMode,
    known: &ModelParams,
    member: &DVector<f64>,
) -> (ModelParams, BetaSource) {
    match mode {
        FilterMode::State => (*known, BetaSource::Seasonal),
        FilterMode::ConstantParams => (
            ModelParams {
                b0: member[2].max(0.0),
                b1: member[3].clamp(0.0, B1_MAX),
                ..*known
            },
            BetaSource::Seasonal,
        ),
        FilterMode::Tracking => (*known, BetaSource::Constant(member[2].max(0.0))),
    }
}

fn initial_ensemble(
    spec: &RunSpec,
    dataset: &SyntheticDataset,
    layout: &Layout,
    factory: &RngFactory,
) -> Result<Ensemble, FilterError> {
    let uniform = |range: (f64, f64)| {
        Uniform::new(range.0, range.1)
            .map_err(|e| FilterError::InvalidInput(format!("bad prior interval: {e}")))
    };
    let s_dist = uniform(spec.priors.s_factor)?;
    let i_dist = uniform(spec.priors.i_factor)?;
    let b0_dist = uniform(spec.priors.b0_range)?;
    let b1_dist = uniform(spec.priors.b1_range)?;
    let beta_dist = uniform(spec.priors.beta_range)?;

    let s0 = dataset.initial_state.s;
    let i0 = dataset.initial_state.i;
    let members = (0..spec.n_ensemble)
        .map(|n| {
            let mut rng = factory.stream(StreamDomain::InitEnsemble, 0, n as u64);
            let mut v = Vec::with_capacity(layout.dim());
            v.push(s_dist.sample(&mut rng) * s0);
            v.push(i_dist.sample(&mut rng) * i0);
            match spec.mode {
                FilterMode::State => {}
                FilterMode::ConstantParams => {
                    v.push(b0_dist.sample(&mut rng));
                    v.push(b1_dist.sample(&mut rng));
                }
                FilterMode::Tracking => v.push(beta_dist.sample(&mut rng)),
            }
            DVector::from_vec(v)
        })
        .collect();
    Ensemble::new(members, layout.clone())
}

fn record_step(
    result: &mut FilterResult,
    ensemble: &Ensemble,
    aux: &[f64],
    innovation: &InnovationRecord,
    obs_pred_mean: f64,
) {
    let mean = ensemble.mean();
    let cov = ensemble.covariance();
    let dim = ensemble.dim();
    result.posterior_mean.push(mean.iter().copied().collect());
    result
        .posterior_sd
        .push((0..dim).map(|i| cov[(i, i)].max(0.0).sqrt()).collect());
    result.posterior_cov.push(cov.iter().copied().collect());
    result.obs_pred_mean.push(obs_pred_mean);
    result.innovations.push(*innovation);
    if let Some(cases) = result.case_estimates.as_mut() {
        let n = aux.len() as f64;
        let m = aux.iter().sum::<f64>() / n;
        let var = aux.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / (n - 1.0);
        cases.mean.push(m);
        cases.sd.push(var.max(0.0).sqrt());
    }
}
