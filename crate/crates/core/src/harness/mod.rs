//! Experiment harness: configured scenario runs, four-case comparisons,
//! observation-noise sweeps, consistency reports, and plot-data emission.
//!
//! Every artifact embeds the full configuration it was produced from plus
//! a SHA-256 of its canonical JSON, so any output can be reproduced
//! bit-for-bit from the artifact alone.

mod csvio;
mod plot;
mod svg;

pub use csvio::{format_float, read_csv, CsvWriter};
pub use plot::{emit_plot_data, FigureTarget};
pub use svg::render_line_chart;

use crate::diagnostics::{consistency_gamma, mse, relative_error, DiagnosticsError};
use crate::dynamics::{transmission_rate, ModelParams, Tolerances};
use crate::filters::{
    run_filter, FilterError, FilterMode, FilterResult, NoiseSpec, PriorSpec, RunSpec,
};
use crate::observation::ObservationCase;
use crate::rng::RngFactory;
use crate::synthesis::{generate_dataset, GenerationSpec, SynthesisError, SyntheticDataset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

/// Where a scenario's data set comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Load a previously generated dataset JSON.
    Path(PathBuf),
    /// Generate on the fly (reproducible from the embedded spec).
    Generate(GenerationSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Generate(GenerationSpec::default())
    }
}

/// One filtering scenario: dataset, estimation mode, observation operator,
/// filter noise levels, priors, and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub dataset: DatasetSource,
    pub mode: FilterMode,
    pub case: ObservationCase,
    #[serde(default = "default_n_ensemble")]
    pub n_ensemble: usize,
    #[serde(default = "default_sigma_c")]
    pub sigma_c: f64,
    #[serde(default = "default_sigma_d")]
    pub sigma_d: f64,
    #[serde(default = "default_sigma_e")]
    pub sigma_e: f64,
    #[serde(default)]
    pub priors: PriorSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_n_ensemble() -> usize {
    100
}
fn default_sigma_c() -> f64 {
    0.2
}
fn default_sigma_d() -> f64 {
    1.0
}
fn default_sigma_e() -> f64 {
    45.0
}
fn default_replicates() -> usize {
    1
}

impl ScenarioConfig {
    pub fn new(mode: FilterMode, case: ObservationCase) -> Self {
        Self {
            dataset: DatasetSource::default(),
            mode,
            case,
            n_ensemble: default_n_ensemble(),
            sigma_c: default_sigma_c(),
            sigma_d: default_sigma_d(),
            sigma_e: default_sigma_e(),
            priors: PriorSpec::default(),
            seed: 0,
            replicates: default_replicates(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let field = |name: &str, msg: String| HarnessError::Config {
            field: name.to_string(),
            message: msg,
        };
        if self.n_ensemble < 2 {
            return Err(field(
                "n_ensemble",
                format!("must be >= 2, got {}", self.n_ensemble),
            ));
        }
        if !(self.sigma_c >= 0.0 && self.sigma_c.is_finite()) {
            return Err(field(
                "sigma_c",
                format!("must be >= 0, got {}", self.sigma_c),
            ));
        }
        if !(self.sigma_d > 0.0 && self.sigma_d.is_finite()) {
            return Err(field(
                "sigma_d",
                format!("must be > 0, got {}", self.sigma_d),
            ));
        }
        if !(self.sigma_e >= 0.0 && self.sigma_e.is_finite()) {
            return Err(field(
                "sigma_e",
                format!("must be >= 0, got {}", self.sigma_e),
            ));
        }
        if self.replicates == 0 {
            return Err(field("replicates", "must be >= 1".into()));
        }
        self.priors
            .validate()
            .map_err(|e| field("priors", e.to_string()))?;
        self.tolerances
            .validate()
            .map_err(|e| field("tolerances", e.to_string()))?;
        if let DatasetSource::Generate(spec) = &self.dataset {
            spec.params
                .validate()
                .map_err(|e| field("dataset.generate.params", e.to_string()))?;
            if spec.horizon_years == 0 {
                return Err(field(
                    "dataset.generate.horizon_years",
                    "must be >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    fn run_spec(&self, params: ModelParams, seed: u64) -> RunSpec {
        RunSpec {
            mode: self.mode,
            case: self.case,
            params_known: params,
            priors: self.priors,
            noise: NoiseSpec {
                sigma_c: self.sigma_c,
                sigma_d: self.sigma_d,
                sigma_e: self.sigma_e,
            },
            n_ensemble: self.n_ensemble,
            seed,
            tolerances: self.tolerances,
            record_draws: false,
        }
    }
}

/// SHA-256 of a value's canonical JSON, hex-encoded.
pub fn sha256_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serializable");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolve a dataset source: load from disk or generate.
pub fn resolve_dataset(source: &DatasetSource) -> Result<SyntheticDataset, HarnessError> {
    match source {
        DatasetSource::Path(path) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let dataset: SyntheticDataset =
                serde_json::from_str(&text).map_err(|e| HarnessError::Io {
                    path: path.clone(),
                    message: format!("not a dataset file: {e}"),
                })?;
            dataset.validate_grid().map_err(HarnessError::Synthesis)?;
            Ok(dataset)
        }
        DatasetSource::Generate(spec) => Ok(generate_dataset(spec)?),
    }
}

/// Scores of a single filter run against the data set's ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateScores {
    pub seed: u64,
    pub mse_s: f64,
    pub mse_i: f64,
    /// Monthly-case MSE (incidence cases only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_cases: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err_b0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err_b1: Option<f64>,
    /// Fraction of observation times where the true transmission rate lies
    /// inside the posterior two-standard-deviation band (tracking mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_coverage_2sd: Option<f64>,
    pub gamma: f64,
    pub gamma_excluded: usize,
}

/// Mean and sample standard deviation over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Replicate-aggregated scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub mse_s: Stats,
    pub mse_i: Stats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_cases: Option<Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err_b0: Option<Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err_b1: Option<Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_coverage_2sd: Option<Stats>,
    pub gamma: Stats,
}

fn aggregate(scores: &[ReplicateScores]) -> AggregateScores {
    let collect = |f: fn(&ReplicateScores) -> f64| -> Vec<f64> { scores.iter().map(f).collect() };
    let collect_opt = |f: fn(&ReplicateScores) -> Option<f64>| -> Option<Stats> {
        let vals: Vec<f64> = scores.iter().filter_map(f).collect();
        (vals.len() == scores.len()).then(|| Stats::from_values(&vals))
    };
    AggregateScores {
        mse_s: Stats::from_values(&collect(|s| s.mse_s)),
        mse_i: Stats::from_values(&collect(|s| s.mse_i)),
        mse_cases: collect_opt(|s| s.mse_cases),
        rel_err_b0: collect_opt(|s| s.rel_err_b0),
        rel_err_b1: collect_opt(|s| s.rel_err_b1),
        beta_coverage_2sd: collect_opt(|s| s.beta_coverage_2sd),
        gamma: Stats::from_values(&collect(|s| s.gamma)),
    }
}

/// Persisted summary of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub kind: String,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub replicates: Vec<ReplicateScores>,
    pub aggregate: AggregateScores,
}

/// Score one filter result against the dataset truth.
pub fn score_run(
    config_mode: FilterMode,
    dataset: &SyntheticDataset,
    params: &ModelParams,
    result: &FilterResult,
) -> Result<ReplicateScores, HarnessError> {
    let s_est = result
        .mean_series("S")
        .ok_or_else(|| HarnessError::MissingSeries("S".into()))?;
    let i_est = result
        .mean_series("I")
        .ok_or_else(|| HarnessError::MissingSeries("I".into()))?;
    let mse_s = mse(&dataset.truth_states.s_at_obs, &s_est)?;
    let mse_i = mse(&dataset.truth_states.i_at_obs, &i_est)?;
    let mse_cases = result
        .case_estimates
        .as_ref()
        .map(|c| mse(&dataset.truth_monthly_cases, &c.mean))
        .transpose()?;
    let (rel_err_b0, rel_err_b1) = if config_mode == FilterMode::ConstantParams {
        let b0 = result.mean_series("b0").expect("constant-params layout");
        let b1 = result.mean_series("b1").expect("constant-params layout");
        (
            Some(relative_error(params.b0, *b0.last().unwrap())?),
            Some(relative_error(params.b1, *b1.last().unwrap())?),
        )
    } else {
        (None, None)
    };
    let beta_coverage_2sd = if config_mode == FilterMode::Tracking {
        let mean = result.mean_series("beta").expect("tracking layout");
        let sd = result.sd_series("beta").expect("tracking layout");
        let covered = result
            .times
            .iter()
            .enumerate()
            .filter(|(j, t)| {
                let truth = transmission_rate(**t, params.b0, params.b1);
                (truth - mean[*j]).abs() <= 2.0 * sd[*j]
            })
            .count();
        Some(covered as f64 / result.times.len() as f64)
    } else {
        None
    };
    let gamma = consistency_gamma(&result.innovations)?;
    Ok(ReplicateScores {
        seed: result.seed,
        mse_s,
        mse_i,
        mse_cases,
        rel_err_b0,
        rel_err_b1,
        beta_coverage_2sd,
        gamma: gamma.gamma,
        gamma_excluded: gamma.excluded,
    })
}

/// Run all replicates of a scenario in memory (no files).
pub fn run_scenario_in_memory(
    config: &ScenarioConfig,
    dataset: &SyntheticDataset,
) -> Result<Vec<(ReplicateScores, FilterResult)>, HarnessError> {
    config.validate()?;
    let params = dataset.params;
    let seeds: Vec<u64> = (0..config.replicates)
        .map(|k| RngFactory::replicate_seed(config.seed, k as u64))
        .collect();
    let results: Vec<Result<(ReplicateScores, FilterResult), HarnessError>> = seeds
        .par_iter()
        .map(|seed| {
            let spec = config.run_spec(params, *seed);
            let result = run_filter(&spec, dataset)?;
            let scores = score_run(config.mode, dataset, &params, &result)?;
            Ok((scores, result))
        })
        .collect();
    results.into_iter().collect()
}

/// Run a scenario and persist its artifacts: `summary.json` plus one
/// `repNNN/series.csv` per replicate.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<RunArtifact, HarnessError> {
    let dataset = resolve_dataset(&config.dataset)?;
    let runs = run_scenario_in_memory(config, &dataset)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    for (k, (_, result)) in runs.iter().enumerate() {
        let rep_dir = out_dir.join(format!("rep{k:03}"));
        fs::create_dir_all(&rep_dir).map_err(|e| HarnessError::Io {
            path: rep_dir.clone(),
            message: e.to_string(),
        })?;
        write_series_csv(&rep_dir.join("series.csv"), &dataset, result)?;
    }
    let scores: Vec<ReplicateScores> = runs.iter().map(|(s, _)| s.clone()).collect();
    let artifact = RunArtifact {
        kind: "run".into(),
        config: config.clone(),
        config_sha256: sha256_json(config),
        dataset_sha256: sha256_json(&dataset),
        aggregate: aggregate(&scores),
        replicates: scores,
    };
    write_json(&out_dir.join("summary.json"), &artifact)?;
    Ok(artifact)
}

/// Per-step series columns of one replicate, including the truth and data
/// needed to redraw the study's figures.
fn write_series_csv(
    path: &Path,
    dataset: &SyntheticDataset,
    result: &FilterResult,
) -> Result<(), HarnessError> {
    let mut header = vec![
        "time", "data", "s_truth", "s_mean", "s_sd", "i_truth", "i_mean", "i_sd",
    ];
    let has_cases = result.case_estimates.is_some();
    if has_cases {
        header.extend(["cases_truth", "cases_mean", "cases_sd"]);
    }
    let params = dataset.params;
    let mode_cols: &[&str] = match result.layout.param_dim() {
        0 => &[],
        1 => &["beta_truth", "beta_mean", "beta_sd"],
        _ => &[
            "b0_truth", "b0_mean", "b0_sd", "b1_truth", "b1_mean", "b1_sd",
        ],
    };
    header.extend(mode_cols);

    let mut w = CsvWriter::create(path, &header).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let s_mean = result.mean_series("S").unwrap();
    let s_sd = result.sd_series("S").unwrap();
    let i_mean = result.mean_series("I").unwrap();
    let i_sd = result.sd_series("I").unwrap();
    for j in 0..result.n_steps() {
        let t = result.times[j];
        let mut row = vec![
            t,
            dataset.observations[j],
            dataset.truth_states.s_at_obs[j],
            s_mean[j],
            s_sd[j],
            dataset.truth_states.i_at_obs[j],
            i_mean[j],
            i_sd[j],
        ];
        if let Some(cases) = &result.case_estimates {
            row.extend([dataset.truth_monthly_cases[j], cases.mean[j], cases.sd[j]]);
        }
        match result.layout.param_dim() {
            0 => {}
            1 => {
                row.extend([
                    transmission_rate(t, params.b0, params.b1),
                    result.posterior_mean[j][2],
                    result.posterior_sd[j][2],
                ]);
            }
            _ => {
                row.extend([
                    params.b0,
                    result.posterior_mean[j][2],
                    result.posterior_sd[j][2],
                    params.b1,
                    result.posterior_mean[j][3],
                    result.posterior_sd[j][3],
                ]);
            }
        }
        w.write_row(&row).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    w.finish().map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Four-case comparison on one shared dataset instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonArtifact {
    pub kind: String,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub per_case: Vec<(u8, AggregateScores)>,
}

/// Run all four observation operators in the configured mode against the
/// same dataset instance and persist per-case artifacts plus a comparison
/// table.
pub fn compare_cases(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<ComparisonArtifact, HarnessError> {
    config.validate()?;
    let dataset = resolve_dataset(&config.dataset)?;
    let dataset_sha256 = sha256_json(&dataset);
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;

    let mut per_case = Vec::new();
    for case in ObservationCase::ALL {
        let mut case_config = config.clone();
        case_config.case = case;
        let case_dir = out_dir.join(format!("case{}", case.number()));
        let runs = run_scenario_in_memory(&case_config, &dataset)?;
        fs::create_dir_all(&case_dir).map_err(|e| HarnessError::Io {
            path: case_dir.clone(),
            message: e.to_string(),
        })?;
        for (k, (_, result)) in runs.iter().enumerate() {
            let rep_dir = case_dir.join(format!("rep{k:03}"));
            fs::create_dir_all(&rep_dir).map_err(|e| HarnessError::Io {
                path: rep_dir.clone(),
                message: e.to_string(),
            })?;
            write_series_csv(&rep_dir.join("series.csv"), &dataset, result)?;
        }
        let scores: Vec<ReplicateScores> = runs.iter().map(|(s, _)| s.clone()).collect();
        let artifact = RunArtifact {
            kind: "run".into(),
            config: case_config.clone(),
            config_sha256: sha256_json(&case_config),
            dataset_sha256: dataset_sha256.clone(),
            aggregate: aggregate(&scores),
            replicates: scores,
        };
        write_json(&case_dir.join("summary.json"), &artifact)?;
        per_case.push((case.number(), artifact.aggregate.clone()));
    }

    let comparison = ComparisonArtifact {
        kind: "comparison".into(),
        config: config.clone(),
        config_sha256: sha256_json(config),
        dataset_sha256,
        per_case,
    };
    write_json(&out_dir.join("comparison.json"), &comparison)?;

    let path = out_dir.join("comparison.csv");
    let mut w = CsvWriter::create(
        &path,
        &[
            "case",
            "mse_s_mean",
            "mse_s_sd",
            "mse_i_mean",
            "mse_i_sd",
            "gamma_mean",
            "gamma_sd",
        ],
    )
    .map_err(|e| HarnessError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    for (case, agg) in &comparison.per_case {
        w.write_tagged_row(
            &case.to_string(),
            &[
                agg.mse_s.mean,
                agg.mse_s.sd,
                agg.mse_i.mean,
                agg.mse_i.sd,
                agg.gamma.mean,
                agg.gamma.sd,
            ],
        )
        .map_err(|e| HarnessError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    w.finish().map_err(|e| HarnessError::Io {
        path,
        message: e.to_string(),
    })?;
    Ok(comparison)
}

/// One grid point of an observation-noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub case: u8,
    pub sigma_d: f64,
    pub scores: AggregateScores,
    pub per_replicate: Vec<ReplicateScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub kind: String,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub sigma_d_values: Vec<f64>,
    pub cases: Vec<u8>,
    pub grid: Vec<SweepPoint>,
}

pub const DEFAULT_SIGMA_D_VALUES: [f64; 6] = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0];

/// Sweep the filter's observation-noise level over `values` for each case
/// in `cases` (base config's case if empty), averaging over replicates.
/// Emits the MSE-vs-sigma_d and gamma-vs-sigma_d tables.
pub fn sweep_sigma_d(
    base: &ScenarioConfig,
    values: &[f64],
    cases: &[ObservationCase],
    out_dir: &Path,
) -> Result<SweepArtifact, HarnessError> {
    base.validate()?;
    if values.is_empty() {
        return Err(HarnessError::Config {
            field: "sigma_d_values".into(),
            message: "must be non-empty".into(),
        });
    }
    if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(HarnessError::Config {
            field: "sigma_d_values".into(),
            message: "all values must be positive and finite".into(),
        });
    }
    let cases: Vec<ObservationCase> = if cases.is_empty() {
        vec![base.case]
    } else {
        cases.to_vec()
    };
    let dataset = resolve_dataset(&base.dataset)?;
    let dataset_sha256 = sha256_json(&dataset);

    let mut grid = Vec::new();
    for case in &cases {
        for sigma_d in values {
            let mut config = base.clone();
            config.case = *case;
            config.sigma_d = *sigma_d;
            let runs = run_scenario_in_memory(&config, &dataset)?;
            let scores: Vec<ReplicateScores> = runs.into_iter().map(|(s, _)| s).collect();
            grid.push(SweepPoint {
                case: case.number(),
                sigma_d: *sigma_d,
                scores: aggregate(&scores),
                per_replicate: scores,
            });
        }
    }

    let artifact = SweepArtifact {
        kind: "sweep".into(),
        config: base.clone(),
        config_sha256: sha256_json(base),
        dataset_sha256,
        sigma_d_values: values.to_vec(),
        cases: cases.iter().map(|c| c.number()).collect(),
        grid,
    };
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    write_json(&out_dir.join("sweep.json"), &artifact)?;
    write_sweep_tables(&artifact, out_dir)?;
    Ok(artifact)
}

fn write_sweep_tables(artifact: &SweepArtifact, out_dir: &Path) -> Result<(), HarnessError> {
    let io_err = |path: &Path, e: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mse_path = out_dir.join("mse_table.csv");
    let mut w = CsvWriter::create(
        &mse_path,
        &[
            "case",
            "sigma_d",
            "mse_s_mean",
            "mse_s_sd",
            "mse_i_mean",
            "mse_i_sd",
        ],
    )
    .map_err(|e| io_err(&mse_path, e))?;
    for p in &artifact.grid {
        w.write_tagged_row(
            &p.case.to_string(),
            &[
                p.sigma_d,
                p.scores.mse_s.mean,
                p.scores.mse_s.sd,
                p.scores.mse_i.mean,
                p.scores.mse_i.sd,
            ],
        )
        .map_err(|e| io_err(&mse_path, e))?;
    }
    w.finish().map_err(|e| io_err(&mse_path, e))?;

    let gamma_path = out_dir.join("gamma_table.csv");
    let mut w = CsvWriter::create(&gamma_path, &["case", "sigma_d", "gamma_mean", "gamma_sd"])
        .map_err(|e| io_err(&gamma_path, e))?;
    for p in &artifact.grid {
        w.write_tagged_row(
            &p.case.to_string(),
            &[p.sigma_d, p.scores.gamma.mean, p.scores.gamma.sd],
        )
        .map_err(|e| io_err(&gamma_path, e))?;
    }
    w.finish().map_err(|e| io_err(&gamma_path, e))
}

/// Consistency report: gamma per case at the configured noise level,
/// averaged over replicates (a one-value sweep).
pub fn consistency_report(
    config: &ScenarioConfig,
    cases: &[ObservationCase],
    out_dir: &Path,
) -> Result<SweepArtifact, HarnessError> {
    let mut artifact = sweep_sigma_d(config, &[config.sigma_d], cases, out_dir)?;
    artifact.kind = "consistency".into();
    write_json(&out_dir.join("sweep.json"), &artifact)?;
    Ok(artifact)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, json).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_run_artifact(path: &Path) -> Result<RunArtifact, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: format!("not a run artifact: {e}"),
    })
}

/// Write a generated dataset as JSON plus a (time, observation) CSV.
pub fn write_dataset(dataset: &SyntheticDataset, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    write_json(&out_dir.join("dataset.json"), dataset)?;
    let csv_path = out_dir.join("dataset.csv");
    let mut w =
        CsvWriter::create(&csv_path, &["time", "observation"]).map_err(|e| HarnessError::Io {
            path: csv_path.clone(),
            message: e.to_string(),
        })?;
    for (t, y) in dataset.times.iter().zip(&dataset.observations) {
        w.write_row(&[*t, *y]).map_err(|e| HarnessError::Io {
            path: csv_path.clone(),
            message: e.to_string(),
        })?;
    }
    w.finish().map_err(|e| HarnessError::Io {
        path: csv_path,
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    Config { field: String, message: String },
    Io { path: PathBuf, message: String },
    Synthesis(SynthesisError),
    Filter(FilterError),
    Diagnostics(DiagnosticsError),
    MissingSeries(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config { field, message } => {
                write!(f, "config error at `{field}`: {message}")
            }
            HarnessError::Io { path, message } => {
                write!(f, "io error at {}: {message}", path.display())
            }
            HarnessError::Synthesis(e) => write!(f, "{e}"),
            HarnessError::Filter(e) => write!(f, "{e}"),
            HarnessError::Diagnostics(e) => write!(f, "{e}"),
            HarnessError::MissingSeries(name) => {
                write!(f, "artifact is missing required series `{name}`")
            }
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    /// Process exit code contract: 2 for configuration problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Io { .. } => 2,
            _ => 3,
        }
    }
}

impl From<SynthesisError> for HarnessError {
    fn from(e: SynthesisError) -> Self {
        HarnessError::Synthesis(e)
    }
}

impl From<FilterError> for HarnessError {
    fn from(e: FilterError) -> Self {
        HarnessError::Filter(e)
    }
}

impl From<DiagnosticsError> for HarnessError {
    fn from(e: DiagnosticsError) -> Self {
        HarnessError::Diagnostics(e)
    }
}
