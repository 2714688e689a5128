//! Experiment CLI: synthetic-data generation, filtering scenarios,
//! four-case comparisons, observation-noise sweeps, consistency reports,
//! and figure-data emission.
//!
//! Exit codes: 0 on success, 2 for configuration/file problems, 3 for
//! numerical failures (details on standard error).

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sirfilter::filters::FilterMode;
use sirfilter::harness::{
    compare_cases, consistency_report, emit_plot_data, render_line_chart, resolve_dataset,
    run_scenario, sweep_sigma_d, write_dataset, DatasetSource, FigureTarget, HarnessError,
    ScenarioConfig, DEFAULT_SIGMA_D_VALUES,
};
use sirfilter::observation::ObservationCase;
use sirfilter::synthesis::GenerationSpec;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "sirfilter",
    version,
    about = "Ensemble Kalman filtering experiments for SIR epidemic models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic data set (JSON + CSV).
    Generate(GenerateArgs),
    /// Run one filtering scenario and persist its artifacts.
    Run(ScenarioArgs),
    /// Run all four observation operators against one shared data set.
    Compare(ScenarioArgs),
    /// Sweep the filter's observation-noise level over a grid.
    Sweep(SweepArgs),
    /// Report the innovation-consistency ratio per observation operator.
    Consistency(ConsistencyArgs),
    /// Emit the per-panel CSV data behind a figure.
    PlotData(PlotDataArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generation spec JSON (defaults used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon_years: Option<usize>,
    /// Observation operator generating the data (1-4).
    #[arg(long)]
    case: Option<u8>,
    /// Additive noise standard deviation.
    #[arg(long)]
    sigma_noise: Option<f64>,
    /// Use the multiplicative (log-scale) noise model with this standard
    /// deviation instead of the additive one.
    #[arg(long)]
    sigma_log: Option<f64>,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// state | constant-params | tracking
    #[arg(long, value_parser = parse_mode)]
    mode: Option<FilterMode>,
    /// Observation operator used by the filter (1-4).
    #[arg(long, value_parser = parse_case)]
    case: Option<ObservationCase>,
    /// Path to a dataset JSON (otherwise generated from the config).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    n_ensemble: Option<usize>,
    #[arg(long)]
    sigma_c: Option<f64>,
    #[arg(long)]
    sigma_d: Option<f64>,
    #[arg(long)]
    sigma_e: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated observation-noise standard deviations.
    #[arg(long, value_delimiter = ',')]
    sigma_d_values: Option<Vec<f64>>,
    /// Comma-separated observation operators to sweep (default: the
    /// configured case).
    #[arg(long, value_delimiter = ',', value_parser = parse_case)]
    cases: Option<Vec<ObservationCase>>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated observation operators to report (default: all four).
    #[arg(long, value_delimiter = ',', value_parser = parse_case)]
    cases: Option<Vec<ObservationCase>>,
}

#[derive(Args)]
struct PlotDataArgs {
    /// Artifact to slice: dataset.json, summary.json, or sweep.json.
    #[arg(long)]
    artifact: PathBuf,
    /// Figure id (fig3-fig11, figA1, figB1).
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
    /// Also render each emitted panel as a static SVG line chart.
    #[arg(long)]
    svg: bool,
}

fn parse_mode(s: &str) -> Result<FilterMode, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "state" => Ok(FilterMode::State),
        "constant_params" => Ok(FilterMode::ConstantParams),
        "tracking" => Ok(FilterMode::Tracking),
        other => Err(format!(
            "unknown mode `{other}`; expected state, constant-params, or tracking"
        )),
    }
}

fn parse_case(s: &str) -> Result<ObservationCase, String> {
    let n: u8 = s
        .trim_start_matches("case")
        .parse()
        .map_err(|_| format!("unknown case `{s}`; expected 1-4"))?;
    ObservationCase::from_number(n).ok_or_else(|| format!("case out of range: {n}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<HarnessError>()
                .map(HarnessError::exit_code)
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => {
            let config = scenario_config(&args)?;
            let artifact = run_scenario(&config, &args.out)?;
            println!(
                "run complete: {} replicate(s), MSE_S {:.6e}, MSE_I {:.6e}, gamma {:.4} -> {}",
                artifact.replicates.len(),
                artifact.aggregate.mse_s.mean,
                artifact.aggregate.mse_i.mean,
                artifact.aggregate.gamma.mean,
                args.out.join("summary.json").display()
            );
            Ok(())
        }
        Command::Compare(args) => {
            let config = scenario_config(&args)?;
            let comparison = compare_cases(&config, &args.out)?;
            println!("case  MSE_S         MSE_I         gamma");
            for (case, agg) in &comparison.per_case {
                println!(
                    "{case:>4}  {:<12.6e}  {:<12.6e}  {:.4}",
                    agg.mse_s.mean, agg.mse_i.mean, agg.gamma.mean
                );
            }
            println!("-> {}", args.out.join("comparison.json").display());
            Ok(())
        }
        Command::Sweep(args) => {
            let mut config = scenario_config(&args.scenario)?;
            if args.scenario.replicates.is_none() {
                config.replicates = 10;
            }
            let values = args
                .sigma_d_values
                .unwrap_or_else(|| DEFAULT_SIGMA_D_VALUES.to_vec());
            let cases = args.cases.unwrap_or_default();
            let artifact = sweep_sigma_d(&config, &values, &cases, &args.scenario.out)?;
            println!(
                "sweep complete: {} grid points -> {}",
                artifact.grid.len(),
                args.scenario.out.join("sweep.json").display()
            );
            Ok(())
        }
        Command::Consistency(args) => {
            let mut config = scenario_config(&args.scenario)?;
            if args.scenario.replicates.is_none() {
                config.replicates = 5;
            }
            let cases = args.cases.unwrap_or_else(|| ObservationCase::ALL.to_vec());
            let artifact = consistency_report(&config, &cases, &args.scenario.out)?;
            println!(
                "case  sigma_d  gamma (mean over {} run(s))",
                config.replicates
            );
            for p in &artifact.grid {
                println!(
                    "{:>4}  {:>7}  {:.4}",
                    p.case, p.sigma_d, p.scores.gamma.mean
                );
            }
            println!("-> {}", args.scenario.out.join("sweep.json").display());
            Ok(())
        }
        Command::PlotData(args) => {
            let target = FigureTarget::from_str(&args.target)?;
            let files = emit_plot_data(&args.artifact, target, &args.out)?;
            for f in &files {
                println!("wrote {}", f.display());
                if args.svg {
                    let svg = f.with_extension("svg");
                    render_line_chart(f, &svg)?;
                    println!("wrote {}", svg.display());
                }
            }
            Ok(())
        }
    }
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let mut spec: GenerationSpec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| HarnessError::Config {
                field: "config".into(),
                message: format!("bad generation spec: {e}"),
            })?
        }
        None => GenerationSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(h) = args.horizon_years {
        spec.horizon_years = h;
    }
    if let Some(case) = args.case {
        spec.gen_case = ObservationCase::from_number(case).ok_or(HarnessError::Config {
            field: "case".into(),
            message: format!("case out of range: {case}"),
        })?;
    }
    if let Some(sigma) = args.sigma_noise {
        spec.noise = sirfilter::observation::NoiseModel::Additive { sigma };
    }
    if let Some(sigma_log) = args.sigma_log {
        spec.noise = sirfilter::observation::NoiseModel::Multiplicative { sigma_log };
    }
    let dataset = sirfilter::synthesis::generate_dataset(&spec).map_err(HarnessError::from)?;
    write_dataset(&dataset, &args.out)?;
    println!(
        "generated {} observations over {} years -> {}",
        dataset.n_obs(),
        spec.horizon_years,
        args.out.join("dataset.json").display()
    );
    Ok(())
}

fn scenario_config(args: &ScenarioArgs) -> anyhow::Result<ScenarioConfig> {
    let mut config: ScenarioConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| HarnessError::Config {
                field: "config".into(),
                message: format!("bad scenario config: {e}"),
            })?
        }
        None => {
            let mode = args.mode.ok_or(HarnessError::Config {
                field: "mode".into(),
                message: "required unless --config provides it".into(),
            })?;
            let case = args.case.ok_or(HarnessError::Config {
                field: "case".into(),
                message: "required unless --config provides it".into(),
            })?;
            ScenarioConfig::new(mode, case)
        }
    };
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(case) = args.case {
        config.case = case;
    }
    if let Some(path) = &args.dataset {
        config.dataset = DatasetSource::Path(path.clone());
    }
    if let Some(n) = args.n_ensemble {
        config.n_ensemble = n;
    }
    if let Some(v) = args.sigma_c {
        config.sigma_c = v;
    }
    if let Some(v) = args.sigma_d {
        config.sigma_d = v;
    }
    if let Some(v) = args.sigma_e {
        config.sigma_e = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.replicates {
        config.replicates = v;
    }
    config.validate()?;
    // Fail fast on a missing/unreadable dataset file before heavy work.
    if let DatasetSource::Path(_) = &config.dataset {
        resolve_dataset(&config.dataset)?;
    }
    Ok(config)
}
