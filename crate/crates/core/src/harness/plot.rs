//! Figure-data emission: one CSV per panel with deterministic column
//! order, sliced out of run/sweep/dataset artifacts.

use super::csvio::{read_csv, CsvWriter};
use super::{HarnessError, RunArtifact, SweepArtifact};
use crate::synthesis::SyntheticDataset;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Which figure's underlying data to emit.
///
/// Dataset figures (3, A.1) slice a dataset file; time-series figures
/// (4-8, 10, 11) slice a run artifact; sweep figures (9, B.1) slice a
/// sweep artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureTarget {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    FigA1,
    FigB1,
}

impl FigureTarget {
    pub const ALL_NAMES: &'static [&'static str] = &[
        "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "figA1", "figB1",
    ];
}

impl FromStr for FigureTarget {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig3" => Ok(FigureTarget::Fig3),
            "fig4" => Ok(FigureTarget::Fig4),
            "fig5" => Ok(FigureTarget::Fig5),
            "fig6" => Ok(FigureTarget::Fig6),
            "fig7" => Ok(FigureTarget::Fig7),
            "fig8" => Ok(FigureTarget::Fig8),
            "fig9" => Ok(FigureTarget::Fig9),
            "fig10" => Ok(FigureTarget::Fig10),
            "fig11" => Ok(FigureTarget::Fig11),
            "figa1" => Ok(FigureTarget::FigA1),
            "figb1" => Ok(FigureTarget::FigB1),
            other => Err(HarnessError::Config {
                field: "target".into(),
                message: format!(
                    "unknown figure `{other}`; expected one of {:?}",
                    FigureTarget::ALL_NAMES
                ),
            }),
        }
    }
}

enum LoadedArtifact {
    Dataset(SyntheticDataset),
    Run(PathBuf),
    Sweep(SweepArtifact),
}

fn load_artifact(path: &Path) -> Result<LoadedArtifact, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: format!("not JSON: {e}"),
    })?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("run") => {
            // Validate the artifact shape; the panels read the series CSV.
            let _: RunArtifact = serde_json::from_value(value).map_err(|e| HarnessError::Io {
                path: path.to_path_buf(),
                message: format!("malformed run artifact: {e}"),
            })?;
            let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            Ok(LoadedArtifact::Run(dir))
        }
        Some("sweep") | Some("consistency") => {
            let artifact: SweepArtifact =
                serde_json::from_value(value).map_err(|e| HarnessError::Io {
                    path: path.to_path_buf(),
                    message: format!("malformed sweep artifact: {e}"),
                })?;
            Ok(LoadedArtifact::Sweep(artifact))
        }
        _ => {
            let dataset: SyntheticDataset =
                serde_json::from_value(value).map_err(|e| HarnessError::Io {
                    path: path.to_path_buf(),
                    message: format!("neither a dataset, run, nor sweep artifact: {e}"),
                })?;
            Ok(LoadedArtifact::Dataset(dataset))
        }
    }
}

/// Emit the per-panel CSVs behind `target`, returning the written paths.
///
/// Run-artifact panels use the first replicate's series. Band columns are
/// two posterior standard deviations around the mean.
pub fn emit_plot_data(
    artifact_path: &Path,
    target: FigureTarget,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let loaded = load_artifact(artifact_path)?;
    match (target, loaded) {
        (FigureTarget::Fig3 | FigureTarget::FigA1, LoadedArtifact::Dataset(d)) => {
            dataset_panels(&d, out_dir)
        }
        (FigureTarget::Fig4 | FigureTarget::Fig10, LoadedArtifact::Run(dir)) => {
            run_panels(&dir, out_dir, &[])
        }
        (
            FigureTarget::Fig5 | FigureTarget::Fig6 | FigureTarget::Fig11,
            LoadedArtifact::Run(dir),
        ) => run_panels(&dir, out_dir, &["b0", "b1"]),
        (FigureTarget::Fig7 | FigureTarget::Fig8, LoadedArtifact::Run(dir)) => {
            run_panels(&dir, out_dir, &["beta"])
        }
        (FigureTarget::Fig9, LoadedArtifact::Sweep(a)) => sweep_mse_panels(&a, out_dir),
        (FigureTarget::FigB1, LoadedArtifact::Sweep(a)) => sweep_gamma_panel(&a, out_dir),
        (t, _) => Err(HarnessError::Config {
            field: "target".into(),
            message: format!("artifact kind does not provide the series for {t:?}"),
        }),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn dataset_panels(d: &SyntheticDataset, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let s_path = out_dir.join("s.csv");
    let mut w = CsvWriter::create(&s_path, &["time", "truth"]).map_err(io_err(&s_path))?;
    for (t, s) in d.truth_states.times.iter().zip(&d.truth_states.s) {
        w.write_row(&[*t, *s]).map_err(io_err(&s_path))?;
    }
    w.finish().map_err(io_err(&s_path))?;
    written.push(s_path);

    let i_path = out_dir.join("i.csv");
    let mut w = CsvWriter::create(&i_path, &["time", "truth"]).map_err(io_err(&i_path))?;
    for (t, i) in d.truth_states.times.iter().zip(&d.truth_states.i) {
        w.write_row(&[*t, *i]).map_err(io_err(&i_path))?;
    }
    w.finish().map_err(io_err(&i_path))?;
    written.push(i_path);

    let c_path = out_dir.join("cases.csv");
    let mut w = CsvWriter::create(&c_path, &["time", "truth", "data"]).map_err(io_err(&c_path))?;
    for j in 0..d.n_obs() {
        w.write_row(&[d.times[j], d.truth_monthly_cases[j], d.observations[j]])
            .map_err(io_err(&c_path))?;
    }
    w.finish().map_err(io_err(&c_path))?;
    written.push(c_path);
    Ok(written)
}

/// Column positions in a series.csv produced by the scenario runner.
struct SeriesTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SeriesTable {
    fn load(path: &Path) -> Result<Self, HarnessError> {
        let (header, raw) = read_csv(path).map_err(io_err(path))?;
        let mut rows = Vec::with_capacity(raw.len());
        for r in raw {
            let parsed: Result<Vec<f64>, _> = r.iter().map(|c| c.parse::<f64>()).collect();
            rows.push(parsed.map_err(|e| HarnessError::Io {
                path: path.to_path_buf(),
                message: format!("bad float in series.csv: {e}"),
            })?);
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn run_panels(
    artifact_dir: &Path,
    out_dir: &Path,
    required_params: &[&str],
) -> Result<Vec<PathBuf>, HarnessError> {
    let series_path = artifact_dir.join("rep000").join("series.csv");
    let table = SeriesTable::load(&series_path)?;
    for p in required_params {
        if table.column(&format!("{p}_mean")).is_none() {
            return Err(HarnessError::MissingSeries((*p).into()));
        }
    }

    let mut written = Vec::new();
    let mut band_panel = |name: &str, with_data: bool| -> Result<(), HarnessError> {
        let truth = table
            .column(&format!("{name}_truth"))
            .ok_or_else(|| HarnessError::MissingSeries(name.into()))?;
        let mean = table.column(&format!("{name}_mean")).unwrap();
        let sd = table.column(&format!("{name}_sd")).unwrap();
        let path = out_dir.join(format!("{name}.csv"));
        let mut header = vec!["time", "truth", "mean", "lo2sd", "hi2sd"];
        if with_data {
            header.push("data");
        }
        let mut w = CsvWriter::create(&path, &header).map_err(io_err(&path))?;
        for row in &table.rows {
            let mut out = vec![
                row[0],
                row[truth],
                row[mean],
                row[mean] - 2.0 * row[sd],
                row[mean] + 2.0 * row[sd],
            ];
            if with_data {
                out.push(row[1]);
            }
            w.write_row(&out).map_err(io_err(&path))?;
        }
        w.finish().map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };

    band_panel("s", false)?;
    band_panel("i", false)?;
    if table.column("cases_mean").is_some() {
        band_panel("cases", true)?;
    }
    for p in required_params {
        band_panel(p, false)?;
    }
    Ok(written)
}

fn sweep_mse_panels(
    artifact: &SweepArtifact,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    for case in &artifact.cases {
        let path = out_dir.join(format!("mse_case{case}.csv"));
        let mut w = CsvWriter::create(
            &path,
            &[
                "sigma_d",
                "mse_s_mean",
                "mse_s_sd",
                "mse_i_mean",
                "mse_i_sd",
            ],
        )
        .map_err(io_err(&path))?;
        for p in artifact.grid.iter().filter(|p| p.case == *case) {
            w.write_row(&[
                p.sigma_d,
                p.scores.mse_s.mean,
                p.scores.mse_s.sd,
                p.scores.mse_i.mean,
                p.scores.mse_i.sd,
            ])
            .map_err(io_err(&path))?;
        }
        w.finish().map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn sweep_gamma_panel(
    artifact: &SweepArtifact,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let path = out_dir.join("gamma.csv");
    let mut header = vec!["sigma_d".to_string()];
    header.extend(artifact.cases.iter().map(|c| format!("case_{c}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&path, &header_refs).map_err(io_err(&path))?;
    for sigma_d in &artifact.sigma_d_values {
        let mut row = vec![*sigma_d];
        for case in &artifact.cases {
            let point = artifact
                .grid
                .iter()
                .find(|p| p.case == *case && p.sigma_d == *sigma_d)
                .ok_or_else(|| HarnessError::MissingSeries(format!("gamma case {case}")))?;
            row.push(point.scores.gamma.mean);
        }
        w.write_row(&row).map_err(io_err(&path))?;
    }
    w.finish().map_err(io_err(&path))?;
    Ok(vec![path])
}
