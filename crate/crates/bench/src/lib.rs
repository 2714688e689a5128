//! Shared fixtures for the criterion benches: a cached short-horizon data
//! set and pre-built run specs.

use sirfilter::dynamics::{ModelParams, Tolerances};
use sirfilter::filters::{FilterMode, NoiseSpec, PriorSpec, RunSpec};
use sirfilter::observation::ObservationCase;
use sirfilter::synthesis::{generate_dataset, GenerationSpec, SyntheticDataset};
use std::sync::OnceLock;

/// Two years of monthly observations from the standard generation spec.
pub fn bench_dataset() -> &'static SyntheticDataset {
    static DATASET: OnceLock<SyntheticDataset> = OnceLock::new();
    DATASET.get_or_init(|| {
        generate_dataset(&GenerationSpec {
            horizon_years: 2,
            ..GenerationSpec::default()
        })
        .expect("bench dataset generates")
    })
}

pub fn bench_spec(mode: FilterMode, case: ObservationCase, n_ensemble: usize) -> RunSpec {
    RunSpec {
        mode,
        case,
        params_known: ModelParams::default(),
        priors: PriorSpec::default(),
        noise: NoiseSpec::default(),
        n_ensemble,
        seed: 1,
        tolerances: Tolerances::default(),
        record_draws: false,
    }
}
