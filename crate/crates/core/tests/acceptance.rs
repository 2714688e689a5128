//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them all).
//!
//! Quantitative targets reproduce a simulation study; stochastic results
//! carry order-of-magnitude windows over fixed seed panels.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use sirfilter::diagnostics::mse;
use sirfilter::dynamics::{
    self, burn_in, integrate, BetaSource, EpidemicState, ModelParams, Tolerances,
};
use sirfilter::filters::{
    analyze_with_perturbed, enkf_analyze, enkf_predict, kf_step, parameter_drift, run_filter,
    Ensemble, FilterMode, GaussianBelief, Layout, NoiseSpec, PriorSpec, Propagated, RunSpec,
};
use sirfilter::harness::{run_scenario, run_scenario_in_memory, DatasetSource, ScenarioConfig};
use sirfilter::observation::{observe, ObservationCase};
use sirfilter::rng::{RngFactory, StreamDomain};
use sirfilter::synthesis::{generate_dataset, GenerationSpec, SyntheticDataset};
use std::sync::OnceLock;

/// The shared study data set (defaults: ten years, under-reported
/// incidence, additive noise).
fn dataset() -> &'static SyntheticDataset {
    static DATASET: OnceLock<SyntheticDataset> = OnceLock::new();
    DATASET.get_or_init(|| generate_dataset(&GenerationSpec::default()).expect("dataset"))
}

fn base_spec(mode: FilterMode, case: ObservationCase, seed: u64) -> RunSpec {
    RunSpec {
        mode,
        case,
        params_known: ModelParams::default(),
        priors: PriorSpec::default(),
        noise: NoiseSpec::default(),
        n_ensemble: 100,
        seed,
        tolerances: Tolerances::default(),
        record_draws: false,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

fn within_decade(value: f64, target: f64) -> bool {
    value >= target / 10.0 && value <= target * 10.0
}

const SEED_PANEL: [u64; 5] = [1, 2, 3, 4, 5];

struct StateMse {
    s: f64,
    i: f64,
}

fn state_run_mse(case: ObservationCase, seed: u64, sigma_d: f64) -> StateMse {
    let d = dataset();
    let mut spec = base_spec(FilterMode::State, case, seed);
    spec.noise.sigma_d = sigma_d;
    let r = run_filter(&spec, d).expect("state run");
    StateMse {
        s: mse(&d.truth_states.s_at_obs, &r.mean_series("S").unwrap()).unwrap(),
        i: mse(&d.truth_states.i_at_obs, &r.mean_series("I").unwrap()).unwrap(),
    }
}

#[test]
fn criterion_1_table2_state_estimation() {
    let started = std::time::Instant::now();
    // Reference MSE values per case (case 1 through 4).
    let targets = [
        (ObservationCase::Prevalence, 7.89e5, 2.79e3),
        (ObservationCase::UnderReportedPrevalence, 1.86e6, 4.07e3),
        (ObservationCase::Incidence, 1.01e5, 16.28),
        (ObservationCase::UnderReportedIncidence, 22.30, 0.01),
    ];
    let mut per_case = std::collections::HashMap::new();
    for (case, _, _) in targets {
        let runs: Vec<StateMse> = SEED_PANEL
            .iter()
            .map(|seed| state_run_mse(case, *seed, 1.0))
            .collect();
        per_case.insert(case.number(), runs);
    }
    let elapsed = started.elapsed();

    let mut ok = true;
    let mut detail = String::new();
    for (case, target_s, target_i) in targets {
        let runs = &per_case[&case.number()];
        let med_s = median(&mut runs.iter().map(|m| m.s).collect::<Vec<_>>());
        let med_i = median(&mut runs.iter().map(|m| m.i).collect::<Vec<_>>());
        let hit = within_decade(med_s, target_s) && within_decade(med_i, target_i);
        ok &= hit;
        detail.push_str(&format!(
            "case{} MSE_S {med_s:.3e}/{target_s:.2e} MSE_I {med_i:.3e}/{target_i:.2e}{} ",
            case.number(),
            if hit { "" } else { " OUT-OF-WINDOW" }
        ));
    }
    // Strict ordering case4 < case3 < cases 1 and 2, per seed, both states.
    let mut ordered_seeds = 0;
    for (((c1, c2), c3), c4) in per_case[&1]
        .iter()
        .zip(&per_case[&2])
        .zip(&per_case[&3])
        .zip(&per_case[&4])
    {
        let s_ok = c4.s < c3.s && c3.s < c1.s.min(c2.s);
        let i_ok = c4.i < c3.i && c3.i < c1.i.min(c2.i);
        if s_ok && i_ok {
            ordered_seeds += 1;
        }
    }
    ok &= ordered_seeds >= 4;
    ok &= elapsed.as_secs() <= 120;

    println!(
        "ACCEPTANCE 1 table2-state-estimation: {} — {detail}ordering {ordered_seeds}/5 seeds, runtime {elapsed:.1?}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "{detail}; ordering in {ordered_seeds}/5 seeds; runtime {elapsed:?}"
    );
}

#[test]
fn criterion_2_constant_parameter_convergence() {
    let d = dataset();
    let truth = ModelParams::default();

    let mut case4_hits = 0;
    let mut case4_detail = (0.0f64, 0.0f64);
    for seed in SEED_PANEL {
        let spec = base_spec(
            FilterMode::ConstantParams,
            ObservationCase::UnderReportedIncidence,
            seed,
        );
        let r = run_filter(&spec, d).unwrap();
        let re_b0 = (r.mean_series("b0").unwrap().last().unwrap() - truth.b0).abs() / truth.b0;
        let re_b1 = (r.mean_series("b1").unwrap().last().unwrap() - truth.b1).abs() / truth.b1;
        case4_detail = (case4_detail.0.max(re_b0), case4_detail.1.max(re_b1));
        if re_b0 < 1e-2 && re_b1 < 1e-2 {
            case4_hits += 1;
        }
    }

    let mut case3_hits = 0;
    let mut case3_values = Vec::new();
    for seed in SEED_PANEL {
        let spec = base_spec(FilterMode::ConstantParams, ObservationCase::Incidence, seed);
        let r = run_filter(&spec, d).unwrap();
        let re_b0 = (r.mean_series("b0").unwrap().last().unwrap() - truth.b0).abs() / truth.b0;
        case3_values.push(re_b0);
        if (0.3..=0.6).contains(&re_b0) {
            case3_hits += 1;
        }
    }

    let ok = case4_hits >= 4 && case3_hits >= 3;
    println!(
        "ACCEPTANCE 2 constant-parameter-convergence: {} — case4 rel errors < 1e-2 in {case4_hits}/5 \
         (worst b0 {:.2e}, b1 {:.2e}); case3 b0 rel err in [0.3,0.6] in {case3_hits}/5 ({:?})",
        if ok { "PASS" } else { "FAIL" },
        case4_detail.0,
        case4_detail.1,
        case3_values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
    );
    assert!(
        ok,
        "case4 {case4_hits}/5, case3 {case3_hits}/5 ({case3_values:?})"
    );
}

#[test]
fn criterion_3_tracking_mode() {
    let d = dataset();
    let truth = ModelParams::default();
    let mut coverages = Vec::new();
    let mut mse_s4 = Vec::new();
    let mut mse_i4 = Vec::new();
    for seed in SEED_PANEL {
        let spec = base_spec(
            FilterMode::Tracking,
            ObservationCase::UnderReportedIncidence,
            seed,
        );
        let r = run_filter(&spec, d).unwrap();
        let beta_mean = r.mean_series("beta").unwrap();
        let beta_sd = r.sd_series("beta").unwrap();
        let covered = d
            .times
            .iter()
            .enumerate()
            .filter(|(j, t)| {
                let b = dynamics::transmission_rate(**t, truth.b0, truth.b1);
                (b - beta_mean[*j]).abs() <= 2.0 * beta_sd[*j]
            })
            .count();
        coverages.push(covered as f64 / d.times.len() as f64);
        mse_s4.push(mse(&d.truth_states.s_at_obs, &r.mean_series("S").unwrap()).unwrap());
        mse_i4.push(mse(&d.truth_states.i_at_obs, &r.mean_series("I").unwrap()).unwrap());
    }
    let mut mse_s3 = Vec::new();
    for seed in SEED_PANEL {
        let spec = base_spec(FilterMode::Tracking, ObservationCase::Incidence, seed);
        let r = run_filter(&spec, d).unwrap();
        mse_s3.push(mse(&d.truth_states.s_at_obs, &r.mean_series("S").unwrap()).unwrap());
    }

    let med_cov = median(&mut coverages.clone());
    let med_s4 = median(&mut mse_s4.clone());
    let med_i4 = median(&mut mse_i4.clone());
    let med_s3 = median(&mut mse_s3.clone());
    let cov_ok = med_cov >= 0.90;
    let table4_ok = within_decade(med_s4, 1.62e4) && within_decade(med_i4, 0.60);
    let ratio = med_s3 / med_s4;
    let ratio_ok = ratio >= 100.0;
    let ok = cov_ok && table4_ok && ratio_ok;
    println!(
        "ACCEPTANCE 3 tracking-mode: {} — median 2sd coverage {med_cov:.3} (>= 0.90), \
         case4 MSE_S {med_s4:.3e}/1.62e4 MSE_I {med_i4:.3e}/0.60, case3/case4 MSE_S ratio {ratio:.0} (>= 100)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "coverage {med_cov}, case4 ({med_s4:.3e}, {med_i4:.3e}), ratio {ratio:.1}"
    );
}

const SIGMA_D_GRID: [f64; 6] = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0];
const SWEEP_BASE_SEED: u64 = 100;

/// Ten-replicate state-estimation sweep over the sigma_d grid for cases 3
/// and 4, shared between criteria 4 and 5.
fn sweep_scores() -> &'static Vec<(u8, f64, Vec<sirfilter::harness::ReplicateScores>)> {
    static SWEEP: OnceLock<Vec<(u8, f64, Vec<sirfilter::harness::ReplicateScores>)>> =
        OnceLock::new();
    SWEEP.get_or_init(|| {
        let d = dataset();
        let mut grid = Vec::new();
        for case in [
            ObservationCase::Incidence,
            ObservationCase::UnderReportedIncidence,
        ] {
            for sigma_d in SIGMA_D_GRID {
                let mut config = ScenarioConfig::new(FilterMode::State, case);
                config.dataset = DatasetSource::Generate(GenerationSpec::default());
                config.sigma_d = sigma_d;
                config.seed = SWEEP_BASE_SEED;
                config.replicates = 10;
                let scores = run_scenario_in_memory(&config, d)
                    .expect("sweep point")
                    .into_iter()
                    .map(|(s, _)| s)
                    .collect();
                grid.push((case.number(), sigma_d, scores));
            }
        }
        grid
    })
}

fn sweep_mean(
    case: u8,
    sigma_d: f64,
    f: impl Fn(&sirfilter::harness::ReplicateScores) -> f64,
) -> f64 {
    let (_, _, scores) = sweep_scores()
        .iter()
        .find(|(c, s, _)| *c == case && *s == sigma_d)
        .expect("grid point");
    scores.iter().map(&f).sum::<f64>() / scores.len() as f64
}

/// Least-squares slope of y against x.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_4_observation_noise_inflation() {
    let case3_at = |s: f64| sweep_mean(3, s, |r| r.mse_s);
    let drop_ratio = case3_at(1.0) / case3_at(10.0);
    let drop_ok = drop_ratio >= 10.0;

    let plateau: Vec<f64> = [10.0, 15.0, 20.0, 25.0]
        .iter()
        .map(|s| case3_at(*s))
        .collect();
    let plateau_ratio = plateau.iter().cloned().fold(0.0f64, f64::max)
        / plateau.iter().cloned().fold(f64::INFINITY, f64::min);
    let plateau_ok = plateau_ratio <= 3.0;

    let s4: Vec<f64> = SIGMA_D_GRID
        .iter()
        .map(|s| sweep_mean(4, *s, |r| r.mse_s))
        .collect();
    let i4: Vec<f64> = SIGMA_D_GRID
        .iter()
        .map(|s| sweep_mean(4, *s, |r| r.mse_i))
        .collect();
    let case4_ok = slope(&SIGMA_D_GRID, &s4) >= 0.0
        && slope(&SIGMA_D_GRID, &i4) >= 0.0
        && s4[5] > s4[0]
        && i4[5] > i4[0];

    let ok = drop_ok && plateau_ok && case4_ok;
    println!(
        "ACCEPTANCE 4 observation-noise-inflation: {} — case3 MSE_S drop x{drop_ratio:.2} (>= 10 required){}, \
         plateau spread x{plateau_ratio:.2} (<= 3), case4 weakly increasing: {case4_ok}",
        if ok { "PASS" } else { "FAIL" },
        if drop_ok { "" } else { " UNMET" },
    );
    assert!(
        ok,
        "case3 drop ratio {drop_ratio:.2} (required >= 10), plateau x{plateau_ratio:.2}, case4 trend {case4_ok}"
    );
}

#[test]
fn criterion_5_consistency_gamma() {
    // Case 4: five-run average within [0.7, 1.3] at every sigma_d (first
    // five replicates of the shared sweep).
    let mut case4_ok = true;
    let mut case4_detail = String::new();
    for sigma_d in SIGMA_D_GRID {
        let (_, _, scores) = sweep_scores()
            .iter()
            .find(|(c, s, _)| *c == 4 && *s == sigma_d)
            .unwrap();
        let g = scores[..5].iter().map(|r| r.gamma).sum::<f64>() / 5.0;
        case4_ok &= (0.7..=1.3).contains(&g);
        case4_detail.push_str(&format!("{g:.2} "));
    }

    // Cases 1-3 at sigma_d = 1 (case 3 reuses the sweep; 1 and 2 run fresh).
    let d = dataset();
    let mut low_ok = true;
    let mut low_detail = String::new();
    for case in [
        ObservationCase::Prevalence,
        ObservationCase::UnderReportedPrevalence,
    ] {
        let mut config = ScenarioConfig::new(FilterMode::State, case);
        config.dataset = DatasetSource::Generate(GenerationSpec::default());
        config.seed = SWEEP_BASE_SEED;
        config.replicates = 5;
        let runs = run_scenario_in_memory(&config, d).unwrap();
        let g = runs.iter().map(|(s, _)| s.gamma).sum::<f64>() / runs.len() as f64;
        low_ok &= (0.15..=0.7).contains(&g);
        low_detail.push_str(&format!("case{} {g:.2} ", case.number()));
    }
    let (_, _, case3_scores) = sweep_scores()
        .iter()
        .find(|(c, s, _)| *c == 3 && *s == 1.0)
        .unwrap();
    let g3 = case3_scores[..5].iter().map(|r| r.gamma).sum::<f64>() / 5.0;
    low_ok &= (0.15..=0.7).contains(&g3);
    low_detail.push_str(&format!("case3 {g3:.2}"));

    let ok = case4_ok && low_ok;
    println!(
        "ACCEPTANCE 5 consistency-gamma: {} — case4 over sigma_d grid: {case4_detail}(in [0.7,1.3]); \
         at sigma_d=1: {low_detail} (in [0.15,0.7])",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "case4 {case4_detail}; low {low_detail}");
}

#[test]
fn criterion_6_linear_gaussian_oracle() {
    // Two-state linear-Gaussian system assimilated by both the classic
    // filter and the ensemble filter at N = 10^4 over 50 steps.
    let f = DMatrix::from_row_slice(2, 2, &[0.99, 0.01, 0.005, 0.985]);
    let g_row = DVector::from_vec(vec![1.0, 0.5]);
    let g = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
    let sigma_c = 0.1;
    let sigma_d = 0.5;
    let c = DMatrix::identity(2, 2) * sigma_c * sigma_c;
    let d_mat = DMatrix::from_element(1, 1, sigma_d * sigma_d);
    let x0 = DVector::from_vec(vec![15.0, 10.0]);
    let gamma0 = DMatrix::identity(2, 2) * 0.25;
    let steps = 50usize;

    // Simulated truth and data.
    let factory = RngFactory::new(2024);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut truth = x0.clone();
    let mut data = Vec::with_capacity(steps);
    for j in 1..=steps {
        let mut rng = factory.stream(StreamDomain::DataNoise, j as u64, 0);
        truth = &f * &truth;
        for i in 0..2 {
            truth[i] += sigma_c * std_normal.sample(&mut rng);
        }
        data.push(g_row.dot(&truth) + sigma_d * std_normal.sample(&mut rng));
    }

    // Classic filter.
    let mut kf = GaussianBelief::new(x0.clone(), gamma0.clone()).unwrap();
    let mut kf_track = Vec::with_capacity(steps);
    for y in &data {
        kf = kf_step(&kf, &f, &g, &c, &d_mat, &DVector::from_element(1, *y)).unwrap();
        kf_track.push((kf.mean.clone(), kf.covariance.clone()));
    }

    // Ensemble filter with the same model.
    let n = 10_000usize;
    let layout = Layout::state_only(vec!["x0", "x1"]);
    let members: Vec<DVector<f64>> = (0..n)
        .map(|m| {
            let mut rng = factory.stream(StreamDomain::InitEnsemble, 0, m as u64);
            // gamma0 = 0.25 I, so the Cholesky factor is 0.5 I.
            DVector::from_vec(vec![
                x0[0] + 0.5 * std_normal.sample(&mut rng),
                x0[1] + 0.5 * std_normal.sample(&mut rng),
            ])
        })
        .collect();
    let mut ensemble = Ensemble::new(members, layout).unwrap();
    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for (j, y) in data.iter().enumerate() {
        let step = (j + 1) as u64;
        let fw = &f;
        let prediction = enkf_predict(
            &ensemble,
            |_m, z: &DVector<f64>| {
                Ok(Propagated {
                    state: fw * z,
                    obs_aux: 0.0,
                })
            },
            sigma_c,
            false,
            &factory,
            step,
        )
        .unwrap();
        let analysis = enkf_analyze(
            &prediction.ensemble,
            |_m, z: &DVector<f64>| Ok(g_row.dot(z)),
            *y,
            sigma_d,
            &factory,
            step,
            false,
        )
        .unwrap();
        ensemble = analysis.ensemble;

        let mean = ensemble.mean();
        let cov = ensemble.covariance();
        let (kf_mean, kf_cov) = &kf_track[j];
        for i in 0..2 {
            worst_mean = worst_mean.max((mean[i] - kf_mean[i]).abs() / kf_mean[i].abs());
            worst_var = worst_var.max((cov[(i, i)] - kf_cov[(i, i)]).abs() / kf_cov[(i, i)].abs());
        }
    }

    let ok = worst_mean < 0.05 && worst_var < 0.05;
    println!(
        "ACCEPTANCE 6 linear-gaussian-oracle: {} — worst relative deviation over 50 steps: \
         mean {worst_mean:.4}, variance {worst_var:.4} (< 0.05)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "mean dev {worst_mean}, var dev {worst_var}");
}

#[test]
fn criterion_7_exact_algebraic_identities() {
    let params = ModelParams::default();
    // Case scaling and collapse identities, exact.
    let mut scaling_ok = true;
    for k in 0..50 {
        let st = EpidemicState {
            s: 1000.0 + 13.7 * k as f64,
            i: 3.0 + 1.3 * k as f64,
            c: 0.5 + 2.9 * k as f64,
        };
        let c1 = observe(ObservationCase::Prevalence, &st, &params).unwrap();
        let c2 = observe(ObservationCase::UnderReportedPrevalence, &st, &params).unwrap();
        let c3 = observe(ObservationCase::Incidence, &st, &params).unwrap();
        let c4 = observe(ObservationCase::UnderReportedIncidence, &st, &params).unwrap();
        scaling_ok &= c2 == params.rho * c1 && c4 == params.rho * c3;
        let full = ModelParams { rho: 1.0, ..params };
        scaling_ok &= observe(ObservationCase::UnderReportedPrevalence, &st, &full).unwrap() == c1;
        scaling_ok &= observe(ObservationCase::UnderReportedIncidence, &st, &full).unwrap() == c3;
    }

    // Ensemble statistics match the defining formulas to machine precision.
    let factory = RngFactory::new(77);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let members: Vec<DVector<f64>> = (0..200)
        .map(|m| {
            let mut rng = factory.stream(StreamDomain::InitEnsemble, 0, m);
            DVector::from_vec(vec![
                5.0 + std_normal.sample(&mut rng),
                -2.0 + 3.0 * std_normal.sample(&mut rng),
                std_normal.sample(&mut rng),
            ])
        })
        .collect();
    let ensemble = Ensemble::new(members.clone(), Layout::state_only(vec!["a", "b", "c"])).unwrap();
    let mut mean = DVector::zeros(3);
    for m in &members {
        mean += m;
    }
    mean /= members.len() as f64;
    let mut cov = DMatrix::zeros(3, 3);
    for m in &members {
        let a = m - &mean;
        cov += &a * a.transpose();
    }
    cov /= members.len() as f64 - 1.0;
    let stats_ok = ensemble.mean() == mean && ensemble.covariance() == cov;

    // Zero-innovation fixed point of the analysis.
    let preds: Vec<f64> = members.iter().map(|m| m[0] + m[1]).collect();
    let (post, _, _) = analyze_with_perturbed(&ensemble, &preds, &preds, 1.0).unwrap();
    let fixed_point_ok = post
        .members()
        .iter()
        .zip(ensemble.members())
        .all(|(a, b)| (0..3).all(|i| a[i].to_bits() == b[i].to_bits()));

    // Empty-parameter augmented pipeline reduces bit-for-bit to the
    // state-only filter under the same streams.
    let d = dataset();
    let spec = base_spec(
        FilterMode::State,
        ObservationCase::UnderReportedIncidence,
        11,
    );
    let reference = run_filter(&spec, d).unwrap();
    let reduction_ok = {
        let factory = RngFactory::new(spec.seed);
        let layout = Layout::augmented(vec!["S", "I"], Vec::new());
        let s_dist =
            rand::distr::Uniform::new(spec.priors.s_factor.0, spec.priors.s_factor.1).unwrap();
        let i_dist =
            rand::distr::Uniform::new(spec.priors.i_factor.0, spec.priors.i_factor.1).unwrap();
        let members: Vec<DVector<f64>> = (0..spec.n_ensemble)
            .map(|m| {
                let mut rng = factory.stream(StreamDomain::InitEnsemble, 0, m as u64);
                DVector::from_vec(vec![
                    s_dist.sample(&mut rng) * d.initial_state.s,
                    i_dist.sample(&mut rng) * d.initial_state.i,
                ])
            })
            .collect();
        let mut ensemble = Ensemble::new(members, layout).unwrap();
        let mut all_equal = true;
        for j in 1..=d.n_obs() {
            let t0 = if j == 1 { 0.0 } else { d.times[j - 2] };
            let t1 = d.times[j - 1];
            let params = spec.params_known;
            let tol = spec.tolerances;
            let prediction = enkf_predict(
                &ensemble,
                |_m, z: &DVector<f64>| {
                    let start = EpidemicState {
                        s: z[0].max(0.0),
                        i: z[1].max(0.0),
                        c: 0.0,
                    };
                    let end = integrate(&start, &params, t0, t1, BetaSource::Seasonal, &tol)
                        .map_err(sirfilter::filters::MemberFailure::from)?;
                    Ok(Propagated {
                        state: DVector::from_vec(vec![end.s, end.i]),
                        obs_aux: end.c,
                    })
                },
                spec.noise.sigma_c,
                true,
                &factory,
                j as u64,
            )
            .unwrap();
            // Parameter drift on an empty block is the identity.
            let drifted =
                parameter_drift(&prediction.ensemble, spec.noise.sigma_e, &factory, j as u64)
                    .unwrap();
            let aux = prediction.obs_aux;
            let analysis = enkf_analyze(
                &drifted,
                |m, z: &DVector<f64>| {
                    let st = EpidemicState {
                        s: z[0],
                        i: z[1],
                        c: aux[m],
                    };
                    observe(spec.case, &st, &params).map_err(Into::into)
                },
                d.observations[j - 1],
                spec.noise.sigma_d,
                &factory,
                j as u64,
                false,
            )
            .unwrap();
            ensemble = analysis.ensemble;
            let mean = ensemble.mean();
            for i in 0..2 {
                all_equal &= mean[i].to_bits() == reference.posterior_mean[j - 1][i].to_bits();
            }
        }
        all_equal
    };

    let ok = scaling_ok && stats_ok && fixed_point_ok && reduction_ok;
    println!(
        "ACCEPTANCE 7 exact-algebraic-identities: {} — case scaling exact: {scaling_ok}, \
         ensemble statistics exact: {stats_ok}, zero-innovation fixed point: {fixed_point_ok}, \
         empty-parameter reduction bit-identical: {reduction_ok}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_8_dynamics_correctness() {
    let tol = Tolerances::default();
    let params = ModelParams {
        b1: 0.0,
        ..ModelParams::default()
    };
    let eq = params.endemic_equilibrium().unwrap();
    let eq_ok = (eq.s - 5001.0).abs() < 1e-9 && (eq.i - 17.0).abs() < 0.01;

    // Stationarity over ten years within 0.1%.
    let end = integrate(&eq, &params, 0.0, 10.0, BetaSource::Seasonal, &tol).unwrap();
    let stationary_ok = (end.s - eq.s).abs() / eq.s < 1e-3 && (end.i - eq.i).abs() / eq.i < 1e-3;

    // Population conservation along the full seasonal transient, checked
    // monthly to relative 1e-6 (the integrator also enforces it per step).
    let seasonal = ModelParams::default();
    let mut state = EpidemicState::new(0.95 * seasonal.n_pop, 0.02 * seasonal.n_pop);
    let mut conservation_ok = true;
    for month in 0..120 {
        let t0 = month as f64 / 12.0;
        let t1 = (month + 1) as f64 / 12.0;
        state = integrate(&state, &seasonal, t0, t1, BetaSource::Seasonal, &tol).unwrap();
        conservation_ok &= state.s >= -tol.atol
            && state.i >= -tol.atol
            && state.s + state.i <= seasonal.n_pop * (1.0 + 1e-6);
    }

    // Self-convergence: one month from the attractor against a 10x tighter
    // reference, and error decreasing under tolerance tightening across
    // the violent first transient year.
    let attractor = burn_in(&seasonal, 0.95, 0.02, 200, &tol).unwrap();
    let coarse = integrate(
        &attractor,
        &seasonal,
        0.0,
        1.0 / 12.0,
        BetaSource::Seasonal,
        &tol,
    )
    .unwrap();
    let fine = integrate(
        &attractor,
        &seasonal,
        0.0,
        1.0 / 12.0,
        BetaSource::Seasonal,
        &tol.scaled(0.1),
    )
    .unwrap();
    let month_ok = (coarse.s - fine.s).abs() / fine.s < 1e-5
        && (coarse.i - fine.i).abs() / fine.i < 1e-5
        && (coarse.c - fine.c).abs() / fine.c < 1e-5;

    let start = EpidemicState::new(0.95 * seasonal.n_pop, 0.02 * seasonal.n_pop);
    let run_at = |rtol: f64| {
        integrate(
            &start,
            &seasonal,
            0.0,
            1.0,
            BetaSource::Seasonal,
            &Tolerances {
                rtol,
                atol: rtol * 0.01,
            },
        )
        .unwrap()
        .s
    };
    let reference = run_at(1e-11);
    let e5 = (run_at(1e-5) - reference).abs();
    let e7 = (run_at(1e-7) - reference).abs();
    let e9 = (run_at(1e-9) - reference).abs();
    let convergence_ok = e5 > e7 && e7 > e9;

    let ok = eq_ok && stationary_ok && conservation_ok && month_ok && convergence_ok;
    println!(
        "ACCEPTANCE 8 dynamics-correctness: {} — equilibrium (5001, 17.0): {eq_ok}, \
         10y stationarity 0.1%: {stationary_ok}, conservation rel 1e-6: {conservation_ok}, \
         month self-convergence < 1e-5: {month_ok}, tolerance ordering e5 {e5:.2e} > e7 {e7:.2e} > e9 {e9:.2e}: {convergence_ok}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_9_determinism() {
    // Identical config + seed must give byte-identical artifacts no matter
    // how many workers run the member propagations.
    let mut config = ScenarioConfig::new(
        FilterMode::Tracking,
        ObservationCase::UnderReportedIncidence,
    );
    config.dataset = DatasetSource::Generate(GenerationSpec {
        horizon_years: 2,
        ..GenerationSpec::default()
    });
    config.n_ensemble = 50;
    config.replicates = 2;
    config.seed = 31;

    let run_with_threads = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_scenario(&config, dir.path()).unwrap());
        let summary = std::fs::read(dir.path().join("summary.json")).unwrap();
        let series = std::fs::read(dir.path().join("rep001/series.csv")).unwrap();
        (summary, series)
    };
    let (sum1, ser1) = run_with_threads(1);
    let (sum4, ser4) = run_with_threads(4);
    let ok = sum1 == sum4 && ser1 == ser4;
    println!(
        "ACCEPTANCE 9 determinism: {} — summary and series byte-identical across 1 vs 4 worker threads",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}
