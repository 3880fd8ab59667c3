use mzweak::analysis::*;
use mzweak::detection::*;
use mzweak::pointer::*;
use mzweak::quantum::*;
use proptest::prelude::*;

const G: f64 = 50.0;

fn single_spot(dx: f64, sigma: f64) -> BranchState {
    BranchState {
        branches: vec![Branch {
            coeff: C64::from(1.0),
            system: SystemLabel::PostSelected,
            dx,
            dy: 0.0,
        }],
        mode_sigma: sigma,
        arm_phase: 0.0,
    }
}

fn postselected(theta: f64) -> BranchState {
    evolve_and_postselect(
        &pre_state(),
        &joint_couplers(G),
        &post_state(theta).unwrap(),
        None,
        PointerSetup::default(),
    )
    .unwrap()
}

fn grid() -> Vec<f64> {
    ScanConfig::default().positions()
}

fn sample_stats(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn poisson_variance_matches_mean() {
    let c = ScanConfig {
        n_points: 3,
        start: -475.0,
        step: 475.0,
        repeats: 10_000,
        mean_rate: 80.0,
        ..Default::default()
    };
    let rec = simulate_scan(
        &single_spot(0.0, 475.0),
        Axis::X,
        &c,
        &DriftModel::none(),
        17,
    )
    .unwrap();
    for row in &rec.counts {
        let v: Vec<f64> = row.iter().map(|&k| k as f64).collect();
        let (m, var) = sample_stats(&v);
        let n = v.len() as f64;
        // Var(s²) for Poisson(μ): μ/n + 2μ²/(n−1).
        let sd = (m / n + 2.0 * m * m / (n - 1.0)).sqrt();
        assert!((var - m).abs() < 4.0 * sd, "mean {m} var {var}");
    }
}

#[test]
fn g2_grows_with_multi_pair_probability() {
    let grid = [0.0, 0.01, 0.02, 0.04, 0.08];
    let avg: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let m = SourceModel {
                multi_pair_prob: f,
                pair_rate: 0.2,
                n_windows: 1_000_000,
                ..Default::default()
            };
            (0..10)
                .map(|s| g2_statistic(&simulate_heralded_counts(&m, s).unwrap()).unwrap())
                .sum::<f64>()
                / 10.0
        })
        .collect();
    assert_eq!(avg[0], 0.0);
    assert!(avg.windows(2).all(|w| w[0] <= w[1]), "{avg:?}");
}

#[test]
fn strong_scan_frequencies_match_joint_distribution() {
    // Arm A lands at x = 0, the two diagonal outcomes of arm B at ±g.
    let g = 1000.0;
    let setup = PointerSetup {
        sigma: 100.0,
        ..Default::default()
    };
    let state = evolve(&pre_state(), &joint_couplers(g), None, setup).unwrap();
    let c = ScanConfig {
        repeats: 4,
        mean_rate: 500.0,
        ..Default::default()
    };
    let rec = simulate_scan(&state, Axis::X, &c, &DriftModel::none(), 5).unwrap();
    let mut tally = [0u64; 3];
    for (p, row) in rec.positions.iter().zip(&rec.counts) {
        let k = if p.abs() < g / 2.0 {
            0
        } else if *p > 0.0 {
            1
        } else {
            2
        };
        tally[k] += row.iter().sum::<u64>();
    }
    let total: u64 = tally.iter().sum();
    let pair = PrePostPair::new(pre_state(), post_state(0.0).unwrap());
    let (uncond, _) = quantum_joint(&pair);
    for (k, &n) in tally.iter().enumerate() {
        let f = n as f64 / total as f64;
        let p = uncond[k];
        let sd = (p * (1.0 - p) / total as f64).sqrt();
        assert!((f - p).abs() < 4.0 * sd, "outcome {k}: {f} vs {p}");
    }
}

fn quantum_joint(pair: &PrePostPair) -> (Vec<f64>, Vec<f64>) {
    let (u, c) = joint_disturbing_distribution(pair).unwrap();
    let probs = |d: &OutcomeDistribution| {
        JOINT_LABELS
            .iter()
            .map(|l| d.probability(l).unwrap())
            .collect()
    };
    (probs(&u), probs(&c))
}

#[test]
fn noisy_fit_center_error_is_a_few_microns() {
    let c = ScanConfig {
        repeats: 1,
        mean_rate: 1000.0,
        ..Default::default()
    };
    let beam = single_spot(0.0, 475.0);
    let centers: Vec<f64> = (0..200)
        .map(|s| {
            let r = simulate_scan(&beam, Axis::X, &c, &DriftModel::none(), s).unwrap();
            fit_gaussian(&r.positions, &r.profile(0)).unwrap().center
        })
        .collect();
    let (m, var) = sample_stats(&centers);
    let sd = var.sqrt();
    assert!(
        m.abs() < 4.0 * sd / (centers.len() as f64).sqrt(),
        "bias {m}"
    );
    assert!((1.0..10.0).contains(&sd), "sd {sd}");
}

#[test]
fn bootstrap_spread_tracks_resimulation_scatter() {
    let beam = postselected(0.0);
    let c = ScanConfig::default();
    let rec = simulate_scan(&beam, Axis::X, &c, &DriftModel::none(), 1).unwrap();
    let boot = bootstrap_centers(&rec, 2000, 2).unwrap().std_dev();
    let single = ScanConfig { repeats: 1, ..c };
    let direct: Vec<f64> = (0..300)
        .map(|s| {
            let r = simulate_scan(&beam, Axis::X, &single, &DriftModel::none(), 1000 + s).unwrap();
            fit_gaussian(&r.positions, &r.profile(0)).unwrap().center
        })
        .collect();
    let sim = sample_stats(&direct).1.sqrt();
    let ratio = boot / sim;
    assert!(
        (1.0 / 1.5..1.5).contains(&ratio),
        "bootstrap {boot} vs direct {sim}"
    );
}

#[test]
fn driftless_runs_only_show_counting_scatter() {
    let beam = drift_beam(G, PointerSetup::default()).unwrap();
    let c = ScanConfig {
        repeats: 1,
        mean_rate: 4000.0,
        ..Default::default()
    };
    let still = simulate_drift_run(&beam, Axis::Y, &c, &DriftModel::none(), 40, 3).unwrap();
    let centers = drift_centers(&still).unwrap();
    let (m, var) = sample_stats(&centers);
    assert!((m - G).abs() < 4.0 * (var / 40.0).sqrt());
    assert!(var.sqrt() < 4.0, "counting scatter {}", var.sqrt());
}

#[test]
fn drift_run_spread_grows_along_the_walk() {
    let beam = drift_beam(G, PointerSetup::default()).unwrap();
    let c = ScanConfig {
        repeats: 1,
        mean_rate: 4000.0,
        ..Default::default()
    };
    let walk = DriftModel::random_walk(2.0);
    // Across independent runs, Var(centre at profile n) ≈ n·s² + floor.
    let runs: Vec<Vec<f64>> = (0..60)
        .map(|s| {
            drift_centers(&simulate_drift_run(&beam, Axis::Y, &c, &walk, 100, s).unwrap()).unwrap()
        })
        .collect();
    let var_at = |n: usize| sample_stats(&runs.iter().map(|r| r[n]).collect::<Vec<_>>()).1;
    let (early, late) = (var_at(10), var_at(99));
    assert!(late > 3.0 * early, "{early} vs {late}");
    let band = systematic_band(
        &simulate_drift_run(&beam, Axis::Y, &c, &walk, 100, 0).unwrap(),
        52.6,
    )
    .unwrap();
    let still = systematic_band(
        &simulate_drift_run(&beam, Axis::Y, &c, &DriftModel::none(), 100, 0).unwrap(),
        52.6,
    )
    .unwrap();
    assert!(band > still);
}

fn pipeline_sigma(mean_rate: f64, seed: u64) -> f64 {
    let c = ScanConfig {
        mean_rate,
        ..Default::default()
    };
    let refc = ScanConfig {
        repeats: 3,
        ..c.clone()
    };
    let d = DriftModel::none();
    let t = simulate_scan(&postselected(0.0), Axis::X, &c, &d, seed).unwrap();
    let r0 = simulate_scan(&postselected(45.0), Axis::X, &refc, &d, seed + 1).unwrap();
    let r1 = simulate_scan(&postselected(90.0), Axis::X, &refc, &d, seed + 2).unwrap();
    let n = 1000;
    let e = weak_value_estimate(
        &bootstrap_centers(&t, n, seed).unwrap(),
        &bootstrap_centers(&r0, n, seed + 1).unwrap(),
        &bootstrap_centers(&r1, n, seed + 2).unwrap(),
    )
    .unwrap();
    e.stat_sigma
}

#[test]
fn stat_sigma_scales_as_inverse_root_rate() {
    let rates = [400.0, 1600.0, 6400.0];
    let sig: Vec<f64> = rates
        .iter()
        .map(|&r| (0..4).map(|s| pipeline_sigma(r, 10 * s)).sum::<f64>() / 4.0)
        .collect();
    for w in sig.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "{sig:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_fits_recover_parameters(
        center in -300.0..300.0f64,
        width in 200.0..700.0f64,
        amplitude in 10.0..1e4f64,
        offset in 1.0..100.0f64,
    ) {
        let u = grid();
        let y: Vec<f64> = u.iter().map(|u| amplitude * (-(u - center).powi(2) / (2.0 * width * width)).exp() + offset).collect();
        let f = fit_gaussian(&u, &y).unwrap();
        prop_assert!(f.converged);
        prop_assert!((f.center - center).abs() <= 1e-6 * center.abs().max(width));
        prop_assert!((f.width / width - 1.0).abs() < 1e-6);
        prop_assert!((f.amplitude / amplitude - 1.0).abs() < 1e-6);
        prop_assert!((f.offset / offset - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weak_value_estimate_is_translation_invariant(
        shift in -1e3..1e3f64,
        centers in proptest::collection::vec(-10.0..10.0f64, 30),
    ) {
        let dist = |add: f64| CenterDistribution {
            centers: centers.iter().map(|c| c + add).collect(),
            theta: 0.0,
            axis: Axis::X,
            dropped: 0,
        };
        let (t, r0, r1) = (dist(45.0), dist(0.0).shifted(0.3), dist(50.0));
        let a = weak_value_estimate(&t, &r0, &r1).unwrap();
        let b = weak_value_estimate(&t.shifted(shift), &r0.shifted(shift), &r1.shifted(shift)).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-9);
        prop_assert!((a.stat_sigma - b.stat_sigma).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn seeded_outputs_are_bit_identical(seed in any::<u64>()) {
        let beam = postselected(0.0);
        let c = ScanConfig { repeats: 4, ..Default::default() };
        let d = DriftModel::random_walk(1.5);
        let a = simulate_scan(&beam, Axis::Y, &c, &d, seed).unwrap();
        prop_assert_eq!(&a, &simulate_scan(&beam, Axis::Y, &c, &d, seed).unwrap());
        let m = SourceModel { n_windows: 200_000, ..Default::default() };
        prop_assert_eq!(simulate_heralded_counts(&m, seed).unwrap(), simulate_heralded_counts(&m, seed).unwrap());
        let b1 = bootstrap_centers(&a, 50, seed).unwrap();
        let b2 = bootstrap_centers(&a, 50, seed).unwrap();
        prop_assert!(b1.centers.iter().zip(&b2.centers).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
