use seeker_cli::config::{ScenarioConfig, CALIBRATED_NOISE_SIGMA};
use seeker_cli::experiments::{run_benchmark, run_rf_circle_test, run_rf_pursuit_test, BenchmarkSummary};
use seeker_cli::export::{export_benchmark, recompute_summary};
use seeker_core::rfsim::RfConfig;
use seeker_core::world::PlannerMode;

fn noisy_mission() -> seeker_core::world::MissionConfig {
    let mut m = ScenarioConfig::default().mission;
    m.rf.noise_sigma = CALIBRATED_NOISE_SIGMA;
    m
}

#[test]
fn open_field_pursuit_always_lands() {
    let m = noisy_mission();
    for seed in 1..=10 {
        for mode in [PlannerMode::Standard, PlannerMode::Modified] {
            let r = run_rf_pursuit_test(&m, mode, seed);
            assert!(r.record.outcome.is_success(), "seed {seed} {mode:?}: {:?}", r.record.outcome);
        }
    }
}

#[test]
fn noiseless_pursuit_is_sub_half_degree() {
    let mut m = ScenarioConfig::default().mission;
    m.rf.noise_sigma = 0.0;
    let r = run_rf_pursuit_test(&m, PlannerMode::Modified, 1);
    assert!(r.mean_error_deg < 0.5, "{}", r.mean_error_deg);
}

#[test]
fn calibrated_noise_circle_mean_is_about_one_and_a_half_degrees() {
    let rf = RfConfig {
        noise_sigma: CALIBRATED_NOISE_SIGMA,
        ..RfConfig::default()
    };
    let t = run_rf_circle_test(5.0, 72, &rf, 1);
    assert_eq!(t.failures(), 0);
    let mean = t.mean_abs_err_deg();
    assert!((1.0..2.0).contains(&mean), "{mean}");
}

#[test]
fn benchmark_invariants() {
    let cfg = ScenarioConfig {
        runs_per_map: 3,
        seeds: vec![11],
        ..ScenarioConfig::default()
    };
    let out = run_benchmark(&cfg);
    assert!(out.tool_errors.is_empty(), "{:?}", out.tool_errors);
    assert_eq!(out.records.len(), 5 * 3 * 2);

    // paired runs share endpoints and the mission seed
    for pair in out.records.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert_eq!((a.seed, a.map_index, a.run), (b.seed, b.map_index, b.run));
        assert_ne!(a.mission.mode, b.mission.mode);
        assert_eq!((a.mission.start, a.mission.target, a.mission.seed), (b.mission.start, b.mission.target, b.mission.seed));
    }
    for r in out.records.iter().filter(|r| r.mission.outcome.is_success()) {
        assert!(r.mission.relative_length >= 1.0 - 0.02, "{}", r.mission.relative_length);
    }
    for m in &out.summary.maps {
        for l in [m.avg_relative_length_standard, m.avg_relative_length_modified].into_iter().flatten() {
            assert!(l >= 1.0 - 0.02);
        }
        assert!(m.n_both_succeeded <= m.successes_standard.min(m.successes_modified));
    }

    let names: Vec<String> = cfg.maps.iter().map(|m| m.name().to_string()).collect();
    let dir = tempfile::tempdir().unwrap();
    export_benchmark(dir.path(), &out, &names, cfg.mission.sampling.mu, cfg.mission.descent.r_drone).unwrap();
    let again: BenchmarkSummary = recompute_summary(dir.path()).unwrap();
    assert_eq!(again, out.summary);
    let grid = std::fs::read_to_string(dir.path().join("potential/s11_m1.txt")).unwrap();
    assert_eq!(grid.lines().count(), 2 + 21);
    assert!(grid.lines().skip(2).all(|l| l.split_whitespace().count() == 21));
}
