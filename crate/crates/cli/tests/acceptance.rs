//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use seeker_cli::config::{ScenarioConfig, CALIBRATED_NOISE_SIGMA};
use seeker_cli::experiments::{run_benchmark, run_rf_circle_test, run_rf_pursuit_test, BenchmarkOutput};
use seeker_core::aoa::{resolve_square, solve_general, square_aoa, system, three_antenna_solve, DipolePair, SolutionKind};
use seeker_core::apf::{self, FieldContext, PotentialParams, DELTA_MIN};
use seeker_core::linalg;
use seeker_core::optimizer::{fuse_optimal, weight};
use seeker_core::rfsim::RfConfig;
use seeker_core::world::{PlannerMode, REFERENCE_TARGETS};
use seeker_core::{RngStream, Trajectory, Vec2};

const HALF_SIDE: f64 = 0.225;

fn report(id: &str, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {name:<28} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn u(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    rng.uniform(lo, hi).unwrap()
}

/// Body-frame source outside the unit disk, off the dipole axis.
fn random_source(rng: &mut RngStream) -> Vec2 {
    loop {
        let s = Vec2::new(u(rng, -20.0, 20.0), u(rng, -20.0, 20.0));
        if s.norm() > 1.0 && s.y.abs() > 0.05 {
            return s;
        }
    }
}

/// Broadside readings of an ideal square array: A1A2 at (d, 0), A3A4 at
/// (−d, 0), cross pair on the top edge at (0, d).
fn square_readings(s: Vec2, d: f64) -> (f64, f64, f64) {
    let unit = |m: Vec2| {
        let v = s - m;
        v * (1.0 / v.norm())
    };
    let (u1, u2, u3) = (unit(Vec2::new(d, 0.0)), unit(Vec2::new(-d, 0.0)), unit(Vec2::new(0.0, d)));
    ((-u1.y).asin(), u2.y.asin(), u3.x.asin())
}

fn angle_err(a: f64, b: f64) -> f64 {
    let mut e = (a - b) % (2.0 * PI);
    if e > PI {
        e -= 2.0 * PI;
    } else if e < -PI {
        e += 2.0 * PI;
    }
    e.abs()
}

fn ray(from: Vec2, to: Vec2) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

#[test]
fn c01_aoa_exactness() {
    let t0 = Instant::now();
    let mut rng = RngStream::new(101, 0);
    let (mut worst_sq, mut worst_gen) = (0.0f64, 0.0f64);
    let mut bad = 0;
    for _ in 0..10_000 {
        let s = random_source(&mut rng);
        let truth = s.y.atan2(s.x);
        let (r1, r2, rc) = square_readings(s, HALF_SIDE);
        match resolve_square(r1, r2, HALF_SIDE, Some(rc)).and_then(|a| square_aoa(a.theta1, a.theta2)) {
            Ok(th) => worst_sq = worst_sq.max(angle_err(th, truth)),
            Err(_) => bad += 1,
        }
        let (m1, m2) = (Vec2::new(HALF_SIDE, 0.0), Vec2::new(-HALF_SIDE, 0.0));
        let sol = solve_general(&DipolePair::new(m1, ray(m1, s)), &DipolePair::new(m2, ray(m2, s)));
        match sol.ok().and_then(|x| x.direction) {
            Some(d) => worst_gen = worst_gen.max(angle_err(d.y.atan2(d.x), truth)),
            None => bad += 1,
        }
    }
    let dt = t0.elapsed();
    report(
        "1",
        "AoA exactness",
        bad == 0 && worst_sq < 1e-9 && worst_gen < 1e-9 && dt < Duration::from_secs(1),
        format!("square max {worst_sq:.2e} rad, general max {worst_gen:.2e} rad, {bad} errors, {:.3} s", dt.as_secs_f64()),
    );
}

#[test]
fn c02_determinant_identity() {
    let mut rng = RngStream::new(102, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (t1, t2) = (u(&mut rng, -PI, PI), u(&mut rng, -PI, PI));
        let (a, _) = system(
            &DipolePair::new(Vec2::new(HALF_SIDE, 0.0), t1),
            &DipolePair::new(Vec2::new(-HALF_SIDE, 0.0), t2),
        );
        worst = worst.max((linalg::determinant(&a) - (t1 - t2).sin()).abs());
    }
    report("2", "det identity", worst < 1e-12, format!("max |det − sin(θ1−θ2)| {worst:.2e}"));
}

#[test]
fn c03_appendix_coverage() {
    let (m1, m2) = (Vec2::new(HALF_SIDE, 0.0), Vec2::new(-HALF_SIDE, 0.0));
    let mut rng = RngStream::new(103, 0);
    let mut parallel_ok = true;
    let mut divergent_ok = true;
    for _ in 0..100 {
        let t = u(&mut rng, 0.1, PI - 0.1) * if rng.uniform(0.0, 1.0).unwrap() < 0.5 { 1.0 } else { -1.0 };
        let sol = solve_general(&DipolePair::new(m1, t), &DipolePair::new(m2, t)).unwrap();
        let d12 = Vec2::new(t.cos(), t.sin());
        parallel_ok &= sol.kind == SolutionKind::ParallelFallback && sol.direction.is_some_and(|d| (d - d12).norm() < 1e-12);
        // rays leaving each other: right dipole aims right-ish, left dipole left-ish
        let a = u(&mut rng, -1.2, 1.2);
        let b = PI - u(&mut rng, -1.2, 1.2);
        let sol = solve_general(&DipolePair::new(m1, a), &DipolePair::new(m2, b)).unwrap();
        divergent_ok &= (a - b).sin().abs() < 1e-6 || sol.kind == SolutionKind::RejectedDivergent;
    }

    // right-angle three-antenna layout
    let (r1, r2, r4) = (Vec2::new(0.2, -0.2), Vec2::new(0.2, 0.2), Vec2::new(-0.2, 0.2));
    let (m12, m24) = ((r1 + r2) * 0.5, (r2 + r4) * 0.5);
    let mut worst = 0.0f64;
    let mut errors = 0;
    for _ in 0..1000 {
        let s = random_source(&mut rng);
        let sol = three_antenna_solve(&DipolePair::new(m12, ray(m12, s)), &DipolePair::new(m24, ray(m24, s)));
        match sol.ok().filter(|x| x.kind == SolutionKind::Unique).and_then(|x| x.direction) {
            Some(d) => worst = worst.max(angle_err(d.y.atan2(d.x), s.y.atan2(s.x))),
            None => errors += 1,
        }
    }
    report(
        "3",
        "appendix coverage",
        parallel_ok && divergent_ok && errors == 0 && worst < 1e-9,
        format!("parallel {parallel_ok}, divergent {divergent_ok}, three-antenna max {worst:.2e} rad, {errors} errors"),
    );
}

#[test]
fn c04_rf_pipeline_accuracy() {
    let t0 = Instant::now();
    let circle = run_rf_circle_test(5.0, 72, &RfConfig::default(), 1);
    let mut mission = ScenarioConfig::default().mission;
    mission.rf.noise_sigma = CALIBRATED_NOISE_SIGMA;
    let pursuit = run_rf_pursuit_test(&mission, PlannerMode::Modified, 1);
    let dt = t0.elapsed();
    let (mean, max) = (circle.mean_abs_err_deg(), circle.max_abs_err_deg());
    let pass = circle.failures() == 0
        && max < 0.5
        && mean < 0.2
        && (pursuit.mean_error_deg - 1.48).abs() <= 1.0
        && dt < Duration::from_secs(10);
    report(
        "4",
        "RF pipeline accuracy",
        pass,
        format!(
            "circle mean {mean:.3}° max {max:.3}°; pursuit (σ={CALIBRATED_NOISE_SIGMA}) mean {:.3}° vs 1.48±1.0°; {:.2} s",
            pursuit.mean_error_deg,
            dt.as_secs_f64()
        ),
    );
}

#[test]
fn c05_gradient_correctness() {
    let map = &benchmark().maps[4].map;
    let mut rng = RngStream::new(105, 0);
    let r_drone = 0.2;
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let q = Vec2::new(u(&mut rng, 0.0, 10.0), u(&mut rng, 0.0, 10.0));
        if apf::min_boundary_distance(q, &map.obstacles, r_drone) <= 2.0 * DELTA_MIN {
            continue;
        }
        let p = PotentialParams::new(u(&mut rng, 0.2, 3.0), u(&mut rng, 0.1, 3.0), u(&mut rng, 0.4, 2.0)).unwrap();
        let goal = Vec2::new(u(&mut rng, 0.0, 10.0), u(&mut rng, 0.0, 10.0));
        let ctx = FieldContext::new(goal, &map.obstacles, p, r_drone);
        let g = apf::grad_u(q, &ctx).unwrap();
        let f = |x: Vec2| apf::u_total(x, &ctx);
        let fd = Vec2::new(
            (f(q + Vec2::new(h, 0.0)) - f(q - Vec2::new(h, 0.0))) / (2.0 * h),
            (f(q + Vec2::new(0.0, h)) - f(q - Vec2::new(0.0, h))) / (2.0 * h),
        );
        worst = worst.max((g - fd).norm() / g.norm());
        n += 1;
    }
    report("5", "gradient correctness", worst < 1e-4, format!("max relative error {worst:.2e} over {n} points"));
}

#[test]
fn c06_safety() {
    let out = benchmark();
    let maps: BTreeMap<(u64, usize), _> = out.maps.iter().map(|m| ((m.seed, m.index), &m.map)).collect();
    let r_drone = ScenarioConfig::default().mission.descent.r_drone;
    let (mut waypoints, mut penetrations, mut crashes) = (0usize, 0usize, 0usize);
    let mut check = |t: &Trajectory, obs: &[apf::Obstacle]| {
        for q in &t.points {
            waypoints += 1;
            if apf::min_boundary_distance(*q, obs, r_drone) <= 0.0 {
                penetrations += 1;
            }
        }
    };
    for r in &out.records {
        for c in &r.mission.cycles {
            check(&c.chosen, &c.obstacles);
            if let Some(p) = &c.plan {
                check(&p.initial, &c.obstacles);
                for s in &p.samples {
                    check(&s.trajectory, &c.obstacles);
                }
            }
        }
        if r.mission.outcome.is_success() {
            let obs = &maps[&(r.seed, r.map_index)].obstacles;
            if r.mission.trail.iter().any(|q| apf::min_boundary_distance(*q, obs, r_drone) < 0.0) {
                crashes += 1;
            }
        }
    }
    report(
        "6",
        "safety",
        penetrations == 0 && crashes == 0 && waypoints > 0,
        format!("{penetrations} penetrations in {waypoints} planned waypoints, {crashes} successful runs with a collision"),
    );
}

#[test]
fn c07_optimizer_algebra() {
    let mut rng = RngStream::new(107, 0);
    let rand_traj = |rng: &mut RngStream| {
        Trajectory::from_points((0..16).map(|_| Vec2::new(u(rng, -5.0, 5.0), u(rng, -5.0, 5.0))).collect())
    };
    let mut failures = Vec::new();

    // monotonicity
    for _ in 0..1000 {
        let (a, b, l) = (u(&mut rng, 0.0, 50.0), u(&mut rng, 0.0, 50.0), u(&mut rng, 0.05, 20.0));
        if a != b && (a < b) != (weight(a, l) > weight(b, l)) {
            failures.push(format!("monotonicity at ({a}, {b}, {l})"));
        }
    }

    // betweenness
    for _ in 0..200 {
        let init = rand_traj(&mut rng);
        let samples: Vec<Trajectory> = (0..10).map(|_| rand_traj(&mut rng)).collect();
        let w: Vec<f64> = (0..10).map(|_| u(&mut rng, 1e-6, 1.0)).collect();
        let fused = fuse_optimal(&init, &samples, &w);
        for i in 0..16 {
            let all = std::iter::once(&init).chain(&samples).map(|t| t.points[i]);
            let (lx, hx, ly, hy) = all.fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |(a, b, c, d), p| {
                (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y))
            });
            let q = fused.points[i];
            if q.x < lx - 1e-12 || q.x > hx + 1e-12 || q.y < ly - 1e-12 || q.y > hy + 1e-12 {
                failures.push("betweenness".into());
            }
        }
    }

    // λ limits, on weights shifted by the minimum cost
    let max_dev = |a: &Trajectory, b: &Trajectory| a.points.iter().zip(&b.points).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max);
    for _ in 0..100 {
        let init = rand_traj(&mut rng);
        let samples: Vec<Trajectory> = (0..10).map(|_| rand_traj(&mut rng)).collect();
        let costs: Vec<f64> = (0..10).map(|_| u(&mut rng, 0.0, 20.0)).collect();
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let best = costs.iter().position(|&c| c == min).unwrap();
        let shifted = |l: f64| costs.iter().map(|c| weight(c - min, l)).collect::<Vec<_>>();
        let cold = fuse_optimal(&init, &samples, &shifted(1e-9));
        if max_dev(&cold, &samples[best]) > 1e-12 {
            failures.push(format!("λ→0 deviates by {:.2e}", max_dev(&cold, &samples[best])));
        }
        let hot = fuse_optimal(&init, &samples, &shifted(1e15));
        let mean = Trajectory::from_points(
            (0..16).map(|i| samples.iter().fold(Vec2::ZERO, |acc, t| acc + t.points[i]) * 0.1).collect(),
        );
        if max_dev(&hot, &mean) > 1e-12 {
            failures.push(format!("λ→∞ deviates by {:.2e}", max_dev(&hot, &mean)));
        }
    }

    // trivial cases
    let init = rand_traj(&mut rng);
    let same = fuse_optimal(&init, &vec![init.clone(); 4], &[0.1, 0.2, 0.3, 0.4]);
    if max_dev(&same, &init) > 1e-12 {
        failures.push("identical samples".into());
    }
    let one = rand_traj(&mut rng);
    if max_dev(&fuse_optimal(&init, std::slice::from_ref(&one), &[0.37]), &one) > 1e-12 {
        failures.push("single sample".into());
    }
    let offset = Vec2::new(0.7, -1.3);
    let plus = Trajectory::from_points(init.points.iter().map(|p| *p + offset).collect());
    let minus = Trajectory::from_points(init.points.iter().map(|p| *p - offset).collect());
    if max_dev(&fuse_optimal(&init, &[plus, minus], &[0.5, 0.5]), &init) > 1e-12 {
        failures.push("symmetric pair".into());
    }

    let detail = if failures.is_empty() {
        "monotonicity, betweenness, λ limits and trivial cases hold".to_string()
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    report("7", "optimizer algebra", failures.is_empty(), detail);
}

static BENCHMARK: OnceLock<(BenchmarkOutput, Duration)> = OnceLock::new();

/// The reference benchmark (fixed seeds), with every sampled trajectory kept.
fn benchmark() -> &'static BenchmarkOutput {
    &BENCHMARK
        .get_or_init(|| {
            let mut cfg = ScenarioConfig::default();
            cfg.mission.record_plans = true;
            let t0 = Instant::now();
            let out = run_benchmark(&cfg);
            (out, t0.elapsed())
        })
        .0
}

#[test]
fn c08_benchmark_directionality() {
    let out = benchmark();
    let dt = BENCHMARK.get().unwrap().1;
    let s = &out.summary;
    for m in &s.maps {
        println!(
            "    {}: standard {}/{}, modified {}/{}",
            m.name, m.successes_standard, m.n_runs, m.successes_modified, m.n_runs
        );
    }
    let a = s.maps.iter().all(|m| m.successes_modified >= m.successes_standard);
    let gain = s.total_successes_modified as i64 - s.total_successes_standard as i64;
    let b = gain >= 8;
    let m5 = &s.maps[4];
    let c = m5.successes_modified >= 4 && m5.successes_standard <= 2;
    let d = match (s.mean_relative_length_modified, s.mean_relative_length_standard) {
        (Some(lm), Some(ls)) => lm <= 1.02 * ls,
        _ => false,
    };
    let complete = s.tool_errors == 0 && s.total_runs == 35;
    report(
        "8",
        "benchmark directionality",
        a && b && c && d && complete && dt < Duration::from_secs(600),
        format!(
            "(a) {a} (b) {b}: {} vs {} (+{gain}, need +8) (c) {c}: map5 {} vs {} (d) {d}: {:.4} vs {:.4}; {} tool errors; {:.1} s",
            s.total_successes_modified,
            s.total_successes_standard,
            m5.successes_modified,
            m5.successes_standard,
            s.mean_relative_length_modified.unwrap_or(f64::NAN),
            s.mean_relative_length_standard.unwrap_or(f64::NAN),
            s.tool_errors,
            dt.as_secs_f64()
        ),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn seeker(args: &[&str], out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_seeker"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("seeker runs");
    assert!(status.status.success(), "seeker {args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

#[test]
fn c09_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let verbs: [(&str, Vec<&str>); 5] = [
        ("gen-map", vec!["gen-map", "--map", "5", "--seed", "3"]),
        ("rf-circle", vec!["rf-circle", "--noise-sigma", "0.33", "--seed", "3"]),
        ("rf-pursuit", vec!["rf-pursuit", "--seed", "3"]),
        ("mission", vec!["mission", "--map", "2", "--seed", "3"]),
        ("benchmark", vec!["benchmark", "--seed", "3"]),
    ];
    let mut differing = Vec::new();
    let mut n_files = 0;
    let mut compare = |name: &str, a: &Path, b: &Path| {
        let (sa, sb) = (snapshot(a), snapshot(b));
        n_files += sa.len();
        if sa.is_empty() || sa != sb {
            differing.push(name.to_string());
        }
    };
    for (name, args) in &verbs {
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        seeker(args, &a);
        seeker(args, &b);
        compare(name, &a, &b);
    }
    let from = tmp.path().join("benchmark-a");
    let from = from.to_str().unwrap();
    let (a, b) = (tmp.path().join("export-a"), tmp.path().join("export-b"));
    seeker(&["export", "--from", from], &a);
    seeker(&["export", "--from", from], &b);
    compare("export", &a, &b);
    report(
        "9",
        "determinism",
        differing.is_empty(),
        format!("6 verbs, {n_files} files compared, differing: {differing:?}"),
    );
}

#[test]
fn c10_density_generator() {
    let maps = &benchmark().maps;
    let mut mean_ok = true;
    for (m, t) in maps.iter().zip(REFERENCE_TARGETS) {
        let rel = (m.density_mean - t.mean).abs() / t.mean;
        mean_ok &= rel <= 0.10;
        println!(
            "    {}: mean {:.4} (target {:.4}, {:+.1}%), variance {:.5} (target {:.4})",
            m.name,
            m.density_mean,
            t.mean,
            100.0 * (m.density_mean - t.mean) / t.mean,
            m.density_variance,
            t.variance
        );
    }
    let rank = |v: Vec<f64>| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        idx
    };
    let got = rank(maps.iter().map(|m| m.density_variance).collect());
    let want = rank(REFERENCE_TARGETS.iter().map(|t| t.variance).collect());
    let top = maps.iter().map(|m| m.density_variance).fold(f64::MIN, f64::max);
    let m5_top = maps.len() == 5 && maps[4].density_variance == top && maps[..4].iter().all(|m| m.density_variance < top);
    report(
        "10",
        "density generator",
        mean_ok && got == want && m5_top,
        format!("means within 10%: {mean_ok}; variance order {got:?} vs {want:?}; map5 greatest: {m5_top}"),
    );
}
