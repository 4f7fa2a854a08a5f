use proptest::prelude::*;

use seeker_core::apf::{self, FieldContext, Obstacle, PotentialParams, DELTA_MIN};
use seeker_core::aoa::{solve_general, DipolePair, SolutionKind};
use seeker_core::linalg;
use seeker_core::optimizer::{fuse_optimal, weight};
use seeker_core::world::{SensorConfig, SensorState, WorldMap};
use seeker_core::{Pose, RngStream, Trajectory, Vec2};

const R_DRONE: f64 = 0.2;

fn obstacles() -> impl Strategy<Value = Vec<Obstacle>> {
    prop::collection::vec((0.5..9.5f64, 0.5..9.5f64, 0.2..0.8f64), 0..6)
        .prop_map(|v| v.into_iter().map(|(x, y, r)| Obstacle::new(Vec2::new(x, y), r)).collect())
}

fn params() -> impl Strategy<Value = PotentialParams> {
    (0.1..3.0f64, 0.05..3.0f64, 0.3..1.5f64).prop_map(|(a, r, d)| PotentialParams::new(a, r, d).unwrap())
}

fn point() -> impl Strategy<Value = Vec2> {
    (0.0..10.0f64, 0.0..10.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn traj(points: Vec<(f64, f64)>) -> Trajectory {
    Trajectory::from_points(points.into_iter().map(|(x, y)| Vec2::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_matches_central_differences(obs in obstacles(), p in params(), goal in point(), q in point()) {
        let ctx = FieldContext::new(goal, &obs, p, R_DRONE);
        let h = 1e-5;
        // stay clear of the clamp and of the cutoff kink at d0
        let band_ok = obs.iter().all(|o| {
            let d = apf::d_boundary(q, o, R_DRONE);
            d > 2.0 * DELTA_MIN + h && (d - p.d0).abs() > 10.0 * h
        });
        prop_assume!(band_ok);
        let g = apf::grad_u(q, &ctx).unwrap();
        let fd = Vec2::new(
            (apf::u_total(q + Vec2::new(h, 0.0), &ctx) - apf::u_total(q - Vec2::new(h, 0.0), &ctx)) / (2.0 * h),
            (apf::u_total(q + Vec2::new(0.0, h), &ctx) - apf::u_total(q - Vec2::new(0.0, h), &ctx)) / (2.0 * h),
        );
        let scale = g.norm().max(1.0);
        prop_assert!((g - fd).norm() / scale < 1e-4, "analytic {:?} vs fd {:?}", g, fd);
    }

    #[test]
    fn descent_is_safe_and_monotone(obs in obstacles(), p in params(), goal in point(), start in point()) {
        prop_assume!(apf::min_boundary_distance(start, &obs, R_DRONE) > 0.0);
        let ctx = FieldContext::new(goal, &obs, p, R_DRONE);
        let t = apf::descend(start, &ctx, 0.15, 15).unwrap();
        let mut last = f64::INFINITY;
        for q in &t.points {
            prop_assert!(apf::min_boundary_distance(*q, &obs, R_DRONE) > 0.0);
            let u = apf::u_total(*q, &ctx);
            prop_assert!(u <= last + 1e-12);
            last = u;
        }
    }

    // k/d beats k/d² only beyond 1 m, so the band must start there
    #[test]
    fn log_gradient_outlives_inverse(k_rep in 0.05..3.0f64, d0 in std::f64::consts::E..6.0, frac in 0.0..1.0f64) {
        let ob = [Obstacle::new(Vec2::ZERO, 0.5)];
        let p = PotentialParams::new(1.0, k_rep, d0).unwrap();
        let ctx = FieldContext::new(Vec2::new(50.0, 0.0), &ob, p, R_DRONE);
        let lo = d0 / std::f64::consts::E;
        let d = lo + (d0 - lo) * (0.01 + 0.98 * frac);
        let q = Vec2::new(0.7 + d, 0.0);
        let log = apf::grad_rep(q, &ctx).unwrap().norm();
        let inv = apf::grad_rep_inverse(q, &ctx).unwrap().norm();
        prop_assert!(log > inv, "d {d}: log {log} inverse {inv}");
    }

    #[test]
    fn lower_cost_means_higher_weight(a in 0.0..50.0f64, b in 0.0..50.0f64, lambda in 0.05..20.0f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let (wa, wb) = (weight(a, lambda), weight(b, lambda));
        prop_assert_eq!(a < b, wa > wb);
    }

    #[test]
    fn fused_points_lie_between_inputs(
        pts in prop::collection::vec(prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4), 2..6),
        ws in prop::collection::vec(1e-6..1.0f64, 5),
    ) {
        let initial = traj(pts[0].clone());
        let samples: Vec<Trajectory> = pts[1..].iter().map(|p| traj(p.clone())).collect();
        let fused = fuse_optimal(&initial, &samples, &ws[..samples.len()]);
        for i in 0..4 {
            let all: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p[i].0, p[i].1)).collect();
            let (lx, hx) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v.x), h.max(v.x)));
            let (ly, hy) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v.y), h.max(v.y)));
            let q = fused.points[i];
            prop_assert!(q.x >= lx - 1e-12 && q.x <= hx + 1e-12);
            prop_assert!(q.y >= ly - 1e-12 && q.y <= hy + 1e-12);
        }
    }

    #[test]
    fn determinant_is_sine_of_ray_difference(t1 in -3.1..3.1f64, t2 in -3.1..3.1f64, d in 0.05..1.0f64) {
        let (a, _) = seeker_core::aoa::system(
            &DipolePair::new(Vec2::new(d, 0.0), t1),
            &DipolePair::new(Vec2::new(-d, 0.0), t2),
        );
        prop_assert!((linalg::determinant(&a) - (t1 - t2).sin()).abs() < 1e-12);
    }

    #[test]
    fn rays_through_a_source_meet_there(sx in -20.0..20.0f64, sy in -20.0..20.0f64, d in 0.1..0.5f64) {
        let s = Vec2::new(sx, sy);
        prop_assume!(s.norm() > 1.0 && sy.abs() > 0.05);
        let m1 = Vec2::new(d, 0.0);
        let m2 = Vec2::new(-d, 0.0);
        let sol = solve_general(
            &DipolePair::new(m1, (s - m1).angle()),
            &DipolePair::new(m2, (s - m2).angle()),
        ).unwrap();
        prop_assert_eq!(sol.kind, SolutionKind::Unique);
        let dir = sol.direction.unwrap();
        prop_assert!((dir.angle() - sy.atan2(sx)).abs() < 1e-9);
    }

    #[test]
    fn revealed_set_only_grows(obs in obstacles(), poses in prop::collection::vec((point(), -3.2..3.2f64), 1..20), fit in any::<bool>()) {
        let map = WorldMap::new(10.0, obs, Vec2::new(0.1, 0.1), Vec2::new(9.9, 9.9));
        let mut sensor = SensorState::new(SensorConfig { fit, ..SensorConfig::default() });
        let mut rng = RngStream::new(5, 2);
        let mut before: Vec<usize> = Vec::new();
        for (p, h) in poses {
            sensor.sense(&map, &Pose::new(p, h).unwrap(), Some(&mut rng));
            let now: Vec<usize> = sensor.revealed_ids().collect();
            prop_assert!(before.iter().all(|id| now.contains(id)));
            before = now;
        }
    }
}
