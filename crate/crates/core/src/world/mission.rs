//! Closed-loop seeking mission: sense, estimate the source bearing, place a
//! temporary target, plan, and fly the first few waypoints before planning
//! again.

use serde::{Deserialize, Serialize};

use crate::aoa::estimate_direction;
use crate::apf::{self, d_boundary, min_boundary_distance, FieldContext, Obstacle, PotentialParams};
use crate::geom::{normalize_angle, Pose, Trajectory, Vec2};
use crate::optimizer::{plan_cycle, DescentSettings, PlanResult, SamplingConfig};
use crate::random::{mix_seed, RngStream};
use crate::rfsim::{simulate_phases, RfConfig};

use super::drone::DroneState;
use super::sensor::{SensorConfig, SensorState};
use super::WorldMap;

const RF_NOISE_STREAM: u64 = 1;
const SENSOR_NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    /// One descent per replan with fixed parameters.
    Standard,
    /// Sampling optimizer per replan.
    Modified,
}

impl PlannerMode {
    pub fn tag(self) -> u64 {
        match self {
            Self::Standard => 0x5354,
            Self::Modified => 0x4d4f,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Modified => "modified",
        }
    }
}

impl std::str::FromStr for PlannerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Self::Standard),
            "modified" => Ok(Self::Modified),
            other => Err(format!("unknown mode {other:?} (expected standard or modified)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    /// `sampling.mu` doubles as the fixed parameters of standard mode.
    pub sampling: SamplingConfig,
    pub descent: DescentSettings,
    pub rf: RfConfig,
    pub sensor: SensorConfig,
    /// Distance of the temporary target ahead of the drone.
    pub horizon: f64,
    /// Waypoints flown before replanning.
    pub replan_at: usize,
    pub speed: f64,
    pub success_radius: f64,
    pub max_replans: usize,
    /// Net displacement over `stuck_window` replans below which the drone
    /// counts as stuck.
    pub stuck_distance: f64,
    pub stuck_window: usize,
    /// Keep the sampling means fixed instead of following the chosen sample.
    pub frozen_means: bool,
    /// Keep every sampled trajectory in the record.
    pub record_plans: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        let descent = DescentSettings::default();
        let mu = PotentialParams {
            k_att: 1.0,
            k_rep: 1.0,
            d0: 1.0,
        };
        Self {
            sampling: SamplingConfig::with_defaults(mu, descent.r_drone),
            descent,
            rf: RfConfig::default(),
            sensor: SensorConfig::default(),
            horizon: 2.0,
            replan_at: 5,
            speed: 0.15,
            success_radius: 0.5,
            max_replans: 200,
            stuck_distance: 0.05,
            stuck_window: 3,
            frozen_means: false,
            record_plans: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "reason")]
pub enum Outcome {
    Success,
    Failure(FailureReason),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Success)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Failure(FailureReason::BudgetExhausted) => "budget_exhausted",
            Self::Failure(FailureReason::Stuck) => "stuck",
            Self::Failure(FailureReason::Collision) => "collision",
            Self::Failure(FailureReason::Planner(_)) => "planner_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    BudgetExhausted,
    Stuck,
    Collision,
    Planner(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub index: usize,
    pub position: Vec2,
    pub temp_goal: Vec2,
    pub params: PotentialParams,
    /// Obstacles handed to the planner (revealed only).
    pub obstacles: Vec<Obstacle>,
    pub chosen: Trajectory,
    pub plan: Option<PlanResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub mode: PlannerMode,
    pub seed: u64,
    pub start: Vec2,
    pub target: Vec2,
    pub outcome: Outcome,
    pub trail: Vec<Vec2>,
    pub cycles: Vec<CycleRecord>,
    /// Signed bearing error (estimate − truth) at each step, radians.
    pub bearing_errors: Vec<f64>,
    pub revealed: Vec<usize>,
    pub path_length: f64,
    pub straight_distance: f64,
    pub relative_length: f64,
    /// Smallest ground-truth clearance along the trail; `None` without
    /// obstacles.
    pub min_clearance: Option<f64>,
}

impl MissionRecord {
    pub fn replans(&self) -> usize {
        self.cycles.len()
    }

    pub fn mean_abs_bearing_error(&self) -> f64 {
        if self.bearing_errors.is_empty() {
            return 0.0;
        }
        self.bearing_errors.iter().map(|e| e.abs()).sum::<f64>() / self.bearing_errors.len() as f64
    }
}

struct Mission<'a> {
    map: &'a WorldMap,
    mode: PlannerMode,
    cfg: &'a MissionConfig,
    seed: u64,
    drone: DroneState,
    sensor: SensorState,
    rf_rng: RngStream,
    sensor_rng: RngStream,
    bearing_errors: Vec<f64>,
    cycles: Vec<CycleRecord>,
    min_clearance: f64,
}

impl<'a> Mission<'a> {
    fn sense(&mut self) -> bool {
        let fresh = self
            .sensor
            .sense(self.map, &self.drone.pose, Some(&mut self.sensor_rng));
        !fresh.is_empty()
    }

    /// RF bearing estimate at the current pose; records the error.
    fn estimate(&mut self) -> Option<Vec2> {
        let rf = &self.cfg.rf;
        let source = rf.source_at(self.map.target).ok()?;
        let array = rf.square_array();
        let noise = (rf.noise_sigma > 0.0).then_some(&mut self.rf_rng);
        let reading = simulate_phases(&source, &array, &self.drone.pose, rf, noise).ok()?;
        let est = estimate_direction(&array, &reading, &self.drone.pose).ok()?;
        let truth = (self.map.target - self.drone.position()).angle();
        self.bearing_errors.push(normalize_angle(est.world_bearing() - truth));
        Some(est.world)
    }

    fn collided(&mut self) -> bool {
        let c = min_boundary_distance(self.drone.position(), &self.map.obstacles, self.cfg.descent.r_drone);
        self.min_clearance = self.min_clearance.min(c);
        c < 0.0
    }

    fn near_target(&self) -> bool {
        self.drone.position().distance(self.map.target) < self.cfg.success_radius
    }

    fn plan(&mut self, temp_goal: Vec2, mu: PotentialParams) -> Result<(Trajectory, PotentialParams, Option<PlanResult>), String> {
        let known = self.sensor.known_obstacles();
        let start = self.drone.position();
        let d = &self.cfg.descent;
        let result = match self.mode {
            PlannerMode::Standard => {
                let ctx = FieldContext::new(temp_goal, &known, mu, d.r_drone);
                let t = apf::descend(start, &ctx, d.step, d.max_steps).map_err(|e| e.to_string())?;
                (t, mu, None)
            }
            PlannerMode::Modified => {
                let mut cfg = self.cfg.sampling.clone();
                cfg.mu = mu;
                let cycle_seed = mix_seed(&[self.seed, self.mode.tag(), self.cycles.len() as u64]);
                let r = plan_cycle(start, temp_goal, &known, &cfg, d, cycle_seed).map_err(|e| e.to_string())?;
                (r.chosen.clone(), r.chosen_params, Some(r))
            }
        };
        self.cycles.push(CycleRecord {
            index: self.cycles.len(),
            position: start,
            temp_goal,
            params: mu,
            obstacles: known,
            chosen: result.0.clone(),
            plan: if self.cfg.record_plans { result.2.clone() } else { None },
        });
        Ok(result)
    }

    fn finish(self, outcome: Outcome) -> MissionRecord {
        let path_length = self.drone.path_length();
        let straight = self.map.start.distance(self.map.target);
        MissionRecord {
            mode: self.mode,
            seed: self.seed,
            start: self.map.start,
            target: self.map.target,
            outcome,
            relative_length: if straight > 0.0 { path_length / straight } else { 1.0 },
            path_length,
            straight_distance: straight,
            trail: self.drone.trail,
            cycles: self.cycles,
            bearing_errors: self.bearing_errors,
            revealed: self.sensor.revealed_ids().collect(),
            min_clearance: self.min_clearance.is_finite().then_some(self.min_clearance),
        }
    }
}

/// Pushes a temporary goal that falls inside (or within 0.1 m of) a known
/// inflated obstacle radially out to 0.1 m clearance.
fn clear_goal(mut goal: Vec2, known: &[Obstacle], r_drone: f64) -> Vec2 {
    const MARGIN: f64 = 0.1;
    for _ in 0..4 {
        let mut moved = false;
        for o in known {
            if d_boundary(goal, o, r_drone) < MARGIN {
                let dir = (goal - o.center).normalized().unwrap_or(Vec2::new(1.0, 0.0));
                goal = o.center + dir * (o.radius + r_drone + MARGIN);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    goal
}

/// Runs one mission on `map` from `map.start` toward the source at
/// `map.target`. Failures are outcomes, not errors.
pub fn run_mission(map: &WorldMap, mode: PlannerMode, cfg: &MissionConfig, seed: u64) -> MissionRecord {
    // starts facing +x; it turns along the first bearing estimate
    let pose = Pose::new(map.start, 0.0).expect("finite start");
    let mut m = Mission {
        map,
        mode,
        cfg,
        seed,
        drone: DroneState::new(pose, cfg.speed),
        sensor: SensorState::new(cfg.sensor.clone()),
        rf_rng: RngStream::new(seed, RF_NOISE_STREAM),
        sensor_rng: RngStream::new(seed, SENSOR_NOISE_STREAM),
        bearing_errors: Vec::new(),
        cycles: Vec::new(),
        min_clearance: f64::INFINITY,
    };
    m.collided();

    let mut mu = cfg.sampling.mu;
    let mut last_dir = Vec2::new(1.0, 0.0);
    let mut replan_positions: Vec<Vec2> = Vec::new();

    loop {
        if m.near_target() {
            // landing move onto the source
            while m.drone.position() != map.target {
                m.drone.step_toward(map.target);
                if m.collided() {
                    return m.finish(Outcome::Failure(FailureReason::Collision));
                }
            }
            return m.finish(Outcome::Success);
        }
        if m.cycles.len() >= cfg.max_replans {
            return m.finish(Outcome::Failure(FailureReason::BudgetExhausted));
        }

        replan_positions.push(m.drone.position());
        let k = replan_positions.len();
        if k > cfg.stuck_window {
            let net = replan_positions[k - 1].distance(replan_positions[k - 1 - cfg.stuck_window]);
            if net < cfg.stuck_distance {
                return m.finish(Outcome::Failure(FailureReason::Stuck));
            }
        }

        let dir = m.estimate().unwrap_or(last_dir);
        last_dir = dir;
        // look along the estimated bearing before planning
        m.drone.face(m.drone.position() + dir);
        m.sense();

        let pos = m.drone.position();
        let raw_goal = if pos.distance(map.target) < cfg.horizon {
            map.target
        } else {
            apf::place_temp_target(&m.drone.pose, dir, cfg.horizon)
        };
        let temp_goal = clear_goal(raw_goal, &m.sensor.known_obstacles(), cfg.descent.r_drone);

        let (traj, chosen_params, _) = match m.plan(temp_goal, mu) {
            Ok(r) => r,
            Err(e) => return m.finish(Outcome::Failure(FailureReason::Planner(e))),
        };
        if mode == PlannerMode::Modified && !cfg.frozen_means {
            mu = chosen_params;
        }

        let waypoints = &traj.points[1..];
        for (i, &wp) in waypoints.iter().enumerate() {
            m.drone.face(wp);
            if m.sense() {
                let known = m.sensor.known_obstacles();
                let blocked = waypoints[i..]
                    .iter()
                    .any(|p| min_boundary_distance(*p, &known, cfg.descent.r_drone) <= 0.0);
                if blocked {
                    break;
                }
            }
            while m.drone.position() != wp {
                m.drone.step_toward(wp);
                if m.collided() {
                    return m.finish(Outcome::Failure(FailureReason::Collision));
                }
                if m.near_target() {
                    break;
                }
                m.estimate();
            }
            m.drone.waypoint_index = i + 1;
            if m.near_target() || i + 1 >= cfg.replan_at {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_field_pursuit_is_straight() {
        let map = WorldMap::empty(10.0, Vec2::new(2.0, 2.0), Vec2::new(8.0, 2.0));
        for mode in [PlannerMode::Standard, PlannerMode::Modified] {
            let r = run_mission(&map, mode, &MissionConfig::default(), 1);
            assert!(r.outcome.is_success(), "{mode:?}: {:?}", r.outcome);
            assert!(r.relative_length < 1.05, "{mode:?}: {}", r.relative_length);
            assert!(r.relative_length >= 1.0 - 1e-9);
            assert!(r.mean_abs_bearing_error() < 0.5f64.to_radians());
        }
    }

    #[test]
    fn mission_is_deterministic() {
        let map = WorldMap::new(
            10.0,
            vec![Obstacle::new(Vec2::new(5.0, 2.3), 0.5)],
            Vec2::new(1.0, 2.0),
            Vec2::new(9.0, 2.0),
        );
        let mut cfg = MissionConfig::default();
        cfg.rf.noise_sigma = 0.05;
        let a = run_mission(&map, PlannerMode::Modified, &cfg, 9);
        let b = run_mission(&map, PlannerMode::Modified, &cfg, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn planner_only_sees_revealed_obstacles() {
        // an obstacle behind the start is never in view
        let hidden = Obstacle::new(Vec2::new(0.8, 8.0), 0.4);
        let ahead = Obstacle::new(Vec2::new(5.0, 5.3), 0.5);
        let map = WorldMap::new(10.0, vec![hidden, ahead], Vec2::new(2.0, 5.0), Vec2::new(9.0, 5.0));
        let r = run_mission(&map, PlannerMode::Modified, &MissionConfig::default(), 4);
        assert!(!r.revealed.contains(&0));
        for c in &r.cycles {
            assert!(!c.obstacles.contains(&hidden));
        }
        assert!(r.cycles.iter().any(|c| c.obstacles.contains(&ahead)));
    }

    #[test]
    fn sampling_escapes_symmetric_gate() {
        // the source sits straight behind a gate that the fixed field
        // cannot pass
        let map = WorldMap::new(
            10.0,
            vec![
                Obstacle::new(Vec2::new(5.0, 4.0), 0.45),
                Obstacle::new(Vec2::new(5.0, 6.0), 0.45),
            ],
            Vec2::new(1.5, 5.0),
            Vec2::new(8.5, 5.0),
        );
        let mut cfg = MissionConfig::default();
        cfg.record_plans = false;
        let mu = PotentialParams::new(1.0, 1.5, 0.8).unwrap();
        cfg.sampling = SamplingConfig::with_defaults(mu, cfg.descent.r_drone);

        let standard = run_mission(&map, PlannerMode::Standard, &cfg, 0);
        assert_eq!(standard.outcome, Outcome::Failure(FailureReason::Stuck));
        let wins = (0..20)
            .filter(|&seed| run_mission(&map, PlannerMode::Modified, &cfg, seed).outcome.is_success())
            .count();
        assert!(wins > 10, "modified succeeded in {wins}/20");
    }

    #[test]
    fn goal_pushed_out_of_obstacle() {
        let o = Obstacle::new(Vec2::new(2.0, 0.0), 0.5);
        let g = clear_goal(Vec2::new(2.1, 0.0), &[o], 0.2);
        assert!((d_boundary(g, &o, 0.2) - 0.1).abs() < 1e-12);
    }
}
