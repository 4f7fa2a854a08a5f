//! The RF accuracy tests and the paired planner benchmark.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seeker_core::aoa::estimate_direction;
use seeker_core::random::mix_seed;
use seeker_core::rfsim::{simulate_phases, RfConfig};
use seeker_core::world::{
    generate_map, obstacle_density, run_mission, sample_endpoints, MapError, MissionConfig, MissionRecord,
    PlannerMode, WorldMap,
};
use seeker_core::{normalize_angle, Pose, RngStream, Vec2};

use crate::config::{MapSource, ScenarioConfig};

const RF_STREAM: u64 = 1;
const ENDPOINT_STREAM: u64 = 1;
const MISSION_SALT: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleRow {
    pub true_deg: f64,
    /// Absent when the pipeline rejected the reading.
    pub est_deg: Option<f64>,
    pub err_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleTest {
    pub radius: f64,
    pub noise_sigma: f64,
    pub rows: Vec<CircleRow>,
}

impl CircleTest {
    fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter_map(|r| r.err_deg).map(f64::abs)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.err_deg.is_none()).count()
    }

    pub fn mean_abs_err_deg(&self) -> f64 {
        let n = self.rows.len() - self.failures();
        if n == 0 {
            return f64::NAN;
        }
        self.errors().sum::<f64>() / n as f64
    }

    pub fn max_abs_err_deg(&self) -> f64 {
        self.errors().fold(0.0, f64::max)
    }
}

/// Source carried around a stationary drone at the origin (heading +x) on
/// a circle of `radius`, at `n_positions` equally spaced bearings.
pub fn run_rf_circle_test(radius: f64, n_positions: usize, rf: &RfConfig, seed: u64) -> CircleTest {
    let pose = Pose::new(Vec2::ZERO, 0.0).expect("finite pose");
    let array = rf.square_array();
    let mut rng = RngStream::new(seed, RF_STREAM);
    let rows = (0..n_positions)
        .map(|k| {
            let bearing = std::f64::consts::TAU * k as f64 / n_positions as f64;
            let est = rf
                .source_at(Vec2::from_angle(bearing) * radius)
                .ok()
                .and_then(|src| {
                    let noise = (rf.noise_sigma > 0.0).then_some(&mut rng);
                    simulate_phases(&src, &array, &pose, rf, noise).ok()
                })
                .and_then(|reading| estimate_direction(&array, &reading, &pose).ok())
                .map(|e| e.world_bearing());
            CircleRow {
                true_deg: bearing.to_degrees(),
                est_deg: est.map(f64::to_degrees),
                err_deg: est.map(|e| normalize_angle(e - bearing).to_degrees()),
            }
        })
        .collect();
    CircleTest {
        radius,
        noise_sigma: rf.noise_sigma,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitResult {
    pub record: MissionRecord,
    pub mean_error_deg: f64,
}

/// Open-field seeking run; start and source are drawn from `seed`.
pub fn run_rf_pursuit_test(mission: &MissionConfig, mode: PlannerMode, seed: u64) -> PursuitResult {
    let mut rng = RngStream::new(seed, 0);
    let (start, target) = sample_endpoints(10.0, &[], mission.descent.r_drone, 6.0, 0.5, &mut rng)
        .expect("an empty map always has endpoints");
    let map = WorldMap::empty(10.0, start, target);
    let record = run_mission(&map, mode, mission, seed);
    PursuitResult {
        mean_error_deg: record.mean_abs_bearing_error().to_degrees(),
        record,
    }
}

/// Generated map of one benchmark slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapInfo {
    pub seed: u64,
    pub index: usize,
    pub name: String,
    pub map: WorldMap,
    pub density_mean: f64,
    pub density_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub map_index: usize,
    pub map_name: String,
    pub run: usize,
    pub mission: MissionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolError {
    pub seed: u64,
    pub map_index: usize,
    pub run: usize,
    pub mode: Option<PlannerMode>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub index: usize,
    pub name: String,
    pub n_runs: usize,
    pub successes_standard: usize,
    pub successes_modified: usize,
    pub success_rate_standard: f64,
    pub success_rate_modified: f64,
    pub n_both_succeeded: usize,
    /// Averaged over runs where both modes succeeded.
    pub avg_relative_length_standard: Option<f64>,
    pub avg_relative_length_modified: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub maps: Vec<MapSummary>,
    pub total_successes_standard: usize,
    pub total_successes_modified: usize,
    pub total_runs: usize,
    /// Pooled over every jointly successful run.
    pub mean_relative_length_standard: Option<f64>,
    pub mean_relative_length_modified: Option<f64>,
    pub tool_errors: usize,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl BenchmarkSummary {
    /// Pairs runs by (seed, map, run); a run counts toward a map once either
    /// mode produced a record for it.
    pub fn from_records(map_names: &[String], records: &[RunRecord], tool_errors: usize) -> Self {
        type Pair<'a> = (Option<&'a MissionRecord>, Option<&'a MissionRecord>);
        let mut pairs: BTreeMap<(usize, u64, usize), Pair> = BTreeMap::new();
        for r in records {
            let slot = pairs.entry((r.map_index, r.seed, r.run)).or_default();
            match r.mission.mode {
                PlannerMode::Standard => slot.0 = Some(&r.mission),
                PlannerMode::Modified => slot.1 = Some(&r.mission),
            }
        }
        let ok = |m: Option<&MissionRecord>| m.is_some_and(|m| m.outcome.is_success());
        let mut pooled = (Vec::new(), Vec::new());
        let maps: Vec<MapSummary> = map_names
            .iter()
            .enumerate()
            .map(|(index, name)| {
                let runs: Vec<&Pair> = pairs.range((index, 0, 0)..=(index, u64::MAX, usize::MAX)).map(|(_, p)| p).collect();
                let n_runs = runs.len();
                let s = runs.iter().filter(|p| ok(p.0)).count();
                let m = runs.iter().filter(|p| ok(p.1)).count();
                let (mut ls, mut lm) = (Vec::new(), Vec::new());
                for (a, b) in runs.iter().filter_map(|p| match p {
                    (Some(a), Some(b)) if a.outcome.is_success() && b.outcome.is_success() => Some((a, b)),
                    _ => None,
                }) {
                    ls.push(a.relative_length);
                    lm.push(b.relative_length);
                }
                pooled.0.extend_from_slice(&ls);
                pooled.1.extend_from_slice(&lm);
                let rate = |k: usize| if n_runs == 0 { 0.0 } else { k as f64 / n_runs as f64 };
                MapSummary {
                    index,
                    name: name.clone(),
                    n_runs,
                    successes_standard: s,
                    successes_modified: m,
                    success_rate_standard: rate(s),
                    success_rate_modified: rate(m),
                    n_both_succeeded: ls.len(),
                    avg_relative_length_standard: mean(&ls),
                    avg_relative_length_modified: mean(&lm),
                }
            })
            .collect();
        Self {
            total_successes_standard: maps.iter().map(|m| m.successes_standard).sum(),
            total_successes_modified: maps.iter().map(|m| m.successes_modified).sum(),
            total_runs: maps.iter().map(|m| m.n_runs).sum(),
            mean_relative_length_standard: mean(&pooled.0),
            mean_relative_length_modified: mean(&pooled.1),
            maps,
            tool_errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutput {
    pub maps: Vec<MapInfo>,
    pub records: Vec<RunRecord>,
    pub tool_errors: Vec<ToolError>,
    pub summary: BenchmarkSummary,
}

/// Start/target pair for one run, relaxing the separation on crowded maps.
fn draw_endpoints(map: &WorldMap, cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<(Vec2, Vec2), MapError> {
    let r = cfg.mission.descent.r_drone;
    let mut sep = cfg.endpoint_separation;
    loop {
        match sample_endpoints(map.extent, &map.obstacles, r, sep, 0.5, rng) {
            Err(MapError::NoEndpoints(_)) if sep > 1.0 => sep -= 1.0,
            other => return other,
        }
    }
}

/// Generation streams tried per slot before the slot counts as a tool error.
const GEN_STREAMS: u64 = 4;

/// Map of one benchmark slot. Dense low-variance targets occasionally
/// exhaust the generator; the next stream of the same seed is tried then.
pub fn build_map(cfg: &ScenarioConfig, seed: u64, index: usize) -> Result<MapInfo, String> {
    let spec = cfg.maps.get(index).ok_or_else(|| format!("no map {index} in the scenario"))?;
    let map = match spec.resolve().map_err(|e| format!("{e:#}"))? {
        MapSource::Target(t) => {
            let mut last = None;
            for stream in 0..GEN_STREAMS {
                let mut rng = RngStream::new(mix_seed(&[seed, index as u64]), stream);
                match generate_map(t, &mut rng, &cfg.generator) {
                    Ok(m) => {
                        last = Some(Ok(m));
                        break;
                    }
                    Err(e) => last = Some(Err(e.to_string())),
                }
            }
            last.expect("at least one stream")?
        }
        MapSource::Fixed(m) => m,
    };
    let d = obstacle_density(&map);
    Ok(MapInfo {
        seed,
        index,
        name: spec.name().to_string(),
        map,
        density_mean: d.mean,
        density_variance: d.variance,
    })
}

/// Every map × run × mode of every seed. Both modes of a run share the map,
/// the start/target pair and the mission seed; only the planner differs.
pub fn run_benchmark(cfg: &ScenarioConfig) -> BenchmarkOutput {
    let mut maps = Vec::new();
    let mut tool_errors = Vec::new();
    for &seed in &cfg.seeds {
        for index in 0..cfg.maps.len() {
            match build_map(cfg, seed, index) {
                Ok(m) => maps.push(m),
                Err(message) => tool_errors.push(ToolError {
                    seed,
                    map_index: index,
                    run: 0,
                    mode: None,
                    message,
                }),
            }
        }
    }

    struct Job<'a> {
        info: &'a MapInfo,
        run: usize,
        mode: PlannerMode,
        map: Result<WorldMap, String>,
    }
    let mut jobs = Vec::new();
    for info in &maps {
        for run in 0..cfg.runs_per_map {
            let mut rng = RngStream::new(mix_seed(&[info.seed, info.index as u64, run as u64]), ENDPOINT_STREAM);
            let map = draw_endpoints(&info.map, cfg, &mut rng)
                .map(|(s, t)| info.map.with_endpoints(s, t))
                .map_err(|e| e.to_string());
            for &mode in &cfg.modes {
                jobs.push(Job {
                    info,
                    run,
                    mode,
                    map: map.clone(),
                });
            }
        }
    }

    let results: Vec<Result<RunRecord, ToolError>> = jobs
        .par_iter()
        .map(|job| {
            let info = job.info;
            let fail = |message: String| ToolError {
                seed: info.seed,
                map_index: info.index,
                run: job.run,
                mode: Some(job.mode),
                message,
            };
            let map = job.map.as_ref().map_err(|e| fail(e.clone()))?;
            let mission_seed = mix_seed(&[info.seed, info.index as u64, job.run as u64, MISSION_SALT]);
            let mission = catch_unwind(AssertUnwindSafe(|| run_mission(map, job.mode, &cfg.mission, mission_seed)))
                .map_err(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "mission panicked".into());
                    fail(msg)
                })?;
            Ok(RunRecord {
                seed: info.seed,
                map_index: info.index,
                map_name: info.name.clone(),
                run: job.run,
                mission,
            })
        })
        .collect();

    let mut records = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => tool_errors.push(e),
        }
    }
    let names: Vec<String> = cfg.maps.iter().map(|m| m.name().to_string()).collect();
    let summary = BenchmarkSummary::from_records(&names, &records, tool_errors.len());
    BenchmarkOutput {
        maps,
        records,
        tool_errors,
        summary,
    }
}
