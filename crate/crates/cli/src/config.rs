//! Scenario files: JSON documents whose omitted fields take the defaults
//! below.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use seeker_core::apf::PotentialParams;
use seeker_core::optimizer::SamplingConfig;
use seeker_core::world::{DensityTarget, GenOptions, MissionConfig, PlannerMode, WorldMap, REFERENCE_TARGETS};

/// Receiver noise whose noiseless-geometry circle test averages about 1.5°.
pub const CALIBRATED_NOISE_SIGMA: f64 = 0.33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// Generated to match a density mean and variance.
    Generated { name: String, mean: f64, variance: f64 },
    /// Obstacles read from a map file; start/target are still drawn per run.
    File { name: String, path: PathBuf },
}

impl MapSpec {
    pub fn name(&self) -> &str {
        match self {
            Self::Generated { name, .. } | Self::File { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircleConfig {
    pub radius: f64,
    pub positions: usize,
}

impl Default for CircleConfig {
    fn default() -> Self {
        Self {
            radius: 5.0,
            positions: 72,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub maps: Vec<MapSpec>,
    pub modes: Vec<PlannerMode>,
    /// Base seeds; every run is determined by (config, seed).
    pub seeds: Vec<u64>,
    pub runs_per_map: usize,
    /// Preferred start/target separation; relaxed 1 m at a time on maps
    /// too crowded to place such a pair.
    pub endpoint_separation: f64,
    pub mission: MissionConfig,
    pub generator: GenOptions,
    pub circle: CircleConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            maps: REFERENCE_TARGETS
                .iter()
                .enumerate()
                .map(|(i, t)| MapSpec::Generated {
                    name: format!("map{}", i + 1),
                    mean: t.mean,
                    variance: t.variance,
                })
                .collect(),
            modes: vec![PlannerMode::Standard, PlannerMode::Modified],
            seeds: vec![1],
            runs_per_map: 7,
            endpoint_separation: 6.0,
            mission: tuned_mission(),
            generator: GenOptions::default(),
            circle: CircleConfig::default(),
            output_dir: None,
        }
    }
}

/// Mission settings used by the benchmark.
///
/// The fixed field `(1, 0.5, 0.6)` is the one that got the standard planner
/// through every run on the map-2 analogue. The sampler spreads are three
/// times the library defaults, goal error is weighted ×4 and proximity ×0.3,
/// and the means stay frozen; receiver noise is the calibrated level.
pub fn tuned_mission() -> MissionConfig {
    let mut m = MissionConfig::default();
    let mu = PotentialParams {
        k_att: 1.0,
        k_rep: 0.5,
        d0: 0.6,
    };
    let mut sampling = SamplingConfig::with_defaults(mu, m.descent.r_drone);
    for s in sampling.sigma.iter_mut() {
        *s *= 3.0;
    }
    sampling.cost_weights.goal_error = 4.0;
    sampling.cost_weights.proximity = 0.3;
    m.sampling = sampling;
    m.frozen_means = true;
    m.rf.noise_sigma = CALIBRATED_NOISE_SIGMA;
    m.record_plans = false;
    m
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Resolved map source for one benchmark slot.
pub enum MapSource {
    Target(DensityTarget),
    Fixed(WorldMap),
}

impl MapSpec {
    pub fn resolve(&self) -> anyhow::Result<MapSource> {
        Ok(match self {
            Self::Generated { mean, variance, .. } => MapSource::Target(DensityTarget::new(*mean, *variance)),
            Self::File { path, .. } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                MapSource::Fixed(WorldMap::from_text(&text)?)
            }
        })
    }
}
