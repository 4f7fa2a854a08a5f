//! Sampling optimizer over potential-field parameters.
//!
//! Each replanning cycle descends the field once with the current mean
//! parameters, then `n_samples` more times with Gaussian-perturbed ones.
//! Trajectories are scored, weighted by `exp(-cost/λ)`, fused into a weighted
//! average, and the *sampled* trajectory closest to that average is returned
//! — the average itself is never flown, since it may cut through obstacles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apf::{self, ApfError, FieldContext, Obstacle, PotentialParams, DELTA_MIN};
use crate::geom::{normalize_angle, Trajectory, Vec2};
use crate::random::{RandomError, RngStream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Random(#[from] RandomError),
    #[error(transparent)]
    Apf(#[from] ApfError),
}

/// Multipliers on the four cost terms; all 1 reproduces the plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub length: f64,
    pub goal_error: f64,
    pub angle: f64,
    pub proximity: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            length: 1.0,
            goal_error: 1.0,
            angle: 1.0,
            proximity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub mu: PotentialParams,
    /// Standard deviations for (k_att, k_rep, d0).
    pub sigma: [f64; 3],
    /// Draws must end up strictly above these.
    pub limits: [f64; 3],
    pub n_samples: usize,
    pub lambda: f64,
    pub max_resample: usize,
    #[serde(default)]
    pub cost_weights: CostWeights,
}

impl SamplingConfig {
    /// Spreads of 30 %/30 %/20 % of the means, `d0` kept 0.1 m clear of the
    /// drone radius.
    pub fn with_defaults(mu: PotentialParams, r_drone: f64) -> Self {
        Self {
            mu,
            sigma: [0.3 * mu.k_att, 0.3 * mu.k_rep, 0.2 * mu.d0],
            limits: [1e-3, 1e-3, r_drone + 0.1],
            n_samples: 10,
            lambda: 1.0,
            max_resample: 20,
            cost_weights: CostWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.n_samples == 0 {
            return Err(OptimizerError::InvalidConfig("n_samples must be at least 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(OptimizerError::InvalidConfig("lambda must be positive"));
        }
        if self.max_resample == 0 {
            return Err(OptimizerError::InvalidConfig("max_resample must be at least 1"));
        }
        if self.limits.iter().any(|l| !(*l >= 0.0)) {
            return Err(OptimizerError::InvalidConfig("limits must be non-negative"));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(OptimizerError::InvalidConfig("sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Step size, step budget and drone radius shared by every descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentSettings {
    pub step: f64,
    pub max_steps: usize,
    pub r_drone: f64,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            step: apf::DEFAULT_STEP,
            max_steps: apf::DEFAULT_MAX_STEPS,
            r_drone: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub length: f64,
    pub goal_error: f64,
    pub angle: f64,
    pub proximity: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn evaluate(t: &Trajectory, goal: Vec2, obstacles: &[Obstacle], r_drone: f64, w: &CostWeights) -> Self {
        let length = traj_length(t);
        let goal_error = traj_goal_error(t, goal);
        let angle = traj_angle_dev(t);
        let proximity = traj_proximity(t, obstacles, r_drone);
        let total =
            w.length * length + w.goal_error * goal_error + w.angle * angle + w.proximity * proximity;
        Self {
            length,
            goal_error,
            angle,
            proximity,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSample {
    pub params: PotentialParams,
    pub trajectory: Trajectory,
    pub cost: CostBreakdown,
    /// `exp(-cost/λ)`; may underflow to zero for expensive samples.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub initial: Trajectory,
    pub samples: Vec<PlanSample>,
    pub optimal: Trajectory,
    pub chosen_index: usize,
    pub chosen: Trajectory,
    pub chosen_params: PotentialParams,
}

/// Draws (k_att, k_rep, d0) independently. A draw at or below its limit is
/// redrawn up to `max_resample` times, then clamped to `limit + σ/10`.
pub fn sample_params(cfg: &SamplingConfig, rng: &mut RngStream) -> Result<PotentialParams, OptimizerError> {
    let mu = cfg.mu.as_array();
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (m, s, lim) = (mu[i], cfg.sigma[i], cfg.limits[i]);
        let mut v = rng.gaussian(m, s)?;
        let mut tries = 0;
        while v <= lim && tries < cfg.max_resample {
            v = rng.gaussian(m, s)?;
            tries += 1;
        }
        if v <= lim {
            v = lim + s / 10.0;
            if v <= lim {
                v = lim + 1e-9;
            }
        }
        out[i] = v;
    }
    Ok(PotentialParams::from_array(out))
}

pub fn traj_length(t: &Trajectory) -> f64 {
    t.points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

pub fn traj_goal_error(t: &Trajectory, goal: Vec2) -> f64 {
    t.last().distance(goal)
}

/// Sum of absolute heading changes between consecutive non-degenerate
/// segments.
pub fn traj_angle_dev(t: &Trajectory) -> f64 {
    let headings: Vec<f64> = t
        .points
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.norm() > 1e-12)
        .map(Vec2::angle)
        .collect();
    headings
        .windows(2)
        .map(|h| normalize_angle(h[1] - h[0]).abs())
        .sum()
}

/// Reciprocal of the closest approach to any inflated obstacle; zero when
/// there are no obstacles.
pub fn traj_proximity(t: &Trajectory, obstacles: &[Obstacle], r_drone: f64) -> f64 {
    if obstacles.is_empty() {
        return 0.0;
    }
    let min_d = t
        .points
        .iter()
        .map(|p| apf::min_boundary_distance(*p, obstacles, r_drone))
        .fold(f64::INFINITY, f64::min);
    1.0 / min_d.max(DELTA_MIN)
}

pub fn weight(cost: f64, lambda: f64) -> f64 {
    (-cost / lambda).exp()
}

/// `T_opt(i) = T_init(i) + Σ w_j (T_j(i) − T_init(i)) / Σ w_j`.
///
/// Shorter trajectories are padded with their final point. If every weight
/// is zero (or the sum is not finite) the samples are averaged uniformly.
pub fn fuse_optimal(initial: &Trajectory, samples: &[Trajectory], weights: &[f64]) -> Trajectory {
    assert_eq!(samples.len(), weights.len());
    let n = samples
        .iter()
        .map(Trajectory::len)
        .chain(std::iter::once(initial.len()))
        .max()
        .unwrap_or(0);
    let init = initial.padded(n);
    let padded: Vec<Trajectory> = samples.iter().map(|s| s.padded(n)).collect();

    let total: f64 = weights.iter().sum();
    let uniform;
    let (w, total) = if total > 0.0 && total.is_finite() {
        (weights, total)
    } else {
        uniform = vec![1.0; weights.len()];
        (&uniform[..], weights.len() as f64)
    };

    let points = (0..n)
        .map(|i| {
            let base = init.points[i];
            let mut acc = Vec2::ZERO;
            for (s, wj) in padded.iter().zip(w) {
                acc += (s.points[i] - base) * *wj;
            }
            base + acc * (1.0 / total)
        })
        .collect();
    Trajectory::new(points, initial.termination)
}

/// Index of the sample minimizing the summed pointwise distance to
/// `optimal`; ties go to the lowest index.
pub fn closest_sample(optimal: &Trajectory, samples: &[Trajectory]) -> usize {
    assert!(!samples.is_empty());
    let n = samples
        .iter()
        .map(Trajectory::len)
        .chain(std::iter::once(optimal.len()))
        .max()
        .unwrap_or(0);
    let opt = optimal.padded(n);
    let mut best = (0, f64::INFINITY);
    for (j, s) in samples.iter().enumerate() {
        let s = s.padded(n);
        let d: f64 = s.points.iter().zip(&opt.points).map(|(a, b)| a.distance(*b)).sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// One replanning cycle. Sample `j` uses stream `j` of `seed`; samples run
/// in parallel and are collected in index order, so the result depends only
/// on the inputs.
pub fn plan_cycle(
    start: Vec2,
    temp_goal: Vec2,
    obstacles: &[Obstacle],
    cfg: &SamplingConfig,
    descent: &DescentSettings,
    seed: u64,
) -> Result<PlanResult, OptimizerError> {
    cfg.validate()?;
    let DescentSettings { step, max_steps, r_drone } = *descent;
    let len = max_steps + 1;

    let ctx = FieldContext::new(temp_goal, obstacles, cfg.mu, r_drone);
    let initial = match apf::descend(start, &ctx, step, max_steps) {
        Ok(t) => t,
        Err(_) => {
            let mut halved = cfg.mu;
            halved.d0 *= 0.5;
            let ctx = FieldContext::new(temp_goal, obstacles, halved, r_drone);
            apf::descend(start, &ctx, step, max_steps)?
        }
    };

    let samples: Vec<PlanSample> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|j| -> Result<PlanSample, OptimizerError> {
            let mut rng = RngStream::new(seed, j as u64);
            let params = sample_params(cfg, &mut rng)?;
            let ctx = FieldContext::new(temp_goal, obstacles, params, r_drone);
            let trajectory = apf::descend(start, &ctx, step, max_steps)?.padded(len);
            let cost = CostBreakdown::evaluate(&trajectory, temp_goal, obstacles, r_drone, &cfg.cost_weights);
            Ok(PlanSample {
                params,
                trajectory,
                cost,
                weight: weight(cost.total, cfg.lambda),
            })
        })
        .collect::<Result<_, _>>()?;

    // Fuse with weights shifted by the minimum cost: proportional to the raw
    // weights, so the fused result is the same, but immune to underflow.
    let min_cost = samples.iter().map(|s| s.cost.total).fold(f64::INFINITY, f64::min);
    let rel: Vec<f64> = samples.iter().map(|s| weight(s.cost.total - min_cost, cfg.lambda)).collect();
    let trajs: Vec<Trajectory> = samples.iter().map(|s| s.trajectory.clone()).collect();
    let initial = initial.padded(len);
    let optimal = fuse_optimal(&initial, &trajs, &rel);
    let chosen_index = closest_sample(&optimal, &trajs);

    Ok(PlanResult {
        chosen: trajs[chosen_index].clone(),
        chosen_params: samples[chosen_index].params,
        initial,
        samples,
        optimal,
        chosen_index,
    })
}
