//! Obstacle maps with a prescribed mean and variance of per-cell density.
//!
//! Disks are placed one at a time. Each placement draws several valid
//! candidates and keeps the one whose resulting spread
//! `S = Σ (x_c − m*)²` best follows a straight line from its empty-map value
//! `N·m*²` to the goal value `N·v*` as covered area grows toward `N·m*`.
//! The last disk is sized to land on the target area.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apf::Obstacle;
use crate::geom::Vec2;
use crate::random::RngStream;

use super::density::{counts_to_density, disk_cell_counts, grid_dims, mean_variance};
use super::map::{endpoint_clear, sample_endpoints};
use super::WorldMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityTarget {
    pub mean: f64,
    pub variance: f64,
}

impl DensityTarget {
    pub const fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Mean/variance pairs of the five reference maps.
pub const REFERENCE_TARGETS: [DensityTarget; 5] = [
    DensityTarget::new(0.0702, 0.0020),
    DensityTarget::new(0.1102, 0.0023),
    DensityTarget::new(0.1267, 0.0021),
    DensityTarget::new(0.1520, 0.0011),
    DensityTarget::new(0.1552, 0.0152),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenOptions {
    pub extent: f64,
    pub radius_range: (f64, f64),
    /// Minimum free space between obstacle boundaries.
    pub gap: f64,
    pub r_drone: f64,
    /// Valid candidates compared per placement.
    pub candidates: usize,
    /// Total candidate draws for fresh placements before giving up.
    pub max_attempts: usize,
    /// Relocate/resize moves tried per round after greedy placement.
    pub refine_moves: usize,
    /// Accepted relative error of the mean.
    pub mean_tol: f64,
    /// Accepted relative error of the variance.
    pub variance_tol: f64,
    /// Targets with at least this variance draw centers around clusters.
    pub bias_threshold: f64,
    pub cluster_sigma: f64,
    /// Share of unclustered candidates centered near a cell corner.
    pub corner_fraction: f64,
    pub corner_jitter: f64,
    pub endpoint_separation: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            extent: 10.0,
            radius_range: (0.3, 0.8),
            gap: 0.1,
            r_drone: 0.2,
            candidates: 16,
            max_attempts: 10_000,
            refine_moves: 20_000,
            mean_tol: 0.05,
            variance_tol: 0.02,
            bias_threshold: 0.005,
            cluster_sigma: 1.2,
            corner_fraction: 0.5,
            corner_jitter: 0.3,
            endpoint_separation: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("target mean {0} outside [0, 0.3]")]
    BadTarget(f64),
    #[error("invalid generator options: {0}")]
    BadOptions(&'static str),
    #[error("gave up after {attempts} placement attempts; best mean {best_mean:.4}, variance {best_variance:.5}")]
    Exhausted {
        attempts: usize,
        best_mean: f64,
        best_variance: f64,
    },
}

struct Round {
    map: WorldMap,
    mean: f64,
    variance: f64,
}

/// Generates a map whose density mean and variance fall within the
/// configured tolerances of `target`.
pub fn generate_map(target: DensityTarget, rng: &mut RngStream, opts: &GenOptions) -> Result<WorldMap, GenError> {
    if !(0.0..=0.3).contains(&target.mean) {
        return Err(GenError::BadTarget(target.mean));
    }
    let (rmin, rmax) = opts.radius_range;
    if !(rmin > 0.0 && rmin <= rmax && 2.0 * rmax < opts.extent) {
        return Err(GenError::BadOptions("radius range"));
    }
    let endpoints = |rng: &mut RngStream, obs: &[Obstacle]| {
        sample_endpoints(opts.extent, obs, opts.r_drone, opts.endpoint_separation, 0.5, rng)
            .map_err(|_| GenError::BadOptions("extent too small for endpoint separation"))
    };
    if target.mean == 0.0 {
        let (s, t) = endpoints(rng, &[])?;
        return Ok(WorldMap::empty(opts.extent, s, t));
    }

    let mut attempts = 0;
    let mut best: Option<(f64, Round)> = None;
    while attempts < opts.max_attempts {
        let (start, goal) = endpoints(rng, &[])?;
        let round = place_round(target, rng, opts, start, goal, &mut attempts);
        let (mean_err, var_err) = relative_errors(target, round.mean, round.variance);
        if mean_err <= opts.mean_tol && var_err <= opts.variance_tol {
            return Ok(round.map);
        }
        let score = mean_err / opts.mean_tol + var_err / opts.variance_tol;
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, round));
        }
    }
    let (_, b) = best.expect("at least one round runs");
    Err(GenError::Exhausted {
        attempts,
        best_mean: b.mean,
        best_variance: b.variance,
    })
}

struct Proposal<'a> {
    opts: &'a GenOptions,
    n: usize,
    clusters: Vec<Vec2>,
}

impl Proposal<'_> {
    fn center(&self, rng: &mut RngStream, r: f64) -> Vec2 {
        let opts = self.opts;
        if !self.clusters.is_empty() {
            let k = (rng.next_u64() % self.clusters.len() as u64) as usize;
            let cc = self.clusters[k];
            Vec2::new(
                rng.gaussian(cc.x, opts.cluster_sigma).unwrap(),
                rng.gaussian(cc.y, opts.cluster_sigma).unwrap(),
            )
        } else if rng.uniform(0.0, 1.0).unwrap() < opts.corner_fraction {
            // a disk on a cell corner splits its area over four cells
            let k = self.n as u64 - 1;
            let ci = 1 + rng.next_u64() % k;
            let cj = 1 + rng.next_u64() % k;
            Vec2::new(
                rng.gaussian(ci as f64, opts.corner_jitter).unwrap(),
                rng.gaussian(cj as f64, opts.corner_jitter).unwrap(),
            )
        } else {
            Vec2::new(
                rng.uniform(r, opts.extent - r).unwrap(),
                rng.uniform(r, opts.extent - r).unwrap(),
            )
        }
    }
}

fn relative_errors(target: DensityTarget, mean: f64, variance: f64) -> (f64, f64) {
    let mean_err = (mean - target.mean).abs() / target.mean;
    let var_err = if target.variance > 0.0 {
        (variance - target.variance).abs() / target.variance
    } else {
        variance
    };
    (mean_err, var_err)
}

fn stats(counts: &[u32]) -> (f64, f64) {
    mean_variance(&counts_to_density(counts))
}

fn place_round(
    target: DensityTarget,
    rng: &mut RngStream,
    opts: &GenOptions,
    start: Vec2,
    goal: Vec2,
    attempts: &mut usize,
) -> Round {
    use std::f64::consts::PI;

    let n = grid_dims(opts.extent);
    let cells = (n * n) as f64;
    let (rmin, rmax) = opts.radius_range;
    let m = target.mean;
    let needed = m * cells;
    let s_empty = cells * m * m;
    let s_goal = cells * target.variance;

    let clusters: Vec<Vec2> = if target.variance >= opts.bias_threshold {
        let (lo, hi) = (opts.extent * 0.2, opts.extent * 0.8);
        (0..2)
            .map(|_| Vec2::new(rng.uniform(lo, hi).unwrap(), rng.uniform(lo, hi).unwrap()))
            .collect()
    } else {
        Vec::new()
    };
    let proposal = Proposal { opts, n, clusters };

    let mut counts = vec![0u32; n * n];
    let mut spread = s_empty;
    let mut area = 0.0;
    let mut obstacles: Vec<Obstacle> = Vec::new();
    let mut footprints: Vec<Vec<(usize, u32)>> = Vec::new();
    let mut idle = 0;

    // greedy placement
    while *attempts < opts.max_attempts {
        let remaining = needed - area;
        let r_fit = (remaining / PI).sqrt();
        if r_fit < rmin {
            break;
        }
        let rhi = rmax.min(r_fit);
        let mut choice: Option<(f64, Obstacle, Vec<(usize, u32)>, f64)> = None;
        let mut drawn = 0;
        let density = counts_to_density(&counts);
        while drawn < opts.candidates && *attempts < opts.max_attempts {
            *attempts += 1;
            drawn += 1;
            let r = if rhi > rmin { rng.uniform(rmin, rhi).unwrap() } else { rmin };
            let ob = Obstacle::new(proposal.center(rng, r), r);
            if !fits(&ob, obstacles.iter(), opts, start, goal) {
                continue;
            }
            let touched = disk_cell_counts(&ob, n);
            let mut s = spread;
            for &(k, add) in &touched {
                let new = counts_to_density(&[counts[k] + add])[0];
                s += (new - m).powi(2) - (density[k] - m).powi(2);
            }
            let progress = ((area + ob.area()) / needed).min(1.0);
            let s_target = s_empty + (s_goal - s_empty) * progress;
            let score = (s - s_target).abs();
            if choice.as_ref().is_none_or(|(best, ..)| score < *best) {
                choice = Some((score, ob, touched, s));
            }
        }
        match choice {
            Some((_, ob, touched, s)) => {
                idle = 0;
                for &(k, add) in &touched {
                    counts[k] += add;
                }
                spread = s;
                area += ob.area();
                obstacles.push(ob);
                footprints.push(touched);
            }
            None => {
                idle += 1;
                if idle >= 20 {
                    break;
                }
            }
        }
    }

    // local refinement: move or resize one disk at a time while the
    // combined relative error shrinks
    let objective = |mean: f64, var: f64| {
        let (me, ve) = relative_errors(target, mean, var);
        (me / opts.mean_tol).powi(2) + (ve / opts.variance_tol).powi(2)
    };
    let (mut mean, mut variance) = stats(&counts);
    let mut current = objective(mean, variance);
    for _ in 0..opts.refine_moves {
        if obstacles.is_empty() {
            break;
        }
        let (me, ve) = relative_errors(target, mean, variance);
        if me <= opts.mean_tol && ve <= opts.variance_tol {
            break;
        }
        let i = (rng.next_u64() % obstacles.len() as u64) as usize;
        let old = obstacles[i];
        let kind = rng.uniform(0.0, 1.0).unwrap();
        let ob = if kind < 0.5 {
            Obstacle::new(proposal.center(rng, old.radius), old.radius)
        } else if kind < 0.8 {
            let r = (old.radius + rng.uniform(-0.05, 0.05).unwrap()).clamp(rmin, rmax);
            let c = old.center + Vec2::new(rng.gaussian(0.0, 0.05).unwrap(), rng.gaussian(0.0, 0.05).unwrap());
            Obstacle::new(c, r)
        } else {
            let r = rng.uniform(rmin, rmax).unwrap();
            Obstacle::new(proposal.center(rng, r), r)
        };
        let others = obstacles.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, o)| o);
        if !fits(&ob, others, opts, start, goal) {
            continue;
        }
        let touched = disk_cell_counts(&ob, n);
        let mut trial = counts.clone();
        for &(k, c) in &footprints[i] {
            trial[k] -= c;
        }
        for &(k, c) in &touched {
            trial[k] += c;
        }
        let (tm, tv) = stats(&trial);
        let score = objective(tm, tv);
        if score < current {
            current = score;
            counts = trial;
            mean = tm;
            variance = tv;
            obstacles[i] = ob;
            footprints[i] = touched;
        }
    }

    Round {
        map: WorldMap::new(opts.extent, obstacles, start, goal),
        mean,
        variance,
    }
}

fn fits<'a>(
    ob: &Obstacle,
    mut placed: impl Iterator<Item = &'a Obstacle>,
    opts: &GenOptions,
    start: Vec2,
    goal: Vec2,
) -> bool {
    let c = ob.center;
    let r = ob.radius;
    let inside = c.x >= r && c.y >= r && c.x <= opts.extent - r && c.y <= opts.extent - r;
    inside
        && placed
            .all(|o| o.center.distance(c) >= o.radius + r + opts.gap)
        && endpoint_clear(start, std::slice::from_ref(ob), opts.r_drone)
        && endpoint_clear(goal, std::slice::from_ref(ob), opts.r_drone)
}

#[cfg(test)]
mod tests {
    use super::super::density::obstacle_density;
    use super::*;

    #[test]
    fn zero_mean_is_empty() {
        let mut rng = RngStream::new(1, 0);
        let m = generate_map(DensityTarget::new(0.0, 0.0), &mut rng, &GenOptions::default()).unwrap();
        assert!(m.obstacles.is_empty());
        assert!(m.start.distance(m.target) >= 6.0);
    }

    #[test]
    fn rejects_bad_target() {
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            generate_map(DensityTarget::new(0.5, 0.0), &mut rng, &GenOptions::default()),
            Err(GenError::BadTarget(_))
        ));
    }

    #[test]
    fn first_reference_map_hits_mean() {
        let mut rng = RngStream::new(11, 0);
        let opts = GenOptions::default();
        let t = REFERENCE_TARGETS[0];
        let m = generate_map(t, &mut rng, &opts).unwrap();
        let d = obstacle_density(&m);
        assert!((d.mean - t.mean).abs() <= 0.1 * t.mean, "mean {}", d.mean);
        assert!(m.validate(opts.r_drone).is_ok());
        for (i, a) in m.obstacles.iter().enumerate() {
            for b in &m.obstacles[i + 1..] {
                assert!(a.center.distance(b.center) >= a.radius + b.radius + opts.gap - 1e-12);
            }
        }
    }
}
