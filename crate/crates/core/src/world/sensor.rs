use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::apf::Obstacle;
use crate::geom::{normalize_angle, Pose, Vec2};
use crate::random::RngStream;

use super::circle_fit::fit_circle;
use super::WorldMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub half_angle: f64,
    pub range: f64,
    /// Reveal obstacles through a circle fit of observed boundary points
    /// instead of handing over the true circle.
    pub fit: bool,
    /// Boundary points sampled per observation in fit mode.
    pub fit_points: usize,
    /// Gaussian noise on observed boundary points in fit mode.
    pub fit_noise: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            half_angle: 45f64.to_radians(),
            range: 4.0,
            fit: false,
            fit_points: 12,
            fit_noise: 0.01,
        }
    }
}

/// Field-of-view cone: apex, unit axis, half-angle and range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub apex: Vec2,
    pub heading: f64,
    pub half_angle: f64,
    pub range: f64,
}

impl Sector {
    pub fn from_pose(pose: &Pose, half_angle: f64, range: f64) -> Self {
        Self {
            apex: pose.position,
            heading: pose.heading(),
            half_angle,
            range,
        }
    }

    fn within_angle(&self, dir_angle: f64) -> bool {
        normalize_angle(dir_angle - self.heading).abs() <= self.half_angle
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let v = p - self.apex;
        let d = v.norm();
        d == 0.0 || (d <= self.range && self.within_angle(v.angle()))
    }

    fn edge_ends(&self) -> [Vec2; 2] {
        [
            self.apex + Vec2::from_angle(self.heading - self.half_angle) * self.range,
            self.apex + Vec2::from_angle(self.heading + self.half_angle) * self.range,
        ]
    }

    /// Distance from `p` to the closest point of the sector (0 inside).
    pub fn min_distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let [e1, e2] = self.edge_ends();
        let mut best = segment_distance(p, self.apex, e1).min(segment_distance(p, self.apex, e2));
        let v = p - self.apex;
        if v.norm() > 0.0 && self.within_angle(v.angle()) {
            best = best.min((v.norm() - self.range).abs());
        }
        best
    }

    /// Distance from `p` to the farthest point of the sector. The sector is
    /// convex, so the maximum is at the apex or on the arc.
    pub fn max_distance(&self, p: Vec2) -> f64 {
        let [e1, e2] = self.edge_ends();
        let mut best = p.distance(self.apex).max(p.distance(e1)).max(p.distance(e2));
        let away = self.apex - p;
        let far_angle = if away.norm() > 0.0 { away.angle() } else { self.heading };
        if self.within_angle(far_angle) {
            best = best.max(away.norm() + self.range);
        }
        best
    }

    /// Whether any point of the circle boundary lies inside the sector.
    pub fn sees_circle(&self, ob: &Obstacle) -> bool {
        self.min_distance(ob.center) <= ob.radius && ob.radius <= self.max_distance(ob.center)
    }
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Obstacles revealed so far. Only grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorState {
    pub config: SensorConfig,
    /// Obstacle id → what the planner is told about it.
    known: BTreeMap<usize, Obstacle>,
    /// Boundary points observed per obstacle (fit mode only).
    #[serde(skip)]
    observed: BTreeMap<usize, Vec<Vec2>>,
}

impl SensorState {
    pub fn new(config: SensorConfig) -> Self {
        Self {
            config,
            known: BTreeMap::new(),
            observed: BTreeMap::new(),
        }
    }

    pub fn revealed_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.known.keys().copied()
    }

    pub fn revealed_count(&self) -> usize {
        self.known.len()
    }

    pub fn is_revealed(&self, id: usize) -> bool {
        self.known.contains_key(&id)
    }

    /// What the planner may use: true circles, or fitted estimates in fit mode.
    pub fn known_obstacles(&self) -> Vec<Obstacle> {
        self.known.values().copied().collect()
    }

    /// Looks through the cone at `pose`; returns the ids revealed by this call.
    /// `rng` supplies boundary-point noise in fit mode.
    pub fn sense(&mut self, map: &WorldMap, pose: &Pose, rng: Option<&mut RngStream>) -> Vec<usize> {
        let sector = Sector::from_pose(pose, self.config.half_angle, self.config.range);
        let mut newly = Vec::new();
        let mut rng = rng;
        for (id, ob) in map.obstacles.iter().enumerate() {
            if !sector.sees_circle(ob) {
                continue;
            }
            if !self.config.fit {
                if self.known.insert(id, *ob).is_none() {
                    newly.push(id);
                }
                continue;
            }
            let pts = visible_boundary(ob, &sector, self.config.fit_points);
            let noisy: Vec<Vec2> = pts
                .into_iter()
                .map(|p| match rng.as_deref_mut() {
                    Some(r) if self.config.fit_noise > 0.0 => Vec2::new(
                        r.gaussian(p.x, self.config.fit_noise).unwrap_or(p.x),
                        r.gaussian(p.y, self.config.fit_noise).unwrap_or(p.y),
                    ),
                    _ => p,
                })
                .collect();
            let all = self.observed.entry(id).or_default();
            all.extend(noisy);
            if let Ok(est) = fit_circle(all) {
                if self.known.insert(id, est).is_none() {
                    newly.push(id);
                }
            }
        }
        newly
    }
}

/// Up to `n` boundary points of `ob` that are inside the sector and face
/// its apex, evenly spread over the visible arc.
fn visible_boundary(ob: &Obstacle, sector: &Sector, n: usize) -> Vec<Vec2> {
    const PROBES: usize = 360;
    let vis: Vec<Vec2> = (0..PROBES)
        .map(|k| ob.center + Vec2::from_angle(k as f64 * std::f64::consts::TAU / PROBES as f64) * ob.radius)
        .filter(|p| sector.contains(*p) && (*p - ob.center).dot(sector.apex - *p) >= 0.0)
        .collect();
    if vis.len() <= n {
        return vis;
    }
    (0..n).map(|k| vis[k * vis.len() / n]).collect()
}
