//! Artificial potential field: quadratic attraction toward a temporary
//! target, logarithmic repulsion from obstacles within an influence range,
//! and normalized fixed-step gradient descent over the sum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose, Termination, Trajectory, Vec2};

/// Boundary distances at or below this are clamped inside the logarithm and
/// its gradient.
pub const DELTA_MIN: f64 = 1e-3;

/// Gradient norm below which descent is considered stalled.
pub const GRAD_EPS: f64 = 1e-6;

/// Step halvings tried before a descent step is declared blocked.
pub const MAX_HALVINGS: usize = 5;

pub const DEFAULT_STEP: f64 = 0.15;
pub const DEFAULT_MAX_STEPS: usize = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApfError {
    #[error("invalid potential parameters: {0}")]
    InvalidParams(String),
    #[error("start {0:?} lies inside an inflated obstacle")]
    StartInsideObstacle(Vec2),
    #[error("gradient undefined at obstacle center {0:?}")]
    AtObstacleCenter(Vec2),
    #[error("step must be positive and max_steps at least 1")]
    InvalidDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub k_att: f64,
    pub k_rep: f64,
    /// Influence range of each obstacle, measured from its inflated boundary.
    pub d0: f64,
}

impl PotentialParams {
    pub fn new(k_att: f64, k_rep: f64, d0: f64) -> Result<Self, ApfError> {
        let p = Self { k_att, k_rep, d0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ApfError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.k_att) && ok(self.k_rep) && ok(self.d0) {
            Ok(())
        } else {
            Err(ApfError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.k_att, self.k_rep, self.d0]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            k_att: a[0],
            k_rep: a[1],
            d0: a[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        Self { center, radius }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Signed distance from `q` to the obstacle boundary grown by the drone
/// radius; negative inside.
#[inline]
pub fn d_boundary(q: Vec2, ob: &Obstacle, r_drone: f64) -> f64 {
    q.distance(ob.center) - ob.radius - r_drone
}

/// Smallest boundary distance from `q` to any obstacle, `+∞` when there are none.
pub fn min_boundary_distance(q: Vec2, obstacles: &[Obstacle], r_drone: f64) -> f64 {
    obstacles
        .iter()
        .map(|o| d_boundary(q, o, r_drone))
        .fold(f64::INFINITY, f64::min)
}

/// Everything the field needs for one replanning tick.
#[derive(Debug, Clone, Copy)]
pub struct FieldContext<'a> {
    pub goal: Vec2,
    pub obstacles: &'a [Obstacle],
    pub params: PotentialParams,
    pub r_drone: f64,
}

impl<'a> FieldContext<'a> {
    pub fn new(goal: Vec2, obstacles: &'a [Obstacle], params: PotentialParams, r_drone: f64) -> Self {
        Self {
            goal,
            obstacles,
            params,
            r_drone,
        }
    }

    /// The goal sits strictly inside an inflated obstacle; descent cannot
    /// reach it.
    pub fn is_degenerate(&self) -> bool {
        min_boundary_distance(self.goal, self.obstacles, self.r_drone) < 0.0
    }

    fn is_clear(&self, q: Vec2) -> bool {
        min_boundary_distance(q, self.obstacles, self.r_drone) > 0.0
    }
}

pub fn u_att(q: Vec2, ctx: &FieldContext) -> f64 {
    0.5 * ctx.params.k_att * (q - ctx.goal).norm_sq()
}

/// Logarithmic repulsion summed over obstacles inside the influence range.
pub fn u_rep(q: Vec2, ctx: &FieldContext) -> f64 {
    let PotentialParams { k_rep, d0, .. } = ctx.params;
    ctx.obstacles
        .iter()
        .map(|o| d_boundary(q, o, ctx.r_drone))
        .filter(|&d| d < d0)
        .map(|d| -k_rep * (d.max(DELTA_MIN) / d0).ln())
        .sum()
}

pub fn u_total(q: Vec2, ctx: &FieldContext) -> f64 {
    u_att(q, ctx) + u_rep(q, ctx)
}

/// Analytic gradient of [`u_total`].
pub fn grad_u(q: Vec2, ctx: &FieldContext) -> Result<Vec2, ApfError> {
    let PotentialParams { k_att, k_rep, d0 } = ctx.params;
    let mut g = (q - ctx.goal) * k_att;
    for o in ctx.obstacles {
        let d = d_boundary(q, o, ctx.r_drone);
        if d >= d0 {
            continue;
        }
        let away = (q - o.center)
            .normalized()
            .ok_or(ApfError::AtObstacleCenter(o.center))?;
        g += away * (-k_rep / d.max(DELTA_MIN));
    }
    Ok(g)
}

/// Inverse-distance repulsion `k_rep·(1/d − 1/d0)`, kept as a reference for
/// comparing gradient strength with the logarithmic form.
pub fn u_rep_inverse(q: Vec2, ctx: &FieldContext) -> f64 {
    let PotentialParams { k_rep, d0, .. } = ctx.params;
    ctx.obstacles
        .iter()
        .map(|o| d_boundary(q, o, ctx.r_drone))
        .filter(|&d| d < d0)
        .map(|d| k_rep * (1.0 / d.max(DELTA_MIN) - 1.0 / d0))
        .sum()
}

pub fn grad_rep_inverse(q: Vec2, ctx: &FieldContext) -> Result<Vec2, ApfError> {
    let PotentialParams { k_rep, d0, .. } = ctx.params;
    let mut g = Vec2::ZERO;
    for o in ctx.obstacles {
        let d = d_boundary(q, o, ctx.r_drone);
        if d >= d0 {
            continue;
        }
        let away = (q - o.center)
            .normalized()
            .ok_or(ApfError::AtObstacleCenter(o.center))?;
        let dm = d.max(DELTA_MIN);
        g += away * (-k_rep / (dm * dm));
    }
    Ok(g)
}

pub fn grad_rep(q: Vec2, ctx: &FieldContext) -> Result<Vec2, ApfError> {
    let att = (q - ctx.goal) * ctx.params.k_att;
    Ok(grad_u(q, ctx)? - att)
}

/// Temporary target `horizon` meters from the drone along the source direction.
pub fn place_temp_target(pose: &Pose, rf_dir_world: Vec2, horizon: f64) -> Vec2 {
    pose.position + rf_dir_world * horizon
}

/// Normalized fixed-step gradient descent on [`u_total`].
///
/// Each step moves `step` meters against the gradient. A step that would
/// raise the potential or land inside an inflated obstacle is halved up to
/// [`MAX_HALVINGS`] times; if none succeeds the last point is repeated and
/// descent ends as [`Termination::Blocked`]. When the goal is closer than one
/// step it is appended and descent ends.
pub fn descend(start: Vec2, ctx: &FieldContext, step: f64, max_steps: usize) -> Result<Trajectory, ApfError> {
    if !(step > 0.0 && step.is_finite()) || max_steps == 0 {
        return Err(ApfError::InvalidDescent);
    }
    ctx.params.validate()?;
    if min_boundary_distance(start, ctx.obstacles, ctx.r_drone) < 0.0 {
        return Err(ApfError::StartInsideObstacle(start));
    }

    let mut points = Vec::with_capacity(max_steps + 1);
    points.push(start);
    let mut q = start;
    let mut u = u_total(q, ctx);

    for _ in 0..max_steps {
        if q.distance(ctx.goal) < step && ctx.is_clear(ctx.goal) && u_total(ctx.goal, ctx) <= u {
            points.push(ctx.goal);
            return Ok(Trajectory::new(points, Termination::ReachedGoal));
        }
        let g = grad_u(q, ctx)?;
        let gn = g.norm();
        if gn < GRAD_EPS {
            return Ok(Trajectory::new(points, Termination::Stalled));
        }
        let dir = g * (-1.0 / gn);
        let mut h = step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = q + dir * h;
            if ctx.is_clear(cand) {
                let uc = u_total(cand, ctx);
                if uc <= u {
                    accepted = Some((cand, uc));
                    break;
                }
            }
            h *= 0.5;
        }
        match accepted {
            Some((cand, uc)) => {
                points.push(cand);
                q = cand;
                u = uc;
            }
            None => {
                points.push(q);
                return Ok(Trajectory::new(points, Termination::Blocked));
            }
        }
    }
    Ok(Trajectory::new(points, Termination::StepLimit))
}

/// Potential sampled on a regular grid, for plotting only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `j` holds `y = origin.y + j·resolution`.
    pub values: Vec<f64>,
}

impl PotentialGrid {
    /// Samples `u_total` over `[origin, origin + size]` including both edges.
    pub fn sample(ctx: &FieldContext, origin: Vec2, size: Vec2, resolution: f64) -> Self {
        let nx = (size.x / resolution).round() as usize + 1;
        let ny = (size.y / resolution).round() as usize + 1;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let q = origin + Vec2::new(i as f64 * resolution, j as f64 * resolution);
                values.push(u_total(q, ctx));
            }
        }
        Self {
            origin,
            resolution,
            nx,
            ny,
            values,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Text form: a comment line, a header line
    /// `origin_x origin_y resolution nx ny`, then `ny` rows of `nx` values.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# potential-grid v1: origin_x origin_y resolution nx ny, then ny rows (y ascending)\n");
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            self.origin.x, self.origin.y, self.resolution, self.nx, self.ny
        ));
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}
