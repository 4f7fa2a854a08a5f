//! Source direction from two dipole angle-of-arrival readings.
//!
//! Each dipole contributes a ray from its midpoint; the source is where the
//! two rays meet. The general path solves the 4×4 system
//!
//! ```text
//! [1 0 0      m34x − xd34] [sx ]   [m34x]
//! [0 1 0      m34y − yd34] [sy ] = [m34y]
//! [1 0 m12x − xd12      0] [k12]   [m12x]
//! [0 1 m12y − yd12      0] [k34]   [m12y]
//! ```
//!
//! with `(xd, yd) = midpoint + unit_dir`. For the square layout the same
//! system reduces to `cot θ0 = (cot θ1 + cot θ2) / 2` and
//! `det(A) = sin(θ1 − θ2)`.
//!
//! Singular systems fall back to the direction of the first dipole; negative
//! ray scales mean the rays diverge and no source is consistent with them.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose, Vec2};
use crate::linalg;
use crate::rfsim::{dipole_aoa, AntennaArray, ArrayLayout, PhaseReading, RfError};

/// Threshold on `|det(A)|` below which the system is treated as singular.
pub const DET_EPS: f64 = 1e-6;

/// Two baselines closer than this to parallel violate non-collinearity.
pub const COLLINEAR_TOL_RAD: f64 = 1e-6;

/// Largest asin argument [`estimate_direction`] accepts as a noisy endfire
/// reading.
pub const ENDFIRE_SATURATION: f64 = 1.25;

/// Tolerance on `|Σ r_i|` for the balanced-array constraint.
pub const CENTROID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AoaError {
    #[error("non-finite input")]
    NonFinite,
    #[error("rays diverge; no physically valid source this tick")]
    Divergent,
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("invalid array: {0}")]
    InvalidArray(ArrayViolation),
    #[error(transparent)]
    Rf(#[from] RfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipolePair {
    pub midpoint: Vec2,
    pub unit_dir: Vec2,
    /// Ray angle, counter-clockwise from body +x.
    pub theta: f64,
}

impl DipolePair {
    pub fn new(midpoint: Vec2, theta: f64) -> Self {
        Self {
            midpoint,
            unit_dir: Vec2::from_angle(theta),
            theta,
        }
    }

    fn is_finite(&self) -> bool {
        self.midpoint.is_finite() && self.unit_dir.is_finite() && self.theta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Unique,
    ParallelFallback,
    CollinearFallback,
    RejectedDivergent,
}

impl SolutionKind {
    pub fn is_fallback(self) -> bool {
        matches!(self, Self::ParallelFallback | Self::CollinearFallback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoaSolution {
    pub kind: SolutionKind,
    /// Intersection of the two rays (present for unique and rejected cases).
    pub source_body: Option<Vec2>,
    /// Unit direction from the body origin; absent only when rejected.
    pub direction: Option<Vec2>,
    pub k12: Option<f64>,
    pub k34: Option<f64>,
    pub det: f64,
}

/// Builds `A` and `b` for two dipoles.
pub fn system(p12: &DipolePair, p34: &DipolePair) -> ([[f64; 4]; 4], [f64; 4]) {
    let end12 = p12.midpoint + p12.unit_dir;
    let end34 = p34.midpoint + p34.unit_dir;
    let a = [
        [1.0, 0.0, 0.0, p34.midpoint.x - end34.x],
        [0.0, 1.0, 0.0, p34.midpoint.y - end34.y],
        [1.0, 0.0, p12.midpoint.x - end12.x, 0.0],
        [0.0, 1.0, p12.midpoint.y - end12.y, 0.0],
    ];
    let b = [p34.midpoint.x, p34.midpoint.y, p12.midpoint.x, p12.midpoint.y];
    (a, b)
}

/// Intersects the rays of two dipoles.
pub fn solve_general(p12: &DipolePair, p34: &DipolePair) -> Result<AoaSolution, AoaError> {
    if !p12.is_finite() || !p34.is_finite() {
        return Err(AoaError::NonFinite);
    }
    let (a, b) = system(p12, p34);
    let det = linalg::determinant(&a);
    if det.abs() <= DET_EPS {
        return Ok(fallback(p12, p34, det));
    }
    let x = linalg::solve(&a, &b).ok_or(AoaError::Degenerate("singular system"))?;
    let (s, k12, k34) = (Vec2::new(x[0], x[1]), x[2], x[3]);
    if k12 <= 0.0 || k34 <= 0.0 {
        return Ok(AoaSolution {
            kind: SolutionKind::RejectedDivergent,
            source_body: Some(s),
            direction: None,
            k12: Some(k12),
            k34: Some(k34),
            det,
        });
    }
    Ok(AoaSolution {
        kind: SolutionKind::Unique,
        source_body: Some(s),
        direction: s.normalized(),
        k12: Some(k12),
        k34: Some(k34),
        det,
    })
}

/// Same contract as [`solve_general`] for a three-antenna array whose middle
/// antenna is shared: `p12` is the (r1, r2) dipole, `p24` the (r2, r4) one.
pub fn three_antenna_solve(p12: &DipolePair, p24: &DipolePair) -> Result<AoaSolution, AoaError> {
    solve_general(p12, p24)
}

fn fallback(p12: &DipolePair, p34: &DipolePair, det: f64) -> AoaSolution {
    // Parallel rays: the source is effectively at infinity unless both
    // midpoints lie on the shared line, in which case any point on it fits.
    let join = p12.midpoint - p34.midpoint;
    let collinear = match join.normalized() {
        Some(j) => j.cross(p12.unit_dir).abs() <= COLLINEAR_TOL_RAD,
        None => true,
    };
    AoaSolution {
        kind: if collinear {
            SolutionKind::CollinearFallback
        } else {
            SolutionKind::ParallelFallback
        },
        source_body: None,
        direction: Some(p12.unit_dir),
        k12: None,
        k34: None,
        det,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "constraint")]
pub enum ArrayViolation {
    AntennaCount { found: usize },
    PairIndex { pair: usize },
    /// A dipole is longer than half a wavelength.
    Spacing { pair: usize, spacing: f64, limit: f64 },
    /// Antenna positions do not sum to zero.
    Centroid { residual: f64 },
    /// All antennas lie on one line.
    Collinear { angle: f64 },
    /// Three-antenna dipoles must share exactly one antenna.
    NoSharedAntenna,
}

impl std::fmt::Display for ArrayViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::AntennaCount { found } => write!(f, "expected 3 or 4 antennas, found {found}"),
            Self::PairIndex { pair } => write!(f, "dipole {pair} references a missing antenna"),
            Self::Spacing { pair, spacing, limit } => {
                write!(f, "dipole {pair} spacing {spacing:.4} m exceeds {limit:.4} m")
            }
            Self::Centroid { residual } => write!(f, "antenna positions sum to {residual:.3e} m, not zero"),
            Self::Collinear { angle } => write!(f, "antennas are collinear (max off-line angle {angle:.3e} rad)"),
            Self::NoSharedAntenna => write!(f, "three-antenna dipoles do not share an antenna"),
        }
    }
}

/// Checks half-wavelength spacing, balanced placement and non-collinear
/// baselines, in that order. Three-antenna arrays skip the balance check.
pub fn validate_array(array: &AntennaArray) -> Result<(), ArrayViolation> {
    let n = array.body_positions.len();
    let three = n == 3;
    if !(n == 3 || n == 4) {
        return Err(ArrayViolation::AntennaCount { found: n });
    }
    for (i, &(a, b)) in array.pairs.iter().enumerate() {
        if a >= n || b >= n || a == b {
            return Err(ArrayViolation::PairIndex { pair: i });
        }
    }
    if three {
        let [(a, b), (c, d)] = array.pairs;
        let shared = [a, b].iter().filter(|i| **i == c || **i == d).count();
        if shared != 1 {
            return Err(ArrayViolation::NoSharedAntenna);
        }
    }
    let limit = array.wavelength / 2.0;
    for (i, &pair) in array.pairs.iter().enumerate() {
        let spacing = array.spacing(pair);
        if spacing > limit {
            return Err(ArrayViolation::Spacing { pair: i, spacing, limit });
        }
    }
    if !three {
        let sum = array
            .body_positions
            .iter()
            .fold(Vec2::ZERO, |acc, p| acc + *p);
        if sum.norm() > CENTROID_TOL {
            return Err(ArrayViolation::Centroid { residual: sum.norm() });
        }
    }
    // The antennas must not all lie on one line. Parallel dipoles on
    // opposite sides (the square layout) are fine.
    let (a, b) = array.pairs[0];
    let u = (array.body_positions[b] - array.body_positions[a])
        .normalized()
        .unwrap_or(Vec2::ZERO);
    let origin = array.body_positions[a];
    let angle = array
        .body_positions
        .iter()
        .filter_map(|p| (*p - origin).normalized())
        .map(|v| u.cross(v).abs().min(1.0).asin())
        .fold(0.0, f64::max);
    if angle < COLLINEAR_TOL_RAD {
        return Err(ArrayViolation::Collinear { angle });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfPlane {
    /// Source on the A1A2 side of the origin.
    RightOfO,
    /// Source on the A3A4 side of the origin.
    LeftOfO,
    Indeterminate,
}

/// Side of the origin the source lies on, from the two square-layout angles.
pub fn half_plane(theta1: f64, theta2: f64) -> HalfPlane {
    if (theta1 - theta2).abs() <= DET_EPS {
        HalfPlane::Indeterminate
    } else if theta1 > theta2 {
        HalfPlane::RightOfO
    } else {
        HalfPlane::LeftOfO
    }
}

/// Which pair of ray directions was adopted for the square layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareHypothesis {
    /// Both rays point to +x (source right of x = d).
    Right,
    /// Both rays point to −x (source left of x = −d).
    Left,
    /// A1A2 ray points to −x, A3A4 ray to +x (source between the dipoles).
    Between,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub half_plane: HalfPlane,
    pub hypothesis: SquareHypothesis,
    /// Angles are (nearly) equal; only the parallel fallback applies.
    pub indeterminate: bool,
}

fn square_pairs(half_side: f64, theta1: f64, theta2: f64) -> (DipolePair, DipolePair) {
    (
        DipolePair::new(Vec2::new(half_side, 0.0), theta1),
        DipolePair::new(Vec2::new(-half_side, 0.0), theta2),
    )
}

fn hypothesis_angles(h: SquareHypothesis, alpha: f64, beta: f64, sign: f64) -> (f64, f64) {
    let (t1, t2) = match h {
        SquareHypothesis::Right => (alpha, beta),
        SquareHypothesis::Left => (PI - alpha, PI - beta),
        SquareHypothesis::Between => (PI - alpha, beta),
    };
    (sign * t1, sign * t2)
}

/// Direction from the body origin implied by a pair of square-layout rays,
/// treating diverging rays as parallel.
fn hypothesis_direction(half_side: f64, theta1: f64, theta2: f64) -> Option<(Vec2, Option<Vec2>)> {
    let (p12, p34) = square_pairs(half_side, theta1, theta2);
    let sol = solve_general(&p12, &p34).ok()?;
    match sol.kind {
        SolutionKind::Unique => Some((sol.direction?, sol.source_body)),
        _ => Some((p12.unit_dir, None)),
    }
}

/// Maps broadside-referenced readings of the two square-layout dipoles onto
/// ray angles measured counter-clockwise from body +x.
///
/// `raw1` is the A1A2 reading, `raw2` the A3A4 reading, both as returned by
/// [`dipole_aoa`] (positive toward the first antenna of the pair). The sign
/// of each reading fixes whether the source is above or below the x-axis;
/// left/right comes from [`half_plane`].
///
/// A single dipole cannot tell front from back, and two vertical dipoles
/// cannot separate a source between them (|x| < d) from one on either side.
/// When `cross` (the A2A3 top-edge reading) is supplied, every hypothesis is
/// scored against it and the best match is kept; otherwise the half-plane
/// rule decides alone.
pub fn resolve_square(raw1: f64, raw2: f64, half_side: f64, cross: Option<f64>) -> Result<SquareAngles, AoaError> {
    if !(raw1.is_finite() && raw2.is_finite() && half_side.is_finite() && half_side > 0.0) {
        return Err(AoaError::NonFinite);
    }
    // For A1A2, sin(raw1) = (A1 − A2)/|..| · ŝ = −ŝy; for A3A4 it is +ŝy.
    let vertical = -raw1.sin() + raw2.sin();
    let sign = if vertical < 0.0 { -1.0 } else { 1.0 };
    let alpha = raw1.abs();
    let beta = raw2.abs();

    let half = half_plane(alpha, beta);
    let rule_choice = match half {
        HalfPlane::LeftOfO => SquareHypothesis::Left,
        _ => SquareHypothesis::Right,
    };

    let chosen = match cross.filter(|c| c.is_finite()) {
        None => rule_choice,
        Some(c) => {
            let measured = c.sin();
            let top = Vec2::new(0.0, half_side);
            let mut best = (rule_choice, f64::INFINITY);
            let order = [
                rule_choice,
                SquareHypothesis::Right,
                SquareHypothesis::Left,
                SquareHypothesis::Between,
            ];
            for h in order {
                let (t1, t2) = hypothesis_angles(h, alpha, beta, sign);
                let Some((dir, pos)) = hypothesis_direction(half_side, t1, t2) else {
                    continue;
                };
                let predicted = match pos.and_then(|p| (p - top).normalized()) {
                    Some(u) => u.x,
                    None => dir.x,
                };
                let err = (predicted - measured).abs();
                if err < best.1 - 1e-12 {
                    best = (h, err);
                }
            }
            best.0
        }
    };

    let (theta1, theta2) = hypothesis_angles(chosen, alpha, beta, sign);
    let indeterminate = (theta1 - theta2).sin().abs() <= DET_EPS
        || (cross.is_none() && half == HalfPlane::Indeterminate);
    let half_plane = match chosen {
        _ if indeterminate => HalfPlane::Indeterminate,
        SquareHypothesis::Left => HalfPlane::LeftOfO,
        SquareHypothesis::Right => HalfPlane::RightOfO,
        // between the dipoles the side follows the larger ray angle
        SquareHypothesis::Between => half_plane(theta1.abs(), theta2.abs()),
    };
    Ok(SquareAngles {
        theta1,
        theta2,
        half_plane,
        hypothesis: chosen,
        indeterminate,
    })
}

/// Bearing of the source from the origin for the square layout,
/// `cot θ0 = (cot θ1 + cot θ2) / 2`, placed on the same side of the x-axis
/// as the two rays.
pub fn square_aoa(theta1: f64, theta2: f64) -> Result<f64, AoaError> {
    if !(theta1.is_finite() && theta2.is_finite()) {
        return Err(AoaError::NonFinite);
    }
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    if s1 == 0.0 || s2 == 0.0 {
        return Err(AoaError::Degenerate("ray along the x-axis"));
    }
    if (theta1 - theta2).sin().abs() <= DET_EPS {
        return Err(AoaError::Degenerate("parallel rays, det(A) = 0"));
    }
    if s1.signum() != s2.signum() {
        return Err(AoaError::Degenerate("rays on opposite sides of the x-axis"));
    }
    let cot0 = 0.5 * (c1 / s1 + c2 / s2);
    let side = s1.signum();
    Ok(side.atan2(side * cot0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    /// Unit direction to the source in the world frame.
    pub world: Vec2,
    /// Same direction in the body frame.
    pub body: Vec2,
    pub kind: SolutionKind,
    pub theta1: f64,
    pub theta2: f64,
}

impl DirectionEstimate {
    pub fn world_bearing(&self) -> f64 {
        self.world.angle()
    }
}

/// Full pipeline from per-antenna phases to a world-frame unit direction.
///
/// Square arrays use [`resolve_square`] and [`square_aoa`]; other layouts
/// try both ray directions for each dipole and keep the consistent
/// intersection (the most distant one when several fit, or the best match
/// to the cross dipole when present).
pub fn estimate_direction(array: &AntennaArray, phases: &PhaseReading, pose: &Pose) -> Result<DirectionEstimate, AoaError> {
    validate_array(array).map_err(AoaError::InvalidArray)?;
    if phases.phases.len() != array.body_positions.len() {
        return Err(AoaError::Degenerate("phase count does not match antenna count"));
    }
    // Near endfire, receiver noise can push the asin argument slightly past
    // ±1; such readings are saturated to endfire rather than dropped.
    let reading = |(a, b): (usize, usize)| -> Result<f64, RfError> {
        match dipole_aoa(phases.phases[a], phases.phases[b], array.spacing((a, b)), array.wavelength) {
            Err(RfError::PhaseExceedsBound(arg)) if arg.abs() <= ENDFIRE_SATURATION => Ok(arg.signum() * FRAC_PI_2),
            r => r,
        }
    };
    let raw1 = reading(array.pairs[0])?;
    let raw2 = reading(array.pairs[1])?;
    let cross = array.cross_pair.and_then(|p| reading(p).ok());

    let (body, kind, theta1, theta2) = match array.layout {
        ArrayLayout::Square { half_side } => {
            let angles = resolve_square(raw1, raw2, half_side, cross)?;
            let (t1, t2) = (angles.theta1, angles.theta2);
            let (p12, p34) = square_pairs(half_side, t1, t2);
            if angles.indeterminate {
                let sol = fallback(&p12, &p34, (t1 - t2).sin());
                (p12.unit_dir, sol.kind, t1, t2)
            } else {
                let sol = solve_general(&p12, &p34)?;
                match sol.kind {
                    SolutionKind::Unique => match square_aoa(t1, t2) {
                        Ok(theta0) => (Vec2::from_angle(theta0), SolutionKind::Unique, t1, t2),
                        // rays split across the x-axis: the general solution still holds
                        Err(_) => (sol.direction.unwrap_or(p12.unit_dir), SolutionKind::Unique, t1, t2),
                    },
                    SolutionKind::ParallelFallback | SolutionKind::CollinearFallback => {
                        (p12.unit_dir, sol.kind, t1, t2)
                    }
                    // Only reachable when the cross reading picked a side whose
                    // rays diverge by noise: treat them as parallel.
                    SolutionKind::RejectedDivergent => (p12.unit_dir, SolutionKind::ParallelFallback, t1, t2),
                }
            }
        }
        ArrayLayout::ThreeAntenna | ArrayLayout::General => {
            general_direction(array, raw1, raw2, cross)?
        }
    };
    Ok(DirectionEstimate {
        world: pose.dir_to_world(body),
        body,
        kind,
        theta1,
        theta2,
    })
}

fn general_direction(
    array: &AntennaArray,
    raw1: f64,
    raw2: f64,
    cross: Option<f64>,
) -> Result<(Vec2, SolutionKind, f64, f64), AoaError> {
    // sin(raw) = e·ŝ with e = unit(r_a − r_b); ŝ = sin(raw)·e ± cos(raw)·perp(e)
    let candidates = |pair: (usize, usize), raw: f64| -> [f64; 2] {
        let e = (array.body_positions[pair.0] - array.body_positions[pair.1])
            .normalized()
            .unwrap_or(Vec2::new(1.0, 0.0));
        let n = e.perp();
        let (s, c) = raw.sin_cos();
        [(e * s + n * c).angle(), (e * s - n * c).angle()]
    };
    let m12 = array.midpoint(array.pairs[0]);
    let m34 = array.midpoint(array.pairs[1]);
    let cross_geom = array.cross_pair.map(|p| {
        let e = (array.body_positions[p.0] - array.body_positions[p.1])
            .normalized()
            .unwrap_or(Vec2::new(1.0, 0.0));
        (array.midpoint(p), e)
    });

    let mut best: Option<(f64, Vec2, SolutionKind, f64, f64)> = None;
    let mut first_fallback: Option<(Vec2, SolutionKind, f64, f64)> = None;
    for t1 in candidates(array.pairs[0], raw1) {
        for t2 in candidates(array.pairs[1], raw2) {
            let sol = solve_general(&DipolePair::new(m12, t1), &DipolePair::new(m34, t2))?;
            match sol.kind {
                SolutionKind::Unique => {
                    let s = sol.source_body.expect("unique solutions carry a source");
                    let dir = sol.direction.ok_or(AoaError::Degenerate("source at origin"))?;
                    let score = match (cross, cross_geom) {
                        (Some(c), Some((mid, e))) => {
                            let u = (s - mid).normalized().unwrap_or(dir);
                            (u.dot(e) - c.sin()).abs()
                        }
                        // far-field prior: the most distant consistent source
                        _ => -s.norm(),
                    };
                    if best.as_ref().is_none_or(|b| score < b.0 - 1e-12) {
                        best = Some((score, dir, sol.kind, t1, t2));
                    }
                }
                SolutionKind::ParallelFallback | SolutionKind::CollinearFallback => {
                    if first_fallback.is_none() {
                        first_fallback = Some((sol.direction.expect("fallback has direction"), sol.kind, t1, t2));
                    }
                }
                SolutionKind::RejectedDivergent => {}
            }
        }
    }
    if let Some((_, dir, kind, t1, t2)) = best {
        return Ok((dir, kind, t1, t2));
    }
    first_fallback.ok_or(AoaError::Divergent)
}
