//! Planar geometry shared by every other module.
//!
//! World frame is x-east, y-north with counter-clockwise-positive angles.
//! The body frame is the world frame rotated by the drone heading. All
//! angles are radians; degrees appear only at report boundaries.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Checked constructor; rejects NaN and infinities.
    pub fn finite(x: f64, y: f64) -> Result<Self, GeomError> {
        if !x.is_finite() {
            return Err(GeomError::NonFinite(x));
        }
        if !y.is_finite() {
            return Err(GeomError::NonFinite(y));
        }
        Ok(Self { x, y })
    }

    /// Unit vector at `angle` from +x.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Angle from +x in (−π, π].
    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Counter-clockwise rotation.
    #[inline]
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps a finite angle into (−π, π].
pub fn wrap_angle(a: f64) -> Result<f64, GeomError> {
    if !a.is_finite() {
        return Err(GeomError::NonFinite(a));
    }
    Ok(normalize_angle(a))
}

/// Infallible form of [`wrap_angle`] for values already known to be finite.
#[inline]
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Position plus heading; heading is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Result<Self, GeomError> {
        if !position.is_finite() {
            return Err(GeomError::NonFinite(if position.x.is_finite() {
                position.y
            } else {
                position.x
            }));
        }
        Ok(Self {
            position,
            heading: wrap_angle(heading)?,
        })
    }

    #[inline]
    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn set_heading(&mut self, heading: f64) -> Result<(), GeomError> {
        self.heading = wrap_angle(heading)?;
        Ok(())
    }

    /// Maps a body-frame point into the world frame.
    #[inline]
    pub fn to_world(&self, body: Vec2) -> Vec2 {
        self.position + body.rotate(self.heading)
    }

    /// Maps a body-frame direction into the world frame (rotation only).
    #[inline]
    pub fn dir_to_world(&self, body: Vec2) -> Vec2 {
        body.rotate(self.heading)
    }
}

/// How gradient descent ended for a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The goal itself was appended as the final point.
    ReachedGoal,
    /// The step budget ran out before the goal was reached.
    StepLimit,
    /// The gradient vanished (local minimum or saddle).
    Stalled,
    /// Every backtracking step would have raised the potential or entered an
    /// obstacle; the last point is repeated.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn new(points: Vec<Vec2>, termination: Termination) -> Self {
        debug_assert!(!points.is_empty());
        Self {
            points,
            termination,
        }
    }

    pub fn from_points(points: Vec<Vec2>) -> Self {
        Self::new(points, Termination::StepLimit)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Vec2 {
        self.points[0]
    }

    pub fn last(&self) -> Vec2 {
        *self.points.last().expect("trajectory has at least one point")
    }

    /// True when descent ended short of the goal for a reason other than
    /// the step budget.
    pub fn stalled(&self) -> bool {
        matches!(
            self.termination,
            Termination::Stalled | Termination::Blocked
        )
    }

    /// Copy padded to `len` points by repeating the final point.
    pub fn padded(&self, len: usize) -> Trajectory {
        let mut points = self.points.clone();
        let last = self.last();
        while points.len() < len {
            points.push(last);
        }
        Trajectory {
            points,
            termination: self.termination,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert!((wrap_angle(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.5 * PI).unwrap() - 0.5 * PI).abs() < 1e-12);
        assert_eq!(wrap_angle(PI).unwrap(), PI);
        assert!((wrap_angle(-PI).unwrap() - PI).abs() < 1e-15);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn pose_heading_normalized() {
        let p = Pose::new(Vec2::new(1.0, 2.0), 7.0).unwrap();
        assert!(p.heading() > -PI && p.heading() <= PI);
        assert!((p.heading() - (7.0 - TAU)).abs() < 1e-12);
        assert!(Pose::new(Vec2::new(f64::NAN, 0.0), 0.0).is_err());
    }

    #[test]
    fn rotation_and_frames() {
        let p = Pose::new(Vec2::new(1.0, 1.0), PI / 2.0).unwrap();
        let w = p.to_world(Vec2::new(1.0, 0.0));
        assert!((w.x - 1.0).abs() < 1e-12 && (w.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn padding_repeats_last() {
        let t = Trajectory::from_points(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)]);
        let p = t.padded(4);
        assert_eq!(p.points.len(), 4);
        assert_eq!(p.points[3], Vec2::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn wrap_idempotent_and_congruent(a in -1.0e3f64..1.0e3) {
            let w = wrap_angle(a).unwrap();
            prop_assert!(w > -PI && w <= PI);
            prop_assert_eq!(wrap_angle(w).unwrap(), w);
            let k = (w - a) / TAU;
            prop_assert!((k - k.round()).abs() * TAU < 1e-12);
        }
    }
}
