use serde::{Deserialize, Serialize};

use crate::geom::{Pose, Vec2};

/// Kinematic point drone: moves a fixed distance per step toward a waypoint
/// and faces its direction of motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub pose: Pose,
    pub speed: f64,
    pub waypoint_index: usize,
    pub trail: Vec<Vec2>,
}

impl DroneState {
    pub fn new(pose: Pose, speed: f64) -> Self {
        assert!(speed > 0.0, "drone speed must be positive");
        Self {
            trail: vec![pose.position],
            pose,
            speed,
            waypoint_index: 0,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position
    }

    /// Turns toward `p` without moving; no-op when already there.
    pub fn face(&mut self, p: Vec2) {
        let d = p - self.pose.position;
        if d.norm() > 0.0 {
            // the angle of a finite vector is always a valid heading
            let _ = self.pose.set_heading(d.angle());
        }
    }

    /// Moves `min(speed, distance)` toward `waypoint`; the trail always grows
    /// by one point.
    pub fn step_toward(&mut self, waypoint: Vec2) {
        let d = waypoint - self.pose.position;
        let dist = d.norm();
        if dist > 0.0 {
            self.face(waypoint);
            self.pose.position = if dist <= self.speed {
                waypoint
            } else {
                self.pose.position + d * (self.speed / dist)
            };
        }
        self.trail.push(self.pose.position);
    }

    pub fn path_length(&self) -> f64 {
        self.trail.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Functional form of [`DroneState::step_toward`] with an explicit speed.
pub fn step_drone(state: &DroneState, waypoint: Vec2, speed: f64) -> DroneState {
    let mut next = state.clone();
    next.speed = speed;
    next.step_toward(waypoint);
    next.speed = state.speed;
    next
}
