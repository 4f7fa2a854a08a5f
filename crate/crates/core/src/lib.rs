//! RF source seeking with a square four-antenna array and
//! sampling-optimized artificial potential field navigation.
//!
//! * [`rfsim`] simulates the carrier at each antenna and extracts phases.
//! * [`aoa`] turns two dipole readings into a source direction.
//! * [`apf`] builds the attractive/repulsive field and descends it.
//! * [`optimizer`] perturbs the field parameters, scores the resulting
//!   trajectories and picks the sample closest to their weighted average.
//! * [`world`] holds maps, the field-of-view sensor and the mission loop.

pub mod aoa;
pub mod apf;
pub mod geom;
pub mod linalg;
pub mod optimizer;
pub mod random;
pub mod rfsim;
pub mod world;

pub use geom::{normalize_angle, wrap_angle, Pose, Termination, Trajectory, Vec2};
pub use random::RngStream;
