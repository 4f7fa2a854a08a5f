//! Simulated environment: maps, density statistics, the field-of-view
//! sensor, circle fitting, a kinematic drone and the mission loop.

pub mod circle_fit;
pub mod density;
pub mod drone;
pub mod generate;
pub mod map;
pub mod mission;
pub mod sensor;

pub use circle_fit::{fit_circle, FitError};
pub use density::{obstacle_density, DensityGrid};
pub use drone::{step_drone, DroneState};
pub use generate::{generate_map, DensityTarget, GenError, GenOptions, REFERENCE_TARGETS};
pub use map::{sample_endpoints, MapError, WorldMap};
pub use mission::{run_mission, CycleRecord, FailureReason, MissionConfig, MissionRecord, Outcome, PlannerMode};
pub use sensor::{Sector, SensorConfig, SensorState};
