//! Deterministic, headless micro-drone simulation pipeline.
//!
//! The crate is organised bottom-up:
//!
//! * [`simcore`] geometry, scene model, ray queries and seeded scenario generation
//! * [`drone`] the five-command executor (teleport and velocity-profile variants) and sensors
//! * [`camera`] camera calibration math and the per-pixel raycasting renderer
//! * [`planner`] the discretized pose-space BFS and its exact reference search
//! * [`datagen`] labeled dataset generation and the `TDS1` container
//! * [`harness`] closed-loop flights, outcome classification, metrics and regression

pub mod camera;
pub mod datagen;
pub mod drone;
pub mod harness;
pub mod planner;
pub mod simcore;

pub use camera::{CameraConfig, CameraMode, Image};
pub use drone::{DroneState, FlightCommand};
pub use planner::{PlanResult, PlannerConfig};
pub use simcore::{Pose, Scene, SimRng, Vec3};
