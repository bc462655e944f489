//! Geometry primitives, the scene model and seeded scenario generation.
//!
//! World frame: right-handed, z up, floor at `z = 0`, room spanning
//! `[0, w] × [0, d] × [0, h]`. Drone body +x is forward.

mod geometry;
mod ray;
mod scenario;
mod scene;

pub use geometry::{angle_diff, rotate_body_to_world, wrap_angle, Pose, Vec3};
pub use ray::{ray_box, ray_room, RayHit, Surface, Wall};
pub use scenario::{generate_scenario, scenario_is_solvable, ScenarioParams, SimRng};
pub(crate) use scenario::sample_platform;
pub use scene::{
    Cuboid, Footprint, LandingPlatform, RoomDims, Scene, CEILING_ALBEDO, CUBOID_ALBEDO, DEFAULT_DRONE_HALF_EXTENTS,
    FLOOR_ALBEDO, PLATFORM_SIDE, PLATFORM_THICKNESS, WALL_ALBEDO,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
    #[error("could not place {0} after the allowed number of attempts")]
    PlacementExhausted(&'static str),
    #[error("malformed scene file: {0}")]
    SceneFormat(#[from] serde_json::Error),
}
