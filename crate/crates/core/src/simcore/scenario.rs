//! Seeded random scenario generation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use super::geometry::{Pose, Vec3};
use super::scene::{Cuboid, Footprint, LandingPlatform, RoomDims, Scene, CUBOID_ALBEDO, DEFAULT_DRONE_HALF_EXTENTS};
use super::SimError;
use crate::drone::DroneState;
use crate::planner::{optimal_flight_path, PlannerConfig};

/// Seeded random source: ChaCha8 seeded through `seed_from_u64`.
///
/// Each flight draws from its own ChaCha stream (`set_stream(flight_index)`)
/// of the master seed, so flights can be produced in any order or in parallel.
#[derive(Debug, Clone)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn substream(master: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master);
        inner.set_stream(index);
        Self(inner)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.gen::<f64>()
    }

    /// Uniform integer in `0..=max`.
    pub fn up_to(&mut self, max: usize) -> usize {
        self.0.gen_range(0..=max)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Knobs for [`generate_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub room: RoomDims,
    /// Obstacle count is uniform in `0..=max_obstacles`.
    pub max_obstacles: usize,
    /// Each obstacle edge is uniform in `(0, max_edge]` meters.
    pub max_edge: f64,
    /// Re-sampling attempts per placed object before giving up.
    pub max_attempts: usize,
    /// Minimum horizontal distance between drone start and platform center.
    pub min_start_distance: f64,
    pub drone_half_extents: Vec3,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            room: RoomDims::default(),
            max_obstacles: 10,
            max_edge: 2.0,
            max_attempts: 1000,
            min_start_distance: 0.30,
            drone_half_extents: DEFAULT_DRONE_HALF_EXTENTS,
        }
    }
}

impl ScenarioParams {
    pub fn obstacle_free() -> Self {
        Self {
            max_obstacles: 0,
            ..Self::default()
        }
    }
}

pub(crate) fn sample_platform(rng: &mut SimRng, p: &ScenarioParams) -> Result<LandingPlatform, SimError> {
    for _ in 0..p.max_attempts {
        let cx = rng.uniform(0.0, p.room.w);
        let cy = rng.uniform(0.0, p.room.d);
        let yaw = rng.uniform(0.0, TAU);
        let platform = LandingPlatform::new(cx, cy, yaw);
        if platform.footprint().inside_room(&p.room) {
            return Ok(platform);
        }
    }
    Err(SimError::PlacementExhausted("landing platform"))
}

fn sample_start(rng: &mut SimRng, p: &ScenarioParams, platform: &LandingPlatform) -> Result<Pose, SimError> {
    for _ in 0..p.max_attempts {
        let x = rng.uniform(0.0, p.room.w);
        let y = rng.uniform(0.0, p.room.d);
        let yaw = rng.uniform(0.0, TAU);
        let start = Pose::new(Vec3::new(x, y, 0.0), yaw);
        let probe = Scene::empty(p.room, *platform, start);
        let fp = probe.start_footprint(p.drone_half_extents);
        if fp.inside_room(&p.room)
            && !fp.overlaps(&platform.footprint())
            && start.position.horizontal_distance(platform.center) >= p.min_start_distance
        {
            return Ok(start);
        }
    }
    Err(SimError::PlacementExhausted("drone start"))
}

/// Obstacle with edges in (0, max_edge]. The pose is re-drawn up to
/// `max_attempts` times per set of dimensions; if no pose fits, new
/// dimensions are drawn, again at most `max_attempts` times.
fn place_obstacle(rng: &mut SimRng, p: &ScenarioParams, platform: &Footprint, start: &Footprint) -> Result<Cuboid, SimError> {
    for _ in 0..p.max_attempts {
        let mut edge = || p.max_edge * (1.0 - rng.uniform(0.0, 1.0));
        let half = Vec3::new(edge() / 2.0, edge() / 2.0, edge() / 2.0);
        for _ in 0..p.max_attempts {
            let c = Cuboid {
                center: Vec3::new(rng.uniform(0.0, p.room.w), rng.uniform(0.0, p.room.d), half.z),
                yaw: rng.uniform(0.0, TAU),
                half_extents: half,
                albedo: CUBOID_ALBEDO,
            };
            let fp = c.footprint();
            if fp.inside_room(&p.room) && !fp.overlaps(platform) && !fp.overlaps(start) {
                return Ok(c);
            }
        }
    }
    Err(SimError::PlacementExhausted("obstacle"))
}

/// Draws a random scene: platform, drone start, then obstacles. Placements
/// that break a scene invariant are re-drawn.
pub fn generate_scenario(rng: &mut SimRng, params: &ScenarioParams) -> Result<Scene, SimError> {
    if params.max_edge > params.room.min_dimension() || params.max_edge <= 0.0 {
        return Err(SimError::InvalidParams(format!(
            "max_edge {} must be in (0, {}]",
            params.max_edge,
            params.room.min_dimension()
        )));
    }
    let platform = sample_platform(rng, params)?;
    let start = sample_start(rng, params, &platform)?;
    let mut scene = Scene::empty(params.room, platform, start);
    let start_fp = scene.start_footprint(params.drone_half_extents);
    let count = rng.up_to(params.max_obstacles);
    for _ in 0..count {
        let c = place_obstacle(rng, params, &platform.footprint(), &start_fp)?;
        scene.cuboids.push(c);
    }
    Ok(scene)
}

/// True iff the planner finds a landing path from the scene's drone start.
pub fn scenario_is_solvable(scene: &Scene, cfg: &PlannerConfig) -> bool {
    let start = DroneState::on_ground(scene.drone_start);
    matches!(optimal_flight_path(scene, &start, cfg), Ok(r) if r.found)
}
