//! Labeled dataset generation and the `TDS1` container.
//!
//! A *flight* is one scenario: the planner's path is flown with
//! [`execute_simple`], and before every command the camera image, the
//! sensor triple and the previous `K` commands are recorded with that
//! command as the label. The naive variant takes one sample per random
//! placement instead.
//!
//! Flight `i` draws all of its randomness from `SimRng::substream(seed, i)`,
//! so output never depends on the number of worker threads.

mod format;
mod split;

use rayon::prelude::*;

use crate::camera::{capture, CameraConfig, CameraError, CameraMode};
use crate::drone::{execute_simple, read_sensors, CommandStatus, DroneState, FlightCommand};
use crate::planner::{optimal_flight_path, PlannerConfig};
use crate::simcore::{generate_scenario, sample_platform, Footprint, Pose, Scene, ScenarioParams, SimError, SimRng, Vec3};

pub use format::{read_dataset, write_dataset, write_jsonl, DatasetError, HEADER_LEN, MAGIC, VERSION};
pub use split::{split_dataset, InvalidFractions};

/// Marker for "no earlier command" in `prev_cmds`.
pub const NO_COMMAND: u8 = 255;
pub const LABEL_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub flight_id: u32,
    pub label: FlightCommand,
    pub height_m: f32,
    pub tof_m: f32,
    pub cmd_count: f32,
    /// Most recent first; [`NO_COMMAND`] pads the start of a flight.
    pub prev_cmds: Vec<u8>,
    /// Row-major grayscale, `width · height` bytes.
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub width: u32,
    pub height: u32,
    pub prev_k: usize,
    pub flight_count: u32,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn empty(width: u32, height: u32, prev_k: usize) -> Self {
        Self {
            width,
            height,
            prev_k,
            flight_count: 0,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Flight ids in first-appearance order.
    pub fn flight_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = Vec::new();
        for s in &self.samples {
            if ids.last() != Some(&s.flight_id) && !ids.contains(&s.flight_id) {
                ids.push(s.flight_id);
            }
        }
        ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelHistogram {
    pub counts: [u64; LABEL_COUNT],
    pub flights: u32,
}

impl LabelHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn share(&self, cmd: FlightCommand) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.counts[cmd.code() as usize] as f64 / t as f64
        }
    }
}

pub fn label_histogram(ds: &Dataset) -> LabelHistogram {
    let mut counts = [0u64; LABEL_COUNT];
    for s in &ds.samples {
        counts[s.label.code() as usize] += 1;
    }
    LabelHistogram {
        counts,
        flights: ds.flight_count,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("dataset size must be positive")]
    EmptyRequest,
    #[error(transparent)]
    Scenario(#[from] SimError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("could not build worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatagenConfig {
    pub scenario: ScenarioParams,
    pub camera: CameraConfig,
    pub planner: PlannerConfig,
    pub prev_k: usize,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            camera: CameraConfig {
                mode: CameraMode::Fisheye,
                ..CameraConfig::default()
            },
            planner: PlannerConfig::default(),
            prev_k: 2,
            workers: 0,
        }
    }
}

fn prev_commands(history: &[FlightCommand], k: usize) -> Vec<u8> {
    (0..k)
        .map(|i| history.len().checked_sub(i + 1).map_or(NO_COMMAND, |j| history[j].code()))
        .collect()
}

fn record(state: &DroneState, scene: &Scene, cfg: &DatagenConfig, flight_id: u32, label: FlightCommand, history: &[FlightCommand]) -> Result<Sample, DatagenError> {
    let image = capture(scene, &cfg.camera, &state.pose)?;
    let sensors = read_sensors(state);
    Ok(Sample {
        flight_id,
        label,
        height_m: sensors.height_m as f32,
        tof_m: sensors.tof_m as f32,
        cmd_count: sensors.cmd_count as f32,
        prev_cmds: prev_commands(history, cfg.prev_k),
        pixels: image.pixels,
    })
}

/// Scenario number `index` of the stream `seed`, regenerated until the
/// planner finds a path from the drone start; returns it with that path.
pub fn solvable_scenario(seed: u64, index: u64, params: &ScenarioParams, planner: &PlannerConfig) -> Result<(Scene, Vec<FlightCommand>), DatagenError> {
    let mut rng = SimRng::substream(seed, index);
    for _ in 0..params.max_attempts {
        let scene = generate_scenario(&mut rng, params)?;
        let start = DroneState::on_ground(scene.drone_start);
        if let Ok(plan) = optimal_flight_path(&scene, &start, planner) {
            if plan.found && !plan.path.is_empty() {
                return Ok((scene, plan.path));
            }
        }
    }
    Err(SimError::PlacementExhausted("solvable scenario").into())
}

/// The scenario and path behind flight `index` of a sophisticated dataset.
pub fn flight_scenario(seed: u64, index: u64, cfg: &DatagenConfig) -> Result<(Scene, Vec<FlightCommand>), DatagenError> {
    solvable_scenario(seed, index, &cfg.scenario, &cfg.planner)
}

fn fly(seed: u64, index: u64, cfg: &DatagenConfig) -> Result<Vec<Sample>, DatagenError> {
    let (scene, path) = flight_scenario(seed, index, cfg)?;
    let mut state = DroneState::on_ground(scene.drone_start);
    let mut samples = Vec::with_capacity(path.len());
    for (i, &cmd) in path.iter().enumerate() {
        samples.push(record(&state, &scene, cfg, index as u32, cmd, &path[..i])?);
        let r = execute_simple(&mut state, &scene, cmd);
        debug_assert_eq!(r.status, CommandStatus::Moved);
    }
    Ok(samples)
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, DatagenError> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DatagenError::Workers(e.to_string()))?;
    Ok(pool.install(job))
}

/// Runs `unit(i)` for `i = 0, 1, …` in parallel batches, concatenating
/// results in index order until `size` samples exist.
fn collect_samples(size: usize, workers: usize, unit: impl Fn(u64) -> Result<Vec<Sample>, DatagenError> + Sync) -> Result<(Vec<Sample>, u32), DatagenError> {
    in_pool(workers, || {
        let batch = (rayon::current_num_threads() * 4).max(8) as u64;
        let mut samples = Vec::with_capacity(size);
        let mut flights = 0u32;
        let mut next = 0u64;
        while samples.len() < size {
            let results: Vec<_> = (next..next + batch).into_par_iter().map(&unit).collect();
            next += batch;
            for r in results {
                let mut flight = r?;
                if samples.len() >= size {
                    break;
                }
                flight.truncate(size - samples.len());
                if !flight.is_empty() {
                    flights += 1;
                }
                samples.append(&mut flight);
            }
        }
        Ok((samples, flights))
    })?
}

/// Sophisticated collection: whole planned flights, each in a fresh
/// scenario, until exactly `size` samples; the last flight may be cut short.
pub fn generate_dataset(size: usize, seed: u64, cfg: &DatagenConfig) -> Result<Dataset, DatagenError> {
    if size == 0 {
        return Err(DatagenError::EmptyRequest);
    }
    cfg.camera.intrinsics()?;
    let (samples, flight_count) = collect_samples(size, cfg.workers, |i| fly(seed, i, cfg))?;
    Ok(Dataset {
        width: cfg.camera.width,
        height: cfg.camera.height,
        prev_k: cfg.prev_k,
        flight_count,
        samples,
    })
}

/// Random drone placement anywhere in an empty room: position uniform over
/// the volume the box fits in, yaw uniform. Any `z > 0` hovers; a draw of
/// exactly 0 rests on the floor.
pub fn naive_placement(rng: &mut SimRng, scene_params: &ScenarioParams) -> Result<(Scene, DroneState), DatagenError> {
    let p = scene_params;
    let platform = sample_platform(rng, p)?;
    let half = p.drone_half_extents;
    for _ in 0..p.max_attempts {
        let x = rng.uniform(0.0, p.room.w);
        let y = rng.uniform(0.0, p.room.d);
        let z = rng.uniform(0.0, p.room.h - 2.0 * half.z);
        let yaw = rng.uniform(0.0, std::f64::consts::TAU);
        let pose = Pose::new(Vec3::new(x, y, z), yaw);
        let fp = Footprint {
            cx: x,
            cy: y,
            yaw,
            hx: half.x,
            hy: half.y,
        };
        if !fp.inside_room(&p.room) || (z < platform.top() && fp.overlaps(&platform.footprint())) {
            continue;
        }
        let scene = Scene::empty(p.room, platform, Pose::new(Vec3::new(x, y, 0.0), yaw));
        let state = if z > 0.0 {
            DroneState::hovering(pose)
        } else {
            DroneState::on_ground(pose)
        };
        return Ok((scene, state));
    }
    Err(SimError::PlacementExhausted("drone placement").into())
}

fn naive_unit(seed: u64, index: u64, cfg: &DatagenConfig) -> Result<Vec<Sample>, DatagenError> {
    let mut rng = SimRng::substream(seed, index);
    let params = ScenarioParams {
        max_obstacles: 0,
        ..cfg.scenario
    };
    for _ in 0..params.max_attempts {
        let (scene, state) = naive_placement(&mut rng, &params)?;
        let plan = match optimal_flight_path(&scene, &state, &cfg.planner) {
            Ok(p) if p.found && !p.path.is_empty() => p,
            _ => continue,
        };
        return Ok(vec![record(&state, &scene, cfg, index as u32, plan.path[0], &[])?]);
    }
    Err(SimError::PlacementExhausted("naive placement with a plan").into())
}

/// Naive collection: one sample per random placement, labeled with the
/// first command of the planned path.
pub fn generate_dataset_naive(size: usize, seed: u64, cfg: &DatagenConfig) -> Result<Dataset, DatagenError> {
    if size == 0 {
        return Err(DatagenError::EmptyRequest);
    }
    cfg.camera.intrinsics()?;
    let (samples, flight_count) = collect_samples(size, cfg.workers, |i| naive_unit(seed, i, cfg))?;
    Ok(Dataset {
        width: cfg.camera.width,
        height: cfg.camera.height,
        prev_k: cfg.prev_k,
        flight_count,
        samples,
    })
}
