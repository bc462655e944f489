//! The command executor: validity rules, teleport ("simple") and
//! velocity-profile movement, swept collision checks and sensor readouts.

mod command;
mod profile;

pub use command::{FlightCommand, UnknownCommand};
pub use profile::{MotionProfile, ProfileShape};

use crate::simcore::{rotate_body_to_world, wrap_angle, Pose, Scene, Vec3, DEFAULT_DRONE_HALF_EXTENTS};

/// Displacement of one `forward` command, meters.
pub const FORWARD_STEP: f64 = 0.20;
/// Rotation of one `cw`/`ccw` command, radians (10°).
pub const ROTATION_STEP: f64 = std::f64::consts::PI / 18.0;
pub const DEFAULT_TAKEOFF_ALTITUDE: f64 = 0.50;

/// Physical parameters of the simulated drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneBody {
    /// Half extents of the collision box; the pose position is the center
    /// of the box's bottom face.
    pub half_extents: Vec3,
    /// Height gained by `takeoff`, above the surface it starts from.
    pub takeoff_altitude: f64,
}

impl Default for DroneBody {
    fn default() -> Self {
        Self {
            half_extents: DEFAULT_DRONE_HALF_EXTENTS,
            takeoff_altitude: DEFAULT_TAKEOFF_ALTITUDE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    pub pose: Pose,
    pub airborne: bool,
    /// Pose at the last takeoff; the reference for the height/tof sensors.
    pub takeoff_pose: Pose,
    pub commands_executed: u32,
    pub body: DroneBody,
}

impl DroneState {
    /// A drone resting at `pose` (on whatever surface is below it).
    pub fn on_ground(pose: Pose) -> Self {
        Self::with_body(pose, false, DroneBody::default())
    }

    /// A hovering drone whose sensor reference is `pose` projected to the floor.
    pub fn hovering(pose: Pose) -> Self {
        let mut s = Self::with_body(pose, true, DroneBody::default());
        s.takeoff_pose = Pose::new(Vec3::new(pose.position.x, pose.position.y, 0.0), pose.yaw);
        s
    }

    pub fn with_body(pose: Pose, airborne: bool, body: DroneBody) -> Self {
        Self {
            pose,
            airborne,
            takeoff_pose: pose,
            commands_executed: 0,
            body,
        }
    }

    fn box_center(&self) -> Vec3 {
        self.pose.position + Vec3::new(0.0, 0.0, self.body.half_extents.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandStatus {
    Moved,
    Crashed,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandResult {
    pub status: CommandStatus,
    pub new_pose: Pose,
}

/// Sensor triple in model-input units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensors {
    /// Vertical distance from the takeoff position, meters.
    pub height_m: f64,
    /// Euclidean distance from the takeoff position, meters.
    pub tof_m: f64,
    pub cmd_count: u32,
}

pub fn read_sensors(state: &DroneState) -> Sensors {
    let p = state.pose.position;
    let t = state.takeoff_pose.position;
    Sensors {
        height_m: (p.z - t.z).abs(),
        tof_m: p.distance(t),
        cmd_count: state.commands_executed,
    }
}

/// Parameters of the velocity executor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfileConfig {
    /// m/s
    pub v_max: f64,
    /// m/s²
    pub accel: f64,
    /// rad/s
    pub omega_max: f64,
    /// rad/s²
    pub alpha: f64,
    /// Seconds per simulation step.
    pub dt: f64,
}

impl Default for MotionProfileConfig {
    fn default() -> Self {
        Self {
            v_max: 0.5,
            accel: 1.0,
            omega_max: std::f64::consts::FRAC_PI_2,
            alpha: std::f64::consts::PI,
            dt: 1.0 / 240.0,
        }
    }
}

impl MotionProfileConfig {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.v_max, self.accel, self.omega_max, self.alpha, self.dt];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(format!("motion profile values must be positive: {self:?}"))
        }
    }
}

/// One step reported by [`execute_velocity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    /// Seconds since the command started.
    pub t: f64,
    pub pose: Pose,
    /// m/s for linear moves, rad/s for rotations.
    pub speed: f64,
}

enum Motion {
    Linear { to: Vec3, lands: bool },
    Rotate { delta: f64 },
}

/// Casts the five swept-volume rays (box center plus four cross-section
/// corners) from the current position toward `target`.
///
/// Each ray is extended by the box's half extent along the motion, so a move
/// is clear only if the drone's leading face stays short of every surface.
pub fn path_clear(state: &DroneState, scene: &Scene, target: Vec3) -> bool {
    let delta = target - state.pose.position;
    let travel = delta.norm();
    if travel == 0.0 {
        return true;
    }
    let dir = delta * (1.0 / travel);
    let he = state.body.half_extents;
    let bx = rotate_body_to_world(Vec3::X, state.pose.yaw);
    let by = rotate_body_to_world(Vec3::Y, state.pose.yaw);
    let lead = dir.dot(bx).abs() * he.x + dir.dot(by).abs() * he.y + dir.z.abs() * he.z;
    let (u, v) = if dir.z.abs() > 0.5 {
        (bx * he.x, by * he.y)
    } else {
        let lateral = Vec3::Z.cross(dir).normalized();
        let vertical = dir.cross(lateral);
        (lateral * he.y, vertical * he.z)
    };
    let c = state.box_center();
    let reach = travel + lead;
    let origins = [c, c + u + v, c + u - v, c - u + v, c - u - v];
    origins.iter().all(|&o| !scene.ray_blocked(o, dir, reach))
}

/// Height of the first support surface under the drone's footprint, or
/// `None` if a downward ray starts inside a solid.
fn support_height(state: &DroneState, scene: &Scene) -> Option<f64> {
    let he = state.body.half_extents;
    let u = rotate_body_to_world(Vec3::X, state.pose.yaw) * he.x;
    let v = rotate_body_to_world(Vec3::Y, state.pose.yaw) * he.y;
    let c = state.box_center();
    let mut nearest = f64::INFINITY;
    for o in [c, c + u + v, c + u - v, c - u + v, c - u - v] {
        let hit = scene.ray_intersect(o, -Vec3::Z)?;
        nearest = nearest.min(hit.distance);
    }
    (nearest > 0.0 && nearest.is_finite()).then(|| c.z - nearest)
}

fn resolve(state: &DroneState, scene: &Scene, cmd: FlightCommand) -> Result<Motion, CommandStatus> {
    use FlightCommand::*;
    let pos = state.pose.position;
    match (cmd, state.airborne) {
        (Takeoff, false) => {
            let to = pos + Vec3::new(0.0, 0.0, state.body.takeoff_altitude);
            if path_clear(state, scene, to) {
                Ok(Motion::Linear { to, lands: false })
            } else {
                Err(CommandStatus::Crashed)
            }
        }
        (Land, true) => match support_height(state, scene) {
            Some(z) => Ok(Motion::Linear {
                to: Vec3::new(pos.x, pos.y, z.min(pos.z)),
                lands: true,
            }),
            None => Err(CommandStatus::Crashed),
        },
        (Forward, true) => {
            let to = pos + rotate_body_to_world(Vec3::new(FORWARD_STEP, 0.0, 0.0), state.pose.yaw);
            if path_clear(state, scene, to) {
                Ok(Motion::Linear { to, lands: false })
            } else {
                Err(CommandStatus::Crashed)
            }
        }
        (Cw, true) => Ok(Motion::Rotate { delta: -ROTATION_STEP }),
        (Ccw, true) => Ok(Motion::Rotate { delta: ROTATION_STEP }),
        _ => Err(CommandStatus::Invalid),
    }
}

fn apply(state: &mut DroneState, cmd: FlightCommand, motion: &Motion) -> CommandResult {
    match *motion {
        Motion::Linear { to, lands } => {
            if cmd == FlightCommand::Takeoff {
                state.takeoff_pose = state.pose;
                state.airborne = true;
            }
            if lands {
                state.airborne = false;
            }
            state.pose.position = to;
        }
        Motion::Rotate { delta } => state.pose.yaw = wrap_angle(state.pose.yaw + delta),
    }
    state.commands_executed += 1;
    CommandResult {
        status: CommandStatus::Moved,
        new_pose: state.pose,
    }
}

/// Executes `cmd` by teleporting to its end pose. On `crashed`/`invalid` the
/// state is left untouched.
pub fn execute_simple(state: &mut DroneState, scene: &Scene, cmd: FlightCommand) -> CommandResult {
    match resolve(state, scene, cmd) {
        Ok(motion) => apply(state, cmd, &motion),
        Err(status) => CommandResult {
            status,
            new_pose: state.pose,
        },
    }
}

/// Executes `cmd` following a triangular or trapezoidal speed profile,
/// calling `observer` once per `dt` step. The final pose is identical to
/// [`execute_simple`]'s.
pub fn execute_velocity(
    state: &mut DroneState,
    scene: &Scene,
    cmd: FlightCommand,
    cfg: &MotionProfileConfig,
    mut observer: impl FnMut(&MotionSample),
) -> CommandResult {
    let motion = match resolve(state, scene, cmd) {
        Ok(m) => m,
        Err(status) => {
            return CommandResult {
                status,
                new_pose: state.pose,
            }
        }
    };
    let start = state.pose;
    let (profile, step): (MotionProfile, Box<dyn Fn(f64) -> Pose>) = match motion {
        Motion::Linear { to, .. } => {
            let delta = to - start.position;
            let dist = delta.norm();
            let dir = if dist > 0.0 { delta * (1.0 / dist) } else { Vec3::ZERO };
            (
                MotionProfile::new(dist, cfg.v_max, cfg.accel),
                Box::new(move |s| Pose::new(start.position + dir * s, start.yaw)),
            )
        }
        Motion::Rotate { delta } => (
            MotionProfile::new(delta.abs(), cfg.omega_max, cfg.alpha),
            Box::new(move |s| Pose::new(start.position, start.yaw + delta.signum() * s)),
        ),
    };
    let total = profile.duration();
    let steps = (total / cfg.dt).ceil().max(1.0) as u64;
    for k in 1..=steps {
        let t = (k as f64 * cfg.dt).min(total);
        let (s, v) = profile.sample(t);
        observer(&MotionSample {
            t,
            pose: step(s),
            speed: v,
        });
    }
    apply(state, cmd, &motion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{Cuboid, LandingPlatform, RoomDims};

    fn empty_scene() -> Scene {
        Scene::empty(
            RoomDims::default(),
            LandingPlatform::new(2.5, 2.5, 0.0),
            Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.0),
        )
    }

    fn airborne_at(x: f64, y: f64, yaw: f64) -> DroneState {
        let mut s = DroneState::on_ground(Pose::new(Vec3::new(x, y, 0.0), yaw));
        let scene = empty_scene();
        assert_eq!(execute_simple(&mut s, &scene, FlightCommand::Takeoff).status, CommandStatus::Moved);
        s
    }

    /// A slab spanning the whole room along y with its -x face at `face_x`.
    fn wall_at(face_x: f64) -> Scene {
        let mut scene = empty_scene();
        scene.cuboids.push(Cuboid {
            center: Vec3::new(face_x + 0.05, 1.65, 1.25),
            yaw: 0.0,
            half_extents: Vec3::new(0.05, 1.65, 1.25),
            albedo: 0.5,
        });
        scene
    }

    #[test]
    fn ground_rules() {
        let scene = empty_scene();
        let mut s = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.0));
        for cmd in [FlightCommand::Forward, FlightCommand::Land, FlightCommand::Cw, FlightCommand::Ccw] {
            let r = execute_simple(&mut s, &scene, cmd);
            assert_eq!(r.status, CommandStatus::Invalid);
            assert_eq!(r.new_pose, s.pose);
        }
        assert_eq!(s.commands_executed, 0);
        assert_eq!(execute_simple(&mut s, &scene, FlightCommand::Takeoff).status, CommandStatus::Moved);
        assert!(s.airborne);
        assert!((s.pose.position.z - 0.5).abs() < 1e-12);
        assert_eq!(execute_simple(&mut s, &scene, FlightCommand::Takeoff).status, CommandStatus::Invalid);
    }

    #[test]
    fn forward_moves_twenty_centimeters() {
        let scene = empty_scene();
        let mut s = airborne_at(1.0, 1.0, 0.0);
        let r = execute_simple(&mut s, &scene, FlightCommand::Forward);
        assert_eq!(r.status, CommandStatus::Moved);
        assert!((r.new_pose.position.x - 1.2).abs() < 1e-12);
        assert!((r.new_pose.position.y - 1.0).abs() < 1e-12);
        assert_eq!(s.commands_executed, 2);
    }

    #[test]
    fn blocked_forward_crashes_without_moving() {
        // leading face at 1.09; wall 0.10 m ahead of it
        let scene = wall_at(1.19);
        let mut s = airborne_at(1.0, 1.0, 0.0);
        let before = s;
        let hit = scene.ray_intersect(s.pose.position + Vec3::new(0.0, 0.0, 0.025), Vec3::X).unwrap();
        assert!(hit.distance < FORWARD_STEP + 0.09);
        let r = execute_simple(&mut s, &scene, FlightCommand::Forward);
        assert_eq!(r.status, CommandStatus::Crashed);
        assert_eq!(s, before);
    }

    #[test]
    fn path_clear_margins() {
        // the drone's leading face travels from 1.09 to 1.29
        let s = airborne_at(1.0, 1.0, 0.0);
        let target = s.pose.position + Vec3::new(0.2, 0.0, 0.0);
        assert!(path_clear(&s, &empty_scene(), target));
        assert!(path_clear(&s, &wall_at(1.291), target));
        assert!(!path_clear(&s, &wall_at(1.289), target));
    }

    #[test]
    fn corner_ray_catches_what_center_misses() {
        let mut scene = empty_scene();
        // thin post spanning 0.075..0.095 m to the side: the center ray
        // passes, the left corner rays (offset 0.09) do not
        scene.cuboids.push(Cuboid {
            center: Vec3::new(1.2, 1.0 + 0.085, 1.0),
            yaw: 0.0,
            half_extents: Vec3::new(0.01, 0.01, 1.0),
            albedo: 0.5,
        });
        let s = airborne_at(1.0, 1.0, 0.0);
        let c = s.pose.position + Vec3::new(0.0, 0.0, 0.025);
        assert!(!scene.ray_blocked(c, Vec3::X, 0.29));
        assert!(!path_clear(&s, &scene, s.pose.position + Vec3::new(0.2, 0.0, 0.0)));
    }

    #[test]
    fn rotation_needs_no_clearance_and_wraps() {
        let scene = empty_scene();
        let mut s = airborne_at(1.0, 1.0, 0.3);
        for _ in 0..36 {
            assert_eq!(execute_simple(&mut s, &scene, FlightCommand::Cw).status, CommandStatus::Moved);
        }
        assert!(crate::simcore::angle_diff(s.pose.yaw, 0.3).abs() < 1e-9);
    }

    #[test]
    fn land_finds_platform_and_obstacle_tops() {
        let mut scene = empty_scene();
        scene.cuboids.push(Cuboid {
            center: Vec3::new(1.0, 2.0, 0.15),
            yaw: 0.0,
            half_extents: Vec3::new(0.2, 0.2, 0.15),
            albedo: 0.5,
        });
        let mut s = airborne_at(2.5, 2.5, 0.0);
        execute_simple(&mut s, &scene, FlightCommand::Land);
        assert!(!s.airborne);
        assert!((s.pose.position.z - 0.01).abs() < 1e-12);

        let mut s2 = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.6, 0.0), std::f64::consts::FRAC_PI_2));
        execute_simple(&mut s2, &scene, FlightCommand::Takeoff);
        execute_simple(&mut s2, &scene, FlightCommand::Land);
        // lands back on the floor
        assert_eq!(s2.pose.position.z, 0.0);
        let mut s3 = airborne_at(1.0, 2.0, 0.0);
        execute_simple(&mut s3, &scene, FlightCommand::Land);
        assert!((s3.pose.position.z - 0.3).abs() < 1e-12);
        // and can take off again from the obstacle top
        execute_simple(&mut s3, &scene, FlightCommand::Takeoff);
        assert!((s3.pose.position.z - 0.8).abs() < 1e-12);
    }

    #[test]
    fn takeoff_under_low_obstacle_crashes() {
        let mut scene = empty_scene();
        scene.cuboids.push(Cuboid {
            center: Vec3::new(1.0, 1.0, 0.5),
            yaw: 0.0,
            half_extents: Vec3::new(0.3, 0.3, 0.1),
            albedo: 0.5,
        });
        let mut s = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.0));
        assert_eq!(execute_simple(&mut s, &scene, FlightCommand::Takeoff).status, CommandStatus::Crashed);
        assert!(!s.airborne);
    }

    #[test]
    fn sensor_readouts() {
        let scene = empty_scene();
        let mut s = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.0));
        let r = read_sensors(&s);
        assert_eq!((r.height_m, r.tof_m, r.cmd_count), (0.0, 0.0, 0));
        execute_simple(&mut s, &scene, FlightCommand::Takeoff);
        let r = read_sensors(&s);
        assert!((r.height_m - 0.5).abs() < 1e-12 && (r.tof_m - 0.5).abs() < 1e-12);
        assert_eq!(r.cmd_count, 1);
        execute_simple(&mut s, &scene, FlightCommand::Forward);
        let r = read_sensors(&s);
        assert!((r.height_m - 0.5).abs() < 1e-12);
        assert!((r.tof_m - (0.5f64.powi(2) + 0.2f64.powi(2)).sqrt()).abs() < 1e-12);
        assert!((r.tof_m - 0.5385).abs() < 1e-4);
        assert_eq!(r.cmd_count, 2);
    }

    #[test]
    fn velocity_matches_simple_end_pose() {
        let scene = empty_scene();
        let cfg = MotionProfileConfig::default();
        let cmds = [
            FlightCommand::Takeoff,
            FlightCommand::Ccw,
            FlightCommand::Forward,
            FlightCommand::Cw,
            FlightCommand::Cw,
            FlightCommand::Forward,
            FlightCommand::Land,
        ];
        let mut a = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.2));
        let mut b = a;
        for cmd in cmds {
            let ra = execute_simple(&mut a, &scene, cmd);
            let mut samples = Vec::new();
            let rb = execute_velocity(&mut b, &scene, cmd, &cfg, |s| samples.push(*s));
            assert_eq!(ra.status, rb.status);
            assert!((a.pose.position - b.pose.position).norm() < 1e-6);
            assert!(crate::simcore::angle_diff(a.pose.yaw, b.pose.yaw).abs() < 1e-9);
            let limit = if matches!(cmd, FlightCommand::Cw | FlightCommand::Ccw) { cfg.omega_max } else { cfg.v_max };
            let first_cap = if limit == cfg.v_max { cfg.accel * cfg.dt } else { cfg.alpha * cfg.dt };
            assert!(samples.iter().all(|s| s.speed <= limit + 1e-9));
            assert!(samples.first().unwrap().speed <= first_cap + 1e-12);
            assert_eq!(samples.last().unwrap().speed, 0.0);
            assert!(samples.windows(2).all(|w| w[1].t > w[0].t));
        }
        assert_eq!(a.airborne, b.airborne);
    }

    #[test]
    fn velocity_invalid_and_crash_do_not_call_observer() {
        let scene = wall_at(1.19);
        let mut s = DroneState::on_ground(Pose::new(Vec3::new(1.0, 1.0, 0.0), 0.0));
        let mut calls = 0;
        let r = execute_velocity(&mut s, &scene, FlightCommand::Forward, &MotionProfileConfig::default(), |_| calls += 1);
        assert_eq!(r.status, CommandStatus::Invalid);
        execute_simple(&mut s, &scene, FlightCommand::Takeoff);
        let r = execute_velocity(&mut s, &scene, FlightCommand::Forward, &MotionProfileConfig::default(), |_| calls += 1);
        assert_eq!(r.status, CommandStatus::Crashed);
        assert_eq!(calls, 0);
    }
}
