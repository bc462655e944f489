//! Exact reference search.
//!
//! Plain breadth-first search over exact poses: no cells, no yaw buckets;
//! only bit-for-bit repeated poses (up to 1e-7 m / 1e-8 rad rounding) are
//! merged. To stay tractable at useful depths it runs as iterative deepening
//! and drops nodes whose admissible lower bound on the remaining commands
//! overshoots the current depth limit. The bound never overestimates, so the
//! first path found is a true shortest path.

use std::collections::HashSet;

use super::{reached, trace_back, PlanError, PlanResult, PlannerConfig};
use crate::drone::{execute_simple, CommandStatus, DroneState, FlightCommand, FORWARD_STEP, ROTATION_STEP};
use crate::simcore::{angle_diff, Pose, Scene, Vec3};

/// Per-pass cap on stored nodes.
pub const NAIVE_NODE_BUDGET: usize = 12_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ExactKey([i64; 4], bool);

fn exact_key(pose: &Pose, airborne: bool) -> ExactKey {
    let p = pose.position;
    let q = |v: f64, s: f64| (v * s).round() as i64;
    ExactKey([q(p.x, 1e7), q(p.y, 1e7), q(p.z, 1e7), q(pose.yaw, 1e8)], airborne)
}

/// Lower bound on the commands still needed to get within `radius` of
/// `landing` from (`pose`, `airborne`).
///
/// * every `forward` covers exactly 0.20 m horizontally;
/// * headings reachable with `m` rotations span a cone of at most `10m`°
///   around the current heading, and a sum of steps inside a cone no wider
///   than 180° stays in that cone, so the target disc must be within `10m`°
///   of the heading (plus its angular radius);
/// * forwards never change height, so a gap of `radius` or more needs a land,
///   and a grounded drone that must move needs a takeoff first.
pub(crate) fn lower_bound(pose: &Pose, airborne: bool, landing: Vec3, radius: f64, takeoff_altitude: f64) -> u32 {
    if reached(pose, landing, radius) {
        return 0;
    }
    let p = pose.position;
    let horizontal = p.horizontal_distance(landing);
    let mut forwards = 0u32;
    let mut rotations = 0u32;
    if horizontal > radius {
        forwards = ((horizontal - radius) / FORWARD_STEP - 1e-9).ceil().max(0.0) as u32;
        let bearing = (landing.y - p.y).atan2(landing.x - p.x);
        let off = angle_diff(bearing, pose.yaw).abs();
        let slack = (radius / horizontal).min(1.0).asin();
        rotations = ((off - slack) / ROTATION_STEP - 1e-9).ceil().max(0.0) as u32;
    }
    let mut bound = forwards + rotations;
    let needs_move = forwards > 0;
    if airborne {
        if p.z - landing.z >= radius {
            bound += 1;
        }
    } else if needs_move || p.z - landing.z >= radius {
        bound += 1;
        if p.z + takeoff_altitude - landing.z >= radius {
            bound += 1;
        }
    }
    bound
}

struct Node {
    pose: Pose,
    airborne: bool,
    parent: u32,
    cmd: Option<FlightCommand>,
}

/// Shortest command sequence of at most `depth_limit` commands, exact with
/// respect to the continuous pose space. Returns `found = false` when no path
/// exists within the limit.
pub fn naive_bfs(scene: &Scene, start: &DroneState, cfg: &PlannerConfig, depth_limit: usize) -> Result<PlanResult, PlanError> {
    let landing = scene.platform.center;
    let radius = cfg.break_radius;
    let altitude = start.body.takeoff_altitude;
    let h0 = lower_bound(&start.pose, start.airborne, landing, radius, altitude) as usize;
    let mut iterations = 0u64;
    let mut visited = 0u64;
    if h0 == 0 {
        return Ok(PlanResult {
            path: Vec::new(),
            iterations: 1,
            visited: 1,
            found: true,
        });
    }
    for limit in h0..=depth_limit {
        let mut nodes = vec![Node {
            pose: start.pose,
            airborne: start.airborne,
            parent: 0,
            cmd: None,
        }];
        let mut seen = HashSet::new();
        seen.insert(exact_key(&start.pose, start.airborne));
        let mut frontier = vec![0u32];
        for depth in 0..limit {
            let mut next = Vec::new();
            for &idx in &frontier {
                iterations += 1;
                let (pose, airborne) = (nodes[idx as usize].pose, nodes[idx as usize].airborne);
                for cmd in FlightCommand::ALL {
                    let mut drone = DroneState {
                        pose,
                        airborne,
                        ..*start
                    };
                    if execute_simple(&mut drone, scene, cmd).status != CommandStatus::Moved {
                        continue;
                    }
                    if reached(&drone.pose, landing, radius) {
                        let mut path = trace_back(&nodes, idx as usize, |n| (n.parent, n.cmd));
                        path.push(cmd);
                        return Ok(PlanResult {
                            path,
                            iterations,
                            visited: seen.len() as u64 + 1,
                            found: true,
                        });
                    }
                    let remaining = lower_bound(&drone.pose, drone.airborne, landing, radius, altitude) as usize;
                    if depth + 1 + remaining > limit {
                        continue;
                    }
                    if seen.insert(exact_key(&drone.pose, drone.airborne)) {
                        next.push(nodes.len() as u32);
                        nodes.push(Node {
                            pose: drone.pose,
                            airborne: drone.airborne,
                            parent: idx,
                            cmd: Some(cmd),
                        });
                        if nodes.len() > NAIVE_NODE_BUDGET {
                            return Err(PlanError::NodeBudgetExceeded { depth: depth + 1 });
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        visited = seen.len() as u64;
    }
    Ok(PlanResult {
        path: Vec::new(),
        iterations,
        visited,
        found: false,
    })
}
