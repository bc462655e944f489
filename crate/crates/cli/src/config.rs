//! Optional JSON configuration file and its merge with command-line flags.

use std::path::Path;
use std::time::Duration;

use dronenav_core::camera::CameraConfig;
use dronenav_core::datagen::DatagenConfig;
use dronenav_core::harness::{FlightConfig, DEFAULT_MAX_COMMANDS, DEFAULT_STEP_TIMEOUT};
use dronenav_core::planner::{ExpansionOrder, PlannerConfig};
use dronenav_core::simcore::{RoomDims, ScenarioParams};
use serde::Deserialize;

use crate::args::{CameraArgs, ScenarioArgs};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub room: Option<RoomFile>,
    pub planner: PlannerFile,
    pub camera: Option<CameraConfig>,
    pub max_obstacles: Option<usize>,
    pub max_edge: Option<f64>,
    pub prev_k: Option<usize>,
    pub workers: Option<usize>,
    pub max_commands: Option<usize>,
    pub step_timeout_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomFile {
    pub w: f64,
    pub d: f64,
    pub h: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerFile {
    pub cube_edge: Option<f64>,
    pub yaw_step_deg: Option<f64>,
    pub break_radius: Option<f64>,
    pub max_iterations: Option<u64>,
    pub expansion: Option<ExpansionOrder>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn workers(&self, flag: Option<usize>) -> usize {
        flag.or(self.workers).unwrap_or(0)
    }

    pub fn prev_k(&self, flag: Option<usize>) -> usize {
        flag.or(self.prev_k).unwrap_or(DatagenConfig::default().prev_k)
    }

    pub fn planner(&self) -> Result<PlannerConfig, CliError> {
        let d = PlannerConfig::default();
        let p = &self.planner;
        let cfg = PlannerConfig {
            cube_edge: p.cube_edge.unwrap_or(d.cube_edge),
            yaw_step_deg: p.yaw_step_deg.unwrap_or(d.yaw_step_deg),
            break_radius: p.break_radius.unwrap_or(d.break_radius),
            max_iterations: p.max_iterations.unwrap_or(d.max_iterations),
            expansion: p.expansion.unwrap_or(d.expansion),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// Defaults to the dataset camera so flights see what training saw.
    pub fn camera(&self, flags: &CameraArgs) -> Result<CameraConfig, CliError> {
        let mut cfg = self.camera.unwrap_or(DatagenConfig::default().camera);
        if let Some(mode) = flags.camera {
            cfg.mode = mode;
        }
        if let Some((w, h)) = flags.size {
            cfg.width = w;
            cfg.height = h;
        }
        cfg.intrinsics().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn scenario(&self, flags: &ScenarioArgs) -> Result<ScenarioParams, CliError> {
        let mut p = ScenarioParams::default();
        if let Some(r) = self.room {
            if !(r.w > 0.0 && r.d > 0.0 && r.h > 0.0) {
                return Err(CliError::Usage("room dimensions must be positive".into()));
            }
            p.room = RoomDims { w: r.w, d: r.d, h: r.h };
        }
        if let Some(n) = flags.max_obstacles.or(self.max_obstacles) {
            p.max_obstacles = n;
        }
        if let Some(m) = flags.max_edge.or(self.max_edge) {
            p.max_edge = m;
        }
        if !(p.max_edge > 0.0 && p.max_edge <= p.room.min_dimension()) {
            return Err(CliError::Usage(format!("max edge must be in (0, {}] meters", p.room.min_dimension())));
        }
        Ok(p)
    }

    pub fn flight(&self, flags: &CameraArgs, max_commands: Option<usize>, prev_k: Option<usize>) -> Result<FlightConfig, CliError> {
        let max_commands = max_commands.or(self.max_commands).unwrap_or(DEFAULT_MAX_COMMANDS);
        if max_commands == 0 {
            return Err(CliError::Usage("max commands must be positive".into()));
        }
        Ok(FlightConfig {
            max_commands,
            camera: self.camera(flags)?,
            prev_k: self.prev_k(prev_k),
        })
    }

    pub fn step_timeout(&self, flag: Option<f64>) -> Result<Duration, CliError> {
        match flag.or(self.step_timeout_s) {
            None => Ok(DEFAULT_STEP_TIMEOUT),
            Some(s) if s > 0.0 && s.is_finite() => Ok(Duration::from_secs_f64(s)),
            Some(s) => Err(CliError::Usage(format!("step timeout must be positive, got {s}"))),
        }
    }
}
