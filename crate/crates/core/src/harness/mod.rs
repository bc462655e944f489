//! Closed-loop flights with pluggable policies, outcome classification,
//! batch evaluation, classification metrics and least-squares regression.

mod evaluate;
mod external;
mod metrics;
mod regression;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{capture, CameraConfig, CameraError, Image};
use crate::datagen::NO_COMMAND;
use crate::drone::{execute_simple, read_sensors, CommandResult, CommandStatus, DroneState, FlightCommand, Sensors};
use crate::planner::{optimal_flight_path, PlannerConfig};
use crate::simcore::{LandingPlatform, Scene};

pub use evaluate::{evaluate, EvalConfig, EvaluationReport, FlightRow, OutcomeCounts, OutcomeShares};
pub use external::{serve_script, ExternalPolicy, Hello, Message, MockBehavior, WireImage, WireSensors, DEFAULT_STEP_TIMEOUT};
pub use metrics::{confusion_and_macro_f1, label_weights, LabelWeights, MetricsError, MetricsReport};
pub use regression::{ols_fit, RegressionError, RegressionResult};

pub const DEFAULT_MAX_COMMANDS: usize = 100;
/// Horizontal landing tolerance around the platform center, meters.
pub const PLATFORM_RADIUS: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    LandedOnPlatform,
    LandedOutside,
    Crashed,
    DidNotLand,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::LandedOnPlatform, Outcome::LandedOutside, Outcome::Crashed, Outcome::DidNotLand];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::LandedOnPlatform => "landed_on_platform",
            Outcome::LandedOutside => "landed_outside",
            Outcome::Crashed => "crashed",
            Outcome::DidNotLand => "did_not_land",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What a policy sees before each command.
#[derive(Debug, Clone)]
pub struct Observation {
    pub flight_id: u32,
    pub step: u32,
    pub image: Image,
    pub sensors: Sensors,
    /// Most recent first, [`NO_COMMAND`] padded, same layout as datasets.
    pub prev_cmds: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("policy did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("malformed policy response: {0}")]
    MalformedResponse(String),
    #[error("policy connection broken: {0}")]
    BrokenConnection(String),
    #[error("policy failed: {0}")]
    Failed(String),
}

/// A controller flown by [`run_flight`].
pub trait Policy {
    /// Called once before the first observation. Only the oracle looks at
    /// the scene.
    fn start_flight(&mut self, _flight_id: u32, _scene: &Scene, _start: &DroneState) -> Result<(), PolicyError> {
        Ok(())
    }

    fn observe(&mut self, obs: &Observation) -> Result<FlightCommand, PolicyError>;

    fn end_flight(&mut self, _flight_id: u32, _outcome: Outcome) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Replays the planner's path for the flight's start state.
#[derive(Debug, Clone, Default)]
pub struct OraclePolicy {
    pub planner: PlannerConfig,
    pending: VecDeque<FlightCommand>,
}

impl OraclePolicy {
    pub fn new(planner: PlannerConfig) -> Self {
        Self {
            planner,
            pending: VecDeque::new(),
        }
    }
}

impl Policy for OraclePolicy {
    fn start_flight(&mut self, _flight_id: u32, scene: &Scene, start: &DroneState) -> Result<(), PolicyError> {
        let plan = optimal_flight_path(scene, start, &self.planner).map_err(|e| PolicyError::Failed(e.to_string()))?;
        if !plan.found {
            return Err(PolicyError::Failed("no path to the platform".into()));
        }
        self.pending = plan.path.into();
        Ok(())
    }

    fn observe(&mut self, _obs: &Observation) -> Result<FlightCommand, PolicyError> {
        self.pending
            .pop_front()
            .ok_or_else(|| PolicyError::Failed("planned path exhausted".into()))
    }
}

/// Issues a fixed list of commands, repeating the last one once the list
/// runs out.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    script: Vec<FlightCommand>,
    next: usize,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<FlightCommand>) -> Self {
        Self { script, next: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn start_flight(&mut self, _flight_id: u32, _scene: &Scene, _start: &DroneState) -> Result<(), PolicyError> {
        self.next = 0;
        Ok(())
    }

    fn observe(&mut self, _obs: &Observation) -> Result<FlightCommand, PolicyError> {
        let cmd = *self
            .script
            .get(self.next.min(self.script.len().saturating_sub(1)))
            .ok_or_else(|| PolicyError::Failed("empty script".into()))?;
        self.next += 1;
        Ok(cmd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightStep {
    /// Hex SHA-256 of the observed pixels.
    pub digest: String,
    pub command: FlightCommand,
    pub result: CommandResult,
}

#[derive(Debug, Clone)]
pub struct FlightRecord {
    pub flight_id: u32,
    pub scene: Scene,
    pub steps: Vec<FlightStep>,
    pub outcome: Outcome,
    /// Horizontal distance from the final position to the platform center.
    pub final_distance: f64,
    pub start_distance: f64,
    /// Commands issued by the policy, invalid ones included.
    pub commands_executed: usize,
    /// Commands rejected as invalid for the drone state.
    pub invalid_commands: usize,
}

impl FlightRecord {
    /// Commands that changed the drone state.
    pub fn path_len(&self) -> usize {
        self.steps.iter().filter(|s| s.result.status == CommandStatus::Moved).count()
    }
}

#[derive(Debug, Clone)]
pub struct FlightConfig {
    pub max_commands: usize,
    pub camera: CameraConfig,
    /// Length of `prev_cmds` in observations.
    pub prev_k: usize,
}

impl Default for FlightConfig {
    fn default() -> Self {
        Self {
            max_commands: DEFAULT_MAX_COMMANDS,
            camera: crate::datagen::DatagenConfig::default().camera,
            prev_k: crate::datagen::DatagenConfig::default().prev_k,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("flight {flight_id}: {source}")]
    Policy {
        flight_id: u32,
        #[source]
        source: PolicyError,
    },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Scenario(#[from] crate::datagen::DatagenError),
    #[error("invalid evaluation request: {0}")]
    InvalidRequest(String),
}

pub fn digest(pixels: &[u8]) -> String {
    Sha256::digest(pixels).iter().map(|b| format!("{b:02x}")).collect()
}

fn prev_codes(executed: &[FlightCommand], k: usize) -> Vec<u8> {
    (0..k)
        .map(|i| executed.len().checked_sub(i + 1).map_or(NO_COMMAND, |j| executed[j].code()))
        .collect()
}

/// Flies `policy` from the scene's drone start until it lands, crashes or
/// has issued `cfg.max_commands` commands.
pub fn run_flight(flight_id: u32, scene: &Scene, policy: &mut dyn Policy, cfg: &FlightConfig) -> Result<FlightRecord, HarnessError> {
    let policy_err = |source| HarnessError::Policy { flight_id, source };
    let mut state = DroneState::on_ground(scene.drone_start);
    policy.start_flight(flight_id, scene, &state).map_err(policy_err)?;

    let mut steps = Vec::new();
    let mut executed = Vec::new();
    while steps.len() < cfg.max_commands {
        let image = capture(scene, &cfg.camera, &state.pose)?;
        let obs = Observation {
            flight_id,
            step: steps.len() as u32,
            sensors: read_sensors(&state),
            prev_cmds: prev_codes(&executed, cfg.prev_k),
            image,
        };
        let command = policy.observe(&obs).map_err(policy_err)?;
        let result = execute_simple(&mut state, scene, command);
        if result.status == CommandStatus::Moved {
            executed.push(command);
        }
        steps.push(FlightStep {
            digest: digest(&obs.image.pixels),
            command,
            result,
        });
        let landed = command == FlightCommand::Land && result.status == CommandStatus::Moved;
        if landed || result.status == CommandStatus::Crashed {
            break;
        }
    }

    let platform = scene.platform.center;
    let mut record = FlightRecord {
        flight_id,
        scene: scene.clone(),
        commands_executed: steps.len(),
        invalid_commands: steps.iter().filter(|s| s.result.status == CommandStatus::Invalid).count(),
        steps,
        outcome: Outcome::DidNotLand,
        final_distance: state.pose.position.horizontal_distance(platform),
        start_distance: scene.drone_start.position.horizontal_distance(platform),
    };
    record.outcome = classify_outcome(&record, &scene.platform);
    policy.end_flight(flight_id, record.outcome).map_err(policy_err)?;
    Ok(record)
}

/// Crash beats landing; a landing counts as on the platform within
/// [`PLATFORM_RADIUS`] horizontally of its center.
pub fn classify_outcome(record: &FlightRecord, platform: &LandingPlatform) -> Outcome {
    if record.steps.iter().any(|s| s.result.status == CommandStatus::Crashed) {
        return Outcome::Crashed;
    }
    let landing = record
        .steps
        .iter()
        .rev()
        .find(|s| s.command == FlightCommand::Land && s.result.status == CommandStatus::Moved);
    match landing {
        Some(step) if step.result.new_pose.position.horizontal_distance(platform.center) <= PLATFORM_RADIUS => Outcome::LandedOnPlatform,
        Some(_) => Outcome::LandedOutside,
        None => Outcome::DidNotLand,
    }
}
