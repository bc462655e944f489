use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dronenav_core::camera::CameraMode;
use dronenav_core::harness::MockBehavior;

#[derive(Debug, Parser)]
#[command(name = "dronenav", version, about = "Micro-drone simulator, planner, dataset generator and flight evaluator")]
pub struct Cli {
    /// JSON configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a labeled dataset.
    GenData(GenDataArgs),
    /// Plan the shortest command sequence from the drone start to the platform.
    Plan(PlanArgs),
    /// Fly one scene with a policy.
    Fly(FlyArgs),
    /// Fly many generated scenes with a policy and write a JSON report.
    Evaluate(EvaluateArgs),
    /// Render one camera image as PGM.
    Render(RenderArgs),
    /// Print the label histogram of a dataset.
    Stats(StatsArgs),
    /// Serve the policy protocol on stdin/stdout from a fixed script.
    MockPolicy(MockPolicyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    Sophisticated,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetFormat {
    Tds1,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Behavior {
    Normal,
    UnknownToken,
    Garbage,
    Silent,
    Hangup,
    Reject,
}

impl From<Behavior> for MockBehavior {
    fn from(b: Behavior) -> Self {
        match b {
            Behavior::Normal => MockBehavior::Normal,
            Behavior::UnknownToken => MockBehavior::UnknownToken,
            Behavior::Garbage => MockBehavior::Garbage,
            Behavior::Silent => MockBehavior::Silent,
            Behavior::Hangup => MockBehavior::Hangup,
            Behavior::Reject => MockBehavior::Reject,
        }
    }
}

/// Camera and image options shared by every subcommand that renders.
#[derive(Debug, Clone, Args)]
pub struct CameraArgs {
    /// Camera set-up: front, diagonal, bottom, split or fisheye.
    #[arg(long, value_parser = parse_mode)]
    pub camera: Option<CameraMode>,
    /// Image size in pixels, WxH with a 4:3 aspect ratio.
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    pub size: Option<(u32, u32)>,
}

/// Scenario generation options.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Obstacle count is uniform in 0..=N.
    #[arg(long, value_name = "N")]
    pub max_obstacles: Option<usize>,
    /// Largest obstacle edge, meters.
    #[arg(long, value_name = "M")]
    pub max_edge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Number of samples.
    #[arg(long, value_name = "N")]
    pub samples: usize,
    /// Master seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long, value_name = "F")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GenMode::Sophisticated)]
    pub mode: GenMode,
    #[arg(long, value_enum, default_value_t = DatasetFormat::Tds1)]
    pub format: DatasetFormat,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Previous commands stored per sample.
    #[arg(long, value_name = "K")]
    pub prev_k: Option<usize>,
    /// Worker threads, 0 for one per core. Output does not depend on it.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scene JSON file.
    #[arg(long, value_name = "F")]
    pub scene: PathBuf,
    /// Override the drone start: x,y in meters and yaw in degrees.
    #[arg(long, value_name = "X,Y,YAW", value_parser = parse_start, allow_hyphen_values = true)]
    pub start: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct FlyArgs {
    /// Scene JSON file.
    #[arg(long, value_name = "F")]
    pub scene: PathBuf,
    /// `oracle`, `script:CMD,CMD,…` or `external:<command line | tcp:HOST:PORT>`.
    #[arg(long, value_name = "POLICY")]
    pub policy: String,
    /// Command budget per flight.
    #[arg(long, value_name = "N")]
    pub max_commands: Option<usize>,
    /// Write one JSON line per step here.
    #[arg(long, value_name = "F")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Previous commands sent with each observation.
    #[arg(long, value_name = "K")]
    pub prev_k: Option<usize>,
    /// Per-step answer timeout for external policies, seconds.
    #[arg(long, value_name = "SECONDS")]
    pub step_timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Number of flights.
    #[arg(long, value_name = "N")]
    pub flights: usize,
    /// Master seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// `oracle`, `script:CMD,CMD,…` or `external:<command line | tcp:HOST:PORT>`.
    #[arg(long, value_name = "POLICY")]
    pub policy: String,
    /// JSON report path.
    #[arg(long, value_name = "F")]
    pub report: PathBuf,
    /// Command budget per flight.
    #[arg(long, value_name = "N")]
    pub max_commands: Option<usize>,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Previous commands sent with each observation.
    #[arg(long, value_name = "K")]
    pub prev_k: Option<usize>,
    /// Per-step answer timeout for external policies, seconds.
    #[arg(long, value_name = "SECONDS")]
    pub step_timeout: Option<f64>,
    /// Worker threads, 0 for one per core. The report does not depend on it.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene JSON file.
    #[arg(long, value_name = "F")]
    pub scene: PathBuf,
    /// Drone pose: x,y,z in meters (z of the body's underside) and yaw in degrees.
    #[arg(long, value_name = "X,Y,Z,YAW", value_parser = parse_pose, allow_hyphen_values = true)]
    pub pose: [f64; 4],
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Output PGM file.
    #[arg(long, value_name = "F")]
    pub out: PathBuf,
    /// Also write per-pixel ray distances in meters (DPT1 format).
    #[arg(long, value_name = "F")]
    pub depth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// TDS1 dataset file.
    #[arg(long, value_name = "F")]
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct MockPolicyArgs {
    /// Commands answered at steps 0, 1, …; the last one repeats.
    #[arg(long, value_name = "CMD,CMD,…", default_value = "takeoff,forward,land")]
    pub script: String,
    #[arg(long, value_enum, default_value_t = Behavior::Normal)]
    pub behavior: Behavior,
}

fn parse_mode(s: &str) -> Result<CameraMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH, e.g. 160x120")?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    Ok((w, h))
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("bad number `{p}`"))?;
        if !o.is_finite() {
            return Err(format!("non-finite number `{p}`"));
        }
    }
    Ok(out)
}

fn parse_start(s: &str) -> Result<[f64; 3], String> {
    floats::<3>(s)
}

fn parse_pose(s: &str) -> Result<[f64; 4], String> {
    floats::<4>(s)
}
