use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use dronenav_core::camera::{capture, CameraConfig};
use dronenav_core::datagen::{generate_dataset, generate_dataset_naive, label_histogram, read_dataset, write_dataset, write_jsonl, DatagenConfig};
use dronenav_core::drone::{CommandStatus, DroneState, FlightCommand};
use dronenav_core::harness::{evaluate, run_flight, serve_script, EvalConfig, ExternalPolicy, FlightRecord, Hello, OraclePolicy, Policy, PolicyError, ScriptedPolicy};
use dronenav_core::planner::{iteration_bound, optimal_flight_path, PlannerConfig};
use dronenav_core::simcore::{Pose, Scene, Vec3};
use serde::Serialize;

use crate::args::*;
use crate::config::FileConfig;
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
    Scene::from_json(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn parse_script(s: &str) -> Result<Vec<FlightCommand>, CliError> {
    let script = s
        .split(',')
        .map(|t| t.trim().parse::<FlightCommand>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if script.is_empty() {
        return Err(CliError::Usage("empty script".into()));
    }
    Ok(script)
}

/// A `--policy` value resolved to something that can build policies.
#[derive(Debug, Clone)]
enum PolicySpec {
    Oracle(PlannerConfig),
    Script(Vec<FlightCommand>),
    External { spec: String, hello: Hello, timeout: Duration },
}

impl PolicySpec {
    fn parse(s: &str, planner: PlannerConfig, hello: Hello, timeout: Duration) -> Result<Self, CliError> {
        if s == "oracle" {
            Ok(Self::Oracle(planner))
        } else if let Some(script) = s.strip_prefix("script:") {
            Ok(Self::Script(parse_script(script)?))
        } else if let Some(spec) = s.strip_prefix("external:") {
            if spec.trim().is_empty() {
                return Err(CliError::Usage("external policy needs a command line or tcp:HOST:PORT".into()));
            }
            Ok(Self::External {
                spec: spec.to_owned(),
                hello,
                timeout,
            })
        } else {
            Err(CliError::Usage(format!("unknown policy `{s}` (expected oracle, script:… or external:…)")))
        }
    }

    fn build(&self) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            Self::Oracle(p) => Box::new(OraclePolicy::new(*p)),
            Self::Script(s) => Box::new(ScriptedPolicy::new(s.clone())),
            Self::External { spec, hello, timeout } => Box::new(ExternalPolicy::from_spec(spec, *hello, *timeout)?),
        })
    }
}

fn hello_for(camera: &CameraConfig, prev_k: usize) -> Hello {
    Hello {
        image_w: camera.width,
        image_h: camera.height,
        prev_k,
    }
}

pub fn gen_data(a: GenDataArgs, file: &FileConfig) -> Result<(), CliError> {
    let cfg = DatagenConfig {
        scenario: file.scenario(&a.scenario)?,
        camera: file.camera(&a.camera)?,
        planner: file.planner()?,
        prev_k: file.prev_k(a.prev_k),
        workers: file.workers(a.workers),
    };
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let seed = file.seed(a.seed);
    let ds = match a.mode {
        GenMode::Sophisticated => generate_dataset(a.samples, seed, &cfg),
        GenMode::Naive => generate_dataset_naive(a.samples, seed, &cfg),
    }
    .map_err(runtime)?;
    match a.format {
        DatasetFormat::Tds1 => write_dataset(&ds, &a.out).map_err(runtime)?,
        DatasetFormat::Jsonl => {
            let mut out = create(&a.out)?;
            write_jsonl(&ds, &mut out).map_err(runtime)?;
            out.flush().map_err(runtime)?;
        }
    }
    println!("wrote {} samples from {} flights to {}", ds.len(), ds.flight_count, a.out.display());
    Ok(())
}

pub fn plan(a: PlanArgs, file: &FileConfig) -> Result<(), CliError> {
    let mut scene = load_scene(&a.scene)?;
    if let Some([x, y, yaw]) = a.start {
        scene.drone_start = Pose::new(Vec3::new(x, y, 0.0), yaw.to_radians());
        scene.validate().map_err(|e| CliError::Usage(format!("--start: {e}")))?;
    }
    let cfg = file.planner()?;
    let plan = optimal_flight_path(&scene, &DroneState::on_ground(scene.drone_start), &cfg).map_err(runtime)?;
    let mut out = io::stdout().lock();
    for cmd in &plan.path {
        writeln!(out, "{cmd}").map_err(runtime)?;
    }
    writeln!(
        out,
        "found={} len={} visited={} iterations={} bound={}",
        plan.found,
        plan.path.len(),
        plan.visited,
        plan.iterations,
        iteration_bound(&scene.room, &cfg)
    )
    .map_err(runtime)?;
    if plan.found {
        Ok(())
    } else {
        Err(runtime("no path to the platform"))
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    step: usize,
    digest: &'a str,
    command: FlightCommand,
    status: CommandStatus,
    x: f64,
    y: f64,
    z: f64,
    /// Degrees.
    yaw: f64,
}

fn write_trace(record: &FlightRecord, path: &Path) -> Result<(), CliError> {
    let mut out = create(path)?;
    for (i, s) in record.steps.iter().enumerate() {
        let p = s.result.new_pose;
        let line = TraceLine {
            step: i,
            digest: &s.digest,
            command: s.command,
            status: s.result.status,
            x: p.position.x,
            y: p.position.y,
            z: p.position.z,
            yaw: p.yaw.to_degrees(),
        };
        serde_json::to_writer(&mut out, &line).map_err(runtime)?;
        out.write_all(b"\n").map_err(runtime)?;
    }
    out.flush().map_err(runtime)
}

pub fn fly(a: FlyArgs, file: &FileConfig) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let flight = file.flight(&a.camera, a.max_commands, a.prev_k)?;
    let spec = PolicySpec::parse(&a.policy, file.planner()?, hello_for(&flight.camera, flight.prev_k), file.step_timeout(a.step_timeout)?)?;
    let mut policy = spec.build().map_err(runtime)?;
    let record = run_flight(0, &scene, policy.as_mut(), &flight).map_err(runtime)?;
    if let Some(path) = &a.trace {
        write_trace(&record, path)?;
    }
    println!(
        "outcome={} commands={} invalid={} start_distance={:.3} final_distance={:.3}",
        record.outcome, record.commands_executed, record.invalid_commands, record.start_distance, record.final_distance
    );
    Ok(())
}

pub fn evaluate_cmd(a: EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    if a.flights == 0 {
        return Err(CliError::Usage("--flights must be positive".into()));
    }
    let cfg = EvalConfig {
        scenario: file.scenario(&a.scenario)?,
        planner: file.planner()?,
        flight: file.flight(&a.camera, a.max_commands, a.prev_k)?,
        workers: file.workers(a.workers),
    };
    let spec = PolicySpec::parse(&a.policy, cfg.planner, hello_for(&cfg.flight.camera, cfg.flight.prev_k), file.step_timeout(a.step_timeout)?)?;
    let report = evaluate(a.flights, file.seed(a.seed), &cfg, |_| spec.build()).map_err(runtime)?;
    std::fs::write(&a.report, report.to_json() + "\n").map_err(|e| runtime(format!("cannot write {}: {e}", a.report.display())))?;
    let s = report.shares;
    println!(
        "flights={} landed_on_platform={:.4} landed_outside={:.4} crashed={:.4} did_not_land={:.4}",
        report.flights, s.landed_on_platform, s.landed_outside, s.crashed, s.did_not_land
    );
    Ok(())
}

pub fn render(a: RenderArgs, file: &FileConfig) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let mut camera = file.camera(&a.camera)?;
    camera.with_depth = a.depth.is_some();
    let [x, y, z, yaw] = a.pose;
    let image = capture(&scene, &camera, &Pose::new(Vec3::new(x, y, z), yaw.to_radians())).map_err(runtime)?;
    std::fs::write(&a.out, image.to_pgm()).map_err(|e| runtime(format!("cannot write {}: {e}", a.out.display())))?;
    if let (Some(path), Some(bytes)) = (&a.depth, image.depth_bytes()) {
        std::fs::write(path, bytes).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    println!("wrote {}x{} {} image to {}", image.width, image.height, camera.mode, a.out.display());
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let ds = read_dataset(&a.dataset).map_err(|e| runtime(format!("{}: {e}", a.dataset.display())))?;
    let h = label_histogram(&ds);
    let mut out = io::stdout().lock();
    writeln!(out, "samples {} flights {} image {}x{} prev_k {}", ds.len(), ds.flight_count, ds.width, ds.height, ds.prev_k).map_err(runtime)?;
    for cmd in FlightCommand::ALL {
        writeln!(out, "{} {} {:.4}", cmd, h.counts[cmd.code() as usize], h.share(cmd)).map_err(runtime)?;
    }
    Ok(())
}

pub fn mock_policy(a: MockPolicyArgs) -> Result<(), CliError> {
    let script = parse_script(&a.script)?;
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    serve_script(stdin, stdout, &script, a.behavior.into()).map_err(runtime)
}
