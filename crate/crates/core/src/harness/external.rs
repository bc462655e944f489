//! Line-delimited JSON policy protocol.
//!
//! ```text
//! harness → policy  {"type":"hello","image_w":160,"image_h":120,"prev_k":2}
//! policy → harness  {"type":"ready"}
//! harness → policy  {"type":"obs","flight_id":0,"step":0,"image":{"w":160,"h":120,"pixels_b64":"…"},
//!                    "sensors":{"height_m":0.0,"tof_m":0.0,"cmd_count":0},"prev_cmds":[255,255]}
//! policy → harness  {"type":"cmd","command":"takeoff"}
//! harness → policy  {"type":"done","outcome":"landed_on_platform"}
//! ```
//!
//! A policy may answer any request with `{"type":"error","message":"…"}`.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{Observation, Outcome, Policy, PolicyError};
use crate::drone::FlightCommand;

pub const DEFAULT_STEP_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub image_w: u32,
    pub image_h: u32,
    pub prev_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireImage {
    pub w: u32,
    pub h: u32,
    pub pixels_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSensors {
    pub height_m: f64,
    pub tof_m: f64,
    pub cmd_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        image_w: u32,
        image_h: u32,
        prev_k: usize,
    },
    Ready,
    Obs {
        flight_id: u32,
        step: u32,
        image: WireImage,
        sensors: WireSensors,
        prev_cmds: Vec<u8>,
    },
    Cmd {
        command: String,
    },
    Done {
        outcome: String,
    },
    Error {
        message: String,
    },
}

impl Message {
    pub fn hello(h: Hello) -> Self {
        Message::Hello {
            image_w: h.image_w,
            image_h: h.image_h,
            prev_k: h.prev_k,
        }
    }

    pub fn observation(obs: &Observation) -> Self {
        Message::Obs {
            flight_id: obs.flight_id,
            step: obs.step,
            image: WireImage {
                w: obs.image.width,
                h: obs.image.height,
                pixels_b64: STANDARD.encode(&obs.image.pixels),
            },
            sensors: WireSensors {
                height_m: obs.sensors.height_m,
                tof_m: obs.sensors.tof_m,
                cmd_count: obs.sensors.cmd_count,
            },
            prev_cmds: obs.prev_cmds.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("messages always serialize");
        s.push('\n');
        s
    }
}

/// A policy living in another process, reached over its standard streams
/// or a TCP socket.
pub struct ExternalPolicy {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    timeout: Duration,
    child: Option<Child>,
    socket: Option<TcpStream>,
    poisoned: bool,
}

fn broken(e: impl std::fmt::Display) -> PolicyError {
    PolicyError::BrokenConnection(e.to_string())
}

impl ExternalPolicy {
    /// Completes the handshake over an already open connection.
    pub fn from_streams(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static, hello: Hello, timeout: Duration) -> Result<Self, PolicyError> {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut policy = Self {
            writer: Box::new(writer),
            lines: rx,
            timeout,
            child: None,
            socket: None,
            poisoned: false,
        };
        policy.send(&Message::hello(hello))?;
        match policy.receive()? {
            Message::Ready => Ok(policy),
            Message::Error { message } => Err(PolicyError::Failed(format!("handshake rejected: {message}"))),
            other => Err(PolicyError::MalformedResponse(format!("expected ready, got {other:?}"))),
        }
    }

    /// Starts `program` and talks to it over stdin/stdout.
    pub fn spawn(program: &str, args: &[String], hello: Hello, timeout: Duration) -> Result<Self, PolicyError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| broken(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match Self::from_streams(stdout, stdin, hello, timeout) {
            Ok(mut p) => {
                p.child = Some(child);
                Ok(p)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    pub fn connect(addr: &str, hello: Hello, timeout: Duration) -> Result<Self, PolicyError> {
        let stream = TcpStream::connect(addr).map_err(|e| broken(format!("cannot connect to {addr}: {e}")))?;
        let _ = stream.set_nodelay(true);
        let reader = stream.try_clone().map_err(broken)?;
        let writer = stream.try_clone().map_err(broken)?;
        let mut p = Self::from_streams(reader, writer, hello, timeout)?;
        p.socket = Some(stream);
        Ok(p)
    }

    /// `tcp:HOST:PORT` connects to a socket; anything else is a command
    /// line split on whitespace.
    pub fn from_spec(spec: &str, hello: Hello, timeout: Duration) -> Result<Self, PolicyError> {
        if let Some(addr) = spec.strip_prefix("tcp:") {
            return Self::connect(addr, hello, timeout);
        }
        let mut words = spec.split_whitespace();
        let program = words.next().ok_or_else(|| PolicyError::Failed("empty external policy spec".into()))?;
        let args: Vec<String> = words.map(str::to_owned).collect();
        Self::spawn(program, &args, hello, timeout)
    }

    fn send(&mut self, msg: &Message) -> Result<(), PolicyError> {
        if self.poisoned {
            return Err(broken("connection abandoned after an earlier failure"));
        }
        let r = self.writer.write_all(msg.to_line().as_bytes()).and_then(|_| self.writer.flush());
        r.map_err(|e| {
            self.poisoned = true;
            broken(e)
        })
    }

    fn receive(&mut self) -> Result<Message, PolicyError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    self.poisoned = true;
                    return Err(broken(e));
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.poisoned = true;
                    return Err(PolicyError::Timeout(self.timeout));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.poisoned = true;
                    return Err(broken("policy closed the connection"));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return serde_json::from_str(&line).map_err(|e| {
                self.poisoned = true;
                PolicyError::MalformedResponse(format!("{e}: {line}"))
            });
        }
    }

    /// Sends one observation and waits for the command.
    pub fn step(&mut self, obs: &Observation) -> Result<FlightCommand, PolicyError> {
        self.send(&Message::observation(obs))?;
        match self.receive()? {
            Message::Cmd { command } => command.parse().map_err(|_| {
                self.poisoned = true;
                PolicyError::MalformedResponse(format!("unknown command token `{command}`"))
            }),
            Message::Error { message } => Err(PolicyError::Failed(message)),
            other => {
                self.poisoned = true;
                Err(PolicyError::MalformedResponse(format!("expected cmd, got {other:?}")))
            }
        }
    }
}

impl Policy for ExternalPolicy {
    fn observe(&mut self, obs: &Observation) -> Result<FlightCommand, PolicyError> {
        self.step(obs)
    }

    fn end_flight(&mut self, _flight_id: u32, outcome: Outcome) -> Result<(), PolicyError> {
        self.send(&Message::Done {
            outcome: outcome.name().into(),
        })
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        self.writer = Box::new(io::sink());
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            let deadline = Instant::now() + Duration::from_secs(1);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Ways a scripted mock policy can misbehave, for protocol tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MockBehavior {
    #[default]
    Normal,
    /// Answers observations with a token outside the command set.
    UnknownToken,
    /// Answers observations with a line that is not JSON.
    Garbage,
    /// Reads observations and never answers.
    Silent,
    /// Closes the connection at the first observation.
    Hangup,
    /// Refuses the handshake.
    Reject,
}

/// Serves the policy protocol, answering step `i` of every flight with
/// `script[i]` (the last entry once the script runs out). Returns when the
/// harness closes the connection.
pub fn serve_script(reader: impl BufRead, mut writer: impl Write, script: &[FlightCommand], behavior: MockBehavior) -> io::Result<()> {
    let reply = |w: &mut dyn Write, m: Message| -> io::Result<()> {
        w.write_all(m.to_line().as_bytes())?;
        w.flush()
    };
    for line in reader.lines() {
        let line = line?;
        let msg: Message = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                reply(&mut writer, Message::Error { message: e.to_string() })?;
                continue;
            }
        };
        match msg {
            Message::Hello { .. } if behavior == MockBehavior::Reject => {
                reply(&mut writer, Message::Error { message: "rejected".into() })?;
                return Ok(());
            }
            Message::Hello { .. } => reply(&mut writer, Message::Ready)?,
            Message::Obs { step, .. } => match behavior {
                MockBehavior::Silent => {}
                MockBehavior::Hangup => return Ok(()),
                MockBehavior::Garbage => {
                    writer.write_all(b"not json\n")?;
                    writer.flush()?;
                }
                MockBehavior::UnknownToken => reply(&mut writer, Message::Cmd { command: "hover".into() })?,
                MockBehavior::Normal | MockBehavior::Reject => {
                    let cmd = script
                        .get((step as usize).min(script.len().saturating_sub(1)))
                        .copied()
                        .unwrap_or(FlightCommand::Land);
                    reply(&mut writer, Message::Cmd { command: cmd.token().into() })?;
                }
            },
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraConfig;
    use crate::drone::FlightCommand::*;
    use crate::harness::{run_flight, FlightConfig, HarnessError};
    use crate::simcore::{LandingPlatform, Pose, RoomDims, Scene, Vec3};
    use std::net::TcpListener;

    fn mock_server(script: Vec<FlightCommand>, behavior: MockBehavior) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let reader = BufReader::new(stream.try_clone().unwrap());
            let _ = serve_script(reader, stream, &script, behavior);
        });
        addr
    }

    fn hello() -> Hello {
        Hello {
            image_w: 32,
            image_h: 24,
            prev_k: 2,
        }
    }

    fn flight_cfg() -> FlightConfig {
        FlightConfig {
            camera: CameraConfig {
                width: 32,
                height: 24,
                ..CameraConfig::default()
            },
            ..FlightConfig::default()
        }
    }

    fn scene() -> Scene {
        Scene::empty(
            RoomDims::default(),
            LandingPlatform::new(2.0, 1.65, 0.0),
            Pose::new(Vec3::new(1.0, 1.65, 0.0), 0.0),
        )
    }

    #[test]
    fn wire_format_is_literal() {
        assert_eq!(
            Message::hello(Hello {
                image_w: 160,
                image_h: 120,
                prev_k: 2
            })
            .to_line(),
            "{\"type\":\"hello\",\"image_w\":160,\"image_h\":120,\"prev_k\":2}\n"
        );
        assert_eq!(Message::Ready.to_line(), "{\"type\":\"ready\"}\n");
        let cmd: Message = serde_json::from_str(r#"{"type":"cmd","command":"forward"}"#).unwrap();
        assert_eq!(cmd, Message::Cmd { command: "forward".into() });
        let obs = serde_json::to_value(Message::Obs {
            flight_id: 1,
            step: 2,
            image: WireImage {
                w: 2,
                h: 1,
                pixels_b64: STANDARD.encode([0u8, 255]),
            },
            sensors: WireSensors {
                height_m: 0.5,
                tof_m: 0.5,
                cmd_count: 1,
            },
            prev_cmds: vec![0, 255],
        })
        .unwrap();
        assert_eq!(obs["type"], "obs");
        assert_eq!(obs["image"]["pixels_b64"], "AP8=");
        assert_eq!(obs["sensors"]["cmd_count"], 1);
    }

    #[test]
    fn scripted_flight_over_tcp() {
        let script = vec![Takeoff, Forward, Forward, Forward, Forward, Forward, Land];
        let addr = mock_server(script.clone(), MockBehavior::Normal);
        let mut policy = ExternalPolicy::connect(&addr, hello(), DEFAULT_STEP_TIMEOUT).unwrap();
        let r = run_flight(0, &scene(), &mut policy, &flight_cfg()).unwrap();
        let flown: Vec<_> = r.steps.iter().map(|s| s.command).collect();
        assert_eq!(flown, script);
        assert_eq!(r.outcome, crate::harness::Outcome::LandedOnPlatform);
        // a second flight on the same connection
        let r = run_flight(1, &scene(), &mut policy, &flight_cfg()).unwrap();
        assert_eq!(r.commands_executed, 7);
    }

    fn first_step_error(behavior: MockBehavior, timeout: Duration) -> PolicyError {
        let addr = mock_server(vec![Takeoff], behavior);
        let mut policy = match ExternalPolicy::connect(&addr, hello(), timeout) {
            Ok(p) => p,
            Err(e) => return e,
        };
        match run_flight(4, &scene(), &mut policy, &flight_cfg()) {
            Err(HarnessError::Policy { flight_id: 4, source }) => source,
            other => panic!("expected a policy error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_token_is_malformed() {
        let e = first_step_error(MockBehavior::UnknownToken, DEFAULT_STEP_TIMEOUT);
        assert!(matches!(e, PolicyError::MalformedResponse(ref m) if m.contains("hover")), "{e}");
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(first_step_error(MockBehavior::Garbage, DEFAULT_STEP_TIMEOUT), PolicyError::MalformedResponse(_)));
    }

    #[test]
    fn silence_times_out() {
        let t = Duration::from_millis(150);
        let start = Instant::now();
        assert!(matches!(first_step_error(MockBehavior::Silent, t), PolicyError::Timeout(d) if d == t));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn hangup_is_broken_connection() {
        assert!(matches!(first_step_error(MockBehavior::Hangup, DEFAULT_STEP_TIMEOUT), PolicyError::BrokenConnection(_)));
    }

    #[test]
    fn rejected_handshake() {
        assert!(matches!(first_step_error(MockBehavior::Reject, DEFAULT_STEP_TIMEOUT), PolicyError::Failed(_)));
    }

    #[test]
    fn unreachable_spec() {
        assert!(matches!(
            ExternalPolicy::from_spec("/nonexistent/policy --flag", hello(), DEFAULT_STEP_TIMEOUT),
            Err(PolicyError::BrokenConnection(_))
        ));
        assert!(matches!(ExternalPolicy::from_spec("  ", hello(), DEFAULT_STEP_TIMEOUT), Err(PolicyError::Failed(_))));
    }

    #[test]
    fn mock_repeats_last_command() {
        let obs = |step| {
            Message::Obs {
                flight_id: 0,
                step,
                image: WireImage {
                    w: 0,
                    h: 0,
                    pixels_b64: String::new(),
                },
                sensors: WireSensors {
                    height_m: 0.0,
                    tof_m: 0.0,
                    cmd_count: 0,
                },
                prev_cmds: vec![],
            }
            .to_line()
        };
        let input = format!("{}{}{}{}", Message::hello(hello()).to_line(), obs(0), obs(1), obs(5));
        let mut out = Vec::new();
        serve_script(input.as_bytes(), &mut out, &[Takeoff, Cw], MockBehavior::Normal).unwrap();
        let lines: Vec<Message> = String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0], Message::Ready);
        assert_eq!(lines[1], Message::Cmd { command: "takeoff".into() });
        assert_eq!(lines[2], Message::Cmd { command: "cw".into() });
        assert_eq!(lines[3], Message::Cmd { command: "cw".into() });
    }
}
