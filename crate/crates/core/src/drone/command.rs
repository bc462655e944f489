use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The five discrete flight commands. The numeric codes are the label
/// encoding used in datasets and confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum FlightCommand {
    Takeoff = 0,
    Land = 1,
    /// 0.20 m along body +x.
    Forward = 2,
    /// 10° clockwise seen from above (yaw decreases).
    Cw = 3,
    /// 10° counter-clockwise seen from above (yaw increases).
    Ccw = 4,
}

impl FlightCommand {
    /// All commands in label order.
    pub const ALL: [FlightCommand; 5] = [
        FlightCommand::Takeoff,
        FlightCommand::Land,
        FlightCommand::Forward,
        FlightCommand::Cw,
        FlightCommand::Ccw,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn token(self) -> &'static str {
        match self {
            FlightCommand::Takeoff => "takeoff",
            FlightCommand::Land => "land",
            FlightCommand::Forward => "forward",
            FlightCommand::Cw => "cw",
            FlightCommand::Ccw => "ccw",
        }
    }
}

impl fmt::Display for FlightCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown flight command `{0}`")]
pub struct UnknownCommand(pub String);

impl FromStr for FlightCommand {
    type Err = UnknownCommand;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| UnknownCommand(s.to_string()))
    }
}
