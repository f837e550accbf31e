use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six discrete driving maneuvers, encoded 0..5 in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "TURN_LEFT")]
    TurnLeft = 0,
    #[serde(rename = "TURN_RIGHT")]
    TurnRight = 1,
    #[serde(rename = "STRAIGHT")]
    Straight = 2,
    #[serde(rename = "ACCELERATE")]
    Accelerate = 3,
    #[serde(rename = "DECELERATE")]
    Decelerate = 4,
    #[serde(rename = "MAINTAIN")]
    MaintainSpeed = 5,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("action index {0} out of range 0..6")]
    OutOfRange(usize),
    #[error("unknown action name `{0}`")]
    UnknownName(alloc::string::String),
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Straight,
        Action::Accelerate,
        Action::Decelerate,
        Action::MaintainSpeed,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self, ActionError> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or(ActionError::OutOfRange(index))
    }

    /// Canonical wire name used by the feedback log and the bridge protocol.
    pub fn canonical_name(self) -> &'static str {
        match self {
            Action::TurnLeft => "TURN_LEFT",
            Action::TurnRight => "TURN_RIGHT",
            Action::Straight => "STRAIGHT",
            Action::Accelerate => "ACCELERATE",
            Action::Decelerate => "DECELERATE",
            Action::MaintainSpeed => "MAINTAIN",
        }
    }

    pub fn is_lane_change(self) -> bool {
        matches!(self, Action::TurnLeft | Action::TurnRight)
    }
}

impl TryFrom<usize> for Action {
    type Error = ActionError;

    fn try_from(value: usize) -> Result<Self, Self::Error> {
        Self::from_index(value)
    }
}

impl FromStr for Action {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.canonical_name() == s)
            .ok_or_else(|| ActionError::UnknownName(s.into()))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}
