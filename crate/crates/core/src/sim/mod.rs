//! Two-lane highway environment: kinematics, IDM humans, the six-action interface and the
//! three-term reward.

mod config;
mod dynamics;
mod idm;
mod observe;
mod scene;

pub use config::SimConfig;
pub use dynamics::{
    collide, compute_reward, ego_collided, lane_change_safe, step, step_index, DoneReason, LaneChange,
    RewardBreakdown, StepResult,
};
pub use idm::{idm_acceleration, IdmParams};
pub use observe::{observe, Observation, OBS_DIM};
pub use scene::{other_lane, reset, Neighbor, Neighborhood, SceneState, VehicleKinematics, LEFT_LANE, RIGHT_LANE};

use crate::action::ActionError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulator config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: &'static str },
    #[error("placed {placed} of {requested} human vehicles before running out of attempts; density too high")]
    PlacementInfeasible { placed: usize, requested: usize },
    #[error("episode already finished")]
    Terminal,
    #[error(transparent)]
    Action(#[from] ActionError),
}
