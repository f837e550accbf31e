//! DQN, double DQN and noisy dueling double DQN learners sharing replay, targets and training.

mod agent;
mod config;
mod replay;
mod targets;

pub use agent::{ActionBias, Agent, Scalar};
pub use config::{AgentConfig, AgentKind, EpsilonSchedule};
pub use replay::{ReplayBuffer, ReplayError, ReplayMeta, Transition};
pub use targets::{argmax, compute_targets, td_target};

use crate::qnet::{Matrix, QnetError, Real};
use crate::sim::{Observation, OBS_DIM};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("invalid agent config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: &'static str },
    #[error("training diverged (loss = {loss})")]
    TrainingDiverged { loss: f64 },
    #[error(transparent)]
    Qnet(#[from] QnetError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

pub(crate) fn obs_input<T: Real>(obs: &Observation) -> [T; OBS_DIM] {
    obs.0.map(T::from_f64)
}

pub(crate) fn obs_matrix<'a, T: Real>(rows: impl Iterator<Item = &'a Observation>) -> Matrix<T> {
    let data: alloc::vec::Vec<T> = rows.flat_map(|o| obs_input::<T>(o)).collect();
    Matrix::from_vec(data.len() / OBS_DIM, OBS_DIM, data)
}
