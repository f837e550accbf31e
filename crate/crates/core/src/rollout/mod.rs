//! Episode loops: advisor-fused training, a policy-only loop without any fusion code, and
//! greedy evaluation.

mod baseline;
mod trainer;

pub use baseline::PolicyRunner;
pub use trainer::Trainer;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::agents::{Agent, AgentError};
use crate::fusion::{Consistency, ConsistencyStats, FeedbackError};
use crate::sim::{observe, reset, step, DoneReason, LaneChange, Observation, RewardBreakdown, SimConfig, SimError, VehicleKinematics};

#[derive(Debug, thiserror::Error)]
pub enum RolloutError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error("invalid fusion config `{key}`: {reason}")]
    InvalidFusion { key: &'static str, reason: &'static str },
}

/// One environment transition as seen by the ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub obs: Observation,
    pub action: Action,
    pub reward: RewardBreakdown,
    pub lane_change: LaneChange,
    pub consistency: Consistency,
    /// Ego state after the step.
    pub ego: VehicleKinematics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub episode: u64,
    pub return_env: f64,
    pub return_shaped: f64,
    /// Sum of the per-step consistency bonuses.
    pub bonus_total: f64,
    pub steps: u32,
    pub collided: bool,
    pub done_reason: DoneReason,
    pub lane_changes: u32,
    pub aborted_changes: u32,
    /// `None` when no advisor is attached.
    pub consistency: Option<ConsistencyStats>,
    pub feedback_samples: u32,
    /// Epsilon or mean noise sigma at the start of the episode.
    pub exploration: f64,
    /// Mean loss over the episode's gradient steps, 0 when none ran.
    pub loss_mean: f64,
    pub train_steps: u32,
    pub trajectory: Vec<StepRecord>,
}

impl EpisodeReport {
    fn new(episode: u64, exploration: f64, with_advisor: bool) -> Self {
        Self {
            episode,
            return_env: 0.0,
            return_shaped: 0.0,
            bonus_total: 0.0,
            steps: 0,
            collided: false,
            done_reason: DoneReason::None,
            lane_changes: 0,
            aborted_changes: 0,
            consistency: with_advisor.then(ConsistencyStats::default),
            feedback_samples: 0,
            exploration,
            loss_mean: 0.0,
            train_steps: 0,
            trajectory: Vec::new(),
        }
    }

    fn add_step(&mut self, reward: &RewardBreakdown, lane_change: LaneChange) {
        self.return_env += reward.env_total;
        self.return_shaped += reward.shaped_total();
        self.bonus_total += reward.shaping_bonus;
        self.steps += 1;
        match lane_change {
            LaneChange::Executed => self.lane_changes += 1,
            LaneChange::Aborted => self.aborted_changes += 1,
            LaneChange::NotRequested => {}
        }
    }

    fn finish(&mut self, reason: DoneReason, loss_sum: f64) {
        self.done_reason = reason;
        self.collided = reason == DoneReason::Collision;
        if self.train_steps > 0 {
            self.loss_mean = loss_sum / self.train_steps as f64;
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scene seed of a training episode; a pure function of the run seed and episode index.
pub fn episode_seed(run_seed: u64, episode: u64) -> u64 {
    splitmix64(splitmix64(run_seed) ^ episode)
}

/// Scene seed of an evaluation episode, disjoint stream from the training seeds.
pub fn eval_seed(run_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(run_seed ^ 0x5EED_E7A1_0000_0000) ^ index)
}

/// Transitions ending on the time limit are truncations; they still bootstrap.
pub(crate) fn terminal_for_bootstrap(reason: DoneReason) -> bool {
    matches!(reason, DoneReason::Collision | DoneReason::RoadEnd)
}

pub(crate) fn episode_fraction(episode: u64, total: u64) -> f64 {
    episode as f64 / total.max(1) as f64
}

/// Noise-free greedy episode with no learning and no advisor.
pub fn evaluate_greedy(agent: &Agent, sim: &SimConfig, scene_seed: u64, record: bool) -> Result<EpisodeReport, RolloutError> {
    let mut state = reset(sim, scene_seed)?;
    let mut obs = observe(&state, sim);
    let mut report = EpisodeReport::new(scene_seed, 0.0, false);
    loop {
        let action = agent.greedy_action(&obs)?;
        let result = step(&state, action, sim)?;
        report.add_step(&result.reward, result.lane_change);
        if record {
            report.trajectory.push(StepRecord {
                step: state.step,
                obs,
                action,
                reward: result.reward,
                lane_change: result.lane_change,
                consistency: Consistency::NoAdvice,
                ego: result.next_state.ego.clone(),
            });
        }
        obs = observe(&result.next_state, sim);
        state = result.next_state;
        if result.done {
            report.finish(result.done_reason, 0.0);
            return Ok(report);
        }
    }
}
