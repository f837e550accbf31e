use alloc::format;

use super::adapt::{OverrideTable, StateBucket};
use super::{AdvisorRecommendation, ConsistencyStats, FeedbackSample};
use crate::action::Action;
use crate::sim::{lane_change_safe, other_lane, Observation, SceneState, SimConfig, LEFT_LANE, RIGHT_LANE};

/// Same-lane leaders closer than this count as "near".
pub const NEAR_LEADER_RANGE: f64 = 50.0;
/// A near leader at least this much slower triggers an overtaking recommendation.
pub const SLOWER_LEADER_MARGIN: f64 = 3.0;

/// What the training loop tells an advisor after each episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub return_env: f64,
    pub consistency: ConsistencyStats,
}

/// Source of per-step action recommendations.
pub trait Advisor {
    fn recommend(&mut self, state: &SceneState, obs: &Observation) -> Option<AdvisorRecommendation>;

    /// Receives the episode's mismatch samples with `return_env` already back-filled.
    fn end_episode(&mut self, _samples: &[FeedbackSample], _summary: &EpisodeSummary) {}
}

impl<A: Advisor + ?Sized> Advisor for alloc::boxed::Box<A> {
    fn recommend(&mut self, state: &SceneState, obs: &Observation) -> Option<AdvisorRecommendation> {
        (**self).recommend(state, obs)
    }

    fn end_episode(&mut self, samples: &[FeedbackSample], summary: &EpisodeSummary) {
        (**self).end_episode(samples, summary)
    }
}

/// The fixed rule set, without any override.
pub fn rule_recommendation(state: &SceneState, config: &SimConfig) -> AdvisorRecommendation {
    let ego = &state.ego;
    let (same_leader, _) = state.lane_neighbors(ego.lane, config);
    let near_leader = same_leader.filter(|l| l.gap <= NEAR_LEADER_RANGE);
    let target = other_lane(ego.lane);

    if let Some(l) = near_leader {
        if ego.speed - l.speed >= SLOWER_LEADER_MARGIN && lane_change_safe(state, target, config) {
            let action = if target == LEFT_LANE { Action::TurnLeft } else { Action::TurnRight };
            return AdvisorRecommendation::new(
                action,
                0.9,
                format!("leader {:.1} m ahead is {:.1} m/s slower and the other lane is clear", l.gap, ego.speed - l.speed),
            );
        }
    }
    if ego.lane == LEFT_LANE && lane_change_safe(state, RIGHT_LANE, config) {
        let (right_leader, _) = state.lane_neighbors(RIGHT_LANE, config);
        if !right_leader.is_some_and(|l| l.speed < ego.speed) {
            return AdvisorRecommendation::new(Action::TurnRight, 0.6, "right lane is clear and not slower");
        }
    }
    if ego.speed < config.v_max_target && near_leader.is_none() {
        return AdvisorRecommendation::new(Action::Accelerate, 0.7, "below target speed with no near leader");
    }
    AdvisorRecommendation::new(Action::MaintainSpeed, 0.5, "no better option")
}

/// Rule-based advisor with a feedback-adapted override table consulted first.
#[derive(Debug, Clone)]
pub struct RuleAdvisor {
    config: SimConfig,
    table: OverrideTable,
    adapt: bool,
    adapt_threshold: u32,
    agreeing_return_sum: f64,
    agreeing_episodes: u64,
}

impl RuleAdvisor {
    pub fn new(config: SimConfig) -> Self {
        Self::with_adaptation(config, false, super::DEFAULT_ADAPT_THRESHOLD)
    }

    pub fn with_adaptation(config: SimConfig, adapt: bool, adapt_threshold: u32) -> Self {
        Self {
            config,
            table: OverrideTable::new(),
            adapt,
            adapt_threshold,
            agreeing_return_sum: 0.0,
            agreeing_episodes: 0,
        }
    }

    pub fn table(&self) -> &OverrideTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut OverrideTable {
        &mut self.table
    }

    /// Mean return of the episodes in which the agent mostly followed the advisor.
    pub fn agreeing_mean(&self) -> Option<f64> {
        (self.agreeing_episodes > 0).then(|| self.agreeing_return_sum / self.agreeing_episodes as f64)
    }
}

impl Advisor for RuleAdvisor {
    fn recommend(&mut self, state: &SceneState, obs: &Observation) -> Option<AdvisorRecommendation> {
        let bucket = StateBucket::of(obs, &self.config);
        if let Some(action) = self.table.get(&bucket) {
            return Some(AdvisorRecommendation::new(
                action,
                0.8,
                format!(
                    "learned override for lane {} speed tercile {} gap bucket {}",
                    bucket.lane, bucket.speed_tercile, bucket.gap_bucket
                ),
            ));
        }
        Some(rule_recommendation(state, &self.config))
    }

    fn end_episode(&mut self, samples: &[FeedbackSample], summary: &EpisodeSummary) {
        if !self.adapt {
            return;
        }
        if summary.consistency.rate().is_some_and(|r| r >= 0.5) {
            self.agreeing_return_sum += summary.return_env;
            self.agreeing_episodes += 1;
        }
        for s in samples {
            if let Some(r) = s.return_env {
                self.table.record(StateBucket::of(&s.obs, &self.config), s.executed, r);
            }
        }
        self.table.rebuild(self.agreeing_mean(), self.adapt_threshold);
    }
}
