//! Advisor abstraction, action-consistency discrimination, consistency shaping and
//! feedback-driven advisor adaptation.

mod adapt;
mod advisor;
mod feedback;
mod scene_text;

pub use adapt::{adapt_advisor, BucketCounters, OverrideTable, StateBucket, DEFAULT_ADAPT_THRESHOLD};
pub use advisor::{rule_recommendation, Advisor, EpisodeSummary, RuleAdvisor, NEAR_LEADER_RANGE, SLOWER_LEADER_MARGIN};
pub use feedback::{emit_feedback, FeedbackError, FeedbackSink};
pub use scene_text::scene_to_text;

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::sim::Observation;

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorRecommendation {
    pub action: Action,
    pub confidence: f64,
    pub rationale: String,
    #[serde(default)]
    pub latency_ms: f64,
}

impl AdvisorRecommendation {
    pub fn new(action: Action, confidence: f64, rationale: impl Into<String>) -> Self {
        Self { action, confidence: confidence.clamp(0.0, 1.0), rationale: rationale.into(), latency_ms: 0.0 }
    }
}

/// One executed/recommended mismatch. `return_env` stays `None` until the episode ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSample {
    pub episode: u64,
    pub step: u32,
    pub obs: Observation,
    pub scene_text: String,
    pub executed: Action,
    pub recommended: Action,
    pub return_env: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Consistency {
    Agree,
    Disagree,
    NoAdvice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConsistencyStats {
    pub agreements: u64,
    pub disagreements: u64,
}

impl ConsistencyStats {
    pub fn record(&mut self, outcome: Consistency) {
        match outcome {
            Consistency::Agree => self.agreements += 1,
            Consistency::Disagree => self.disagreements += 1,
            Consistency::NoAdvice => {}
        }
    }

    /// `None` until at least one comparison was counted.
    pub fn rate(&self) -> Option<f64> {
        let total = self.agreements + self.disagreements;
        (total > 0).then(|| self.agreements as f64 / total as f64)
    }
}

/// Where recommendations come from. `None` disables fusion entirely.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdvisorKind {
    #[default]
    #[serde(rename = "rule")]
    RuleBased,
    /// Recommendations read in order from a JSON-lines file.
    Replay { path: String },
    /// External process speaking the JSON-lines stdio protocol.
    Bridge { command: alloc::vec::Vec<String> },
    None,
}

impl AdvisorKind {
    pub fn is_enabled(&self) -> bool {
        !matches!(self, AdvisorKind::None)
    }
}

/// How a recommendation couples into the policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FusionMode {
    /// Add `delta_a` to the training reward when the executed action agrees.
    Shaping,
    /// Add `beta` to the recommended action's Q-value at selection time only.
    QBias { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub delta_a: f64,
    pub mode: FusionMode,
    pub confidence_threshold: f64,
    pub deadline_ms: u64,
    pub adapt: bool,
    pub adapt_threshold: u32,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            delta_a: 1.0,
            mode: FusionMode::Shaping,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            deadline_ms: 50,
            adapt: true,
            adapt_threshold: DEFAULT_ADAPT_THRESHOLD,
        }
    }
}

impl FusionConfig {
    /// Returns the offending field name on failure.
    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.delta_a.is_finite() && self.delta_a >= 0.0) {
            return Err(("delta_a", "must be finite and non-negative"));
        }
        if let FusionMode::QBias { beta } = self.mode {
            if !beta.is_finite() {
                return Err(("mode.beta", "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(("confidence_threshold", "must lie in [0, 1]"));
        }
        if self.deadline_ms == 0 {
            return Err(("deadline_ms", "must be positive"));
        }
        if self.adapt_threshold == 0 {
            return Err(("adapt_threshold", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn compare_actions(executed: Action, rec: Option<&AdvisorRecommendation>) -> Consistency {
    compare_actions_with_threshold(executed, rec, DEFAULT_CONFIDENCE_THRESHOLD)
}

pub fn compare_actions_with_threshold(
    executed: Action,
    rec: Option<&AdvisorRecommendation>,
    threshold: f64,
) -> Consistency {
    match rec {
        Some(r) if r.confidence >= threshold => {
            if r.action == executed {
                Consistency::Agree
            } else {
                Consistency::Disagree
            }
        }
        _ => Consistency::NoAdvice,
    }
}

pub fn consistency_bonus(outcome: Consistency, delta_a: f64) -> f64 {
    match outcome {
        Consistency::Agree => delta_a,
        Consistency::Disagree | Consistency::NoAdvice => 0.0,
    }
}
