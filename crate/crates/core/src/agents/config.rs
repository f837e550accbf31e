use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    /// Max over the target network, epsilon-greedy exploration.
    Dqn,
    /// Double-Q target, epsilon-greedy exploration.
    Ddqn,
    /// Double-Q target with noisy-head exploration.
    D3qn,
}

impl AgentKind {
    pub fn uses_double_q(self) -> bool {
        matches!(self, AgentKind::Ddqn | AgentKind::D3qn)
    }

    pub fn uses_noisy_exploration(self) -> bool {
        matches!(self, AgentKind::D3qn)
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Dqn => "dqn",
            AgentKind::Ddqn => "ddqn",
            AgentKind::D3qn => "d3qn",
        }
    }
}

/// Linear decay from `start` to `end` over the first `decay_fraction` of the episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.05, decay_fraction: 0.3 }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, episode_fraction: f64) -> f64 {
        let progress = if self.decay_fraction <= 0.0 {
            1.0
        } else {
            (episode_fraction / self.decay_fraction).clamp(0.0, 1.0)
        };
        self.start * (1.0 - progress) + self.end * progress
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub warmup_transitions: usize,
    pub buffer_capacity: usize,
    pub epsilon: EpsilonSchedule,
    pub train_every: u32,
    pub use_shaped_reward: bool,
    pub hidden_width: usize,
    /// Act uniformly at random until the buffer reaches `warmup_transitions`, for every kind.
    pub random_warmup: bool,
    /// Global gradient-norm clip applied before each Adam step; `None` disables it.
    pub max_grad_norm: Option<f64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            kind: AgentKind::D3qn,
            gamma: 0.99,
            lr: 0.001,
            batch_size: 32,
            tau: 0.005,
            warmup_transitions: 1_000,
            buffer_capacity: 100_000,
            epsilon: EpsilonSchedule::default(),
            train_every: 1,
            use_shaped_reward: true,
            hidden_width: crate::qnet::HIDDEN_WIDTH,
            random_warmup: true,
            max_grad_norm: None,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let invalid = |key: &'static str, reason: &'static str| Err(AgentError::InvalidConfig { key, reason });
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return invalid("gamma", "must lie in (0, 1]");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return invalid("lr", "must be a positive finite number");
        }
        if self.batch_size == 0 {
            return invalid("batch_size", "must be >= 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return invalid("tau", "must lie in (0, 1]");
        }
        if self.buffer_capacity == 0 {
            return invalid("buffer_capacity", "must be >= 1");
        }
        if self.train_every == 0 {
            return invalid("train_every", "must be >= 1");
        }
        if self.hidden_width == 0 {
            return invalid("hidden_width", "must be >= 1");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return invalid("epsilon", "start and end must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&e.decay_fraction) {
            return invalid("epsilon.decay_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}
