use alloc::vec::Vec;

use rand::Rng;

use super::config::AgentConfig;
use super::replay::ReplayBuffer;
use super::targets::{argmax, compute_targets};
use super::{obs_input, obs_matrix, AgentError};
use crate::action::Action;
use crate::qnet::{
    adam_step, backward, forward, init_network_with_shape, sample_noise, soft_update, zero_noise, AdamState,
    NetworkParams, NetworkShape, NoiseSet,
};
use crate::sim::{Observation, OBS_DIM};

/// Scalar type used for agent networks.
pub type Scalar = f32;

/// Evaluation and target networks plus the optimizer state of one value-based learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub config: AgentConfig,
    pub eval: NetworkParams<Scalar>,
    pub target: NetworkParams<Scalar>,
    pub adam: AdamState<Scalar>,
}

/// Optional additive preference for one action during greedy selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBias {
    pub action: Action,
    pub amount: f64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, rng: &mut R) -> Result<Self, AgentError> {
        config.validate()?;
        let shape = NetworkShape::with_hidden(OBS_DIM, config.hidden_width, Action::COUNT);
        let eval = init_network_with_shape(shape, rng);
        Ok(Self::from_parts(config, eval.clone(), eval, AdamState::new(shape)))
    }

    pub fn from_parts(
        config: AgentConfig,
        eval: NetworkParams<Scalar>,
        target: NetworkParams<Scalar>,
        adam: AdamState<Scalar>,
    ) -> Self {
        Self { config, eval, target, adam }
    }

    pub fn shape(&self) -> NetworkShape {
        self.eval.shape()
    }

    pub fn epsilon(&self, episode_fraction: f64) -> f64 {
        self.config.epsilon.value(episode_fraction)
    }

    /// Mean absolute sigma of the advantage head, a proxy for the remaining exploration noise.
    pub fn noise_level(&self) -> f64 {
        let s = &self.eval.advantage_head.weight_sigma.data;
        s.iter().map(|v| v.abs() as f64).sum::<f64>() / s.len().max(1) as f64
    }

    /// Epsilon for epsilon-greedy agents, mean sigma for noisy agents.
    pub fn exploration_level(&self, episode_fraction: f64) -> f64 {
        if self.config.kind.uses_noisy_exploration() {
            self.noise_level()
        } else {
            self.epsilon(episode_fraction)
        }
    }

    pub fn q_values(&self, obs: &Observation, noise: &NoiseSet<Scalar>) -> Result<Vec<Scalar>, AgentError> {
        Ok(forward(&self.eval, &obs_input(obs), noise)?)
    }

    /// Noise-free argmax, used for evaluation episodes.
    pub fn greedy_action(&self, obs: &Observation) -> Result<Action, AgentError> {
        let q = self.q_values(obs, &zero_noise(self.shape()))?;
        Ok(Action::ALL[argmax(&q)])
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        episode_fraction: f64,
        rng: &mut R,
    ) -> Result<Action, AgentError> {
        self.select_action_biased(obs, episode_fraction, rng, None)
    }

    /// Action for a data-collecting loop whose buffer currently holds `buffered` transitions.
    pub fn collect_action<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        episode_fraction: f64,
        buffered: usize,
        rng: &mut R,
        bias: Option<ActionBias>,
    ) -> Result<Action, AgentError> {
        if self.config.random_warmup && buffered < self.config.warmup_transitions {
            return Ok(Action::ALL[rng.random_range(0..Action::COUNT)]);
        }
        self.select_action_biased(obs, episode_fraction, rng, bias)
    }

    /// Noisy agents act greedily on freshly sampled noise; the others are epsilon-greedy on
    /// noise-free Q-values. A bias only shifts the greedy choice, never the random branch.
    pub fn select_action_biased<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        episode_fraction: f64,
        rng: &mut R,
        bias: Option<ActionBias>,
    ) -> Result<Action, AgentError> {
        let noise = if self.config.kind.uses_noisy_exploration() {
            sample_noise(self.shape(), rng)
        } else {
            let eps = self.epsilon(episode_fraction);
            if rng.random::<f64>() < eps {
                return Ok(Action::ALL[rng.random_range(0..Action::COUNT)]);
            }
            zero_noise(self.shape())
        };
        let mut q = self.q_values(obs, &noise)?;
        if let Some(b) = bias {
            q[b.action.index()] += b.amount as Scalar;
        }
        Ok(Action::ALL[argmax(&q)])
    }

    /// One gradient step on a uniformly sampled batch followed by a soft target update.
    /// Returns `None` while the buffer holds fewer than `warmup_transitions` entries.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        rng: &mut R,
    ) -> Result<Option<f64>, AgentError> {
        if buffer.len() < self.config.warmup_transitions.max(1) {
            return Ok(None);
        }
        let batch = buffer.sample(self.config.batch_size, rng)?;
        let targets = compute_targets(
            self.config.kind,
            &batch,
            &self.eval,
            &self.target,
            self.config.gamma,
            self.config.use_shaped_reward,
        )?;
        let targets: Vec<Scalar> = targets.into_iter().map(|y| y as Scalar).collect();
        let inputs = obs_matrix(batch.iter().map(|t| &t.obs));
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let noise = if self.config.kind.uses_noisy_exploration() {
            sample_noise(self.shape(), rng)
        } else {
            zero_noise(self.shape())
        };
        let (loss, mut grads) = backward(&self.eval, &inputs, &actions, &targets, &noise).map_err(|e| match e {
            crate::qnet::QnetError::NonFiniteActivation => AgentError::TrainingDiverged { loss: f64::NAN },
            other => AgentError::Qnet(other),
        })?;
        let loss = loss as f64;
        if !loss.is_finite() {
            return Err(AgentError::TrainingDiverged { loss });
        }
        if let Some(max) = self.config.max_grad_norm {
            grads.clip_norm(max);
        }
        adam_step(&mut self.eval, &grads, &mut self.adam, self.config.lr);
        soft_update(&mut self.target, &self.eval, self.config.tau);
        Ok(Some(loss))
    }
}
