use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{episode_fraction, episode_seed, terminal_for_bootstrap, EpisodeReport, RolloutError, StepRecord};
use crate::agents::{ActionBias, Agent, AgentConfig, ReplayBuffer, Transition};
use crate::fusion::{
    compare_actions_with_threshold, consistency_bonus, emit_feedback, scene_to_text, Advisor, Consistency,
    EpisodeSummary, FeedbackSample, FeedbackSink, FusionConfig, FusionMode,
};
use crate::sim::{observe, reset, step, SimConfig};

/// Training loop with an optional advisor. Each step the advisor is consulted, the executed
/// action is compared with its recommendation, agreement earns the consistency bonus on the
/// shaped reward and disagreements become feedback samples, emitted once the episode return
/// is known.
pub struct Trainer {
    sim: SimConfig,
    fusion: FusionConfig,
    agent: Agent,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    advisor: Option<Box<dyn Advisor + Send>>,
    seed: u64,
    episode: u64,
    total_episodes: u64,
    global_step: u64,
}

impl core::fmt::Debug for Trainer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Trainer")
            .field("seed", &self.seed)
            .field("episode", &self.episode)
            .field("total_episodes", &self.total_episodes)
            .field("global_step", &self.global_step)
            .field("advisor", &self.advisor.is_some())
            .finish_non_exhaustive()
    }
}

impl Trainer {
    pub fn new(
        sim: SimConfig,
        agent: AgentConfig,
        fusion: FusionConfig,
        total_episodes: u64,
        seed: u64,
        advisor: Option<Box<dyn Advisor + Send>>,
    ) -> Result<Self, RolloutError> {
        sim.validate()?;
        fusion.validate().map_err(|(key, reason)| RolloutError::InvalidFusion { key, reason })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let buffer = ReplayBuffer::new(agent.buffer_capacity);
        let agent = Agent::new(agent, &mut rng)?;
        Ok(Self { sim, fusion, agent, buffer, rng, advisor, seed, episode: 0, total_episodes, global_step: 0 })
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn agent_mut(&mut self) -> &mut Agent {
        &mut self.agent
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn sim(&self) -> &SimConfig {
        &self.sim
    }

    pub fn has_advisor(&self) -> bool {
        self.advisor.is_some()
    }

    /// Index of the next episode to run.
    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn run_episode<S: FeedbackSink + ?Sized>(
        &mut self,
        sink: &mut S,
        record: bool,
    ) -> Result<EpisodeReport, RolloutError> {
        let frac = episode_fraction(self.episode, self.total_episodes);
        let mut report = EpisodeReport::new(self.episode, self.agent.exploration_level(frac), self.advisor.is_some());
        let mut state = reset(&self.sim, episode_seed(self.seed, self.episode))?;
        let mut obs = observe(&state, &self.sim);
        let mut pending: Vec<FeedbackSample> = Vec::new();
        let mut loss_sum = 0.0;
        let threshold = self.fusion.confidence_threshold;
        loop {
            let rec = match self.advisor.as_mut() {
                Some(a) => a.recommend(&state, &obs),
                None => None,
            };
            let bias = match (self.fusion.mode, &rec) {
                (FusionMode::QBias { beta }, Some(r)) if r.confidence >= threshold => {
                    Some(ActionBias { action: r.action, amount: beta })
                }
                _ => None,
            };
            let action = self.agent.collect_action(&obs, frac, self.buffer.len(), &mut self.rng, bias)?;
            let result = step(&state, action, &self.sim)?;
            let outcome = compare_actions_with_threshold(action, rec.as_ref(), threshold);
            let mut reward = result.reward;
            if self.fusion.mode == FusionMode::Shaping {
                reward.shaping_bonus = consistency_bonus(outcome, self.fusion.delta_a);
            }
            if let Some(stats) = report.consistency.as_mut() {
                stats.record(outcome);
            }
            if let (Consistency::Disagree, Some(r)) = (outcome, &rec) {
                pending.push(FeedbackSample {
                    episode: self.episode,
                    step: state.step,
                    obs,
                    scene_text: scene_to_text(&state, &self.sim),
                    executed: action,
                    recommended: r.action,
                    return_env: None,
                });
            }

            let next_obs = observe(&result.next_state, &self.sim);
            self.buffer.store(Transition {
                obs,
                action: action.index(),
                reward_env: reward.env_total,
                reward_shaped: reward.shaped_total(),
                next_obs,
                done: terminal_for_bootstrap(result.done_reason),
            });
            self.global_step += 1;
            if self.global_step.is_multiple_of(u64::from(self.agent.config.train_every)) {
                if let Some(loss) = self.agent.train_step(&self.buffer, &mut self.rng)? {
                    loss_sum += loss;
                    report.train_steps += 1;
                }
            }
            report.add_step(&reward, result.lane_change);
            if record {
                report.trajectory.push(StepRecord {
                    step: state.step,
                    obs,
                    action,
                    reward,
                    lane_change: result.lane_change,
                    consistency: outcome,
                    ego: result.next_state.ego.clone(),
                });
            }
            obs = next_obs;
            state = result.next_state;
            if result.done {
                report.finish(result.done_reason, loss_sum);
                break;
            }
        }

        for s in pending.iter_mut() {
            s.return_env = Some(report.return_env);
        }
        for s in &pending {
            emit_feedback(s, sink)?;
        }
        report.feedback_samples = pending.len() as u32;
        if let (Some(advisor), Some(stats)) = (self.advisor.as_mut(), report.consistency) {
            let summary = EpisodeSummary { episode: self.episode, return_env: report.return_env, consistency: stats };
            advisor.end_episode(&pending, &summary);
        }
        self.episode += 1;
        Ok(report)
    }
}
