use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{episode_fraction, episode_seed, terminal_for_bootstrap, EpisodeReport, RolloutError, StepRecord};
use crate::agents::{Agent, AgentConfig, ReplayBuffer, Transition};
use crate::fusion::Consistency;
use crate::sim::{observe, reset, step, SimConfig};

/// Policy-only training loop. It never touches advisors, shaping or feedback and serves as the
/// reference the fused [`super::Trainer`] must reproduce when no advisor is attached.
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    sim: SimConfig,
    agent: Agent,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    seed: u64,
    episode: u64,
    total_episodes: u64,
    global_step: u64,
}

impl PolicyRunner {
    pub fn new(sim: SimConfig, agent: AgentConfig, total_episodes: u64, seed: u64) -> Result<Self, RolloutError> {
        sim.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let buffer = ReplayBuffer::new(agent.buffer_capacity);
        let agent = Agent::new(agent, &mut rng)?;
        Ok(Self { sim, agent, buffer, rng, seed, episode: 0, total_episodes, global_step: 0 })
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn run_episode(&mut self, record: bool) -> Result<EpisodeReport, RolloutError> {
        let frac = episode_fraction(self.episode, self.total_episodes);
        let mut report = EpisodeReport::new(self.episode, self.agent.exploration_level(frac), false);
        let mut state = reset(&self.sim, episode_seed(self.seed, self.episode))?;
        let mut obs = observe(&state, &self.sim);
        let mut loss_sum = 0.0;
        loop {
            let action = self.agent.collect_action(&obs, frac, self.buffer.len(), &mut self.rng, None)?;
            let result = step(&state, action, &self.sim)?;
            let next_obs = observe(&result.next_state, &self.sim);
            self.buffer.store(Transition {
                obs,
                action: action.index(),
                reward_env: result.reward.env_total,
                reward_shaped: result.reward.env_total,
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
            obs = next_obs;
            state = result.next_state;
            if result.done {
                report.finish(result.done_reason, loss_sum);
                break;
            }
        }
        self.episode += 1;
        Ok(report)
    }
}
