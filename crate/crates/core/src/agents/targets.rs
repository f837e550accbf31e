use alloc::vec::Vec;

use super::replay::Transition;
use super::{obs_matrix, AgentKind};
use crate::qnet::{forward_batch, zero_noise, NetworkParams, QnetError, Real};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// TD target for one transition given the next-state Q rows of both networks.
///
/// DQN bootstraps from `max_a Q_target(s', a)`; the double-Q variants evaluate the target network
/// at the evaluation network's greedy action.
pub fn td_target<T: Real>(
    kind: AgentKind,
    reward: f64,
    done: bool,
    gamma: f64,
    q_eval_next: &[T],
    q_target_next: &[T],
) -> f64 {
    if done {
        return reward;
    }
    let bootstrap = if kind.uses_double_q() {
        q_target_next[argmax(q_eval_next)]
    } else {
        q_target_next[argmax(q_target_next)]
    };
    reward + gamma * bootstrap.as_f64()
}

/// Targets for a sampled batch; both networks are evaluated without noise.
pub fn compute_targets<T: Real>(
    kind: AgentKind,
    batch: &[&Transition],
    eval: &NetworkParams<T>,
    target: &NetworkParams<T>,
    gamma: f64,
    use_shaped_reward: bool,
) -> Result<Vec<f64>, QnetError> {
    let next = obs_matrix(batch.iter().map(|t| &t.next_obs));
    let zero = zero_noise(target.shape());
    let q_target = forward_batch(target, &next, &zero)?;
    let q_eval = if kind.uses_double_q() { Some(forward_batch(eval, &next, &zero)?) } else { None };
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let target_row = q_target.row(i);
            let eval_row = q_eval.as_ref().map_or(target_row, |q| q.row(i));
            td_target(kind, t.reward(use_shaped_reward), t.done, gamma, eval_row, target_row)
        })
        .collect())
}
