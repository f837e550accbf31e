//! Independent reference implementations used as test oracles. Nothing here calls into the
//! code under test except to read parameters and drive the simulator.
#![allow(dead_code)]

use lanefusion_core::agents::{td_target, AgentKind};
use lanefusion_core::qnet::{backward, init_network_with_shape, sample_noise, Matrix, NetworkParams, NetworkShape, NoiseSet};
use lanefusion_core::sim::{collide, observe, reset, step, SimConfig};
use lanefusion_core::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar forward pass written directly from the layer definitions; weights are `in x out`.
/// Returns the mean Huber loss plus a fingerprint of every branch taken (ReLU signs and Huber
/// regimes) so finite-difference stencils straddling a kink can be detected.
pub fn naive_loss(
    p: &NetworkParams<f64>,
    inputs: &[Vec<f64>],
    actions: &[usize],
    targets: &[f64],
    noise: &NoiseSet<f64>,
) -> (f64, Vec<bool>) {
    let hidden = p.layer1.bias.len();
    let n_actions = p.advantage_head.bias_mu.len();
    let mut branches = Vec::new();
    let mut total = 0.0;
    for ((x, &a), &y) in inputs.iter().zip(actions).zip(targets) {
        let dense = |input: &[f64], w: &Matrix<f64>, b: &[f64], branches: &mut Vec<bool>| -> Vec<f64> {
            (0..hidden)
                .map(|j| {
                    let z = b[j] + (0..input.len()).map(|i| input[i] * w.data[i * hidden + j]).sum::<f64>();
                    branches.push(z > 0.0);
                    if z > 0.0 { z } else { 0.0 }
                })
                .collect()
        };
        let h1 = dense(x, &p.layer1.weights, &p.layer1.bias, &mut branches);
        let h2 = dense(&h1, &p.layer2.weights, &p.layer2.bias, &mut branches);
        let head = |h: &[f64], o: usize, outs: usize, l: &lanefusion_core::qnet::NoisyDense<f64>, n: &lanefusion_core::qnet::FactorNoise<f64>| {
            let mut s = l.bias_mu[o] + l.bias_sigma[o] * n.eps_out[o];
            for i in 0..hidden {
                let w = l.weight_mu.data[i * outs + o] + l.weight_sigma.data[i * outs + o] * n.eps_in[i] * n.eps_out[o];
                s += h[i] * w;
            }
            s
        };
        let v = head(&h2, 0, 1, &p.value_head, &noise.value);
        let adv: Vec<f64> = (0..n_actions).map(|o| head(&h2, o, n_actions, &p.advantage_head, &noise.advantage)).collect();
        let mean = adv.iter().sum::<f64>() / n_actions as f64;
        let q = v + adv[a] - mean;
        let d = q - y;
        branches.push(d.abs() <= 1.0);
        total += if d.abs() <= 1.0 { 0.5 * d * d } else { d.abs() - 0.5 };
    }
    (total / inputs.len() as f64, branches)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl GradCheck {
    pub fn merge(self, o: GradCheck) -> GradCheck {
        GradCheck {
            max_rel_err: self.max_rel_err.max(o.max_rel_err),
            checked: self.checked + o.checked,
            skipped_kinks: self.skipped_kinks + o.skipped_kinks,
        }
    }
}

/// Compares analytic gradients against central differences with step `h`. `per_tensor` limits
/// how many randomly chosen entries of each tensor are probed (`None` probes all of them).
pub fn gradient_check(seed: u64, shape: NetworkShape, batch: usize, per_tensor: Option<usize>, h: f64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params: NetworkParams<f64> = init_network_with_shape(shape, &mut rng);
    // Non-zero biases and a larger sigma so every tensor carries signal.
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.05..0.05);
        }
    }
    let noise: NoiseSet<f64> = sample_noise(shape, &mut rng);
    let inputs: Vec<Vec<f64>> =
        (0..batch).map(|_| (0..shape.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..shape.actions)).collect();
    // Mix of residuals inside and outside the quadratic zone.
    let (base, _) = naive_loss(&params, &inputs, &actions, &vec![0.0; batch], &noise);
    let _ = base;
    let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.5..2.5)).collect();

    let flat = Matrix::from_vec(batch, shape.input_dim, inputs.concat());
    let (_, grads) = backward(&params, &flat, &actions, &targets, &noise).expect("backward");
    let analytic: Vec<Vec<f64>> = grads.0.tensors().iter().map(|t| t.to_vec()).collect();

    let mut report = GradCheck::default();
    let (_, reference_branches) = naive_loss(&params, &inputs, &actions, &targets, &noise);
    for t in 0..analytic.len() {
        let len = analytic[t].len();
        let indices: Vec<usize> = match per_tensor {
            Some(n) if n < len => (0..n).map(|_| rng.random_range(0..len)).collect(),
            _ => (0..len).collect(),
        };
        for i in indices {
            let original = params.tensors()[t][i];
            params.tensors_mut()[t][i] = original + h;
            let (plus, bp) = naive_loss(&params, &inputs, &actions, &targets, &noise);
            params.tensors_mut()[t][i] = original - h;
            let (minus, bm) = naive_loss(&params, &inputs, &actions, &targets, &noise);
            params.tensors_mut()[t][i] = original;
            if bp != reference_branches || bm != reference_branches {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            report.max_rel_err = report.max_rel_err.max(rel);
            report.checked += 1;
        }
    }
    report
}

/// Direct transcription of the two bootstrap rules, with its own tie-breaking scan.
pub fn td_target_oracle(double_q: bool, reward: f64, done: bool, gamma: f64, q_eval: &[f64], q_target: &[f64]) -> f64 {
    if done {
        return reward;
    }
    let best_of = |q: &[f64]| {
        let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        q.iter().position(|&v| v == m).unwrap()
    };
    let bootstrap = if double_q { q_target[best_of(q_eval)] } else { q_target.iter().cloned().fold(f64::NEG_INFINITY, f64::max) };
    reward + gamma * bootstrap
}

/// Random Q-table pairs with entries in {0, 1, 2}; returns (cases, mismatches).
pub fn target_rule_check(cases: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let qe: Vec<f64> = (0..6).map(|_| rng.random_range(0..3) as f64).collect();
        let qt: Vec<f64> = (0..6).map(|_| rng.random_range(0..3) as f64).collect();
        let reward = rng.random_range(-15.0..13.0);
        let gamma = rng.random_range(0.5..1.0);
        let done = rng.random_bool(0.1);
        for kind in [AgentKind::Dqn, AgentKind::Ddqn, AgentKind::D3qn] {
            let expected = td_target_oracle(kind != AgentKind::Dqn, reward, done, gamma, &qe, &qt);
            if td_target(kind, reward, done, gamma, &qe, &qt) != expected {
                mismatches += 1;
            }
        }
    }
    (cases, mismatches)
}

#[derive(Debug, Default)]
pub struct InvariantReport {
    pub steps: usize,
    pub violations: Vec<String>,
}

/// Random-action rollouts over randomized configs; every step is checked against the
/// simulator's contract and replayed for determinism.
pub fn simulator_invariants(min_steps: usize, seed: u64) -> InvariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvariantReport::default();
    let mut episode = 0u64;
    while report.steps < min_steps {
        let cfg = SimConfig {
            human_count: rng.random_range(0..=65),
            max_steps: rng.random_range(20..=300),
            ..SimConfig::default()
        };
        let scene_seed = rng.random::<u64>();
        let mut state = reset(&cfg, scene_seed).expect("reset");
        let mut replay = reset(&cfg, scene_seed).expect("reset");
        if state != replay {
            report.violations.push(format!("episode {episode}: reset not deterministic"));
        }
        loop {
            let action = Action::ALL[rng.random_range(0..Action::COUNT)];
            let r = step(&state, action, &cfg).expect("step");
            let again = step(&replay, action, &cfg).expect("step");
            let tag = format!("episode {episode} step {}", state.step);
            if r != again {
                report.violations.push(format!("{tag}: step not deterministic"));
            }
            let (prev, next) = (&state, &r.next_state);
            for (a, b) in prev.humans.iter().chain([&prev.ego]).zip(next.humans.iter().chain([&next.ego])) {
                if b.longitudinal_pos < a.longitudinal_pos || b.longitudinal_pos != a.longitudinal_pos + b.speed * cfg.dt {
                    report.violations.push(format!("{tag}: vehicle {} moved {} -> {}", a.id, a.longitudinal_pos, b.longitudinal_pos));
                }
                if !a.is_ego && a.lane != b.lane {
                    report.violations.push(format!("{tag}: human {} changed lane", a.id));
                }
            }
            let rw = &r.reward;
            let hi = 1.0 + cfg.delta2 + cfg.delta3;
            if !(rw.env_total >= cfg.delta1 && rw.env_total <= hi) || !(0.0..=1.0).contains(&rw.efficiency_speed) {
                report.violations.push(format!("{tag}: reward {rw:?} out of bounds"));
            }
            if r.lane_change == lanefusion_core::sim::LaneChange::Aborted
                && (rw.efficiency_lane_change != 0.0 || next.ego.lane != prev.ego.lane)
            {
                report.violations.push(format!("{tag}: aborted change rewarded or moved"));
            }
            for h in &next.humans {
                let by_rule = h.lane == next.ego.lane && (h.longitudinal_pos - next.ego.longitudinal_pos).abs() < cfg.vehicle_length;
                let ab = collide(&next.ego, h, cfg.vehicle_length);
                if ab != collide(h, &next.ego, cfg.vehicle_length) || ab != by_rule {
                    report.violations.push(format!("{tag}: collision predicate inconsistent for {}", h.id));
                }
            }
            let obs = observe(next, &cfg);
            if obs.0.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                report.violations.push(format!("{tag}: observation {:?} out of range", obs.0));
            }
            report.steps += 1;
            if r.done {
                break;
            }
            state = r.next_state;
            replay = again.next_state;
        }
        episode += 1;
    }
    report
}
