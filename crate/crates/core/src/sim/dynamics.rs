use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::idm::IdmParams;
use super::scene::{SceneState, VehicleKinematics};
use super::{SimConfig, SimError};
use crate::action::Action;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub safety: f64,
    pub efficiency_speed: f64,
    pub efficiency_lane_change: f64,
    pub comfort: f64,
    pub env_total: f64,
    /// Consistency bonus added by the fusion pipeline; always 0 from the environment.
    pub shaping_bonus: f64,
}

impl RewardBreakdown {
    pub fn shaped_total(&self) -> f64 {
        self.env_total + self.shaping_bonus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    Collision,
    RoadEnd,
    MaxSteps,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneChange {
    NotRequested,
    Executed,
    /// Requested but the target lane is missing or unsafe; the ego went straight.
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: SceneState,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub done_reason: DoneReason,
    pub lane_change: LaneChange,
}

/// Vehicles collide when they share a lane and their reference points are closer than one car length.
pub fn collide(a: &VehicleKinematics, b: &VehicleKinematics, vehicle_length: f64) -> bool {
    a.lane == b.lane && (a.longitudinal_pos - b.longitudinal_pos).abs() < vehicle_length
}

pub fn ego_collided(state: &SceneState, config: &SimConfig) -> bool {
    state.humans.iter().any(|h| collide(&state.ego, h, config.vehicle_length))
}

/// Gap and closing-speed check for moving the ego into `target_lane`.
pub fn lane_change_safe(state: &SceneState, target_lane: usize, config: &SimConfig) -> bool {
    let (front, rear) = state.lane_neighbors(target_lane, config);
    if front.is_some_and(|f| f.gap < config.safe_gap) {
        return false;
    }
    match rear {
        None => true,
        Some(r) if r.gap < config.safe_gap => false,
        Some(r) => {
            let closing = r.speed - state.ego.speed;
            closing <= 0.0 || r.gap / closing >= config.rear_ttc_min
        }
    }
}

pub fn compute_reward(
    prev: &SceneState,
    action: Action,
    result: &SceneState,
    aborted: bool,
    collided: bool,
    config: &SimConfig,
) -> RewardBreakdown {
    let safety = if collided { config.delta1 } else { 0.0 };
    let efficiency_speed = ((result.ego.speed - config.v_min_target) / (config.v_max_target - config.v_min_target))
        .clamp(0.0, 1.0);
    let slower_leader = prev
        .lane_neighbors(prev.ego.lane, config)
        .0
        .is_some_and(|l| l.speed < prev.ego.speed);
    let efficiency_lane_change = if action.is_lane_change() && !aborted && slower_leader {
        config.delta2
    } else {
        0.0
    };
    let comfort = if result.ego.lane == 0 { config.delta3 } else { 0.0 };
    RewardBreakdown {
        safety,
        efficiency_speed,
        efficiency_lane_change,
        comfort,
        env_total: safety + efficiency_speed + efficiency_lane_change + comfort,
        shaping_bonus: 0.0,
    }
}

/// Leader of every human (index into `humans`, or the ego) in the configuration given.
fn human_accelerations(state: &SceneState, config: &SimConfig, idm: &IdmParams) -> Vec<f64> {
    let ego = &state.ego;
    state
        .humans
        .iter()
        .map(|h| {
            let ahead = |v: &VehicleKinematics| {
                v.lane == h.lane
                    && (v.longitudinal_pos > h.longitudinal_pos
                        || (v.longitudinal_pos == h.longitudinal_pos && v.id > h.id))
            };
            let leader = state
                .humans
                .iter()
                .chain(core::iter::once(ego))
                .filter(|v| ahead(v))
                .min_by(|a, b| a.longitudinal_pos.total_cmp(&b.longitudinal_pos));
            match leader {
                Some(l) => idm.acceleration(
                    Some(l.longitudinal_pos - h.longitudinal_pos - config.vehicle_length),
                    h.speed,
                    l.speed,
                    h.desired_speed,
                ),
                None => idm.acceleration(None, h.speed, 0.0, h.desired_speed),
            }
        })
        .collect()
}

pub fn step(state: &SceneState, action: Action, config: &SimConfig) -> Result<StepResult, SimError> {
    if state.terminal {
        return Err(SimError::Terminal);
    }
    let mut next = state.clone();
    next.step += 1;

    let mut lane_change = LaneChange::NotRequested;
    let speed_delta = config.accel_mag * config.dt;
    match action {
        Action::Accelerate => next.ego.speed = (next.ego.speed + speed_delta).clamp(0.0, config.speed_cap),
        Action::Decelerate => next.ego.speed = (next.ego.speed - speed_delta).clamp(0.0, config.speed_cap),
        Action::Straight | Action::MaintainSpeed => {}
        Action::TurnLeft | Action::TurnRight => {
            let target = match action {
                Action::TurnLeft => state.ego.lane.checked_add(1).filter(|&l| l < config.lane_count),
                _ => state.ego.lane.checked_sub(1),
            };
            lane_change = match target {
                Some(t) if lane_change_safe(state, t, config) => {
                    next.ego.lane = t;
                    LaneChange::Executed
                }
                _ => LaneChange::Aborted,
            };
        }
    }

    // Humans react to the post-lane-change configuration.
    let idm = IdmParams::default();
    let accels = human_accelerations(&next, config, &idm);
    for (h, acc) in next.humans.iter_mut().zip(accels) {
        h.speed = (h.speed + acc * config.dt).clamp(0.0, config.speed_cap);
        h.longitudinal_pos += h.speed * config.dt;
    }
    next.ego.longitudinal_pos += next.ego.speed * config.dt;

    let collided = ego_collided(&next, config);
    let reward = compute_reward(state, action, &next, lane_change == LaneChange::Aborted, collided, config);
    let done_reason = if collided {
        DoneReason::Collision
    } else if next.ego.longitudinal_pos >= config.road_length {
        DoneReason::RoadEnd
    } else if next.step >= config.max_steps {
        DoneReason::MaxSteps
    } else {
        DoneReason::None
    };
    let done = done_reason != DoneReason::None;
    next.terminal = done;
    Ok(StepResult { next_state: next, reward, done, done_reason, lane_change })
}

/// `step` addressed by the integer action encoding.
pub fn step_index(state: &SceneState, action: usize, config: &SimConfig) -> Result<StepResult, SimError> {
    step(state, Action::from_index(action)?, config)
}
