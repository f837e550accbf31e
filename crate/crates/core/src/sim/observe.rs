use serde::{Deserialize, Serialize};

use super::scene::{Neighbor, SceneState};
use super::SimConfig;

pub const OBS_DIM: usize = 10;

/// Normalized feature vector fed to the Q-networks:
/// `[ego_speed/speed_cap, ego_lane, (gap, rel_speed) x {same leader, same follower, other leader, other follower}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn ego_speed(&self, config: &SimConfig) -> f64 {
        self.0[0] * config.speed_cap
    }

    pub fn ego_lane(&self) -> usize {
        if self.0[1] >= 0.5 {
            1
        } else {
            0
        }
    }

    /// Same-lane leader gap in meters, `None` when the slot encodes a missing neighbor.
    pub fn leader_gap(&self, config: &SimConfig) -> Option<f64> {
        if self.0[2] >= 1.0 && self.0[3] == 0.0 {
            None
        } else {
            Some(self.0[2] * config.sensor_range)
        }
    }
}

const MISSING: (f64, f64) = (1.0, 0.0);

fn encode(n: Option<Neighbor>, ego_speed: f64, config: &SimConfig) -> (f64, f64) {
    match n {
        None => MISSING,
        Some(n) => (
            (n.gap / config.sensor_range).clamp(0.0, 1.0),
            ((n.speed - ego_speed) / config.speed_cap).clamp(-1.0, 1.0),
        ),
    }
}

pub fn observe(state: &SceneState, config: &SimConfig) -> Observation {
    let hood = state.neighborhood(config);
    let ego_speed = state.ego.speed;
    let mut out = [0.0; OBS_DIM];
    out[0] = (ego_speed / config.speed_cap).clamp(0.0, 1.0);
    out[1] = state.ego.lane as f64;
    let slots = [hood.same_leader, hood.same_follower, hood.other_leader, hood.other_follower];
    for (i, slot) in slots.into_iter().enumerate() {
        let (gap, rel) = encode(slot, ego_speed, config);
        out[2 + 2 * i] = gap;
        out[3 + 2 * i] = rel;
    }
    Observation(out)
}
