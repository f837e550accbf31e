use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SimConfig, SimError};

pub const RIGHT_LANE: usize = 0;
pub const LEFT_LANE: usize = 1;

const PLACEMENT_START: f64 = 50.0;
const PLACEMENT_ATTEMPTS: u32 = 10_000;
const HUMAN_DESIRED_SPEED: (f64, f64) = (18.0, 26.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleKinematics {
    pub id: u32,
    /// Longitudinal position of the vehicle's reference point, meters along the road.
    pub longitudinal_pos: f64,
    /// 0 is the rightmost lane.
    pub lane: usize,
    pub speed: f64,
    pub is_ego: bool,
    /// IDM free-flow speed; unused for the ego vehicle.
    pub desired_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub ego: VehicleKinematics,
    pub humans: Vec<VehicleKinematics>,
    pub step: u32,
    /// Set once a step has ended the episode; stepping further is an error.
    pub terminal: bool,
    pub rng: ChaCha8Rng,
}

/// A vehicle found relative to the ego car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    /// Bumper-to-bumper distance; negative when the vehicles overlap longitudinally.
    pub gap: f64,
    pub speed: f64,
}

/// The four neighbor slots used by the observation encoder, the text encoder and the rule advisor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Neighborhood {
    pub same_leader: Option<Neighbor>,
    pub same_follower: Option<Neighbor>,
    pub other_leader: Option<Neighbor>,
    pub other_follower: Option<Neighbor>,
}

pub fn other_lane(lane: usize) -> usize {
    1 - lane.min(1)
}

pub fn reset(config: &SimConfig, seed: u64) -> Result<SceneState, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ego = VehicleKinematics {
        id: 0,
        longitudinal_pos: 0.0,
        lane: RIGHT_LANE,
        speed: config.v_min_target,
        is_ego: true,
        desired_speed: config.v_min_target,
    };

    let span = config.road_length - PLACEMENT_START;
    if config.human_count > 0 && span <= 0.0 {
        return Err(SimError::PlacementInfeasible { placed: 0, requested: config.human_count });
    }
    let min_sep = 2.0 * config.vehicle_length;
    let mut humans: Vec<VehicleKinematics> = Vec::with_capacity(config.human_count);
    for i in 0..config.human_count {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let pos = PLACEMENT_START + rng.random::<f64>() * span;
            let lane = rng.random_range(0..config.lane_count);
            let clear = humans
                .iter()
                .all(|h| h.lane != lane || (h.longitudinal_pos - pos).abs() >= min_sep);
            if clear {
                placed = Some((pos, lane));
                break;
            }
        }
        let (pos, lane) = placed.ok_or(SimError::PlacementInfeasible {
            placed: i,
            requested: config.human_count,
        })?;
        let desired = rng.random_range(HUMAN_DESIRED_SPEED.0..=HUMAN_DESIRED_SPEED.1);
        humans.push(VehicleKinematics {
            id: i as u32 + 1,
            longitudinal_pos: pos,
            lane,
            speed: desired.min(config.speed_cap),
            is_ego: false,
            desired_speed: desired,
        });
    }

    Ok(SceneState { ego, humans, step: 0, terminal: false, rng })
}

impl SceneState {
    /// Nearest vehicle at or ahead of `pos` in `lane` (excluding the ego), regardless of range.
    pub fn leader_of_position(&self, lane: usize, pos: f64, length: f64) -> Option<Neighbor> {
        self.humans
            .iter()
            .filter(|h| h.lane == lane && h.longitudinal_pos >= pos)
            .min_by(|a, b| a.longitudinal_pos.total_cmp(&b.longitudinal_pos).then(a.id.cmp(&b.id)))
            .map(|h| Neighbor { id: h.id, gap: h.longitudinal_pos - pos - length, speed: h.speed })
    }

    /// Nearest vehicle strictly behind `pos` in `lane` (excluding the ego), regardless of range.
    pub fn follower_of_position(&self, lane: usize, pos: f64, length: f64) -> Option<Neighbor> {
        self.humans
            .iter()
            .filter(|h| h.lane == lane && h.longitudinal_pos < pos)
            .max_by(|a, b| a.longitudinal_pos.total_cmp(&b.longitudinal_pos).then(b.id.cmp(&a.id)))
            .map(|h| Neighbor { id: h.id, gap: pos - h.longitudinal_pos - length, speed: h.speed })
    }

    /// Ego-relative neighbors limited to `config.sensor_range`.
    pub fn neighborhood(&self, config: &SimConfig) -> Neighborhood {
        let in_range = |n: Option<Neighbor>| n.filter(|n| n.gap <= config.sensor_range);
        let pos = self.ego.longitudinal_pos;
        let len = config.vehicle_length;
        let lane = self.ego.lane;
        let other = other_lane(lane);
        Neighborhood {
            same_leader: in_range(self.leader_of_position(lane, pos, len)),
            same_follower: in_range(self.follower_of_position(lane, pos, len)),
            other_leader: in_range(self.leader_of_position(other, pos, len)),
            other_follower: in_range(self.follower_of_position(other, pos, len)),
        }
    }

    /// Ego-relative leader and follower in `lane`, limited to sensor range.
    pub fn lane_neighbors(&self, lane: usize, config: &SimConfig) -> (Option<Neighbor>, Option<Neighbor>) {
        let pos = self.ego.longitudinal_pos;
        let len = config.vehicle_length;
        let in_range = |n: Option<Neighbor>| n.filter(|n| n.gap <= config.sensor_range);
        (
            in_range(self.leader_of_position(lane, pos, len)),
            in_range(self.follower_of_position(lane, pos, len)),
        )
    }
}
