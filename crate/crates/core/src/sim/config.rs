use serde::{Deserialize, Serialize};

use super::SimError;

/// Road geometry, traffic density, time discretization and reward scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub road_length: f64,
    pub lane_count: usize,
    pub lane_width: f64,
    pub human_count: usize,
    pub dt: f64,
    pub max_steps: u32,
    pub v_min_target: f64,
    pub v_max_target: f64,
    pub accel_mag: f64,
    pub vehicle_length: f64,
    pub sensor_range: f64,
    pub safe_gap: f64,
    pub rear_ttc_min: f64,
    /// Collision penalty.
    pub delta1: f64,
    /// Lane-change reward.
    pub delta2: f64,
    /// Per-step rightmost-lane reward.
    pub delta3: f64,
    pub speed_cap: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            road_length: 3000.0,
            lane_count: 2,
            lane_width: 3.5,
            human_count: 35,
            dt: 0.25,
            max_steps: 300,
            v_min_target: 20.0,
            v_max_target: 30.0,
            accel_mag: 2.0,
            vehicle_length: 5.0,
            sensor_range: 100.0,
            safe_gap: 10.0,
            rear_ttc_min: 2.0,
            delta1: -15.0,
            delta2: 10.0,
            delta3: 2.0,
            speed_cap: 33.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |key: &'static str, reason: &'static str| Err(SimError::InvalidConfig { key, reason });
        let all = [
            self.road_length,
            self.lane_width,
            self.dt,
            self.v_min_target,
            self.v_max_target,
            self.accel_mag,
            self.vehicle_length,
            self.sensor_range,
            self.safe_gap,
            self.rear_ttc_min,
            self.delta1,
            self.delta2,
            self.delta3,
            self.speed_cap,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("sim", "all numeric fields must be finite");
        }
        if self.road_length <= 0.0 {
            return invalid("road_length", "must be > 0");
        }
        if self.lane_count != 2 {
            return invalid("lane_count", "only two-lane roads are supported");
        }
        if self.lane_width <= 0.0 {
            return invalid("lane_width", "must be > 0");
        }
        if self.dt <= 0.0 {
            return invalid("dt", "must be > 0");
        }
        if self.max_steps == 0 {
            return invalid("max_steps", "must be >= 1");
        }
        if self.v_min_target < 0.0 {
            return invalid("v_min_target", "must be >= 0");
        }
        if self.v_min_target >= self.v_max_target {
            return invalid("v_min_target", "must be < v_max_target");
        }
        if self.v_max_target > self.speed_cap {
            return invalid("v_max_target", "must be <= speed_cap");
        }
        if self.accel_mag <= 0.0 {
            return invalid("accel_mag", "must be > 0");
        }
        if self.vehicle_length <= 0.0 {
            return invalid("vehicle_length", "must be > 0");
        }
        if self.sensor_range <= 0.0 {
            return invalid("sensor_range", "must be > 0");
        }
        if self.safe_gap < 0.0 {
            return invalid("safe_gap", "must be >= 0");
        }
        if self.rear_ttc_min < 0.0 {
            return invalid("rear_ttc_min", "must be >= 0");
        }
        if self.delta1 >= 0.0 {
            return invalid("delta1", "collision penalty must be < 0");
        }
        if self.delta2 <= 0.0 {
            return invalid("delta2", "lane-change reward must be > 0");
        }
        if self.delta3 < 0.0 {
            return invalid("delta3", "comfort reward must be >= 0");
        }
        Ok(())
    }

    /// Largest per-step environment reward: full speed term plus both bonuses.
    pub fn max_step_reward(&self) -> f64 {
        1.0 + self.delta2 + self.delta3
    }
}
