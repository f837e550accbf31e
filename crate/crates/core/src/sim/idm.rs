//! Intelligent driver model for the human-driven vehicles.

/// IDM parameters. Humans never change lanes; only their longitudinal acceleration is modeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub jam_distance: f64,
    pub time_headway: f64,
    pub exponent: i32,
    pub min_output: f64,
    pub max_output: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            max_accel: 1.5,
            comfortable_decel: 2.0,
            jam_distance: 2.0,
            time_headway: 1.5,
            exponent: 4,
            min_output: -6.0,
            max_output: 1.5,
        }
    }
}

/// Smallest gap fed into the interaction term; overlapping humans brake at the clamp.
const MIN_GAP: f64 = 0.1;

/// IDM acceleration with default parameters. `gap = None` means no leader.
pub fn idm_acceleration(gap: Option<f64>, ego_speed: f64, leader_speed: f64, desired_speed: f64) -> f64 {
    IdmParams::default().acceleration(gap, ego_speed, leader_speed, desired_speed)
}

impl IdmParams {
    pub fn acceleration(&self, gap: Option<f64>, speed: f64, leader_speed: f64, desired_speed: f64) -> f64 {
        let a = self.max_accel;
        let free = a * (1.0 - libm::pow(speed / desired_speed.max(1e-6), self.exponent as f64));
        let accel = match gap {
            Some(gap) if gap.is_finite() => {
                let approach = speed - leader_speed;
                let dynamic = speed * self.time_headway
                    + speed * approach / (2.0 * libm::sqrt(a * self.comfortable_decel));
                let desired_gap = self.jam_distance + dynamic.max(0.0);
                let ratio = desired_gap / gap.max(MIN_GAP);
                free - a * ratio * ratio
            }
            _ => free,
        };
        accel.clamp(self.min_output, self.max_output)
    }
}
