//! Random scene export: states, their text and observation encodings, and the rule advisor's
//! answer, for checking an external advisor against the built-in rules.

use std::io::Write;

use lanefusion_core::action::Action;
use lanefusion_core::fusion::{rule_recommendation, scene_to_text};
use lanefusion_core::sim::{ego_collided, observe, reset, Observation, SceneState, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::feedback_log::JsonlSink;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedScene {
    pub index: u64,
    pub scene_text: String,
    pub obs: Observation,
    pub ego_lane: usize,
    pub ego_speed: f64,
    pub recommended: Action,
    pub confidence: f64,
    pub rationale: String,
}

/// A randomized scene: reset with a random seed, then the ego moved to a random position, lane
/// and speed that does not overlap any human.
pub fn random_scene(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<SceneState> {
    for _ in 0..1000 {
        let mut state = reset(config, rng.random()).map_err(|e| HarnessError::config("sim", e.to_string()))?;
        let span = (config.road_length - config.sensor_range).max(1.0);
        state.ego.longitudinal_pos = rng.random_range(0.0..span);
        state.ego.lane = rng.random_range(0..config.lane_count);
        state.ego.speed = rng.random_range(0.0..=config.speed_cap);
        if !ego_collided(&state, config) {
            return Ok(state);
        }
    }
    Err(HarnessError::Invalid("could not place the ego vehicle without overlap".into()))
}

pub fn export_scene(index: u64, state: &SceneState, config: &SimConfig) -> ExportedScene {
    let rec = rule_recommendation(state, config);
    ExportedScene {
        index,
        scene_text: scene_to_text(state, config),
        obs: observe(state, config),
        ego_lane: state.ego.lane,
        ego_speed: state.ego.speed,
        recommended: rec.action,
        confidence: rec.confidence,
        rationale: rec.rationale,
    }
}

/// Write `count` scenes as JSON lines. Output depends only on `(config, count, seed)`.
pub fn export_scenes<W: Write>(config: &SimConfig, count: u64, seed: u64, out: W) -> Result<W> {
    config.validate().map_err(|e| HarnessError::config("sim", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sink = JsonlSink::new(out);
    for i in 0..count {
        let state = random_scene(config, &mut rng)?;
        sink.write(&export_scene(i, &state, config)).map_err(|e| HarnessError::Invalid(format!("writing scenes: {e}")))?;
    }
    sink.flush().map_err(|e| HarnessError::Invalid(format!("writing scenes: {e}")))?;
    Ok(sink.into_inner())
}
