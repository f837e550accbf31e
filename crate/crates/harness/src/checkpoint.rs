use std::path::Path;

use lanefusion_core::agents::{Agent, AgentConfig, ReplayMeta, Scalar};
use lanefusion_core::qnet::{AdamState, NetworkParams, TENSOR_NAMES};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CHECKPOINT_FORMAT: &str = "lanefusion-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub name: String,
    pub shape: [usize; 2],
}

/// Evaluation and target networks, optimizer state and replay bookkeeping of one agent. JSON
/// number formatting round-trips `f32` exactly, so save/load is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub episodes_completed: u64,
    pub global_step: u64,
    pub tensors: Vec<TensorHeader>,
    pub agent_config: AgentConfig,
    pub eval: NetworkParams<Scalar>,
    pub target: NetworkParams<Scalar>,
    pub adam: AdamState<Scalar>,
    pub replay: ReplayMeta,
}

fn headers(params: &NetworkParams<Scalar>) -> Vec<TensorHeader> {
    TENSOR_NAMES
        .iter()
        .zip(params.tensor_shapes())
        .map(|(name, shape)| TensorHeader { name: name.to_string(), shape })
        .collect()
}

impl Checkpoint {
    pub fn capture(agent: &Agent, replay: ReplayMeta, episodes_completed: u64, global_step: u64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            episodes_completed,
            global_step,
            tensors: headers(&agent.eval),
            agent_config: agent.config.clone(),
            eval: agent.eval.clone(),
            target: agent.target.clone(),
            adam: agent.adam.clone(),
            replay,
        }
    }

    pub fn into_agent(self) -> Agent {
        Agent::from_parts(self.agent_config, self.eval, self.target, self.adam)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(format!("not a checkpoint (format `{}`)", self.format));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {}", self.version));
        }
        let expected = headers(&self.eval);
        if self.tensors != expected {
            return Err("tensor headers disagree with the stored evaluation network".into());
        }
        for (label, params) in [
            ("eval", &self.eval),
            ("target", &self.target),
            ("adam.first_moment", &self.adam.first_moment),
            ("adam.second_moment", &self.adam.second_moment),
        ] {
            for ((header, data), shape) in self.tensors.iter().zip(params.tensors()).zip(params.tensor_shapes()) {
                if shape != header.shape || data.len() != shape[0] * shape[1] {
                    return Err(format!(
                        "{label}.{} holds {} values with shape {:?}, header says {:?}",
                        header.name,
                        data.len(),
                        shape,
                        header.shape
                    ));
                }
            }
        }
        if !self.eval.is_finite() || !self.target.is_finite() {
            return Err("non-finite parameters".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| e.to_string())?;
        ckpt.check()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(HarnessError::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_json(&text).map_err(|m| HarnessError::format(path, m))
    }
}
