use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lanefusion_core::agents::{AgentConfig, AgentError, AgentKind};
use lanefusion_core::fusion::{AdvisorKind, FusionConfig};
use lanefusion_core::sim::{SimConfig, SimError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Everything one invocation of the harness needs. Absent keys take their defaults; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub agent: AgentConfig,
    pub advisor: AdvisorKind,
    pub fusion: FusionConfig,
    pub episodes: u64,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    /// Greedy evaluation cadence in training episodes; 0 disables periodic evaluation.
    pub eval_every: u64,
    pub eval_episodes: u64,
    pub smoothing_window: usize,
    /// Trailing training episodes averaged into a run's headline return.
    pub final_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            agent: AgentConfig::default(),
            advisor: AdvisorKind::RuleBased,
            fusion: FusionConfig::default(),
            episodes: 3000,
            seeds: vec![0],
            output_dir: None,
            eval_every: 50,
            eval_episodes: 10,
            smoothing_window: 50,
            final_window: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate().map_err(|e| match e {
            SimError::InvalidConfig { key: "sim", reason } => HarnessError::config("sim", reason),
            SimError::InvalidConfig { key, reason } => HarnessError::config(format!("sim.{key}"), reason),
            other => HarnessError::config("sim", other.to_string()),
        })?;
        self.agent.validate().map_err(|e| match e {
            AgentError::InvalidConfig { key, reason } => HarnessError::config(format!("agent.{key}"), reason),
            other => HarnessError::config("agent", other.to_string()),
        })?;
        self.fusion.validate().map_err(|(key, reason)| HarnessError::config(format!("fusion.{key}"), reason))?;
        match &self.advisor {
            AdvisorKind::Bridge { command } if command.is_empty() => {
                return Err(HarnessError::config("advisor.command", "bridge command must not be empty"));
            }
            AdvisorKind::Replay { path } if path.is_empty() => {
                return Err(HarnessError::config("advisor.path", "replay path must not be empty"));
            }
            _ => {}
        }
        if self.episodes == 0 {
            return Err(HarnessError::config("episodes", "must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds", "must list at least one seed"));
        }
        if self.smoothing_window == 0 {
            return Err(HarnessError::config("smoothing_window", "must be >= 1"));
        }
        if self.final_window == 0 {
            return Err(HarnessError::config("final_window", "must be >= 1"));
        }
        if self.eval_every > 0 && self.eval_episodes == 0 {
            return Err(HarnessError::config("eval_episodes", "must be >= 1 when eval_every is set"));
        }
        Ok(())
    }

    /// The configuration a single scheme actually trains with.
    pub fn for_scheme(&self, scheme: Scheme) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.agent.kind = scheme.agent_kind();
        if scheme.uses_advisor() {
            if !cfg.advisor.is_enabled() {
                return Err(HarnessError::config("advisor", format!("scheme {scheme} needs an advisor")));
            }
        } else {
            cfg.advisor = AdvisorKind::None;
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a config from JSON text; errors carry the dotted key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        HarnessError::config(if key == "." { String::from("<root>") } else { key }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::config(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

/// The four training schemes of the comparison study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "d3qn+advisor")]
    D3qnAdvisor,
    #[serde(rename = "ddqn+advisor")]
    DdqnAdvisor,
    #[serde(rename = "dqn+advisor")]
    DqnAdvisor,
    #[serde(rename = "d3qn-no-advisor")]
    D3qnNoAdvisor,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::D3qnAdvisor, Scheme::DdqnAdvisor, Scheme::DqnAdvisor, Scheme::D3qnNoAdvisor];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::D3qnAdvisor => "d3qn+advisor",
            Scheme::DdqnAdvisor => "ddqn+advisor",
            Scheme::DqnAdvisor => "dqn+advisor",
            Scheme::D3qnNoAdvisor => "d3qn-no-advisor",
        }
    }

    pub fn agent_kind(self) -> AgentKind {
        match self {
            Scheme::D3qnAdvisor | Scheme::D3qnNoAdvisor => AgentKind::D3qn,
            Scheme::DdqnAdvisor => AgentKind::Ddqn,
            Scheme::DqnAdvisor => AgentKind::Dqn,
        }
    }

    pub fn uses_advisor(self) -> bool {
        self != Scheme::D3qnNoAdvisor
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected one of d3qn+advisor, ddqn+advisor, dqn+advisor, d3qn-no-advisor)"))
    }
}
