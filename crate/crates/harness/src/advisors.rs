//! Advisors that live outside the core crate: a file replay and the JSON-lines stdio bridge to
//! an external recommendation process.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use lanefusion_core::action::Action;
use lanefusion_core::fusion::{
    scene_to_text, Advisor, AdvisorKind, AdvisorRecommendation, EpisodeSummary, FeedbackSample, FusionConfig, RuleAdvisor,
};
use lanefusion_core::sim::{Observation, SceneState, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::feedback_log::read_jsonl;

pub type BoxedAdvisor = Box<dyn Advisor + Send>;

/// Instantiate the advisor a config asks for; `None` for the no-advisor scheme.
pub fn build_advisor(kind: &AdvisorKind, sim: &SimConfig, fusion: &FusionConfig) -> Result<Option<BoxedAdvisor>> {
    Ok(match kind {
        AdvisorKind::RuleBased => {
            Some(Box::new(RuleAdvisor::with_adaptation(sim.clone(), fusion.adapt, fusion.adapt_threshold)))
        }
        AdvisorKind::Replay { path } => Some(Box::new(ReplayAdvisor::load(Path::new(path))?)),
        AdvisorKind::Bridge { command } => Some(Box::new(BridgeAdvisor::spawn(
            command,
            sim.clone(),
            Duration::from_millis(fusion.deadline_ms),
        )?)),
        AdvisorKind::None => None,
    })
}

/// Plays back one recommendation (or `null`) per consulted step, in file order. Once the file
/// is exhausted it stays silent.
#[derive(Debug, Clone)]
pub struct ReplayAdvisor {
    entries: Vec<Option<AdvisorRecommendation>>,
    cursor: usize,
}

impl ReplayAdvisor {
    pub fn new(entries: Vec<Option<AdvisorRecommendation>>) -> Self {
        Self { entries, cursor: 0 }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_jsonl(path)?))
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.cursor
    }
}

impl Advisor for ReplayAdvisor {
    fn recommend(&mut self, _state: &SceneState, _obs: &Observation) -> Option<AdvisorRecommendation> {
        let next = self.entries.get(self.cursor).cloned().flatten();
        self.cursor = (self.cursor + 1).min(self.entries.len());
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BridgeRequest<'a> {
    Recommend { id: u64, scene_text: &'a str, obs: &'a Observation },
    Feedback { id: u64, sample: &'a FeedbackSample },
    Shutdown { id: u64 },
}

/// A response line. Either the recommendation fields or `error` are present.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BridgeResponse {
    pub id: u64,
    #[serde(default)]
    pub action: Option<Action>,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub rationale: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

enum Incoming {
    Response(BridgeResponse),
    Garbage(String),
}

/// Out-of-process advisor. Requests go to the child's stdin, one JSON object per line; a reader
/// thread forwards response lines so the training loop can wait with a deadline. A response
/// that misses its deadline is dropped when it eventually arrives, matched by id. Every failure
/// degrades to "no advice" with a logged warning.
pub struct BridgeAdvisor {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    responses: Receiver<Incoming>,
    reader: Option<JoinHandle<()>>,
    sim: SimConfig,
    deadline: Duration,
    next_id: u64,
    dead: bool,
    timeouts: u64,
}

impl std::fmt::Debug for BridgeAdvisor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeAdvisor")
            .field("pid", &self.child.id())
            .field("next_id", &self.next_id)
            .field("dead", &self.dead)
            .finish_non_exhaustive()
    }
}

impl BridgeAdvisor {
    pub fn spawn(command: &[String], sim: SimConfig, deadline: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| HarnessError::config("advisor.command", "bridge command must not be empty"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| HarnessError::config("advisor.command", format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().map(BufWriter::new);
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, responses) = mpsc::channel();
        let reader = std::thread::Builder::new()
            .name("bridge-reader".into())
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let Ok(line) = line else { break };
                    if line.trim().is_empty() {
                        continue;
                    }
                    let msg = match serde_json::from_str::<BridgeResponse>(&line) {
                        Ok(r) => Incoming::Response(r),
                        Err(_) => Incoming::Garbage(line),
                    };
                    if tx.send(msg).is_err() {
                        break;
                    }
                }
            })
            .map_err(|e| HarnessError::Invalid(format!("cannot start bridge reader thread: {e}")))?;
        Ok(Self {
            child,
            stdin,
            responses,
            reader: Some(reader),
            sim,
            deadline,
            next_id: 1,
            dead: false,
            timeouts: 0,
        })
    }

    /// Recommendations that missed the deadline so far.
    pub fn timeouts(&self) -> u64 {
        self.timeouts
    }

    fn send(&mut self, request: &BridgeRequest<'_>) -> bool {
        if self.dead {
            return false;
        }
        let Some(stdin) = self.stdin.as_mut() else { return false };
        let ok = serde_json::to_writer(&mut *stdin, request).is_ok() && stdin.write_all(b"\n").is_ok() && stdin.flush().is_ok();
        if !ok {
            log::warn!("advisor bridge: write failed, disabling the bridge");
            self.dead = true;
        }
        ok
    }

    fn take_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn await_response(&mut self, id: u64, started: Instant) -> Option<AdvisorRecommendation> {
        loop {
            let left = self.deadline.checked_sub(started.elapsed()).unwrap_or(Duration::ZERO);
            match self.responses.recv_timeout(left) {
                Ok(Incoming::Response(r)) if r.id < id => continue,
                Ok(Incoming::Response(r)) if r.id > id => {
                    log::warn!("advisor bridge: response id {} while waiting for {id}", r.id);
                    continue;
                }
                Ok(Incoming::Response(r)) => {
                    if let Some(err) = r.error {
                        log::warn!("advisor bridge: request {id} failed: {err}");
                        return None;
                    }
                    let Some(action) = r.action else {
                        log::warn!("advisor bridge: response {id} carries no action");
                        return None;
                    };
                    let mut rec = AdvisorRecommendation::new(
                        action,
                        r.confidence.unwrap_or(1.0),
                        r.rationale.unwrap_or_default(),
                    );
                    rec.latency_ms = started.elapsed().as_secs_f64() * 1e3;
                    return Some(rec);
                }
                Ok(Incoming::Garbage(line)) => {
                    log::warn!("advisor bridge: unparseable response line: {line}");
                    continue;
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.timeouts += 1;
                    log::warn!("advisor bridge: request {id} missed the {:?} deadline", self.deadline);
                    return None;
                }
                Err(RecvTimeoutError::Disconnected) => {
                    log::warn!("advisor bridge: process closed its output, disabling the bridge");
                    self.dead = true;
                    return None;
                }
            }
        }
    }

    fn shutdown(&mut self) {
        if !self.dead {
            let id = self.take_id();
            self.send(&BridgeRequest::Shutdown { id });
        }
        self.stdin = None;
        let give_up = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < give_up => std::thread::sleep(Duration::from_millis(5)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
        self.dead = true;
    }
}

impl Advisor for BridgeAdvisor {
    fn recommend(&mut self, state: &SceneState, obs: &Observation) -> Option<AdvisorRecommendation> {
        if self.dead {
            return None;
        }
        let started = Instant::now();
        let id = self.take_id();
        let text = scene_to_text(state, &self.sim);
        if !self.send(&BridgeRequest::Recommend { id, scene_text: &text, obs }) {
            return None;
        }
        self.await_response(id, started)
    }

    /// Feedback is fire-and-forget; acknowledgements are skipped by id on the next recommend.
    fn end_episode(&mut self, samples: &[FeedbackSample], _summary: &EpisodeSummary) {
        for sample in samples {
            let id = self.take_id();
            if !self.send(&BridgeRequest::Feedback { id, sample }) {
                return;
            }
        }
    }
}

impl Drop for BridgeAdvisor {
    fn drop(&mut self) {
        if self.reader.is_some() {
            self.shutdown();
        }
    }
}
