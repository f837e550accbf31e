//! Bridge client against a scripted fake advisor process.

use std::time::{Duration, Instant};

use lanefusion::advisors::BridgeAdvisor;
use lanefusion_core::fusion::{Advisor, ConsistencyStats, EpisodeSummary, FeedbackSample};
use lanefusion_core::sim::{observe, reset, SimConfig};
use lanefusion_core::Action;

// Reads requests line by line. Behaviour per recommend id is driven by the script's argument:
//   ok      answer every request with TURN_LEFT
//   error   answer id 1 with an error, then behave like ok
//   slow    answer id 1 after 600 ms, then behave like ok
//   garbage write a junk line before every answer
//   die     exit right after reading the first request
// Every request kind is appended to the log file given as the second argument.
const FAKE: &str = r#"
import json, sys, time
mode, log = sys.argv[1], sys.argv[2]
for line in sys.stdin:
    req = json.loads(line)
    with open(log, "a") as f:
        f.write(req["kind"] + "\n")
    if req["kind"] == "shutdown":
        break
    if mode == "die":
        sys.exit(0)
    rid = req["id"]
    if req["kind"] == "feedback":
        out = {"id": rid, "ok": True}
    elif mode == "error" and rid == 1:
        out = {"id": rid, "error": "model unavailable"}
    else:
        if mode == "slow" and rid == 1:
            time.sleep(0.6)
        out = {"id": rid, "action": "TURN_LEFT", "confidence": 0.75, "rationale": "left lane is open"}
    if mode == "garbage":
        sys.stdout.write("not json\n")
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
"#;

struct Fake {
    bridge: BridgeAdvisor,
    log: tempfile::NamedTempFile,
}

fn spawn(mode: &str, deadline_ms: u64) -> Fake {
    let log = tempfile::NamedTempFile::new().unwrap();
    let cmd: Vec<String> =
        ["python3", "-c", FAKE, mode, log.path().to_str().unwrap()].iter().map(|s| s.to_string()).collect();
    let bridge = BridgeAdvisor::spawn(&cmd, SimConfig::default(), Duration::from_millis(deadline_ms)).unwrap();
    Fake { bridge, log }
}

fn ask(b: &mut BridgeAdvisor) -> Option<Action> {
    let sim = SimConfig::default();
    let state = reset(&sim, 4).unwrap();
    b.recommend(&state, &observe(&state, &sim)).map(|r| r.action)
}

fn kinds(log: &tempfile::NamedTempFile) -> Vec<String> {
    std::fs::read_to_string(log.path()).unwrap().lines().map(String::from).collect()
}

#[test]
fn answers_carry_action_confidence_and_rationale() {
    let mut f = spawn("ok", 5000);
    let sim = SimConfig::default();
    let state = reset(&sim, 4).unwrap();
    let rec = f.bridge.recommend(&state, &observe(&state, &sim)).unwrap();
    assert_eq!(rec.action, Action::TurnLeft);
    assert_eq!(rec.confidence, 0.75);
    assert_eq!(rec.rationale, "left lane is open");
    assert!(rec.latency_ms >= 0.0);
    assert_eq!(ask(&mut f.bridge), Some(Action::TurnLeft));
    assert_eq!(f.bridge.timeouts(), 0);
}

#[test]
fn drop_sends_shutdown_and_reaps_the_process() {
    let f = spawn("ok", 5000);
    let Fake { mut bridge, log } = f;
    assert!(ask(&mut bridge).is_some());
    let started = Instant::now();
    drop(bridge);
    assert!(started.elapsed() < Duration::from_secs(2));
    assert_eq!(kinds(&log), ["recommend", "shutdown"]);
}

#[test]
fn error_response_is_no_advice_and_the_bridge_keeps_serving() {
    let mut f = spawn("error", 5000);
    assert_eq!(ask(&mut f.bridge), None);
    assert_eq!(ask(&mut f.bridge), Some(Action::TurnLeft));
}

#[test]
fn late_answer_is_a_timeout_and_is_skipped_afterwards() {
    let mut f = spawn("slow", 200);
    assert_eq!(ask(&mut f.bridge), None);
    assert_eq!(f.bridge.timeouts(), 1);
    // The stale answer to request 1 arrives first and must not be mistaken for request 2's.
    std::thread::sleep(Duration::from_millis(500));
    let sim = SimConfig::default();
    let state = reset(&sim, 4).unwrap();
    let rec = f.bridge.recommend(&state, &observe(&state, &sim)).unwrap();
    assert_eq!(rec.action, Action::TurnLeft);
    assert!(rec.latency_ms < 200.0, "answered with a stale response? {} ms", rec.latency_ms);
    assert_eq!(f.bridge.timeouts(), 1);
}

#[test]
fn junk_lines_are_ignored() {
    let mut f = spawn("garbage", 5000);
    assert_eq!(ask(&mut f.bridge), Some(Action::TurnLeft));
    assert_eq!(ask(&mut f.bridge), Some(Action::TurnLeft));
}

#[test]
fn dead_process_disables_the_bridge_without_hanging() {
    let mut f = spawn("die", 5000);
    let started = Instant::now();
    assert_eq!(ask(&mut f.bridge), None);
    assert_eq!(ask(&mut f.bridge), None);
    assert!(started.elapsed() < Duration::from_secs(4), "waited for the deadline on a dead process");
}

#[test]
fn feedback_is_sent_and_acknowledgements_are_skipped() {
    let mut f = spawn("ok", 5000);
    let sim = SimConfig::default();
    let state = reset(&sim, 4).unwrap();
    let obs = observe(&state, &sim);
    let sample = FeedbackSample {
        episode: 0,
        step: 3,
        obs,
        scene_text: "scene".into(),
        executed: Action::Decelerate,
        recommended: Action::TurnLeft,
        return_env: None,
    };
    let summary = EpisodeSummary { episode: 0, return_env: 12.0, consistency: ConsistencyStats::default() };
    f.bridge.end_episode(&[sample.clone(), sample], &summary);
    assert_eq!(ask(&mut f.bridge), Some(Action::TurnLeft));
    let Fake { bridge, log } = f;
    drop(bridge);
    assert_eq!(kinds(&log), ["feedback", "feedback", "recommend", "shutdown"]);
}

#[test]
fn unknown_program_is_a_config_error() {
    let cmd = vec!["/nonexistent/advisor-binary".to_string()];
    let err = BridgeAdvisor::spawn(&cmd, SimConfig::default(), Duration::from_millis(100)).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
