use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FeedbackSample;
use crate::action::Action;
use crate::sim::{Observation, SimConfig};

pub const DEFAULT_ADAPT_THRESHOLD: u32 = 3;

/// Coarse state discretization used by the advisor's override table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateBucket {
    pub lane: u8,
    /// 0, 1, 2 for the lower, middle and upper third of the target speed range.
    pub speed_tercile: u8,
    /// 0: leader under 20 m, 1: 20-50 m, 2: farther or none.
    pub gap_bucket: u8,
}

impl StateBucket {
    pub fn of(obs: &Observation, config: &SimConfig) -> Self {
        let speed = obs.ego_speed(config);
        let t = (speed - config.v_min_target) / (config.v_max_target - config.v_min_target);
        let speed_tercile = if t < 1.0 / 3.0 {
            0
        } else if t < 2.0 / 3.0 {
            1
        } else {
            2
        };
        let gap_bucket = match obs.leader_gap(config) {
            Some(g) if g < 20.0 => 0,
            Some(g) if g <= 50.0 => 1,
            _ => 2,
        };
        Self { lane: obs.ego_lane() as u8, speed_tercile, gap_bucket }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BucketCounters {
    pub counts: [u32; Action::COUNT],
    pub return_sums: [f64; Action::COUNT],
}

impl BucketCounters {
    pub fn mean_return(&self, action: Action) -> Option<f64> {
        let n = self.counts[action.index()];
        (n > 0).then(|| self.return_sums[action.index()] / n as f64)
    }
}

/// Bucket-level overrides learned from disagreement feedback, plus the counters they derive from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverrideTable {
    overrides: BTreeMap<StateBucket, Action>,
    counters: BTreeMap<StateBucket, BucketCounters>,
}

impl OverrideTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, bucket: &StateBucket) -> Option<Action> {
        self.overrides.get(bucket).copied()
    }

    /// Installs an override directly, bypassing the feedback rule.
    pub fn set(&mut self, bucket: StateBucket, action: Action) {
        self.overrides.insert(bucket, action);
    }

    pub fn len(&self) -> usize {
        self.overrides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn overrides(&self) -> impl Iterator<Item = (&StateBucket, &Action)> {
        self.overrides.iter()
    }

    pub fn counters(&self, bucket: &StateBucket) -> Option<&BucketCounters> {
        self.counters.get(bucket)
    }

    pub fn record(&mut self, bucket: StateBucket, executed: Action, episode_return: f64) {
        let c = self.counters.entry(bucket).or_default();
        c.counts[executed.index()] += 1;
        c.return_sums[executed.index()] += episode_return;
    }

    /// Recomputes the overrides: a bucket gets the executed action that at least `threshold`
    /// mismatches agree on, provided their mean episode return beats `agreeing_mean`.
    pub fn rebuild(&mut self, agreeing_mean: Option<f64>, threshold: u32) {
        self.overrides.clear();
        let Some(baseline) = agreeing_mean else {
            return;
        };
        for (bucket, c) in &self.counters {
            let best = Action::ALL
                .iter()
                .copied()
                .filter(|a| c.counts[a.index()] >= threshold.max(1))
                .filter_map(|a| c.mean_return(a).filter(|m| *m > baseline).map(|m| (a, m)))
                .max_by(|(a, ma), (b, mb)| {
                    c.counts[a.index()]
                        .cmp(&c.counts[b.index()])
                        .then(ma.total_cmp(mb))
                        .then(b.index().cmp(&a.index()))
                });
            if let Some((action, _)) = best {
                self.overrides.insert(*bucket, action);
            }
        }
    }
}

/// Builds an override table from a feedback log. Samples without a back-filled episode return
/// are ignored; with no agreeing baseline no override is installed.
pub fn adapt_advisor(
    samples: &[FeedbackSample],
    agreeing_mean: Option<f64>,
    config: &SimConfig,
    threshold: u32,
) -> OverrideTable {
    let mut table = OverrideTable::new();
    for s in samples {
        if let Some(r) = s.return_env {
            table.record(StateBucket::of(&s.obs, config), s.executed, r);
        }
    }
    table.rebuild(agreeing_mean, threshold);
    table
}
