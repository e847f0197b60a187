//! Empirical resampling pools extracted from the original log: inter-event
//! durations per activity pair, first-event timestamps, and per-attribute
//! value pools. Sequence enrichment draws from these instead of assuming a
//! parametric distribution.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::log::{ActivityLabel, AttributeValue, EventLog};

/// Resampling pools observed in a log.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalDistributions {
    /// Durations (ms) between consecutive events executing `(a, b)`.
    /// Keys exist only for pairs observed at least once.
    pub pair_deltas: BTreeMap<(ActivityLabel, ActivityLabel), Vec<i64>>,
    /// All consecutive-event durations, the union of `pair_deltas`.
    pub global_deltas: Vec<i64>,
    /// Timestamp of each trace's first event.
    pub first_event_ts: Vec<i64>,
    /// Every non-missing value observed per attribute.
    pub attr_pools: BTreeMap<String, Vec<AttributeValue>>,
}

/// Scan a log and collect all resampling pools.
pub fn collect_distributions(log: &EventLog) -> Result<EmpiricalDistributions> {
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut dists = EmpiricalDistributions::default();
    for trace in &log.traces {
        dists.first_event_ts.push(trace.first_ts());
        for pair in trace.events.windows(2) {
            let delta = pair[1].ts - pair[0].ts;
            debug_assert!(delta >= 0, "trace timestamps are non-decreasing");
            dists
                .pair_deltas
                .entry((pair[0].activity.clone(), pair[1].activity.clone()))
                .or_default()
                .push(delta);
            dists.global_deltas.push(delta);
        }
        for event in &trace.events {
            for (name, value) in &event.payload {
                if *value != AttributeValue::Missing {
                    dists
                        .attr_pools
                        .entry(name.clone())
                        .or_default()
                        .push(value.clone());
                }
            }
        }
    }
    Ok(dists)
}
