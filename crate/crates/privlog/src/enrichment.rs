//! Sequence enrichment: turn the flattened activity sequences back into
//! full traces by borrowing context from the original log.
//!
//! Each sequence is matched to at most one original trace so that the total
//! Levenshtein distance over all pairs is minimal. A matched sequence is
//! enriched position by position: where the matched trace has a
//! corresponding occurrence of the activity, its payload is copied and its
//! timestamp reused when that keeps time moving forward; everywhere else,
//! payloads come from the log-wide attribute pools and timestamps from
//! resampled inter-event durations. Sequences left without a partner are
//! enriched entirely from the pools.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

use crate::assignment::{min_cost_assignment, CostMatrix};
use crate::distributions::EmpiricalDistributions;
use crate::error::{Error, Result};
use crate::log::{variant_of, ActivityLabel, Event, EventLog, Trace, Variant};
use crate::rng::{derive_rng, StreamDomain};
use crate::variant_query::FlattenedVariants;

/// Levenshtein distance between two activity sequences with unit
/// insert/delete/substitute costs.
pub fn edit_distance(a: &[ActivityLabel], b: &[ActivityLabel]) -> u32 {
    if a == b {
        return 0;
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<u32> = (0..=short.len() as u32).collect();
    for (i, long_sym) in long.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i as u32 + 1;
        for (j, short_sym) in short.iter().enumerate() {
            let substitute = diagonal + u32::from(long_sym != short_sym);
            diagonal = row[j + 1];
            row[j + 1] = substitute.min(row[j] + 1).min(row[j + 1] + 1);
        }
    }
    row[short.len()]
}

/// Build the sequence-by-trace cost matrix. Duplicate sequences and
/// duplicate trace variants share one distance computation.
pub fn build_cost_matrix(seqs: &FlattenedVariants, log: &EventLog) -> CostMatrix {
    let trace_variants: Vec<Variant> = log.traces.iter().map(variant_of).collect();

    fn classify<'a>(
        v: &'a Variant,
        distinct: &mut Vec<&'a Variant>,
        class_of: &mut HashMap<&'a Variant, usize>,
    ) -> usize {
        *class_of.entry(v).or_insert_with(|| {
            distinct.push(v);
            distinct.len() - 1
        })
    }
    let mut distinct: Vec<&Variant> = Vec::new();
    let mut class_of: HashMap<&Variant, usize> = HashMap::new();
    let row_class: Vec<usize> = seqs
        .seqs
        .iter()
        .map(|s| classify(s, &mut distinct, &mut class_of))
        .collect();
    let col_class: Vec<usize> = trace_variants
        .iter()
        .map(|v| classify(v, &mut distinct, &mut class_of))
        .collect();

    // distance table over distinct variant classes, filled on demand
    let mut table: HashMap<(usize, usize), u32> = HashMap::new();
    CostMatrix::from_fn(seqs.len(), log.traces.len(), |i, j| {
        let key = (row_class[i], col_class[j]);
        *table
            .entry(key)
            .or_insert_with(|| edit_distance(distinct[key.0], distinct[key.1]))
    })
}

/// A partial injective matching from sequence indices to trace indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// sequence index -> trace index in the original log
    pub pairs: BTreeMap<usize, usize>,
    /// sequence indices left without a partner
    pub unmatched: BTreeSet<usize>,
}

/// How sequences are paired with original traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingMode {
    /// Globally minimal total edit distance (assignment optimization).
    Optimal,
    /// Cheaper fallback: sequences in sorted order each grab the nearest
    /// still-unused trace.
    Greedy,
}

/// Match sequences to traces minimizing the total edit distance; exactly
/// `min(|Q|, |L|)` pairs are formed.
pub fn optimal_matching(seqs: &FlattenedVariants, log: &EventLog) -> Matching {
    let matrix = build_cost_matrix(seqs, log);
    let assignment = min_cost_assignment(&matrix);
    let mut pairs = BTreeMap::new();
    let mut unmatched = BTreeSet::new();
    for (i, slot) in assignment.into_iter().enumerate() {
        match slot {
            Some(j) => {
                pairs.insert(i, j);
            }
            None => {
                unmatched.insert(i);
            }
        }
    }
    Matching { pairs, unmatched }
}

/// Greedy matching: sequence indices ordered by sequence content take the
/// lowest-cost unused trace, ties to the lowest trace index.
pub fn greedy_matching(seqs: &FlattenedVariants, log: &EventLog) -> Matching {
    let matrix = build_cost_matrix(seqs, log);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    order.sort_by(|&a, &b| seqs.seqs[a].cmp(&seqs.seqs[b]).then(a.cmp(&b)));

    let mut used = vec![false; log.traces.len()];
    let mut pairs = BTreeMap::new();
    let mut unmatched = BTreeSet::new();
    for i in order {
        let best = (0..log.traces.len())
            .filter(|&j| !used[j])
            .min_by_key(|&j| (matrix.get(i, j), j));
        match best {
            Some(j) => {
                used[j] = true;
                pairs.insert(i, j);
            }
            None => {
                unmatched.insert(i);
            }
        }
    }
    Matching { pairs, unmatched }
}

/// Draw an inter-event duration for the activity pair `(a_prev, a_next)`,
/// falling back to the pooled distribution over all pairs.
pub fn sample_delta<R: Rng + ?Sized>(
    dists: &EmpiricalDistributions,
    a_prev: &ActivityLabel,
    a_next: &ActivityLabel,
    rng: &mut R,
) -> Result<i64> {
    let pool = dists
        .pair_deltas
        .get(&(a_prev.clone(), a_next.clone()))
        .map(|v| v.as_slice())
        .unwrap_or(&dists.global_deltas);
    if pool.is_empty() {
        return Err(Error::EmptyDistributions);
    }
    Ok(pool[rng.random_range(0..pool.len())])
}

fn draw_payload<R: Rng + ?Sized>(
    dists: &EmpiricalDistributions,
    rng: &mut R,
) -> BTreeMap<String, crate::log::AttributeValue> {
    let mut payload = BTreeMap::new();
    for (name, pool) in &dists.attr_pools {
        if !pool.is_empty() {
            payload.insert(name.clone(), pool[rng.random_range(0..pool.len())].clone());
        }
    }
    payload
}

fn draw_first_ts<R: Rng + ?Sized>(
    dists: &EmpiricalDistributions,
    rng: &mut R,
) -> Result<i64> {
    if dists.first_event_ts.is_empty() {
        return Err(Error::EmptyDistributions);
    }
    Ok(dists.first_event_ts[rng.random_range(0..dists.first_event_ts.len())])
}

/// Enrich a matched sequence from its partner trace.
///
/// For the i-th activity `a` of the sequence, the (kσ+1)-th occurrence of
/// `a` in the partner donates its payload, where kσ counts `a`-events
/// already emitted; its timestamp is reused only when strictly later than
/// the last emitted timestamp, otherwise (and whenever no occurrence is
/// left) the timestamp advances by a resampled duration. A first event
/// without a donor draws its start from the first-event pool.
pub fn enrich_matched<R: Rng + ?Sized>(
    sigma: &Variant,
    xi: &Trace,
    dists: &EmpiricalDistributions,
    rng: &mut R,
    case_id: String,
) -> Result<Trace> {
    // positions of each activity's occurrences in the partner trace
    let mut occurrences: HashMap<&ActivityLabel, Vec<usize>> = HashMap::new();
    for (idx, event) in xi.events.iter().enumerate() {
        occurrences.entry(&event.activity).or_default().push(idx);
    }

    let mut events: Vec<Event> = Vec::with_capacity(sigma.len());
    let mut emitted: HashMap<&ActivityLabel, usize> = HashMap::new();
    for activity in sigma {
        let k_sigma = emitted.get(activity).copied().unwrap_or(0);
        let donor = occurrences
            .get(activity)
            .and_then(|positions| positions.get(k_sigma))
            .map(|&idx| &xi.events[idx]);

        let event = match donor {
            Some(donor) => {
                let ts = match events.last() {
                    None => donor.ts,
                    Some(last) if donor.ts > last.ts => donor.ts,
                    Some(last) => {
                        last.ts + sample_delta(dists, &last.activity, activity, rng)?
                    }
                };
                Event {
                    activity: activity.clone(),
                    ts,
                    payload: donor.payload.clone(),
                }
            }
            None => {
                let ts = match events.last() {
                    None => draw_first_ts(dists, rng)?,
                    Some(last) => {
                        last.ts + sample_delta(dists, &last.activity, activity, rng)?
                    }
                };
                Event {
                    activity: activity.clone(),
                    ts,
                    payload: draw_payload(dists, rng),
                }
            }
        };
        events.push(event);
        *emitted.entry(activity).or_insert(0) += 1;
    }
    Ok(Trace::new(case_id, events))
}

/// Enrich a sequence that has no partner trace, drawing everything from
/// the pools: start time from the first-event pool, later timestamps from
/// resampled durations, payloads from the attribute pools.
pub fn enrich_unmatched<R: Rng + ?Sized>(
    sigma: &Variant,
    dists: &EmpiricalDistributions,
    rng: &mut R,
    case_id: String,
) -> Result<Trace> {
    let mut events: Vec<Event> = Vec::with_capacity(sigma.len());
    for activity in sigma {
        let ts = match events.last() {
            None => draw_first_ts(dists, rng)?,
            Some(last) => last.ts + sample_delta(dists, &last.activity, activity, rng)?,
        };
        events.push(Event {
            activity: activity.clone(),
            ts,
            payload: draw_payload(dists, rng),
        });
    }
    Ok(Trace::new(case_id, events))
}

/// Build the matched log: every flattened sequence becomes one trace with
/// a fresh sequential case id; the variant multiset of the result equals
/// the input exactly. Per-sequence randomness derives from
/// `(seed, sequence index)`.
pub fn enrich_log(
    seqs: &FlattenedVariants,
    log: &EventLog,
    dists: &EmpiricalDistributions,
    mode: MatchingMode,
    seed: u64,
) -> Result<EventLog> {
    let matching = match mode {
        MatchingMode::Optimal => optimal_matching(seqs, log),
        MatchingMode::Greedy => greedy_matching(seqs, log),
    };
    let mut traces = Vec::with_capacity(seqs.len());
    for (i, sigma) in seqs.seqs.iter().enumerate() {
        let case_id = format!("case_{:04}", i + 1);
        let mut rng = derive_rng(seed, StreamDomain::Enrich, i as u64);
        let trace = match matching.pairs.get(&i) {
            Some(&j) => enrich_matched(sigma, &log.traces[j], dists, &mut rng, case_id)?,
            None => enrich_unmatched(sigma, dists, &mut rng, case_id)?,
        };
        traces.push(trace);
    }
    EventLog::new(traces, log.schema.clone())
}
