//! Differentially private trace-variant query.
//!
//! Builds a prefix tree over activity sequences breadth-first. Every
//! candidate node — each explored prefix extended by every activity plus a
//! reserved end-of-variant marker — receives a Laplace-noised count. A
//! prefix is explored further only while its noisy count stays at or above
//! the pruning threshold `k` and its depth below `n`; a variant enters the
//! result when the noisy count of its end marker is at least 1. Because
//! candidates cover the whole alphabet, variants that never occurred in
//! the log can surface with small counts, and real ones can vanish.
//!
//! Noise for a node is derived from `(seed, node path)` rather than from a
//! shared sequential stream, so the same node sees the same noise whatever
//! the exploration order or pruning level. Raising `k` therefore never adds
//! a variant to the output, and results are reproducible under a seed.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::log::{ActivityLabel, EventLog, Variant};
use crate::rng::{derive_rng, fnv1a, laplace_noise, StreamDomain};

/// Parameters of the trace-variant query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryParams {
    /// Privacy parameter; each node count receives Laplace(1/epsilon) noise.
    pub epsilon: f64,
    /// Maximum prefix-tree depth, i.e. the longest returned sequence.
    pub max_depth: usize,
    /// Pruning threshold: prefixes with a noisy count below this are not
    /// explored further.
    pub prune: u64,
}

impl QueryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "query epsilon must be a positive real, got {}",
                self.epsilon
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max depth must be >= 1".into()));
        }
        if self.prune == 0 {
            return Err(Error::InvalidParameter(
                "prune threshold must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Multiset of activity sequences with privatized counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariantBag {
    pub entries: BTreeMap<Variant, u64>,
}

impl VariantBag {
    /// Total number of sequences after duplication by count.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The flattened query result: each sequence duplicated by its count, in
/// shuffled order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlattenedVariants {
    pub seqs: Vec<Variant>,
}

impl FlattenedVariants {
    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }
}

/// One candidate node the query assigned a noisy count to. `prefix` is the
/// activity prefix; `terminal` marks the end-of-variant candidate for that
/// prefix. Exposed for diagnostics and statistical checks of the noise law.
#[derive(Debug, Clone)]
pub struct ExploredNode {
    pub prefix: Variant,
    pub terminal: bool,
    pub true_count: u64,
    pub noisy_count: u64,
}

// encoded path element for the end marker; activity indices stay below it
const END_MARK: u32 = u32::MAX;

struct PrefixCounts {
    /// count of traces whose variant starts with the encoded prefix
    prefixes: HashMap<Vec<u32>, u64>,
    /// count of traces whose variant is exactly the encoded sequence
    exact: HashMap<Vec<u32>, u64>,
}

fn encode_variants(log: &EventLog, alphabet: &[ActivityLabel]) -> Vec<(Vec<u32>, u64)> {
    let index: HashMap<&ActivityLabel, u32> = alphabet
        .iter()
        .enumerate()
        .map(|(i, a)| (a, i as u32))
        .collect();
    log.variant_counts()
        .into_iter()
        .map(|(variant, count)| {
            let encoded = variant.iter().map(|a| index[a]).collect();
            (encoded, count)
        })
        .collect()
}

fn count_prefixes(encoded: &[(Vec<u32>, u64)], max_depth: usize) -> PrefixCounts {
    let mut prefixes: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut exact: HashMap<Vec<u32>, u64> = HashMap::new();
    for (variant, count) in encoded {
        for len in 1..=variant.len().min(max_depth) {
            *prefixes.entry(variant[..len].to_vec()).or_insert(0) += count;
        }
        if variant.len() <= max_depth {
            *exact.entry(variant.clone()).or_insert(0) += count;
        }
    }
    PrefixCounts { prefixes, exact }
}

fn node_noise(seed: u64, path: &[u32], epsilon: f64) -> f64 {
    let mut bytes = Vec::with_capacity(path.len() * 4);
    for part in path {
        bytes.extend_from_slice(&part.to_le_bytes());
    }
    let mut rng = derive_rng(seed, StreamDomain::QueryNode, fnv1a(&bytes));
    laplace_noise(&mut rng, 1.0 / epsilon)
}

fn noisy_count(true_count: u64, noise: f64) -> u64 {
    let noisy = (true_count as f64 + noise).round();
    if noisy < 0.0 {
        0
    } else {
        noisy as u64
    }
}

/// Run the query. Deterministic given `(log, params, seed)`. An output
/// where everything was pruned is a legal (empty) bag.
pub fn trace_variant_query(log: &EventLog, params: &QueryParams, seed: u64) -> Result<VariantBag> {
    Ok(trace_variant_query_with_audit(log, params, seed)?.0)
}

/// Like [`trace_variant_query`], additionally returning every candidate
/// node with its true and noisy count, in exploration order.
pub fn trace_variant_query_with_audit(
    log: &EventLog,
    params: &QueryParams,
    seed: u64,
) -> Result<(VariantBag, Vec<ExploredNode>)> {
    params.validate()?;
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }

    let alphabet: Vec<ActivityLabel> = log.activity_universe.iter().cloned().collect();
    let encoded = encode_variants(log, &alphabet);
    let counts = count_prefixes(&encoded, params.max_depth);
    let decode = |path: &[u32]| -> Variant {
        path.iter()
            .map(|&i| alphabet[i as usize].clone())
            .collect()
    };

    let mut bag = VariantBag::default();
    let mut audit = Vec::new();
    // queue of prefixes that passed the pruning threshold
    let mut queue: VecDeque<Vec<u32>> = VecDeque::from([Vec::new()]);

    while let Some(prefix) = queue.pop_front() {
        // activity extensions, in lexicographic alphabet order
        if prefix.len() < params.max_depth {
            for a in 0..alphabet.len() as u32 {
                let mut child = prefix.clone();
                child.push(a);
                let true_count = counts.prefixes.get(&child).copied().unwrap_or(0);
                let noisy = noisy_count(true_count, node_noise(seed, &child, params.epsilon));
                audit.push(ExploredNode {
                    prefix: decode(&child),
                    terminal: false,
                    true_count,
                    noisy_count: noisy,
                });
                if noisy >= params.prune {
                    queue.push_back(child);
                }
            }
        }
        // end-of-variant candidate; the empty variant is not a trace, so the
        // root has no terminal child
        if !prefix.is_empty() {
            let mut path = prefix.clone();
            path.push(END_MARK);
            let true_count = counts.exact.get(&prefix).copied().unwrap_or(0);
            let noisy = noisy_count(true_count, node_noise(seed, &path, params.epsilon));
            audit.push(ExploredNode {
                prefix: decode(&prefix),
                terminal: true,
                true_count,
                noisy_count: noisy,
            });
            if noisy >= 1 {
                bag.entries.insert(decode(&prefix), noisy);
            }
        }
    }
    Ok((bag, audit))
}

/// Duplicate each sequence by its count and shuffle uniformly.
pub fn flatten<R: Rng + ?Sized>(bag: &VariantBag, rng: &mut R) -> FlattenedVariants {
    let mut seqs: Vec<Variant> = Vec::with_capacity(bag.total() as usize);
    for (variant, count) in &bag.entries {
        for _ in 0..*count {
            seqs.push(variant.clone());
        }
    }
    seqs.shuffle(rng);
    FlattenedVariants { seqs }
}
