//! Utility measures for comparing a log with its anonymized counterpart:
//! boolean attribute fractions at the event level, case-duration statistics
//! at the trace level, and the relative number of active cases over time at
//! the log level.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::log::{AttributeDomain, AttributeValue, EventLog};

const MS_PER_DAY: f64 = 86_400_000.0;

/// Fraction of cases whose first recorded value of the boolean attribute
/// `attr` is true. Each case counts once; cases without the attribute are
/// skipped.
pub fn boolean_fraction(log: &EventLog, attr: &str) -> Result<f64> {
    match log.schema.attributes.get(attr) {
        Some(spec) if spec.domain == AttributeDomain::Boolean => {}
        Some(_) => {
            return Err(Error::InvalidParameter(format!(
                "attribute {attr:?} is not boolean"
            )))
        }
        None => return Err(Error::NoValues(attr.to_string())),
    }
    let mut trues = 0u64;
    let mut total = 0u64;
    for trace in &log.traces {
        let first = trace
            .events
            .iter()
            .find_map(|e| match e.payload.get(attr) {
                Some(AttributeValue::Boolean(b)) => Some(*b),
                _ => None,
            });
        if let Some(b) = first {
            trues += u64::from(b);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoValues(attr.to_string()));
    }
    Ok(trues as f64 / total as f64)
}

/// Case-duration aggregates, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurationStats {
    pub min_ms: i64,
    pub max_ms: i64,
    pub mean_ms: f64,
    pub median_ms: f64,
}

impl DurationStats {
    pub fn mean_days(&self) -> f64 {
        self.mean_ms / MS_PER_DAY
    }

    pub fn median_days(&self) -> f64 {
        self.median_ms / MS_PER_DAY
    }
}

/// Min/max/mean/median case duration; single-event traces contribute 0.
pub fn case_duration_stats(log: &EventLog) -> Result<DurationStats> {
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut durations: Vec<i64> = log.traces.iter().map(|t| t.duration()).collect();
    durations.sort_unstable();
    let n = durations.len();
    let median = if n % 2 == 1 {
        durations[n / 2] as f64
    } else {
        (durations[n / 2 - 1] as f64 + durations[n / 2] as f64) / 2.0
    };
    Ok(DurationStats {
        min_ms: durations[0],
        max_ms: durations[n - 1],
        mean_ms: durations.iter().map(|&d| d as f64).sum::<f64>() / n as f64,
        median_ms: median,
    })
}

/// Relative number of active cases per time bucket. A case is active in
/// every bucket intersecting its `[first_ts, last_ts]` span; counts are
/// divided by the log's trace count so differently sized logs compare.
/// Buckets are aligned to multiples of `bucket_ms` since the epoch and the
/// series covers the log's full span.
pub fn active_cases_series(log: &EventLog, bucket_ms: i64) -> Result<Vec<(i64, f64)>> {
    if bucket_ms <= 0 {
        return Err(Error::InvalidParameter(format!(
            "bucket must be positive, got {bucket_ms}"
        )));
    }
    if log.traces.is_empty() {
        return Ok(Vec::new());
    }
    let bucket_of = |ts: i64| ts.div_euclid(bucket_ms);
    let first = log.traces.iter().map(|t| bucket_of(t.first_ts())).min().unwrap();
    let last = log.traces.iter().map(|t| bucket_of(t.last_ts())).max().unwrap();
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for trace in &log.traces {
        let from = bucket_of(trace.first_ts());
        let to = bucket_of(trace.last_ts());
        for b in from..=to {
            counts[(b - first) as usize] += 1;
        }
    }
    let total = log.num_traces() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((first + i as i64) * bucket_ms, c as f64 / total))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct FractionPair {
    pub original: f64,
    pub anonymized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DurationComparison {
    pub original: DurationStats,
    pub anonymized: DurationStats,
    pub original_mean_days: f64,
    pub anonymized_mean_days: f64,
    pub original_median_days: f64,
    pub anonymized_median_days: f64,
}

/// Side-by-side utility measures for an original/anonymized log pair.
#[derive(Debug, Clone, Serialize)]
pub struct UtilityReport {
    pub boolean_fractions: BTreeMap<String, FractionPair>,
    pub case_duration: Option<DurationComparison>,
    pub bucket_ms: i64,
    pub original_series: Vec<(i64, f64)>,
    pub anonymized_series: Vec<(i64, f64)>,
    /// Pearson correlation of the two workload series over the union of
    /// their buckets; positive when the anonymized log tracks the
    /// original's trend.
    pub workload_correlation: Option<f64>,
}

impl UtilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Both workload series as CSV over the union of their buckets.
    pub fn series_csv(&self) -> String {
        let orig: BTreeMap<i64, f64> = self.original_series.iter().copied().collect();
        let anon: BTreeMap<i64, f64> = self.anonymized_series.iter().copied().collect();
        let mut out = String::from("bucket_start_ms,original,anonymized\n");
        let buckets: std::collections::BTreeSet<i64> =
            orig.keys().chain(anon.keys()).copied().collect();
        for b in buckets {
            let o = orig.get(&b).copied().unwrap_or(0.0);
            let a = anon.get(&b).copied().unwrap_or(0.0);
            out.push_str(&format!("{b},{o},{a}\n"));
        }
        out
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Compute all utility measures on both logs. `attrs` selects the boolean
/// attributes to compare; an empty slice selects every boolean attribute
/// present in the original schema. Attributes without values in one of
/// the logs are skipped.
pub fn compare(
    original: &EventLog,
    anonymized: &EventLog,
    attrs: &[String],
    bucket_ms: i64,
) -> Result<UtilityReport> {
    let selected: Vec<String> = if attrs.is_empty() {
        original
            .schema
            .attributes
            .iter()
            .filter(|(_, spec)| spec.domain == AttributeDomain::Boolean)
            .map(|(name, _)| name.clone())
            .collect()
    } else {
        attrs.to_vec()
    };

    let mut boolean_fractions = BTreeMap::new();
    for attr in &selected {
        let orig = boolean_fraction(original, attr);
        let anon = boolean_fraction(anonymized, attr);
        if let (Ok(original), Ok(anonymized)) = (orig, anon) {
            boolean_fractions.insert(
                attr.clone(),
                FractionPair {
                    original,
                    anonymized,
                },
            );
        }
    }

    let case_duration = match (
        case_duration_stats(original),
        case_duration_stats(anonymized),
    ) {
        (Ok(orig), Ok(anon)) => Some(DurationComparison {
            original_mean_days: orig.mean_days(),
            anonymized_mean_days: anon.mean_days(),
            original_median_days: orig.median_days(),
            anonymized_median_days: anon.median_days(),
            original: orig,
            anonymized: anon,
        }),
        _ => None,
    };

    let original_series = active_cases_series(original, bucket_ms)?;
    let anonymized_series = active_cases_series(anonymized, bucket_ms)?;

    let workload_correlation = {
        let orig: BTreeMap<i64, f64> = original_series.iter().copied().collect();
        let anon: BTreeMap<i64, f64> = anonymized_series.iter().copied().collect();
        let buckets: std::collections::BTreeSet<i64> =
            orig.keys().chain(anon.keys()).copied().collect();
        let xs: Vec<f64> = buckets
            .iter()
            .map(|b| orig.get(b).copied().unwrap_or(0.0))
            .collect();
        let ys: Vec<f64> = buckets
            .iter()
            .map(|b| anon.get(b).copied().unwrap_or(0.0))
            .collect();
        pearson(&xs, &ys)
    };

    Ok(UtilityReport {
        boolean_fractions,
        case_duration,
        bucket_ms,
        original_series,
        anonymized_series,
        workload_correlation,
    })
}
