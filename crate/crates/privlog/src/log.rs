//! Event log data model: activities, events, traces, logs, and the
//! per-attribute schema that drives anonymization.
//!
//! Timestamps are integer milliseconds since the Unix epoch (UTC), which
//! keeps interval arithmetic and ordering checks exact.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of an activity from the log's finite activity universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityLabel(String);

impl ActivityLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Schema("activity label must be non-empty".into()));
        }
        Ok(ActivityLabel(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The activity projection of a trace.
pub type Variant = Vec<ActivityLabel>;

/// A typed attribute value carried by an event.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeValue {
    Numeric(f64),
    Categorical(String),
    Boolean(bool),
    /// Recorded as present but without a value; passed through untouched.
    Missing,
}

impl AttributeValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttributeValue::Numeric(_) => "numeric",
            AttributeValue::Categorical(_) => "categorical",
            AttributeValue::Boolean(_) => "boolean",
            AttributeValue::Missing => "missing",
        }
    }
}

/// One activity execution: label, timestamp (ms since epoch, UTC), payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub activity: ActivityLabel,
    pub ts: i64,
    pub payload: BTreeMap<String, AttributeValue>,
}

impl Event {
    pub fn new(activity: ActivityLabel, ts: i64) -> Self {
        Event {
            activity,
            ts,
            payload: BTreeMap::new(),
        }
    }
}

/// The event sequence of one case, ordered by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, events: Vec<Event>) -> Self {
        Trace {
            case_id: case_id.into(),
            events,
        }
    }

    pub fn first_ts(&self) -> i64 {
        self.events.first().map(|e| e.ts).unwrap_or(0)
    }

    pub fn last_ts(&self) -> i64 {
        self.events.last().map(|e| e.ts).unwrap_or(0)
    }

    /// Case duration in milliseconds (0 for single-event traces).
    pub fn duration(&self) -> i64 {
        self.last_ts() - self.first_ts()
    }
}

/// Projection of a trace onto its activity labels, order preserved.
pub fn variant_of(trace: &Trace) -> Variant {
    trace.events.iter().map(|e| e.activity.clone()).collect()
}

/// Per-attribute kind and domain, as declared or inferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeDomain {
    Numeric {
        min: f64,
        max: f64,
    },
    Categorical {
        categories: Vec<String>,
        /// `utility[i][j]` scores releasing category `j` when the true value
        /// is category `i`; off-diagonal entries are non-positive and higher
        /// means a preferred substitute. `None` selects the uniform default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        utility: Option<Vec<Vec<f64>>>,
    },
    Boolean,
}

/// Schema entry for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    #[serde(flatten)]
    pub domain: AttributeDomain,
    /// Privacy parameter for this attribute; `None` inherits the run default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Laplace sensitivity override for numeric attributes; defaults to
    /// the domain width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
}

impl AttributeSpec {
    pub fn numeric(min: f64, max: f64) -> Self {
        AttributeSpec {
            domain: AttributeDomain::Numeric { min, max },
            epsilon: None,
            sensitivity: None,
        }
    }

    pub fn categorical(categories: Vec<String>) -> Self {
        AttributeSpec {
            domain: AttributeDomain::Categorical {
                categories,
                utility: None,
            },
            epsilon: None,
            sensitivity: None,
        }
    }

    pub fn boolean() -> Self {
        AttributeSpec {
            domain: AttributeDomain::Boolean,
            epsilon: None,
            sensitivity: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    fn kind_name(&self) -> &'static str {
        match self.domain {
            AttributeDomain::Numeric { .. } => "numeric",
            AttributeDomain::Categorical { .. } => "categorical",
            AttributeDomain::Boolean => "boolean",
        }
    }

    /// Does `value` fall inside this spec's kind and domain?
    fn check_value(&self, attr: &str, value: &AttributeValue) -> Result<()> {
        match (&self.domain, value) {
            (_, AttributeValue::Missing) => Ok(()),
            (AttributeDomain::Numeric { min, max }, AttributeValue::Numeric(v)) => {
                if v.is_finite() && *v >= *min && *v <= *max {
                    Ok(())
                } else {
                    Err(Error::Schema(format!(
                        "numeric value {v} of attribute {attr:?} outside domain [{min}, {max}]"
                    )))
                }
            }
            (AttributeDomain::Categorical { categories, .. }, AttributeValue::Categorical(v)) => {
                if categories.iter().any(|c| c == v) {
                    Ok(())
                } else {
                    Err(Error::UnknownCategory {
                        attribute: attr.to_string(),
                        value: v.clone(),
                    })
                }
            }
            (AttributeDomain::Boolean, AttributeValue::Boolean(_)) => Ok(()),
            _ => Err(Error::Schema(format!(
                "attribute {attr:?} declared {} but carries a {} value",
                self.kind_name(),
                value.kind_name()
            ))),
        }
    }
}

/// Attribute schema for a whole log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: BTreeMap<String, AttributeSpec>,
}

impl AttributeSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let schema: AttributeSchema = serde_json::from_str(json)
            .map_err(|e| Error::Schema(format!("invalid schema file: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn get(&self, attr: &str) -> Option<&AttributeSpec> {
        self.attributes.get(attr)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, spec) in &self.attributes {
            if let Some(eps) = spec.epsilon {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(Error::Schema(format!(
                        "attribute {name:?}: epsilon must be a positive real, got {eps}"
                    )));
                }
            }
            match &spec.domain {
                AttributeDomain::Numeric { min, max } => {
                    if !min.is_finite() || !max.is_finite() || min > max {
                        return Err(Error::Schema(format!(
                            "attribute {name:?}: invalid numeric domain [{min}, {max}]"
                        )));
                    }
                    if let Some(s) = spec.sensitivity {
                        if !(s > 0.0) || !s.is_finite() {
                            return Err(Error::Schema(format!(
                                "attribute {name:?}: sensitivity must be positive, got {s}"
                            )));
                        }
                    }
                }
                AttributeDomain::Categorical {
                    categories,
                    utility,
                } => {
                    if categories.is_empty() {
                        return Err(Error::Schema(format!(
                            "attribute {name:?}: empty category set"
                        )));
                    }
                    let distinct: BTreeSet<&String> = categories.iter().collect();
                    if distinct.len() != categories.len() {
                        return Err(Error::Schema(format!(
                            "attribute {name:?}: duplicate categories"
                        )));
                    }
                    if let Some(u) = utility {
                        let n = categories.len();
                        if u.len() != n || u.iter().any(|row| row.len() != n) {
                            return Err(Error::Schema(format!(
                                "attribute {name:?}: utility matrix must be {n}x{n}"
                            )));
                        }
                        for (i, row) in u.iter().enumerate() {
                            for (j, &v) in row.iter().enumerate() {
                                if !v.is_finite() {
                                    return Err(Error::Schema(format!(
                                        "attribute {name:?}: non-finite utility at ({i},{j})"
                                    )));
                                }
                                if i != j && v > 0.0 {
                                    return Err(Error::Schema(format!(
                                        "attribute {name:?}: off-diagonal utility must be non-positive, got {v} at ({i},{j})"
                                    )));
                                }
                            }
                        }
                    }
                }
                AttributeDomain::Boolean => {}
            }
        }
        Ok(())
    }

    /// Infer a schema from observed payloads. The first value seen for an
    /// attribute fixes its kind; a later value of a different kind is an
    /// error rather than a coercion. Numeric domains are the observed
    /// min/max, categorical domains the sorted set of observed values.
    pub fn infer(traces: &[Trace]) -> Result<Self> {
        #[derive(Debug)]
        enum Seen {
            Numeric { min: f64, max: f64 },
            Categorical(BTreeSet<String>),
            Boolean,
        }
        let mut seen: BTreeMap<String, Seen> = BTreeMap::new();
        for trace in traces {
            for event in &trace.events {
                for (name, value) in &event.payload {
                    let entry = match value {
                        AttributeValue::Missing => continue,
                        AttributeValue::Numeric(v) => Seen::Numeric { min: *v, max: *v },
                        AttributeValue::Categorical(v) => {
                            Seen::Categorical(BTreeSet::from([v.clone()]))
                        }
                        AttributeValue::Boolean(_) => Seen::Boolean,
                    };
                    match seen.entry(name.clone()) {
                        Entry::Vacant(slot) => {
                            slot.insert(entry);
                        }
                        Entry::Occupied(mut slot) => match (slot.get_mut(), value) {
                            (Seen::Numeric { min, max }, AttributeValue::Numeric(v)) => {
                                *min = min.min(*v);
                                *max = max.max(*v);
                            }
                            (Seen::Categorical(cats), AttributeValue::Categorical(v)) => {
                                cats.insert(v.clone());
                            }
                            (Seen::Boolean, AttributeValue::Boolean(_)) => {}
                            (prior, _) => {
                                let prior = match prior {
                                    Seen::Numeric { .. } => "numeric",
                                    Seen::Categorical(_) => "categorical",
                                    Seen::Boolean => "boolean",
                                };
                                return Err(Error::Schema(format!(
                                    "attribute {name:?} has mixed types: seen {prior}, then {} in trace {:?}",
                                    value.kind_name(),
                                    trace.case_id
                                )));
                            }
                        },
                    }
                }
            }
        }
        let attributes = seen
            .into_iter()
            .map(|(name, s)| {
                let spec = match s {
                    Seen::Numeric { min, max } => AttributeSpec::numeric(min, max),
                    Seen::Categorical(cats) => {
                        AttributeSpec::categorical(cats.into_iter().collect())
                    }
                    Seen::Boolean => AttributeSpec::boolean(),
                };
                (name, spec)
            })
            .collect();
        Ok(AttributeSchema { attributes })
    }
}

/// A set of traces with a shared schema and activity universe.
///
/// Immutable after construction; all views are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub schema: AttributeSchema,
    pub activity_universe: BTreeSet<ActivityLabel>,
}

impl EventLog {
    /// Build a log, deriving the activity universe from the traces and
    /// checking all model invariants.
    pub fn new(traces: Vec<Trace>, schema: AttributeSchema) -> Result<Self> {
        let activity_universe = traces
            .iter()
            .flat_map(|t| t.events.iter().map(|e| e.activity.clone()))
            .collect();
        let log = EventLog {
            traces,
            schema,
            activity_universe,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let mut ids = BTreeSet::new();
        for trace in &self.traces {
            if !ids.insert(&trace.case_id) {
                return Err(Error::Schema(format!(
                    "duplicate case id {:?}",
                    trace.case_id
                )));
            }
            if trace.events.is_empty() {
                return Err(Error::Schema(format!(
                    "trace {:?} has no events",
                    trace.case_id
                )));
            }
            let mut prev = i64::MIN;
            for event in &trace.events {
                if event.ts < prev {
                    return Err(Error::Schema(format!(
                        "trace {:?}: timestamps decrease at activity {:?}",
                        trace.case_id, event.activity
                    )));
                }
                prev = event.ts;
                if !self.activity_universe.contains(&event.activity) {
                    return Err(Error::Schema(format!(
                        "activity {:?} not in the activity universe",
                        event.activity
                    )));
                }
                for (name, value) in &event.payload {
                    match self.schema.attributes.get(name) {
                        None => {
                            return Err(Error::Schema(format!(
                                "attribute {name:?} in trace {:?} missing from schema",
                                trace.case_id
                            )))
                        }
                        Some(spec) => spec.check_value(name, value)?,
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_traces(&self) -> usize {
        self.traces.len()
    }

    pub fn num_events(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Trace variants with their multiplicities.
    pub fn variant_counts(&self) -> BTreeMap<Variant, u64> {
        let mut counts = BTreeMap::new();
        for trace in &self.traces {
            *counts.entry(variant_of(trace)).or_insert(0) += 1;
        }
        counts
    }

    pub fn num_variants(&self) -> usize {
        self.variant_counts().len()
    }
}
