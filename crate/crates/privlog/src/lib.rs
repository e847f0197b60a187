//! Privacy-preserving event log publishing.
//!
//! Anonymizes business-process event logs under ε-differential privacy
//! while keeping their contextual information (timestamps and event
//! attributes) usable. Three steps, applied per case:
//!
//! 1. a differentially private trace-variant query releases the
//!    control-flow as a noisy multiset of activity sequences
//!    ([`variant_query`]),
//! 2. sequence enrichment rebuilds full traces by matching each released
//!    sequence to an edit-distance-close original trace and borrowing its
//!    timestamps and attribute values ([`enrichment`]),
//! 3. local differential privacy perturbs the borrowed context value by
//!    value under parallel composition ([`mechanisms`]).
//!
//! [`pipeline::run_pipeline`] glues the steps together; [`xes`] reads and
//! writes IEEE 1849-2016 XES files; [`metrics`] quantifies how much
//! utility survives.

pub mod assignment;
pub mod distributions;
pub mod enrichment;
pub mod error;
pub mod log;
pub mod mechanisms;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod variant_query;
pub mod xes;

pub use error::{Error, Result};
pub use log::{
    variant_of, ActivityLabel, AttributeDomain, AttributeSchema, AttributeSpec, AttributeValue,
    Event, EventLog, Trace, Variant,
};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
