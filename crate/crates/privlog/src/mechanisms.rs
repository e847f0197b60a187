//! Local differential privacy mechanisms: bounded Laplace for numeric
//! values, randomized response for booleans, the exponential mechanism for
//! categoricals, and the two-stage timestamp shift. Applied per event under
//! parallel composition, each attribute with its own privacy parameter.

use rand::Rng;

use crate::error::{Error, Result};
use crate::log::{
    AttributeDomain, AttributeValue, Event, EventLog, Trace,
};
use crate::rng::{derive_rng, laplace_noise, StreamDomain};

/// Scales (in ms) of the two Laplace draws used on timestamps: one shift
/// for the whole trace, one per inter-event interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub shift_scale: f64,
    pub interval_scale: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shift_scale", self.shift_scale),
            ("interval_scale", self.interval_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive real, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be a positive real, got {epsilon}"
        )));
    }
    Ok(())
}

/// Bounded Laplace mechanism: adds Laplace(sensitivity/epsilon) noise,
/// re-sampling until the result lies within `bounds`, so the output never
/// leaves the declared domain.
pub fn laplace_mechanism<R: Rng + ?Sized>(
    x: f64,
    epsilon: f64,
    sensitivity: f64,
    bounds: (f64, f64),
    rng: &mut R,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (min, max) = bounds;
    if !(sensitivity > 0.0) || !sensitivity.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be a positive real, got {sensitivity}"
        )));
    }
    if !(min < max) {
        return Err(Error::InvalidParameter(format!(
            "invalid bounds [{min}, {max}]"
        )));
    }
    if x < min || x > max {
        return Err(Error::InvalidParameter(format!(
            "value {x} outside bounds [{min}, {max}]"
        )));
    }
    let scale = sensitivity / epsilon;
    loop {
        let candidate = x + laplace_noise(rng, scale);
        if candidate >= min && candidate <= max {
            return Ok(candidate);
        }
    }
}

/// Probability that randomized response reports the true value:
/// e^ε / (1 + e^ε), evaluated as 1 / (1 + e^-ε) so large ε saturates at 1
/// instead of overflowing.
pub fn keep_probability(epsilon: f64) -> f64 {
    1.0 / (1.0 + (-epsilon).exp())
}

/// Randomized response for booleans: keeps the input with probability
/// e^ε / (1 + e^ε), else flips it, which makes the report likelihoods
/// differ by exactly a factor e^ε.
pub fn binary_mechanism<R: Rng + ?Sized>(b: bool, epsilon: f64, rng: &mut R) -> Result<bool> {
    check_epsilon(epsilon)?;
    let keep = rng.random::<f64>() < keep_probability(epsilon);
    Ok(if keep { b } else { !b })
}

/// Exponential mechanism for categoricals. Releases category `y` with
/// probability proportional to exp(ε·u(x,y) / (2Δu)), where `utility[i][j]`
/// scores releasing `j` for true value `i` and Δu is the largest utility
/// range over any candidate. Without a utility matrix, u(x,x)=0 and
/// u(x,y)=-1 for y≠x.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    x: &str,
    categories: &[String],
    utility: Option<&Vec<Vec<f64>>>,
    epsilon: f64,
    rng: &mut R,
) -> Result<String> {
    check_epsilon(epsilon)?;
    let x_idx = categories
        .iter()
        .position(|c| c == x)
        .ok_or_else(|| Error::UnknownCategory {
            attribute: String::new(),
            value: x.to_string(),
        })?;
    let n = categories.len();
    if n == 1 {
        return Ok(categories[0].clone());
    }

    let score = |i: usize, j: usize| -> f64 {
        match utility {
            Some(u) => u[i][j],
            None => {
                if i == j {
                    0.0
                } else {
                    -1.0
                }
            }
        }
    };
    // sensitivity of the utility: the widest spread any candidate shows
    // across possible true values
    let mut delta_u = 0.0f64;
    for j in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(score(i, j));
            hi = hi.max(score(i, j));
        }
        delta_u = delta_u.max(hi - lo);
    }

    let exponents: Vec<f64> = (0..n)
        .map(|j| {
            if delta_u == 0.0 {
                0.0
            } else {
                epsilon * score(x_idx, j) / (2.0 * delta_u)
            }
        })
        .collect();
    let peak = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - peak).exp()).collect();
    let total: f64 = weights.iter().sum();

    let mut draw = rng.random::<f64>() * total;
    for (j, w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return Ok(categories[j].clone());
        }
    }
    Ok(categories[n - 1].clone()) // numeric underflow fallback
}

/// Two-stage timestamp anonymization. One Laplace draw (shift_scale)
/// moves the whole trace; each inter-event interval Δ then stretches by
/// its own draw (interval_scale) clamped to [-Δ, +Δ], which keeps event
/// order and caps every interval at twice the original. Draw order: the
/// trace shift first, then one draw per interval.
pub fn anonymize_timestamps<R: Rng + ?Sized>(
    trace: &Trace,
    params: &NoiseParams,
    rng: &mut R,
) -> Trace {
    let shift = laplace_noise(rng, params.shift_scale).round() as i64;
    let mut events = trace.events.clone();
    if let Some(first) = trace.events.first() {
        events[0].ts = first.ts + shift;
    }
    for i in 1..trace.events.len() {
        let interval = trace.events[i].ts - trace.events[i - 1].ts;
        let stretch = (laplace_noise(rng, params.interval_scale).round() as i64)
            .clamp(-interval, interval);
        events[i].ts = events[i - 1].ts + interval + stretch;
    }
    Trace::new(trace.case_id.clone(), events)
}

fn anonymize_payload<R: Rng + ?Sized>(
    event: &mut Event,
    log: &EventLog,
    default_epsilon: f64,
    rng: &mut R,
) -> Result<()> {
    for (name, value) in event.payload.iter_mut() {
        let spec = log.schema.attributes.get(name).ok_or_else(|| {
            Error::Schema(format!("attribute {name:?} missing from schema"))
        })?;
        let epsilon = spec.epsilon.unwrap_or(default_epsilon);
        match (&spec.domain, &mut *value) {
            (_, AttributeValue::Missing) => {}
            (AttributeDomain::Numeric { min, max }, AttributeValue::Numeric(v)) => {
                if *max > *min {
                    let sensitivity = spec.sensitivity.unwrap_or(*max - *min);
                    *v = laplace_mechanism(*v, epsilon, sensitivity, (*min, *max), rng)?;
                }
                // a degenerate single-point domain carries no information
                // to perturb; the value passes through
            }
            (
                AttributeDomain::Categorical {
                    categories,
                    utility,
                },
                AttributeValue::Categorical(v),
            ) => {
                *v = exponential_mechanism(v, categories, utility.as_ref(), epsilon, rng)
                    .map_err(|e| match e {
                        Error::UnknownCategory { value, .. } => Error::UnknownCategory {
                            attribute: name.clone(),
                            value,
                        },
                        other => other,
                    })?;
            }
            (AttributeDomain::Boolean, AttributeValue::Boolean(v)) => {
                *v = binary_mechanism(*v, epsilon, rng)?;
            }
            (_, v) => {
                return Err(Error::Schema(format!(
                    "attribute {name:?} carries a {} value not matching its schema kind",
                    v.kind_name()
                )))
            }
        }
    }
    Ok(())
}

/// Anonymize every trace of the matched log: timestamps through
/// [`anonymize_timestamps`], every non-missing payload value through the
/// mechanism for its schema kind. Structure (trace count, lengths,
/// activities) is untouched. Per-trace randomness derives from
/// `(seed, trace index)`; within a trace, timestamps are drawn first,
/// then payloads in event order and attribute-name order.
pub fn anonymize_log(
    log: &EventLog,
    params: &NoiseParams,
    default_epsilon: f64,
    seed: u64,
) -> Result<EventLog> {
    params.validate()?;
    check_epsilon(default_epsilon)?;
    let mut traces = Vec::with_capacity(log.traces.len());
    for (idx, trace) in log.traces.iter().enumerate() {
        let mut rng = derive_rng(seed, StreamDomain::Anonymize, idx as u64);
        let mut new_trace = anonymize_timestamps(trace, params, &mut rng);
        for event in &mut new_trace.events {
            anonymize_payload(event, log, default_epsilon, &mut rng)?;
        }
        traces.push(new_trace);
    }
    EventLog::new(traces, log.schema.clone())
}
