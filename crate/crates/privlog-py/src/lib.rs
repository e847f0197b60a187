//! Python bindings: event logs, the anonymization pipeline, and utility
//! metrics, exposed in-process.
//!
//! Usage from Python:
//!
//!     import privlog_py
//!     log = privlog_py.EventLog.read_xes("sepsis.xes")
//!     anon, report = privlog_py.anonymize(log, epsilon=1.0, prune=2, seed=7)
//!     anon.write_xes("sepsis_anon.xes")
//!     print(privlog_py.utility_report(log, anon))

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use privlog::enrichment::MatchingMode;
use privlog::log::AttributeSchema;
use privlog::mechanisms::NoiseParams;
use privlog::metrics;
use privlog::pipeline::{run_pipeline, PipelineConfig};
use privlog::variant_query::QueryParams;
use privlog::xes;

fn to_py_err(e: privlog::Error) -> PyErr {
    match e {
        privlog::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// An immutable event log: a set of traces with a shared attribute schema.
#[pyclass(frozen)]
struct EventLog {
    inner: privlog::EventLog,
}

#[pymethods]
impl EventLog {
    /// Parse an XES file, inferring the attribute schema.
    #[staticmethod]
    fn read_xes(path: &str) -> PyResult<Self> {
        let inner = xes::read_xes_file(path).map_err(to_py_err)?;
        Ok(EventLog { inner })
    }

    /// Parse XES from bytes.
    #[staticmethod]
    fn from_xes_bytes(data: &[u8]) -> PyResult<Self> {
        let inner = xes::parse_xes(data).map_err(to_py_err)?;
        Ok(EventLog { inner })
    }

    /// Serialize as XES to a file.
    fn write_xes(&self, path: &str) -> PyResult<()> {
        xes::write_xes_file(&self.inner, path).map_err(to_py_err)
    }

    /// Serialize as XES and return the bytes.
    fn to_xes_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = xes::xes_to_bytes(&self.inner).map_err(to_py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    #[getter]
    fn num_traces(&self) -> usize {
        self.inner.num_traces()
    }

    #[getter]
    fn num_events(&self) -> usize {
        self.inner.num_events()
    }

    #[getter]
    fn num_variants(&self) -> usize {
        self.inner.num_variants()
    }

    /// Trace variants and their multiplicities, as (activities, count)
    /// pairs sorted by variant.
    fn variant_counts(&self) -> Vec<(Vec<String>, u64)> {
        self.inner
            .variant_counts()
            .into_iter()
            .map(|(v, c)| (v.iter().map(|a| a.as_str().to_string()).collect(), c))
            .collect()
    }

    /// Case ids in log order.
    fn case_ids(&self) -> Vec<String> {
        self.inner.traces.iter().map(|t| t.case_id.clone()).collect()
    }

    /// The attribute schema as JSON.
    fn schema_json(&self) -> String {
        self.inner.schema.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.num_traces()
    }

    fn __repr__(&self) -> String {
        format!(
            "EventLog({} traces, {} events, {} variants)",
            self.inner.num_traces(),
            self.inner.num_events(),
            self.inner.num_variants()
        )
    }
}

/// Run the full anonymization pipeline. Returns the anonymized log and the
/// run report as a JSON string. Deterministic for a fixed seed.
#[pyfunction]
#[pyo3(signature = (
    log,
    epsilon,
    prune,
    max_depth = 30,
    seed = 0,
    greedy_matching = false,
    shift_scale_ms = 3_600_000.0,
    interval_scale_ms = 900_000.0,
    attribute_epsilon = None,
    schema_json = None,
))]
#[allow(clippy::too_many_arguments)]
fn anonymize(
    log: &EventLog,
    epsilon: f64,
    prune: u64,
    max_depth: usize,
    seed: u64,
    greedy_matching: bool,
    shift_scale_ms: f64,
    interval_scale_ms: f64,
    attribute_epsilon: Option<f64>,
    schema_json: Option<&str>,
) -> PyResult<(EventLog, String)> {
    let input = match schema_json {
        Some(json) => {
            let schema = AttributeSchema::from_json(json).map_err(to_py_err)?;
            privlog::EventLog::new(log.inner.traces.clone(), schema).map_err(to_py_err)?
        }
        None => log.inner.clone(),
    };
    let cfg = PipelineConfig {
        query: QueryParams {
            epsilon,
            max_depth,
            prune,
        },
        noise: NoiseParams {
            shift_scale: shift_scale_ms,
            interval_scale: interval_scale_ms,
        },
        matching: if greedy_matching {
            MatchingMode::Greedy
        } else {
            MatchingMode::Optimal
        },
        attribute_epsilon,
        seed,
    };
    let (output, report) = run_pipeline(&input, &cfg).map_err(to_py_err)?;
    Ok((EventLog { inner: output }, report.to_json()))
}

/// Compare utility measures of an original/anonymized pair; returns JSON.
#[pyfunction]
#[pyo3(signature = (original, anonymized, attrs = None, bucket_ms = 86_400_000))]
fn utility_report(
    original: &EventLog,
    anonymized: &EventLog,
    attrs: Option<Vec<String>>,
    bucket_ms: i64,
) -> PyResult<String> {
    let attrs = attrs.unwrap_or_default();
    let report = metrics::compare(&original.inner, &anonymized.inner, &attrs, bucket_ms)
        .map_err(to_py_err)?;
    Ok(report.to_json())
}

/// Fraction of cases whose first value of the boolean attribute is true.
#[pyfunction]
fn boolean_fraction(log: &EventLog, attr: &str) -> PyResult<f64> {
    metrics::boolean_fraction(&log.inner, attr).map_err(to_py_err)
}

/// Case-duration aggregates in milliseconds:
/// (min, max, mean, median).
#[pyfunction]
fn case_duration_stats(log: &EventLog) -> PyResult<(i64, i64, f64, f64)> {
    let stats = metrics::case_duration_stats(&log.inner).map_err(to_py_err)?;
    Ok((stats.min_ms, stats.max_ms, stats.mean_ms, stats.median_ms))
}

/// Relative active cases per time bucket: (bucket_start_ms, fraction).
#[pyfunction]
#[pyo3(signature = (log, bucket_ms = 86_400_000))]
fn active_cases_series(log: &EventLog, bucket_ms: i64) -> PyResult<Vec<(i64, f64)>> {
    metrics::active_cases_series(&log.inner, bucket_ms).map_err(to_py_err)
}

#[pymodule]
fn privlog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EventLog>()?;
    m.add_function(wrap_pyfunction!(anonymize, m)?)?;
    m.add_function(wrap_pyfunction!(utility_report, m)?)?;
    m.add_function(wrap_pyfunction!(boolean_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(case_duration_stats, m)?)?;
    m.add_function(wrap_pyfunction!(active_cases_series, m)?)?;
    Ok(())
}
