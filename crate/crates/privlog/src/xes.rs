//! XES (IEEE 1849-2016) reading and writing.
//!
//! Reading accepts a practical superset of XES: unknown log-level elements
//! are skipped, trace-level attributes other than `concept:name` are
//! ignored, and nested attribute children are dropped. Every event must
//! carry `concept:name` and `time:timestamp`. Writing emits a minimal,
//! deterministic document that round-trips through [`parse_xes`].
//!
//! Payload attribute tags map onto the model as: `float`/`int` → numeric,
//! `boolean` → boolean, `string`/`date`/`id` → categorical.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use quick_xml::events::{BytesDecl, BytesStart, Event as XmlEvent};
use quick_xml::{Reader, Writer};

use crate::error::{Error, Result};
use crate::log::{
    ActivityLabel, AttributeSchema, AttributeValue, Event, EventLog, Trace,
};

const CONCEPT_NAME: &str = "concept:name";
const TIME_TIMESTAMP: &str = "time:timestamp";

/// Parse XES from a byte slice, inferring the attribute schema from the
/// encountered payload types.
pub fn parse_xes(input: &[u8]) -> Result<EventLog> {
    let traces = parse_traces(input)?;
    let schema = AttributeSchema::infer(&traces)?;
    EventLog::new(traces, schema)
}

/// Parse XES against a declared schema. Payload values must match the
/// declared kinds and domains.
pub fn parse_xes_with_schema(input: &[u8], schema: AttributeSchema) -> Result<EventLog> {
    let traces = parse_traces(input)?;
    EventLog::new(traces, schema)
}

pub fn read_xes_file(path: impl AsRef<Path>) -> Result<EventLog> {
    let bytes = std::fs::read(path)?;
    parse_xes(&bytes)
}

/// Serialize a log as XES into `out`. Deterministic: same log, same bytes.
pub fn write_xes<W: Write>(log: &EventLog, out: W) -> Result<()> {
    let mut w = Writer::new_with_indent(out, b'\t', 1);
    w.write_event(XmlEvent::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;

    let mut root = BytesStart::new("log");
    root.push_attribute(("xes.version", "1849-2016"));
    root.push_attribute(("xes.features", ""));
    w.write_event(XmlEvent::Start(root))?;

    write_extension(&mut w, "Concept", "concept", "http://www.xes-standard.org/concept.xesext")?;
    write_extension(&mut w, "Time", "time", "http://www.xes-standard.org/time.xesext")?;

    for trace in &log.traces {
        w.write_event(XmlEvent::Start(BytesStart::new("trace")))?;
        write_simple(&mut w, "string", CONCEPT_NAME, &trace.case_id)?;
        for event in &trace.events {
            w.write_event(XmlEvent::Start(BytesStart::new("event")))?;
            write_simple(&mut w, "string", CONCEPT_NAME, event.activity.as_str())?;
            write_simple(&mut w, "date", TIME_TIMESTAMP, &format_ts(event.ts))?;
            for (name, value) in &event.payload {
                match value {
                    AttributeValue::Numeric(v) => {
                        write_simple(&mut w, "float", name, &v.to_string())?
                    }
                    AttributeValue::Categorical(v) => write_simple(&mut w, "string", name, v)?,
                    AttributeValue::Boolean(v) => {
                        write_simple(&mut w, "boolean", name, if *v { "true" } else { "false" })?
                    }
                    AttributeValue::Missing => {}
                }
            }
            w.write_event(XmlEvent::End(BytesStart::new("event").to_end()))?;
        }
        w.write_event(XmlEvent::End(BytesStart::new("trace").to_end()))?;
    }
    w.write_event(XmlEvent::End(BytesStart::new("log").to_end()))?;
    Ok(())
}

pub fn write_xes_file(log: &EventLog, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_xes(log, std::io::BufWriter::new(file))
}

pub fn xes_to_bytes(log: &EventLog) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_xes(log, &mut buf)?;
    Ok(buf)
}

fn write_extension<W: Write>(
    w: &mut Writer<W>,
    name: &str,
    prefix: &str,
    uri: &str,
) -> Result<()> {
    let mut ext = BytesStart::new("extension");
    ext.push_attribute(("name", name));
    ext.push_attribute(("prefix", prefix));
    ext.push_attribute(("uri", uri));
    w.write_event(XmlEvent::Empty(ext))?;
    Ok(())
}

fn write_simple<W: Write>(w: &mut Writer<W>, tag: &str, key: &str, value: &str) -> Result<()> {
    let mut el = BytesStart::new(tag);
    el.push_attribute(("key", key));
    el.push_attribute(("value", value));
    w.write_event(XmlEvent::Empty(el))?;
    Ok(())
}

fn format_ts(ms: i64) -> String {
    Utc.timestamp_millis_opt(ms)
        .single()
        .expect("timestamp in range")
        .to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn parse_ts(raw: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp_millis());
    }
    // some producers omit the zone; read as UTC
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|ndt| ndt.and_utc().timestamp_millis())
}

impl From<quick_xml::Error> for Error {
    fn from(e: quick_xml::Error) -> Self {
        match e {
            quick_xml::Error::Io(io) => {
                Error::Io(std::io::Error::new(io.kind(), io.to_string()))
            }
            other => Error::Schema(format!("XML writer error: {other}")),
        }
    }
}

struct TraceParser<'a> {
    reader: Reader<&'a [u8]>,
    input: &'a [u8],
}

impl<'a> TraceParser<'a> {
    fn new(input: &'a [u8]) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        TraceParser { reader, input }
    }

    fn parse_error(&self, message: String) -> Error {
        let pos = self.reader.buffer_position() as usize;
        let consumed = &self.input[..pos.min(self.input.len())];
        let line = consumed.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = consumed.len() - consumed.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
        Error::Parse {
            line,
            column,
            message,
        }
    }

    fn next(&mut self) -> Result<XmlEvent<'a>> {
        self.reader
            .read_event()
            .map_err(|e| self.parse_error(e.to_string()))
    }

    /// key/value pair of an attribute element, plus its tag name.
    fn element_kv(&self, el: &BytesStart<'a>) -> Result<(String, String, String)> {
        let tag = String::from_utf8_lossy(el.name().as_ref()).into_owned();
        let mut key = None;
        let mut value = None;
        for attr in el.attributes() {
            let attr = attr.map_err(|e| self.parse_error(e.to_string()))?;
            let text = attr
                .unescape_value()
                .map_err(|e| self.parse_error(e.to_string()))?
                .into_owned();
            match attr.key.as_ref() {
                b"key" => key = Some(text),
                b"value" => value = Some(text),
                _ => {}
            }
        }
        let key = key.ok_or_else(|| self.parse_error(format!("<{tag}> without key")))?;
        Ok((tag, key, value.unwrap_or_default()))
    }

    fn skip_element(&mut self, el: &BytesStart<'a>) -> Result<()> {
        let name = el.name().to_owned();
        self.reader
            .read_to_end(name)
            .map_err(|e| self.parse_error(e.to_string()))?;
        Ok(())
    }
}

fn typed_value(tag: &str, raw: String, trace_hint: &str) -> Result<Option<AttributeValue>> {
    let value = match tag {
        "string" | "id" => AttributeValue::Categorical(raw),
        "date" => AttributeValue::Categorical(raw),
        "boolean" => match raw.as_str() {
            "true" | "True" | "TRUE" | "1" => AttributeValue::Boolean(true),
            "false" | "False" | "FALSE" | "0" => AttributeValue::Boolean(false),
            other => {
                return Err(Error::Schema(format!(
                    "trace {trace_hint:?}: invalid boolean value {other:?}"
                )))
            }
        },
        "float" | "int" => {
            let v: f64 = raw.parse().map_err(|_| {
                Error::Schema(format!(
                    "trace {trace_hint:?}: invalid numeric value {raw:?}"
                ))
            })?;
            AttributeValue::Numeric(v)
        }
        // container or unknown tags are dropped by the caller
        _ => return Ok(None),
    };
    Ok(Some(value))
}

#[derive(Default)]
struct ParseState {
    traces: Vec<Trace>,
    trace_index: usize,
    in_trace: bool,
    in_event: bool,
    case_id: Option<String>,
    events: Vec<Event>,
    activity: Option<String>,
    ts: Option<i64>,
    payload: BTreeMap<String, AttributeValue>,
}

impl ParseState {
    fn trace_hint(&self) -> String {
        self.case_id
            .clone()
            .unwrap_or_else(|| format!("#{}", self.trace_index))
    }

    fn open<'a>(&mut self, p: &mut TraceParser<'a>, el: BytesStart<'a>, empty: bool) -> Result<()> {
        match el.name().as_ref() {
            b"log" => {}
            b"trace" => {
                self.in_trace = true;
                self.case_id = None;
                self.events.clear();
                if empty {
                    return Err(Error::Schema(format!(
                        "trace #{} has no events",
                        self.trace_index
                    )));
                }
            }
            b"event" => {
                if !self.in_trace {
                    return Err(p.parse_error("<event> outside <trace>".into()));
                }
                self.in_event = true;
                self.activity = None;
                self.ts = None;
                self.payload.clear();
                if empty {
                    return Err(Error::Schema(format!(
                        "trace {:?}: event without {CONCEPT_NAME:?}",
                        self.trace_hint()
                    )));
                }
            }
            b"extension" | b"global" | b"classifier" => {
                if !empty {
                    p.skip_element(&el)?;
                }
            }
            _ => {
                let (tag, key, value) = p.element_kv(&el)?;
                if !empty {
                    // drop nested children of this attribute
                    p.skip_element(&el)?;
                }
                let hint = self.trace_hint();
                if self.in_event {
                    if key == CONCEPT_NAME {
                        self.activity = Some(value);
                    } else if key == TIME_TIMESTAMP {
                        self.ts = Some(parse_ts(&value).ok_or_else(|| {
                            Error::Schema(format!(
                                "trace {hint:?}: unparseable timestamp {value:?}"
                            ))
                        })?);
                    } else if let Some(v) = typed_value(&tag, value, &hint)? {
                        self.payload.insert(key, v);
                    }
                } else if self.in_trace && key == CONCEPT_NAME {
                    self.case_id = Some(value);
                }
            }
        }
        Ok(())
    }

    fn close(&mut self, name: &[u8]) -> Result<()> {
        match name {
            b"event" => {
                self.in_event = false;
                let hint = self.trace_hint();
                let name = self.activity.take().ok_or_else(|| {
                    Error::Schema(format!("trace {hint:?}: event without {CONCEPT_NAME:?}"))
                })?;
                let ts = self.ts.take().ok_or_else(|| {
                    Error::Schema(format!(
                        "trace {hint:?}: event {name:?} without {TIME_TIMESTAMP:?}"
                    ))
                })?;
                self.events.push(Event {
                    activity: ActivityLabel::new(name)?,
                    ts,
                    payload: std::mem::take(&mut self.payload),
                });
            }
            b"trace" => {
                self.in_trace = false;
                let id = self.case_id.take().ok_or_else(|| {
                    Error::Schema(format!(
                        "trace #{} without {CONCEPT_NAME:?}",
                        self.trace_index
                    ))
                })?;
                if self.events.is_empty() {
                    return Err(Error::Schema(format!("trace {id:?} has no events")));
                }
                let mut trace_events = std::mem::take(&mut self.events);
                trace_events.sort_by_key(|e| e.ts); // stable: ties keep file order
                self.traces.push(Trace::new(id, trace_events));
                self.trace_index += 1;
            }
            _ => {}
        }
        Ok(())
    }
}

fn parse_traces(input: &[u8]) -> Result<Vec<Trace>> {
    let mut p = TraceParser::new(input);
    let mut state = ParseState::default();
    loop {
        match p.next()? {
            XmlEvent::Start(el) => state.open(&mut p, el, false)?,
            XmlEvent::Empty(el) => state.open(&mut p, el, true)?,
            XmlEvent::End(el) => state.close(el.name().as_ref())?,
            XmlEvent::Eof => {
                if state.in_trace || state.in_event {
                    return Err(p.parse_error("unexpected end of document".into()));
                }
                break;
            }
            _ => {}
        }
    }
    Ok(state.traces)
}
