//! Human-readable JSON scenario files (`.v2x.json`), trimming and joining.
//!
//! Message contents are stored as wire-scale integers; floating point only
//! appears in GNSS fixes and the recorder's distance threshold.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::gateway::RxEvent;
use crate::its_types::{ItsMessage, MessageType};

pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = ".v2x.json";
pub const NS_PER_S: i64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("SchemaViolation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
    #[error("VersionMismatch: format_version {0} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch(u64),
    #[error("OverlapError: recording starting at {start_ts} overlaps one ending at {prev_end_ts}")]
    Overlap { prev_end_ts: i64, start_ts: i64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<DatasetError> },
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> DatasetError {
    DatasetError::SchemaViolation {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecorderMode {
    Vehicle,
    Infrastructure,
}

impl RecorderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RecorderMode::Vehicle => "vehicle",
            RecorderMode::Infrastructure => "infrastructure",
        }
    }
}

impl std::str::FromStr for RecorderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vehicle" => Ok(RecorderMode::Vehicle),
            "infrastructure" => Ok(RecorderMode::Infrastructure),
            other => Err(format!("unknown recorder mode '{other}'")),
        }
    }
}

/// Recorder settings echoed into each file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub dt_a_ms: u64,
    pub dt_b_ms: u64,
    pub d_min_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub format_version: u32,
    pub recorder_mode: RecorderMode,
    /// Free-form provenance, e.g. a location or measurement category.
    pub label: Option<String>,
    pub config: ConfigEcho,
    pub start_ts: i64,
    pub end_ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnssFix {
    pub ts: i64,
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start_ts: i64,
    pub end_ts: i64,
}

impl Window {
    pub fn duration_ns(&self) -> i64 {
        self.end_ts - self.start_ts
    }
}

/// One V2X message as stored: the ITS PDU (gateway skip prefix removed) and
/// either its decoded form or the decode error text.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub recv_ts: i64,
    pub source: Option<SocketAddr>,
    pub payload: Vec<u8>,
    pub decoded: Result<ItsMessage, String>,
}

impl MessageRecord {
    pub fn from_event(ev: &RxEvent) -> Self {
        MessageRecord {
            recv_ts: ev.recv_ts,
            source: Some(ev.source),
            payload: ev.pdu().to_vec(),
            decoded: ev.decoded.clone().map_err(|e| e.to_string()),
        }
    }

    pub fn message(&self) -> Option<&ItsMessage> {
        self.decoded.as_ref().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecording {
    pub meta: Meta,
    pub gnss: Vec<GnssFix>,
    pub messages: Vec<MessageRecord>,
    pub context_windows: Vec<Window>,
}

impl ScenarioRecording {
    pub fn empty(meta: Meta) -> Self {
        ScenarioRecording {
            meta,
            gnss: Vec::new(),
            messages: Vec::new(),
            context_windows: Vec::new(),
        }
    }

    pub fn span_ns(&self) -> i64 {
        self.meta.end_ts - self.meta.start_ts
    }

    /// Checks ordering and bounds; the first broken rule is reported.
    pub fn check_invariants(&self) -> Result<(), DatasetError> {
        let m = &self.meta;
        if m.end_ts < m.start_ts {
            return Err(schema("meta.end_ts", "end_ts precedes start_ts"));
        }
        for (i, w) in self.gnss.windows(2).enumerate() {
            if w[1].ts < w[0].ts {
                return Err(schema(format!("gnss[{}].ts", i + 1), "not sorted by time"));
            }
        }
        for (i, w) in self.messages.windows(2).enumerate() {
            if w[1].recv_ts < w[0].recv_ts {
                return Err(schema(format!("messages[{}].recv_ts", i + 1), "not sorted by time"));
            }
        }
        for (i, w) in self.context_windows.iter().enumerate() {
            if w.end_ts < w.start_ts {
                return Err(schema(format!("context_windows[{i}].end_ts"), "window ends before it starts"));
            }
            if i > 0 && w.start_ts < self.context_windows[i - 1].end_ts {
                return Err(schema(
                    format!("context_windows[{i}].start_ts"),
                    "windows overlap or are unsorted",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct MessageOut<'a> {
    recv_ts: i64,
    source: Option<String>,
    #[serde(rename = "type")]
    kind: Option<&'static str>,
    payload_hex: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    decoded: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decode_error: Option<&'a str>,
}

#[derive(Serialize)]
struct ScenarioOut<'a> {
    meta: &'a Meta,
    gnss: &'a [GnssFix],
    messages: Vec<MessageOut<'a>>,
    context_windows: &'a [Window],
}

/// Serializes a scenario as pretty-printed JSON with a fixed key order.
pub fn write_scenario<W: Write>(rec: &ScenarioRecording, out: W) -> Result<(), DatasetError> {
    rec.check_invariants()?;
    let messages = rec
        .messages
        .iter()
        .map(|m| MessageOut {
            recv_ts: m.recv_ts,
            source: m.source.map(|s| s.to_string()),
            kind: m.message().map(|msg| msg.message_type().name()),
            payload_hex: hex::encode(&m.payload),
            decoded: m.message().map(ItsMessage::to_json_value),
            decode_error: m.decoded.as_ref().err().map(String::as_str),
        })
        .collect();
    let doc = ScenarioOut {
        meta: &rec.meta,
        gnss: &rec.gnss,
        messages,
        context_windows: &rec.context_windows,
    };
    let mut out = io::BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| io_error("<writer>", e.into()))?;
    out.write_all(b"\n").map_err(|e| io_error("<writer>", e))?;
    out.flush().map_err(|e| io_error("<writer>", e))
}

pub fn scenario_to_vec(rec: &ScenarioRecording) -> Result<Vec<u8>, DatasetError> {
    let mut buf = Vec::new();
    write_scenario(rec, &mut buf)?;
    Ok(buf)
}

fn io_error(path: impl Into<PathBuf>, source: io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.into(),
        source,
    }
}

/// Parses a scenario document.
pub fn read_scenario(bytes: &[u8]) -> Result<ScenarioRecording, DatasetError> {
    let root: Value =
        serde_json::from_slice(bytes).map_err(|e| schema("", format!("malformed JSON: {e}")))?;
    let root = as_object(&root, "")?;

    let meta_v = field(root, "meta", "")?;
    let version = as_object(meta_v, "meta")?
        .get("format_version")
        .ok_or_else(|| schema("meta.format_version", "missing"))?
        .as_u64()
        .ok_or_else(|| schema("meta.format_version", "expected unsigned integer"))?;
    if version != FORMAT_VERSION as u64 {
        return Err(DatasetError::VersionMismatch(version));
    }
    let meta: Meta = typed(meta_v, "meta")?;
    let gnss: Vec<GnssFix> = typed(field(root, "gnss", "")?, "gnss")?;
    let context_windows: Vec<Window> =
        typed(field(root, "context_windows", "")?, "context_windows")?;

    let messages_v = field(root, "messages", "")?
        .as_array()
        .ok_or_else(|| schema("messages", "expected array"))?;
    let messages = messages_v
        .iter()
        .enumerate()
        .map(|(i, v)| read_message(v, &format!("messages[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    for key in root.keys() {
        if !matches!(key.as_str(), "meta" | "gnss" | "messages" | "context_windows") {
            return Err(schema(key.clone(), "unknown field"));
        }
    }

    let rec = ScenarioRecording {
        meta,
        gnss,
        messages,
        context_windows,
    };
    rec.check_invariants()?;
    Ok(rec)
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, DatasetError> {
    v.as_object().ok_or_else(|| schema(path, "expected object"))
}

fn join_path(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, prefix: &str) -> Result<&'a Value, DatasetError> {
    obj.get(key).ok_or_else(|| schema(join_path(prefix, key), "missing"))
}

fn typed<T: serde::de::DeserializeOwned>(v: &Value, path: &str) -> Result<T, DatasetError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let full = if inner == "." {
            path.to_string()
        } else if inner.starts_with('[') {
            format!("{path}{inner}")
        } else {
            join_path(path, &inner)
        };
        schema(full, e.into_inner().to_string())
    })
}

fn read_message(v: &Value, path: &str) -> Result<MessageRecord, DatasetError> {
    let obj = as_object(v, path)?;
    let recv_ts = field(obj, "recv_ts", path)?
        .as_i64()
        .ok_or_else(|| schema(join_path(path, "recv_ts"), "expected integer"))?;
    let source = match obj.get("source") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(
            s.parse()
                .map_err(|_| schema(join_path(path, "source"), "expected socket address"))?,
        ),
        Some(_) => return Err(schema(join_path(path, "source"), "expected string")),
    };
    let payload_hex = field(obj, "payload_hex", path)?
        .as_str()
        .ok_or_else(|| schema(join_path(path, "payload_hex"), "expected string"))?;
    let payload = hex::decode(payload_hex)
        .map_err(|e| schema(join_path(path, "payload_hex"), format!("invalid hex: {e}")))?;
    let kind = match obj.get("type") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(
            MessageType::from_name(s)
                .ok_or_else(|| schema(join_path(path, "type"), format!("unknown message type '{s}'")))?,
        ),
        Some(_) => return Err(schema(join_path(path, "type"), "expected string")),
    };
    let decoded = match (obj.get("decoded"), obj.get("decode_error")) {
        (Some(d), None) => {
            let kind = kind.ok_or_else(|| schema(join_path(path, "type"), "required with decoded"))?;
            let dpath = join_path(path, "decoded");
            let msg = ItsMessage::from_json_value(kind, d.clone()).map_err(|e| {
                let inner = e.path().to_string();
                let full = if inner == "." { dpath.clone() } else { join_path(&dpath, &inner) };
                schema(full, e.into_inner().to_string())
            })?;
            Ok(msg)
        }
        (None, Some(Value::String(err))) => Err(err.clone()),
        (None, Some(_)) => return Err(schema(join_path(path, "decode_error"), "expected string")),
        (Some(_), Some(_)) => {
            return Err(schema(path, "decoded and decode_error are mutually exclusive"))
        }
        (None, None) => return Err(schema(join_path(path, "decoded"), "missing")),
    };
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "recv_ts" | "source" | "type" | "payload_hex" | "decoded" | "decode_error"
        ) {
            return Err(schema(join_path(path, key), "unknown field"));
        }
    }
    Ok(MessageRecord {
        recv_ts,
        source,
        payload,
        decoded,
    })
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioRecording, DatasetError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    read_scenario(&bytes).map_err(|e| DatasetError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

pub fn write_scenario_file(rec: &ScenarioRecording, path: &Path) -> Result<(), DatasetError> {
    let bytes = scenario_to_vec(rec)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

/// Every `.v2x.json` file below `dir`, sorted by path.
pub fn scenario_paths(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(dir) {
        let entry = entry.map_err(|e| io_error(dir, e.into()))?;
        if entry.file_type().is_file()
            && entry.file_name().to_string_lossy().ends_with(FILE_EXTENSION)
        {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    Ok(paths)
}

/// Loads every scenario under `dir`, parsing files in parallel.
pub fn load_dir(dir: &Path) -> Result<Vec<(PathBuf, ScenarioRecording)>, DatasetError> {
    scenario_paths(dir)?
        .into_par_iter()
        .map(|p| read_scenario_file(&p).map(|r| (p, r)))
        .collect()
}

/// Splits a recording into one scenario per message cluster.
///
/// Consecutive messages belong to one cluster while their gap is at most
/// `gap_ns`. Each output spans its cluster extended by `lead_ns` before and
/// `trail_ns` after, clipped to the input bounds.
pub fn trim(
    rec: &ScenarioRecording,
    lead_ns: i64,
    trail_ns: i64,
    gap_ns: i64,
) -> Vec<ScenarioRecording> {
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for (i, m) in rec.messages.iter().enumerate() {
        match clusters.last_mut() {
            Some((_, end)) if m.recv_ts - rec.messages[*end].recv_ts <= gap_ns => *end = i,
            _ => clusters.push((i, i)),
        }
    }
    clusters
        .into_iter()
        .map(|(first, last)| {
            let start_ts = (rec.messages[first].recv_ts - lead_ns).max(rec.meta.start_ts);
            let end_ts = (rec.messages[last].recv_ts + trail_ns).min(rec.meta.end_ts);
            ScenarioRecording {
                meta: Meta {
                    start_ts,
                    end_ts,
                    ..rec.meta.clone()
                },
                gnss: rec
                    .gnss
                    .iter()
                    .filter(|g| start_ts <= g.ts && g.ts <= end_ts)
                    .copied()
                    .collect(),
                messages: rec.messages[first..=last].to_vec(),
                context_windows: rec
                    .context_windows
                    .iter()
                    .filter_map(|w| {
                        let s = w.start_ts.max(start_ts);
                        let e = w.end_ts.min(end_ts);
                        (s < e).then_some(Window { start_ts: s, end_ts: e })
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Default cluster gap: the recorder's silence timeout.
pub fn default_trim_gap_ns(rec: &ScenarioRecording) -> i64 {
    rec.meta.config.dt_a_ms as i64 * 1_000_000
}

/// Appends `w` to `windows`, merging it into the last window when they touch
/// or overlap.
pub fn push_window(windows: &mut Vec<Window>, w: Window) {
    match windows.last_mut() {
        Some(last) if w.start_ts <= last.end_ts => last.end_ts = last.end_ts.max(w.end_ts),
        _ => windows.push(w),
    }
}

/// Merges time-disjoint recordings into one.
pub fn join(recs: &[ScenarioRecording]) -> Result<ScenarioRecording, DatasetError> {
    let mut order: Vec<&ScenarioRecording> = recs.iter().collect();
    order.sort_by_key(|r| (r.meta.start_ts, r.meta.end_ts));
    let Some(first) = order.first() else {
        return Err(schema("", "nothing to join"));
    };
    for pair in order.windows(2) {
        if pair[1].meta.start_ts < pair[0].meta.end_ts {
            return Err(DatasetError::Overlap {
                prev_end_ts: pair[0].meta.end_ts,
                start_ts: pair[1].meta.start_ts,
            });
        }
    }
    let mut out = ScenarioRecording::empty(Meta {
        start_ts: first.meta.start_ts,
        end_ts: order.iter().map(|r| r.meta.end_ts).max().unwrap_or(first.meta.end_ts),
        ..first.meta.clone()
    });
    for r in &order {
        out.gnss.extend_from_slice(&r.gnss);
        out.messages.extend_from_slice(&r.messages);
        for w in &r.context_windows {
            push_window(&mut out.context_windows, *w);
        }
    }
    out.gnss.sort_by_key(|g| g.ts);
    out.messages.sort_by_key(|m| m.recv_ts);
    Ok(out)
}
