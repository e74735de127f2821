//! Per-node state, the line protocol and on-disk persistence.
//!
//! Each node lives behind its own mutex, so messages for one node are
//! handled in arrival order while different nodes proceed independently.
//! With a data directory every completed message is persisted before its
//! response is produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;

use chrono::{DateTime, Utc};
use sdlstm_core::combiner::{
    CombinerError, CombinerSchedule, HybridForecast, NodeEntry, RetrainJob, Retrained, UpdatePolicy,
};
use sdlstm_core::series::{
    format_timestamp, parse_timestamp, read_csv, write_csv, Interval, TrafficSeries,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::modelfile::{write_atomic, Bundle, ModelFile, ModelFileError, Payload, Provenance};

pub const MAX_NODE_ID_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrainMode {
    /// Retrain on the thread that handled the triggering observation.
    Inline,
    /// Retrain on a worker thread; the previous models keep serving until
    /// the new ones are swapped in.
    Background,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid node id {0:?}: 1-64 characters from [A-Za-z0-9_-]")]
    InvalidNodeId(String),
    #[error("registry directory: {0}")]
    Io(#[from] std::io::Error),
    #[error("node {node}: {reason}")]
    Corrupt { node: String, reason: String },
}

pub fn valid_node_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_NODE_ID_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Request {
    Obs {
        node: String,
        ts: String,
        count: f64,
    },
    Predict {
        node: String,
        until: String,
    },
    Stats {
        node: String,
    },
}

/// Bookkeeping persisted next to the history and model files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct NodeMeta {
    version: u64,
    last_retrain: Option<DateTime<Utc>>,
    pending: usize,
    /// Most recent forecast served, kept for inspection; never trained on.
    last_forecast: Option<HybridForecast>,
}

#[derive(Debug)]
pub struct NodeState {
    pub entry: NodeEntry,
    pub last_forecast: Option<HybridForecast>,
    retraining: bool,
}

impl NodeState {
    fn new(schedule: CombinerSchedule) -> Self {
        Self {
            entry: NodeEntry::new(schedule),
            last_forecast: None,
            retraining: false,
        }
    }
}

type Slot = Arc<Mutex<NodeState>>;

struct Shared {
    policy: UpdatePolicy,
    schedule: CombinerSchedule,
    data_dir: Option<PathBuf>,
    mode: RetrainMode,
}

pub struct NodeRegistry {
    nodes: Mutex<BTreeMap<String, Slot>>,
    shared: Arc<Shared>,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panicked handler must not take the whole registry down
    m.lock().unwrap_or_else(|poison| poison.into_inner())
}

struct Failure {
    kind: &'static str,
    reason: String,
}

impl Failure {
    fn new(kind: &'static str, reason: impl Into<String>) -> Self {
        Self {
            kind,
            reason: reason.into(),
        }
    }
}

fn combiner_failure(e: CombinerError) -> Failure {
    let kind = match &e {
        CombinerError::UntrainedModel(_) => "UntrainedModel",
        CombinerError::HistoryGap { .. } => "HistoryGap",
        CombinerError::IntervalMismatch(_) => "IntervalMismatch",
        CombinerError::MisalignedHistory(_) => "MisalignedHistory",
        CombinerError::EmptyHorizon { .. } => "EmptyHorizon",
        CombinerError::Schedule(_) => "InvalidSchedule",
        CombinerError::Lstm(_) => "ModelError",
        CombinerError::Arima(_) => "ModelError",
        CombinerError::Series(_) => "InvalidSeries",
    };
    Failure::new(kind, e.to_string())
}

impl NodeRegistry {
    /// An empty registry. With `data_dir`, nodes already stored there are
    /// loaded and every change is persisted.
    pub fn open(
        policy: UpdatePolicy,
        schedule: CombinerSchedule,
        data_dir: Option<PathBuf>,
        mode: RetrainMode,
    ) -> Result<Self, RegistryError> {
        let mut nodes = BTreeMap::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir)?;
            let mut names: Vec<String> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|n| valid_node_id(n))
                .collect();
            names.sort();
            for name in names {
                let state = load_node(&dir.join(&name), &name, &schedule)?;
                nodes.insert(name, Arc::new(Mutex::new(state)));
            }
        }
        Ok(Self {
            nodes: Mutex::new(nodes),
            shared: Arc::new(Shared {
                policy,
                schedule,
                data_dir,
                mode,
            }),
            workers: Mutex::new(Vec::new()),
        })
    }

    pub fn node_ids(&self) -> Vec<String> {
        lock(&self.nodes).keys().cloned().collect()
    }

    /// Runs `f` on a node's state under its lock.
    pub fn with_node<R>(&self, id: &str, f: impl FnOnce(&NodeState) -> R) -> Option<R> {
        let slot = lock(&self.nodes).get(id).cloned()?;
        let guard = lock(&slot);
        Some(f(&guard))
    }

    /// Waits for every background retrain started so far.
    pub fn join_background(&self) {
        let handles: Vec<_> = lock(&self.workers).drain(..).collect();
        for h in handles {
            let _ = h.join();
        }
    }

    /// Handles one protocol line and returns exactly one response line
    /// (without the trailing newline).
    pub fn handle_line(&self, line: &str) -> String {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                return json!({
                    "type": "error",
                    "status": "err",
                    "error": "MalformedMessage",
                    "reason": e.to_string(),
                    "echo": line,
                })
                .to_string()
            }
        };
        let (kind, node) = match &request {
            Request::Obs { node, .. } => ("obs", node.clone()),
            Request::Predict { node, .. } => ("predict", node.clone()),
            Request::Stats { node } => ("stats", node.clone()),
        };
        let outcome = if !valid_node_id(&node) {
            Err(Failure::new(
                "MalformedMessage",
                format!("invalid node id {node:?}: 1-64 characters from [A-Za-z0-9_-]"),
            ))
        } else {
            match request {
                Request::Obs { node, ts, count } => self.observe(&node, &ts, count),
                Request::Predict { node, until } => self.predict(&node, &until),
                Request::Stats { node } => self.stats(&node),
            }
        };
        let mut body = match outcome {
            Ok(Value::Object(map)) => map,
            Ok(_) => unreachable!("handlers return objects"),
            Err(f) => {
                let mut map = serde_json::Map::new();
                map.insert("status".into(), "err".into());
                map.insert("error".into(), f.kind.into());
                map.insert("reason".into(), f.reason.into());
                if f.kind == "MalformedMessage" {
                    map.insert("echo".into(), line.into());
                }
                map
            }
        };
        body.entry("status").or_insert_with(|| "ok".into());
        body.insert("type".into(), kind.into());
        body.insert("node".into(), node.into());
        Value::Object(body).to_string()
    }

    fn slot(&self, id: &str, create: bool) -> Option<Slot> {
        let mut nodes = lock(&self.nodes);
        if let Some(s) = nodes.get(id) {
            return Some(s.clone());
        }
        if !create {
            return None;
        }
        let slot = Arc::new(Mutex::new(NodeState::new(self.shared.schedule.clone())));
        nodes.insert(id.to_string(), slot.clone());
        Some(slot)
    }

    fn observe(&self, node: &str, ts: &str, count: f64) -> Result<Value, Failure> {
        let ts = parse_timestamp(ts).map_err(|e| Failure::new("MalformedMessage", e))?;
        if !count.is_finite() || count < 0.0 {
            return Err(Failure::new(
                "MalformedMessage",
                format!("count must be a finite non-negative number, got {count}"),
            ));
        }
        let obs = TrafficSeries::new(ts, Interval::QuarterHour, vec![count])
            .map_err(|e| Failure::new("MalformedMessage", e.to_string()))?;
        let slot = self.slot(node, true).expect("created on demand");
        let mut state = lock(&slot);
        state.entry.append(&obs).map_err(combiner_failure)?;
        self.trim_history(&mut state.entry);

        let mut retrained = false;
        let mut retrain_error = None;
        if state.entry.needs_retrain(&self.shared.policy) && !state.retraining {
            let job = state
                .entry
                .retrain_job(&self.shared.policy)
                .expect("history present");
            match self.shared.mode {
                RetrainMode::Inline => match job.run() {
                    Ok(Some(result)) => {
                        retrained = state.entry.apply(result);
                        if retrained {
                            persist_models(&self.shared, node, &state).map_err(io_failure)?;
                        }
                    }
                    Ok(None) => {}
                    Err(e) => retrain_error = Some(e.to_string()),
                },
                RetrainMode::Background => {
                    state.retraining = true;
                    self.spawn_retrain(node, slot.clone(), job);
                }
            }
        }
        persist_history(&self.shared, node, &state).map_err(io_failure)?;
        persist_meta(&self.shared, node, &state).map_err(io_failure)?;

        let mut resp = json!({
            "version": state.entry.version,
            "samples": state.entry.history.as_ref().map_or(0, |h| h.len()),
            "retrained": retrained,
        });
        if let Some(e) = retrain_error {
            resp["retrain_error"] = e.into();
        }
        Ok(resp)
    }

    fn trim_history(&self, entry: &mut NodeEntry) {
        let keep = self
            .shared
            .policy
            .max_train_samples
            .max(self.shared.policy.arima_window)
            .max(1);
        if let Some(h) = &entry.history {
            if h.len() > keep {
                entry.history = Some(h.tail(keep));
            }
        }
    }

    fn spawn_retrain(&self, node: &str, slot: Slot, job: RetrainJob) {
        let shared = self.shared.clone();
        let node = node.to_string();
        let handle = std::thread::spawn(move || {
            let outcome = job.run();
            let mut state = lock(&slot);
            state.retraining = false;
            match outcome {
                Ok(Some(result)) => {
                    if apply_and_persist(&shared, &node, &mut state, result).is_err() {
                        eprintln!("{}", json!({"event": "persist_failed", "node": node}));
                    }
                }
                Ok(None) => {}
                Err(e) => eprintln!(
                    "{}",
                    json!({"event": "retrain_failed", "node": node, "reason": e.to_string()})
                ),
            }
        });
        let mut workers = lock(&self.workers);
        workers.retain(|h| !h.is_finished());
        workers.push(handle);
    }

    fn predict(&self, node: &str, until: &str) -> Result<Value, Failure> {
        let until = parse_timestamp(until).map_err(|e| Failure::new("MalformedMessage", e))?;
        let slot = self.slot(node, false).ok_or_else(|| {
            Failure::new("UnknownNode", format!("no observations for node {node:?}"))
        })?;
        let mut state = lock(&slot);
        let forecast = state.entry.predict(until).map_err(combiner_failure)?;
        let points: Vec<Value> = forecast
            .points
            .iter()
            .map(|p| {
                json!({
                    "ts": format_timestamp(p.timestamp),
                    "value": p.value,
                    "source": p.source.as_str(),
                    "interval_s": p.interval.secs(),
                })
            })
            .collect();
        state.last_forecast = Some(forecast);
        persist_meta(&self.shared, node, &state).map_err(io_failure)?;
        Ok(json!({ "version": state.entry.version, "points": points }))
    }

    fn stats(&self, node: &str) -> Result<Value, Failure> {
        let slot = self.slot(node, false).ok_or_else(|| {
            Failure::new("UnknownNode", format!("no observations for node {node:?}"))
        })?;
        let state = lock(&slot);
        let e = &state.entry;
        Ok(json!({
            "version": e.version,
            "history_start": e.history.as_ref().map(|h| format_timestamp(h.start())),
            "history_end": e.history.as_ref().map(|h| format_timestamp(h.end())),
            "samples": e.history.as_ref().map_or(0, |h| h.len()),
            "pending": e.pending,
            "dropout_p": e.lstm.as_ref().map(|m| m.dropout_p),
            "arima_order": e.arima.as_ref().map(|m| m.order.to_string()),
            "last_retrain": e.last_retrain.map(format_timestamp),
            "retraining": state.retraining,
        }))
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new("PersistenceError", e.to_string())
}

fn apply_and_persist(
    shared: &Shared,
    node: &str,
    state: &mut NodeState,
    result: Retrained,
) -> std::io::Result<()> {
    if state.entry.apply(result) {
        persist_models(shared, node, state)?;
        persist_meta(shared, node, state)?;
    }
    Ok(())
}

fn node_dir(shared: &Shared, node: &str) -> std::io::Result<Option<PathBuf>> {
    match &shared.data_dir {
        None => Ok(None),
        Some(dir) => {
            let d = dir.join(node);
            std::fs::create_dir_all(&d)?;
            Ok(Some(d))
        }
    }
}

fn persist_history(shared: &Shared, node: &str, state: &NodeState) -> std::io::Result<()> {
    let (Some(dir), Some(history)) = (node_dir(shared, node)?, &state.entry.history) else {
        return Ok(());
    };
    let mut buf = Vec::new();
    write_csv(history, &mut buf).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("history.csv"), &buf)
}

fn persist_meta(shared: &Shared, node: &str, state: &NodeState) -> std::io::Result<()> {
    let Some(dir) = node_dir(shared, node)? else {
        return Ok(());
    };
    let meta = NodeMeta {
        version: state.entry.version,
        last_retrain: state.entry.last_retrain,
        pending: state.entry.pending,
        last_forecast: state.last_forecast.clone(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("state.json"), json.as_bytes())
}

fn persist_models(shared: &Shared, node: &str, state: &NodeState) -> std::io::Result<()> {
    let Some(dir) = node_dir(shared, node)? else {
        return Ok(());
    };
    let e = &state.entry;
    let (Some(lstm), Some(arima)) = (&e.lstm, &e.arima) else {
        return Ok(());
    };
    let file = ModelFile::new(
        Payload::Bundle(Bundle {
            sdlstm: lstm.clone(),
            arima: arima.clone(),
            schedule: e.schedule.clone(),
        }),
        Provenance {
            train_config: Some(shared.policy.train.clone()),
            data_start: e.history.as_ref().map(|h| h.start()),
            data_end: e.last_retrain,
            seed: Some(shared.policy.train.seed),
            version: e.version,
        },
    );
    file.save(&dir.join("model.json")).map_err(|err| match err {
        ModelFileError::Io(io) => io,
        other => std::io::Error::other(other.to_string()),
    })
}

fn load_node(
    dir: &Path,
    node: &str,
    schedule: &CombinerSchedule,
) -> Result<NodeState, RegistryError> {
    let corrupt = |reason: String| RegistryError::Corrupt {
        node: node.to_string(),
        reason,
    };
    let mut state = NodeState::new(schedule.clone());

    let history_path = dir.join("history.csv");
    if history_path.exists() {
        let f = std::fs::File::open(&history_path)?;
        let h = read_csv(f, Some(Interval::QuarterHour))
            .map_err(|e| corrupt(format!("history.csv: {e}")))?;
        state.entry.history = Some(h);
    }
    let meta_path = dir.join("state.json");
    if meta_path.exists() {
        let raw = std::fs::read_to_string(&meta_path)?;
        let meta: NodeMeta =
            serde_json::from_str(&raw).map_err(|e| corrupt(format!("state.json: {e}")))?;
        state.entry.version = meta.version;
        state.entry.last_retrain = meta.last_retrain;
        state.entry.pending = meta.pending;
        state.last_forecast = meta.last_forecast;
    }
    let model_path = dir.join("model.json");
    if model_path.exists() {
        let file = ModelFile::load(&model_path).map_err(|e| corrupt(format!("model.json: {e}")))?;
        let version = file.provenance.version;
        let bundle = file
            .into_bundle()
            .map_err(|e| corrupt(format!("model.json: {e}")))?;
        state.entry.lstm = Some(bundle.sdlstm);
        state.entry.arima = Some(bundle.arima);
        state.entry.schedule = bundle.schedule;
        // the model file is written before state.json; trust it on mismatch
        state.entry.version = version;
    }
    Ok(state)
}
