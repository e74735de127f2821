#![allow(dead_code)]

use std::path::{Path, PathBuf};

use sdlstm_core::arima::ArimaOrder;
use sdlstm_core::combiner::{default_schedule, UpdatePolicy};
use sdlstm_core::datagen::{generate, GenSpec};
use sdlstm_core::sdlstm::TrainConfig;
use sdlstm_core::series::format_timestamp;
use sdlstm_service::registry::{NodeRegistry, RetrainMode};

pub const FAST_CONFIG: &str = r#"
[train]
epochs = 3
seed = 5

[update]
retrain_threshold = 96
retrain_epochs = 1
arima_window = 192
arima_order = { p = 1, d = 0, q = 1 }
max_train_samples = 960

[generate]
days = 10
"#;

pub fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("fast.toml");
    std::fs::write(&path, FAST_CONFIG).unwrap();
    path
}

pub fn fast_policy() -> UpdatePolicy {
    UpdatePolicy {
        retrain_threshold: 96,
        train: TrainConfig {
            epochs: 3,
            seed: 5,
            ..TrainConfig::default()
        },
        retrain_epochs: 1,
        arima_window: 192,
        arima_order: Some(ArimaOrder::new(1, 0, 1).unwrap()),
        max_train_samples: 960,
        ..UpdatePolicy::default()
    }
}

pub fn registry(data_dir: Option<PathBuf>) -> NodeRegistry {
    NodeRegistry::open(
        fast_policy(),
        default_schedule(),
        data_dir,
        RetrainMode::Inline,
    )
    .unwrap()
}

/// Protocol lines for one node: its observations, with a six-hour
/// prediction request after every `predict_every` of them.
pub fn node_transcript(node: &str, seed: u64, days: usize, predict_every: usize) -> Vec<String> {
    let (series, _) = generate(&GenSpec {
        days,
        seed,
        ..GenSpec::default()
    })
    .unwrap();
    let mut lines = Vec::new();
    for (i, (ts, count)) in series.iter().enumerate() {
        lines.push(format!(
            r#"{{"type":"obs","node":"{node}","ts":"{}","count":{count}}}"#,
            format_timestamp(ts)
        ));
        if (i + 1) % predict_every == 0 {
            let until = ts + chrono::Duration::hours(6);
            lines.push(format!(
                r#"{{"type":"predict","node":"{node}","until":"{}"}}"#,
                format_timestamp(until)
            ));
        }
    }
    lines
}

/// Round-robin merge, one line from each node in turn.
pub fn interleave(transcripts: &[Vec<String>]) -> Vec<String> {
    let longest = transcripts.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..longest {
        for t in transcripts {
            if let Some(line) = t.get(i) {
                out.push(line.clone());
            }
        }
    }
    out
}

pub fn node_of(response: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(response).unwrap();
    v["node"].as_str().unwrap_or_default().to_string()
}

/// Every response, grouped by node, in order.
pub fn replay(
    registry: &NodeRegistry,
    lines: &[String],
) -> std::collections::BTreeMap<String, Vec<String>> {
    let mut by_node: std::collections::BTreeMap<String, Vec<String>> = Default::default();
    for line in lines {
        let resp = registry.handle_line(line);
        by_node.entry(node_of(&resp)).or_default().push(resp);
    }
    by_node
}

/// Three nodes, three days each, predicting every half day.
pub fn three_node_transcripts() -> Vec<Vec<String>> {
    vec![
        node_transcript("north", 1, 3, 48),
        node_transcript("east-2", 2, 3, 48),
        node_transcript("S_3", 3, 3, 48),
    ]
}

/// Result of the isolation and restart checks: the failures, empty when
/// everything matched.
pub fn isolation_failures(scratch: &Path) -> Vec<String> {
    let mut failures = Vec::new();
    let transcripts = three_node_transcripts();
    let merged = interleave(&transcripts);

    let shared = registry(None);
    let together = replay(&shared, &merged);
    let answered: usize = together.values().map(Vec::len).sum();
    if answered != merged.len() {
        failures.push(format!(
            "{} responses for {} messages",
            answered,
            merged.len()
        ));
    }
    for t in &transcripts {
        let node = node_of(&registry(None).handle_line(&t[0]));
        let alone = replay(&registry(None), t);
        if together.get(&node) != alone.get(&node) {
            failures.push(format!(
                "node {node} differs between shared and single-node replay"
            ));
        }
        let predictions = alone[&node]
            .iter()
            .filter(|r| r.contains("\"points\""))
            .count();
        if predictions == 0 {
            failures.push(format!("node {node} never produced a forecast"));
        }
    }

    let dir = scratch.join("restart");
    let cut = merged.len() / 2;
    let first = registry(Some(dir.clone()));
    let mut before = replay(&first, &merged[..cut]);
    drop(first);
    let second = registry(Some(dir));
    let after = replay(&second, &merged[cut..]);
    for (node, resp) in after {
        before.entry(node).or_default().extend(resp);
    }
    if before != together {
        failures.push("responses after a restart differ from an uninterrupted run".into());
    }
    failures
}
