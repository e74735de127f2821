//! Versioned JSON model files.
//!
//! Floats are written with shortest round-trip formatting and parsed back
//! exactly, so a loaded model forecasts bit-for-bit like the saved one.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use sdlstm_core::arima::ArimaModel;
use sdlstm_core::combiner::CombinerSchedule;
use sdlstm_core::sdlstm::{SdLstmModel, TrainConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("corrupt model file at `{path}`: {reason}")]
    Corrupt { path: String, reason: String },
    #[error("model file format_version {0} is not supported (this build reads {FORMAT_VERSION})")]
    VersionUnsupported(u64),
    #[error("expected a {expected} model file, found {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub train_config: Option<TrainConfig>,
    pub data_start: Option<DateTime<Utc>>,
    pub data_end: Option<DateTime<Utc>>,
    pub seed: Option<u64>,
    /// Model version counter, for files written by the service.
    #[serde(default)]
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub sdlstm: SdLstmModel,
    pub arima: ArimaModel,
    pub schedule: CombinerSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Sdlstm(SdLstmModel),
    Arima(ArimaModel),
    Bundle(Bundle),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Sdlstm(_) => "sdlstm",
            Payload::Arima(_) => "arima",
            Payload::Bundle(_) => "bundle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub format_version: u32,
    pub provenance: Provenance,
    pub payload: Payload,
}

#[derive(Serialize)]
struct RawOut<'a, T: Serialize> {
    format_version: u32,
    kind: &'static str,
    provenance: &'a Provenance,
    payload: &'a T,
}

#[derive(Deserialize)]
struct RawIn {
    format_version: Option<serde_json::Value>,
    kind: Option<String>,
    provenance: Option<serde_json::Value>,
    payload: Option<serde_json::Value>,
}

fn field<T: serde::de::DeserializeOwned>(
    prefix: &str,
    value: serde_json::Value,
) -> Result<T, ModelFileError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        ModelFileError::Corrupt {
            path: if inner == "." {
                prefix.to_string()
            } else {
                format!("{prefix}.{inner}")
            },
            reason: e.inner().to_string(),
        }
    })
}

impl ModelFile {
    pub fn new(payload: Payload, provenance: Provenance) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            provenance,
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        fn render<T: Serialize>(f: &ModelFile, payload: &T) -> String {
            let raw = RawOut {
                format_version: f.format_version,
                kind: f.payload.kind(),
                provenance: &f.provenance,
                payload,
            };
            serde_json::to_string_pretty(&raw).expect("model files serialize")
        }
        let mut s = match &self.payload {
            Payload::Sdlstm(m) => render(self, m),
            Payload::Arima(m) => render(self, m),
            Payload::Bundle(b) => render(self, b),
        };
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<Self, ModelFileError> {
        let probe: RawIn = serde_json::from_str(raw).map_err(|e| ModelFileError::Corrupt {
            path: ".".into(),
            reason: e.to_string(),
        })?;
        match probe.format_version {
            None => {
                return Err(ModelFileError::Corrupt {
                    path: "format_version".into(),
                    reason: "missing field".into(),
                })
            }
            Some(v) => match v.as_u64() {
                Some(n) if n == u64::from(FORMAT_VERSION) => {}
                Some(n) => return Err(ModelFileError::VersionUnsupported(n)),
                None => {
                    return Err(ModelFileError::Corrupt {
                        path: "format_version".into(),
                        reason: format!("expected an unsigned integer, found {v}"),
                    })
                }
            },
        }

        let missing = |name: &str| ModelFileError::Corrupt {
            path: name.into(),
            reason: "missing field".into(),
        };
        let provenance = field(
            "provenance",
            probe.provenance.ok_or_else(|| missing("provenance"))?,
        )?;
        let body = probe.payload.ok_or_else(|| missing("payload"))?;
        let payload = match probe.kind.as_deref() {
            Some("sdlstm") => Payload::Sdlstm(field("payload", body)?),
            Some("arima") => Payload::Arima(field("payload", body)?),
            Some("bundle") => Payload::Bundle(field("payload", body)?),
            Some(other) => {
                return Err(ModelFileError::Corrupt {
                    path: "kind".into(),
                    reason: format!("unknown kind {other:?} (sdlstm, arima, bundle)"),
                })
            }
            None => return Err(missing("kind")),
        };
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            provenance,
            payload,
        };
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), ModelFileError> {
        let corrupt = |path: &str, reason: String| ModelFileError::Corrupt {
            path: path.into(),
            reason,
        };
        match &self.payload {
            Payload::Sdlstm(m) => m.validate().map_err(|e| corrupt("payload", e.to_string())),
            Payload::Arima(m) => m.validate().map_err(|e| corrupt("payload", e.to_string())),
            Payload::Bundle(b) => {
                b.sdlstm
                    .validate()
                    .map_err(|e| corrupt("payload.sdlstm", e.to_string()))?;
                b.arima
                    .validate()
                    .map_err(|e| corrupt("payload.arima", e.to_string()))?;
                b.schedule
                    .validate()
                    .map_err(|e| corrupt("payload.schedule", e.to_string()))
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_json(&raw)
    }

    pub fn into_bundle(self) -> Result<Bundle, ModelFileError> {
        match self.payload {
            Payload::Bundle(b) => Ok(b),
            other => Err(ModelFileError::WrongKind {
                expected: "bundle",
                found: other.kind(),
            }),
        }
    }
}

/// Writes to a sibling temp file, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdlstm_core::arima::{ArimaOrder, ArimaTail};
    use sdlstm_core::series::Interval;

    fn arima() -> ArimaModel {
        ArimaModel {
            order: ArimaOrder::new(1, 0, 0).unwrap(),
            intercept: 0.1 + 0.2,
            ar: vec![0.7000000000000001],
            ma: vec![],
            sigma2: 1.0 / 3.0,
            tail: ArimaTail {
                differenced: vec![12.345678901234567],
                residuals: vec![],
                levels: vec![],
            },
            interval: Interval::QuarterHour,
            n_obs: 40,
        }
    }

    fn file() -> ModelFile {
        ModelFile::new(
            Payload::Arima(arima()),
            Provenance {
                train_config: None,
                data_start: None,
                data_end: None,
                seed: Some(3),
                version: 0,
            },
        )
    }

    #[test]
    fn floats_round_trip_exactly() {
        let f = file();
        let back = ModelFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_is_corrupt() {
        let json = file().to_json();
        let cut = &json[..json.len() / 2];
        assert!(matches!(
            ModelFile::from_json(cut),
            Err(ModelFileError::Corrupt { .. })
        ));
    }

    #[test]
    fn unknown_version_rejected() {
        let json = file()
            .to_json()
            .replace("\"format_version\": 1", "\"format_version\": 999");
        assert!(matches!(
            ModelFile::from_json(&json),
            Err(ModelFileError::VersionUnsupported(999))
        ));
    }

    #[test]
    fn corrupt_field_path_reported() {
        let json = file()
            .to_json()
            .replace("\"n_obs\": 40", "\"n_obs\": \"forty\"");
        match ModelFile::from_json(&json) {
            Err(ModelFileError::Corrupt { path, .. }) => assert!(path.contains("n_obs"), "{path}"),
            other => panic!("{other:?}"),
        }
    }
}
