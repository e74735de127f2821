use sdlstm_core::arima::ArimaError;
use sdlstm_core::combiner::CombinerError;
use sdlstm_core::eval::EvalError;
use sdlstm_core::sdlstm::SdLstmError;
use sdlstm_core::series::{CsvError, SeriesError};
use serde_json::json;
use thiserror::Error;

use crate::modelfile::ModelFileError;

/// Failure of a CLI command, classified by exit code: 1 usage, 2 data,
/// 3 numeric.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Data { kind: &'static str, message: String },
    #[error("{message}")]
    Numeric { kind: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Numeric { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Data { kind, .. } | CliError::Numeric { kind, .. } => kind,
        }
    }

    /// The single diagnostic line written to stderr.
    pub fn to_json_line(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }

    pub fn data(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Data {
            kind,
            message: message.into(),
        }
    }

    pub fn numeric(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Numeric {
            kind,
            message: message.into(),
        }
    }
}

pub fn series_kind(e: &SeriesError) -> &'static str {
    match e {
        SeriesError::Invalid(_) => "InvalidSeries",
        SeriesError::DisaggregationUnsupported { .. } => "DisaggregationUnsupported",
        SeriesError::MisalignedSeries(_) => "MisalignedSeries",
        SeriesError::DegenerateSeries(_) => "DegenerateSeries",
        SeriesError::SeriesTooShort { .. } => "SeriesTooShort",
        SeriesError::EmptyMask => "EmptyMask",
        SeriesError::InvalidParameter(_) => "InvalidParameter",
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::data(series_kind(&e), e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Series(inner) => inner.into(),
            other => CliError::data("InvalidCsv", other.to_string()),
        }
    }
}

impl From<SdLstmError> for CliError {
    fn from(e: SdLstmError) -> Self {
        let msg = e.to_string();
        match e {
            SdLstmError::ShapeMismatch(_) => CliError::data("ShapeMismatch", msg),
            SdLstmError::SeriesTooShort { .. } => CliError::data("SeriesTooShort", msg),
            SdLstmError::IntervalMismatch { .. } => CliError::data("IntervalMismatch", msg),
            SdLstmError::DegenerateSeries => CliError::data("DegenerateSeries", msg),
            SdLstmError::InvalidConfig(_) => CliError::Usage(msg),
            SdLstmError::NonFinite(_) => CliError::numeric("NonFinite", msg),
            SdLstmError::Series(inner) => inner.into(),
        }
    }
}

impl From<ArimaError> for CliError {
    fn from(e: ArimaError) -> Self {
        let msg = e.to_string();
        match e {
            ArimaError::InvalidOrder(_) => CliError::Usage(msg),
            ArimaError::SeriesTooShort { .. } => CliError::data("SeriesTooShort", msg),
            ArimaError::NonStationaryFit => CliError::numeric("NonStationaryFit", msg),
            ArimaError::SingularNormalEquations => {
                CliError::numeric("SingularNormalEquations", msg)
            }
            ArimaError::NoViableOrder => CliError::numeric("NoViableOrder", msg),
            ArimaError::InvalidModel(_) => CliError::data("InvalidModel", msg),
        }
    }
}

impl From<CombinerError> for CliError {
    fn from(e: CombinerError) -> Self {
        let msg = e.to_string();
        match e {
            CombinerError::UntrainedModel(_) => CliError::data("UntrainedModel", msg),
            CombinerError::HistoryGap { .. } => CliError::data("HistoryGap", msg),
            CombinerError::IntervalMismatch(_) => CliError::data("IntervalMismatch", msg),
            CombinerError::MisalignedHistory(_) => CliError::data("MisalignedHistory", msg),
            CombinerError::EmptyHorizon { .. } => CliError::Usage(msg),
            CombinerError::Schedule(_) => CliError::Usage(msg),
            CombinerError::Lstm(inner) => inner.into(),
            CombinerError::Arima(inner) => inner.into(),
            CombinerError::Series(inner) => inner.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let msg = e.to_string();
        match e {
            EvalError::ZeroActual { .. } => CliError::data("ZeroActual", msg),
            EvalError::LengthMismatch { .. } => CliError::data("LengthMismatch", msg),
            EvalError::Empty => CliError::data("EmptyReport", msg),
            EvalError::Alignment(_) => CliError::data("AlignmentError", msg),
            EvalError::SpanMismatch(_) => CliError::data("SpanMismatch", msg),
            EvalError::TooFewReports => CliError::Usage(msg),
            EvalError::Combiner(inner) => inner.into(),
            EvalError::Benchmark(_) => CliError::numeric("BenchmarkFailed", msg),
        }
    }
}

impl From<ModelFileError> for CliError {
    fn from(e: ModelFileError) -> Self {
        let msg = e.to_string();
        match e {
            ModelFileError::Corrupt { .. } => CliError::data("CorruptFile", msg),
            ModelFileError::VersionUnsupported(_) => CliError::data("VersionUnsupported", msg),
            ModelFileError::WrongKind { .. } => CliError::data("WrongModelKind", msg),
            ModelFileError::Io(_) => CliError::data("Io", msg),
        }
    }
}
