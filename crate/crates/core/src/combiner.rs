//! Unequal-interval combination of the two forecasters.
//!
//! A [`CombinerSchedule`] partitions the day into windows owned either by
//! the recurrent model (hourly steps) or by ARIMA (quarter-hour steps). The
//! combiner only routes; it never blends values.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Duration, Utc, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::{self, ArimaError, ArimaModel, ArimaOrder};
use crate::sdlstm::{self, SdLstmError, SdLstmModel, TrainConfig};
use crate::series::{format_timestamp, minute_of_day, Interval, SeriesError, TrafficSeries};

pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombinerError {
    #[error("model for {0} windows has not been trained yet")]
    UntrainedModel(ModelKind),
    #[error("history gap: expected next sample at {expected}, got {found}")]
    HistoryGap { expected: String, found: String },
    #[error("history must be sampled every 900s, got {0}s")]
    IntervalMismatch(u32),
    #[error("history must start on a quarter-hour boundary, starts at {0}")]
    MisalignedHistory(String),
    #[error("horizon end {end} is not after the forecast origin {origin}")]
    EmptyHorizon { origin: String, end: String },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Lstm(#[from] SdLstmError),
    #[error(transparent)]
    Arima(#[from] ArimaError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sdlstm,
    Arima,
}

impl ModelKind {
    /// Step length each model forecasts at.
    pub fn interval(self) -> Interval {
        match self {
            ModelKind::Sdlstm => Interval::Hour,
            ModelKind::Arima => Interval::QuarterHour,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sdlstm => "sdlstm",
            ModelKind::Arima => "arima",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sdlstm" => Ok(ModelKind::Sdlstm),
            "arima" => Ok(ModelKind::Arima),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

/// `[start_minute, end_minute)` of the day owned by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleWindow {
    pub start_minute: u32,
    pub end_minute: u32,
    pub kind: ModelKind,
}

/// Windows partitioning one day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScheduleWindow>", into = "Vec<ScheduleWindow>")]
pub struct DaySchedule {
    windows: Vec<ScheduleWindow>,
}

impl DaySchedule {
    pub fn new(mut windows: Vec<ScheduleWindow>) -> Result<Self, CombinerError> {
        windows.sort_by_key(|w| w.start_minute);
        let mut cursor = 0;
        for w in &windows {
            if w.start_minute != cursor {
                return Err(CombinerError::Schedule(format!(
                    "gap or overlap at minute {cursor}: next window starts at {}",
                    w.start_minute
                )));
            }
            if w.end_minute <= w.start_minute {
                return Err(CombinerError::Schedule(format!(
                    "window [{}, {}) is empty",
                    w.start_minute, w.end_minute
                )));
            }
            let step = w.kind.interval().secs() / 60;
            if w.start_minute % step != 0 || w.end_minute % step != 0 {
                return Err(CombinerError::Schedule(format!(
                    "{} window [{}, {}) must start and end on {step}-minute marks",
                    w.kind, w.start_minute, w.end_minute
                )));
            }
            cursor = w.end_minute;
        }
        if cursor != MINUTES_PER_DAY {
            return Err(CombinerError::Schedule(format!(
                "windows cover minutes 0..{cursor}, not the whole day"
            )));
        }
        Ok(Self { windows })
    }

    pub fn uniform(kind: ModelKind) -> Self {
        Self {
            windows: vec![ScheduleWindow {
                start_minute: 0,
                end_minute: MINUTES_PER_DAY,
                kind,
            }],
        }
    }

    pub fn windows(&self) -> &[ScheduleWindow] {
        &self.windows
    }

    pub fn window_at_minute(&self, minute: u32) -> &ScheduleWindow {
        self.windows
            .iter()
            .find(|w| w.start_minute <= minute && minute < w.end_minute)
            .expect("validated schedule covers the whole day")
    }
}

impl TryFrom<Vec<ScheduleWindow>> for DaySchedule {
    type Error = CombinerError;

    fn try_from(windows: Vec<ScheduleWindow>) -> Result<Self, Self::Error> {
        DaySchedule::new(windows)
    }
}

impl From<DaySchedule> for Vec<ScheduleWindow> {
    fn from(s: DaySchedule) -> Self {
        s.windows
    }
}

/// A day schedule plus optional per-weekday replacements, keyed by
/// three-letter lowercase day names (`mon` .. `sun`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinerSchedule {
    pub default: DaySchedule,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weekdays: BTreeMap<String, DaySchedule>,
}

pub fn weekday_key(day: Weekday) -> &'static str {
    match day {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

/// ARIMA over [05:00, 08:00), the recurrent model elsewhere.
pub fn default_schedule() -> CombinerSchedule {
    CombinerSchedule::single(
        DaySchedule::new(vec![
            ScheduleWindow {
                start_minute: 0,
                end_minute: 300,
                kind: ModelKind::Sdlstm,
            },
            ScheduleWindow {
                start_minute: 300,
                end_minute: 480,
                kind: ModelKind::Arima,
            },
            ScheduleWindow {
                start_minute: 480,
                end_minute: MINUTES_PER_DAY,
                kind: ModelKind::Sdlstm,
            },
        ])
        .expect("default schedule is a partition"),
    )
}

impl CombinerSchedule {
    pub fn single(default: DaySchedule) -> Self {
        Self {
            default,
            weekdays: BTreeMap::new(),
        }
    }

    pub fn uniform(kind: ModelKind) -> Self {
        Self::single(DaySchedule::uniform(kind))
    }

    pub fn validate(&self) -> Result<(), CombinerError> {
        const KEYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
        if let Some(k) = self.weekdays.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CombinerError::Schedule(format!(
                "unknown weekday key {k:?}"
            )));
        }
        Ok(())
    }

    pub fn day(&self, ts: DateTime<Utc>) -> &DaySchedule {
        self.weekdays
            .get(weekday_key(ts.weekday()))
            .unwrap_or(&self.default)
    }

    pub fn window_at(&self, ts: DateTime<Utc>) -> &ScheduleWindow {
        self.day(ts).window_at_minute(minute_of_day(ts))
    }

    pub fn kind_at(&self, ts: DateTime<Utc>) -> ModelKind {
        self.window_at(ts).kind
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    pub source: ModelKind,
    pub interval: Interval,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HybridForecast {
    pub points: Vec<ForecastPoint>,
}

impl HybridForecast {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Instants the walk emits between `origin` and `horizon_end`.
fn emission_plan(
    schedule: &CombinerSchedule,
    origin: DateTime<Utc>,
    horizon_end: DateTime<Utc>,
) -> Vec<(DateTime<Utc>, ModelKind)> {
    let mut plan = Vec::new();
    let mut t = origin;
    while t < horizon_end {
        match schedule.kind_at(t) {
            ModelKind::Arima => {
                plan.push((t, ModelKind::Arima));
                t += Interval::QuarterHour.duration();
            }
            ModelKind::Sdlstm if Interval::Hour.is_aligned(t) => {
                plan.push((t, ModelKind::Sdlstm));
                t += Interval::Hour.duration();
            }
            // partially elapsed hour: its value is not forecast, only the
            // following whole hours are
            ModelKind::Sdlstm => t = Interval::Hour.ceil(t),
        }
    }
    plan
}

fn steps_between(from: DateTime<Utc>, to: DateTime<Utc>, interval: Interval) -> usize {
    ((to - from).num_seconds() / i64::from(interval.secs())) as usize
}

/// Forecasts from the end of `history` (quarter-hour counts) up to, but
/// excluding, `horizon_end`.
///
/// Inside ARIMA windows the ARIMA model is re-anchored on the true history
/// and emits quarter-hour values. Inside recurrent windows the hourly
/// resample of the history is rolled forward recursively, feeding the
/// model's own outputs back when more than one step is needed. Each point
/// carries its source.
pub fn predict_hybrid(
    lstm: Option<&SdLstmModel>,
    arima_model: Option<&ArimaModel>,
    schedule: &CombinerSchedule,
    history: &TrafficSeries,
    horizon_end: DateTime<Utc>,
) -> Result<HybridForecast, CombinerError> {
    if history.interval() != Interval::QuarterHour {
        return Err(CombinerError::IntervalMismatch(history.interval().secs()));
    }
    if !Interval::QuarterHour.is_aligned(history.start()) {
        return Err(CombinerError::MisalignedHistory(format_timestamp(
            history.start(),
        )));
    }
    let origin = history.end();
    if horizon_end <= origin {
        return Err(CombinerError::EmptyHorizon {
            origin: format_timestamp(origin),
            end: format_timestamp(horizon_end),
        });
    }
    let plan = emission_plan(schedule, origin, horizon_end);

    let hourly_origin = Interval::Hour.floor(origin);
    let lstm_steps = plan
        .iter()
        .filter(|(_, k)| *k == ModelKind::Sdlstm)
        .map(|(t, _)| steps_between(hourly_origin, *t, Interval::Hour) + 1)
        .max()
        .unwrap_or(0);
    let arima_steps = plan
        .iter()
        .filter(|(_, k)| *k == ModelKind::Arima)
        .map(|(t, _)| steps_between(origin, *t, Interval::QuarterHour) + 1)
        .max()
        .unwrap_or(0);

    let lstm_path = if lstm_steps > 0 {
        let model = lstm.ok_or(CombinerError::UntrainedModel(ModelKind::Sdlstm))?;
        let hourly =
            history
                .resample_complete(Interval::Hour)?
                .ok_or(SdLstmError::SeriesTooShort {
                    needed: model.input_window,
                    actual: 0,
                })?;
        debug_assert_eq!(hourly.end(), hourly_origin);
        model.forecast_recursive(hourly.counts(), lstm_steps)?
    } else {
        Vec::new()
    };

    let arima_path = if arima_steps > 0 {
        let model = arima_model.ok_or(CombinerError::UntrainedModel(ModelKind::Arima))?;
        let counts = history.counts();
        let recent = &counts[counts.len().saturating_sub(model.n_obs.max(1))..];
        model.anchored(recent)?.forecast(arima_steps)
    } else {
        Vec::new()
    };

    let points = plan
        .into_iter()
        .map(|(t, kind)| {
            let value = match kind {
                ModelKind::Sdlstm => lstm_path[steps_between(hourly_origin, t, Interval::Hour)],
                ModelKind::Arima => arima_path[steps_between(origin, t, Interval::QuarterHour)],
            };
            ForecastPoint {
                timestamp: t,
                value,
                source: kind,
                interval: kind.interval(),
            }
        })
        .collect();
    Ok(HybridForecast { points })
}

/// Operational replay: at every step of the schedule the true history up
/// to that instant is handed to [`predict_hybrid`] for exactly one step.
pub fn rolling_one_step(
    lstm: Option<&SdLstmModel>,
    arima_model: Option<&ArimaModel>,
    schedule: &CombinerSchedule,
    truth: &TrafficSeries,
    from: DateTime<Utc>,
    until: DateTime<Utc>,
) -> Result<HybridForecast, CombinerError> {
    let mut points = Vec::new();
    let mut t = from;
    while t < until {
        let kind = schedule.kind_at(t);
        if kind == ModelKind::Sdlstm && !Interval::Hour.is_aligned(t) {
            t = Interval::Hour.ceil(t);
            continue;
        }
        let step_end = t + kind.interval().duration();
        let history = truth.prefix_until(t)?;
        let f = predict_hybrid(lstm, arima_model, schedule, &history, step_end)?;
        points.extend(f.points);
        t = step_end;
    }
    Ok(HybridForecast { points })
}

/// Retraining rules for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdatePolicy {
    /// New quarter-hour observations that trigger a retrain.
    pub retrain_threshold: usize,
    pub train: TrainConfig,
    /// Epochs used when continuing an existing recurrent model.
    pub retrain_epochs: usize,
    /// Quarter-hour samples ARIMA is fitted on (most recent).
    pub arima_window: usize,
    /// Fixed ARIMA order; when absent the order is chosen by AIC over
    /// `arima_grid`.
    pub arima_order: Option<ArimaOrder>,
    pub arima_grid: [usize; 3],
    /// Cap on quarter-hour samples fed to the recurrent model.
    pub max_train_samples: usize,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        Self {
            retrain_threshold: 96,
            train: TrainConfig::default(),
            retrain_epochs: 20,
            arima_window: 7 * 96,
            arima_order: None,
            arima_grid: [2, 1, 2],
            max_train_samples: 60 * 96,
        }
    }
}

/// History and models of one detection point.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEntry {
    pub history: Option<TrafficSeries>,
    pub lstm: Option<SdLstmModel>,
    pub arima: Option<ArimaModel>,
    pub schedule: CombinerSchedule,
    pub version: u64,
    pub last_retrain: Option<DateTime<Utc>>,
    /// Observations appended since the last retrain.
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOutcome {
    Appended,
    Retrained { version: u64 },
    Deferred { reason: String },
}

/// Output of a retrain, applied with [`NodeEntry::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct Retrained {
    pub lstm: SdLstmModel,
    pub arima: ArimaModel,
    pub trained_until: DateTime<Utc>,
    /// Version the job was started from.
    pub base_version: u64,
    /// Observations covered by the job, deducted from `pending` on apply.
    pub covered: usize,
}

/// Snapshot needed to retrain a node off the ingestion path.
#[derive(Debug, Clone)]
pub struct RetrainJob {
    history: TrafficSeries,
    lstm: Option<SdLstmModel>,
    arima: Option<ArimaModel>,
    base_version: u64,
    covered: usize,
    policy: UpdatePolicy,
}

impl NodeEntry {
    pub fn new(schedule: CombinerSchedule) -> Self {
        Self {
            history: None,
            lstm: None,
            arima: None,
            schedule,
            version: 0,
            last_retrain: None,
            pending: 0,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.lstm.is_some() && self.arima.is_some()
    }

    /// Appends observations that must continue the stored history exactly.
    pub fn append(&mut self, obs: &TrafficSeries) -> Result<(), CombinerError> {
        if obs.interval() != Interval::QuarterHour {
            return Err(CombinerError::IntervalMismatch(obs.interval().secs()));
        }
        match &mut self.history {
            None => {
                if !Interval::QuarterHour.is_aligned(obs.start()) {
                    return Err(CombinerError::MisalignedHistory(format_timestamp(
                        obs.start(),
                    )));
                }
                self.history = Some(obs.clone());
            }
            Some(h) => {
                if obs.start() != h.end() {
                    return Err(CombinerError::HistoryGap {
                        expected: format_timestamp(h.end()),
                        found: format_timestamp(obs.start()),
                    });
                }
                h.extend(obs)?;
            }
        }
        self.pending += obs.len();
        Ok(())
    }

    pub fn needs_retrain(&self, policy: &UpdatePolicy) -> bool {
        self.history.is_some() && self.pending >= policy.retrain_threshold
    }

    pub fn retrain_job(&self, policy: &UpdatePolicy) -> Option<RetrainJob> {
        let history = self.history.as_ref()?;
        Some(RetrainJob {
            history: history.tail(policy.max_train_samples.max(1)),
            lstm: self.lstm.clone(),
            arima: self.arima.clone(),
            base_version: self.version,
            covered: self.pending,
            policy: policy.clone(),
        })
    }

    /// Installs retrained models. Returns false when the result is stale
    /// (another retrain finished first).
    pub fn apply(&mut self, result: Retrained) -> bool {
        if result.base_version != self.version {
            return false;
        }
        self.lstm = Some(result.lstm);
        self.arima = Some(result.arima);
        self.version += 1;
        self.last_retrain = Some(result.trained_until);
        self.pending = self.pending.saturating_sub(result.covered);
        true
    }

    pub fn predict(&self, horizon_end: DateTime<Utc>) -> Result<HybridForecast, CombinerError> {
        let history = self
            .history
            .as_ref()
            .ok_or(CombinerError::UntrainedModel(ModelKind::Sdlstm))?;
        if !self.is_trained() {
            let missing = if self.lstm.is_none() {
                ModelKind::Sdlstm
            } else {
                ModelKind::Arima
            };
            return Err(CombinerError::UntrainedModel(missing));
        }
        predict_hybrid(
            self.lstm.as_ref(),
            self.arima.as_ref(),
            &self.schedule,
            history,
            horizon_end,
        )
    }
}

impl RetrainJob {
    pub fn base_version(&self) -> u64 {
        self.base_version
    }

    /// Fits both models on the snapshot. `Ok(None)` means there is not yet
    /// enough usable history; the caller keeps accumulating.
    pub fn run(&self) -> Result<Option<Retrained>, CombinerError> {
        let policy = &self.policy;
        let hourly_len = self
            .history
            .resample_complete(Interval::Hour)?
            .map_or(0, |h| h.len());
        let input_window = self
            .lstm
            .as_ref()
            .map_or(policy.train.input_window, |m| m.input_window);
        if hourly_len < input_window + 1 || self.history.len() < policy.train.detector.window {
            return Ok(None);
        }

        let lstm = match &self.lstm {
            None => sdlstm::train(&self.history, &policy.train),
            Some(prev) => sdlstm::resume(
                prev,
                &self.history,
                &policy.train,
                policy.retrain_epochs,
                policy.train.seed.wrapping_add(self.base_version + 1),
            ),
        };
        let lstm = match lstm {
            Ok(m) => m,
            Err(SdLstmError::DegenerateSeries) | Err(SdLstmError::SeriesTooShort { .. }) => {
                return Ok(None)
            }
            Err(e) => return Err(e.into()),
        };

        let recent = self.history.tail(policy.arima_window.max(1));
        let fitted = match policy.arima_order {
            Some(order) => arima::fit(&recent, order),
            None => {
                let [p, d, q] = policy.arima_grid;
                arima::select_and_fit(recent.counts(), p, d, q, recent.interval()).map(|s| s.model)
            }
        };
        let arima = match (fitted, &self.arima) {
            (Ok(m), _) => m,
            // keep serving with the previous coefficients, re-anchored
            (Err(_), Some(prev)) => prev.anchored(recent.counts())?,
            (Err(ArimaError::SeriesTooShort { .. }), None)
            | (Err(ArimaError::NoViableOrder), None)
            | (Err(ArimaError::SingularNormalEquations), None) => return Ok(None),
            (Err(e), None) => return Err(e.into()),
        };

        Ok(Some(Retrained {
            lstm,
            arima,
            trained_until: self.history.end(),
            base_version: self.base_version,
            covered: self.covered,
        }))
    }
}

/// Appends `obs` and retrains in place once enough new data has arrived.
pub fn update_models(
    entry: &mut NodeEntry,
    obs: &TrafficSeries,
    policy: &UpdatePolicy,
) -> Result<UpdateOutcome, CombinerError> {
    entry.append(obs)?;
    if !entry.needs_retrain(policy) {
        return Ok(UpdateOutcome::Appended);
    }
    let job = entry.retrain_job(policy).expect("history present");
    match job.run()? {
        Some(result) => {
            entry.apply(result);
            Ok(UpdateOutcome::Retrained {
                version: entry.version,
            })
        }
        None => Ok(UpdateOutcome::Deferred {
            reason: "not enough whole hours of history to fit both models".into(),
        }),
    }
}

/// Convenience: the instant `hours` after `ts`.
pub fn hours_after(ts: DateTime<Utc>, hours: i64) -> DateTime<Utc> {
    ts + Duration::hours(hours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arima::ArimaTail;
    use crate::sdlstm::LstmParams;
    use crate::series::NormParams;
    use chrono::TimeZone;

    fn at(d: u32, h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 3, d, h, m, 0).unwrap()
    }

    fn bias_lstm(bias: f64) -> SdLstmModel {
        let mut params = LstmParams::zeros(2, 1);
        params.readout_bias = bias;
        SdLstmModel {
            params,
            dropout_p: 0.1,
            norm: NormParams::new(0.0, 100.0).unwrap(),
            input_window: 4,
            interval: Interval::Hour,
            training_loss: vec![],
        }
    }

    fn walk_arima() -> ArimaModel {
        ArimaModel {
            order: ArimaOrder::new(0, 1, 0).unwrap(),
            intercept: 0.0,
            ar: vec![],
            ma: vec![],
            sigma2: 1.0,
            tail: ArimaTail {
                differenced: vec![],
                residuals: vec![],
                levels: vec![0.0],
            },
            interval: Interval::QuarterHour,
            n_obs: 96,
        }
    }

    fn history_until(end: DateTime<Utc>) -> TrafficSeries {
        let start = end - Duration::hours(24);
        let n = 96;
        TrafficSeries::new(
            start,
            Interval::QuarterHour,
            (0..n).map(|i| 10.0 + (i % 5) as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn default_schedule_lookups() {
        let s = default_schedule();
        let w = s.window_at(at(5, 6, 15));
        assert_eq!((w.kind, w.kind.interval().secs()), (ModelKind::Arima, 900));
        let w = s.window_at(at(5, 13, 0));
        assert_eq!(
            (w.kind, w.kind.interval().secs()),
            (ModelKind::Sdlstm, 3600)
        );
        let total: u32 = s
            .default
            .windows()
            .iter()
            .map(|w| w.end_minute - w.start_minute)
            .sum();
        assert_eq!(total, MINUTES_PER_DAY);
        for pair in s.default.windows().windows(2) {
            assert_eq!(pair[0].end_minute, pair[1].start_minute);
        }
    }

    #[test]
    fn schedule_validation() {
        let w = |a, b, kind| ScheduleWindow {
            start_minute: a,
            end_minute: b,
            kind,
        };
        assert!(DaySchedule::new(vec![w(0, 600, ModelKind::Sdlstm)]).is_err());
        assert!(DaySchedule::new(vec![
            w(0, 300, ModelKind::Sdlstm),
            w(240, 1440, ModelKind::Sdlstm)
        ])
        .is_err());
        assert!(DaySchedule::new(vec![
            w(0, 330, ModelKind::Sdlstm),
            w(330, 1440, ModelKind::Arima)
        ])
        .is_err());
        assert!(DaySchedule::new(vec![
            w(0, 300, ModelKind::Sdlstm),
            w(300, 315, ModelKind::Arima),
            w(315, 1440, ModelKind::Arima)
        ])
        .is_ok());
        let mut s = default_schedule();
        s.weekdays
            .insert("funday".into(), DaySchedule::uniform(ModelKind::Arima));
        assert!(s.validate().is_err());
    }

    #[test]
    fn weekday_override_applies_to_that_day_only() {
        let mut s = default_schedule();
        s.weekdays
            .insert("sat".into(), DaySchedule::uniform(ModelKind::Sdlstm));
        // 2018-03-10 is a Saturday
        assert_eq!(s.kind_at(at(10, 6, 0)), ModelKind::Sdlstm);
        assert_eq!(s.kind_at(at(9, 6, 0)), ModelKind::Arima);
    }

    #[test]
    fn single_window_horizon_is_hourly() {
        let h = history_until(at(5, 9, 0));
        let f = predict_hybrid(
            Some(&bias_lstm(0.3)),
            Some(&walk_arima()),
            &default_schedule(),
            &h,
            at(5, 12, 0),
        )
        .unwrap();
        assert_eq!(f.len(), 3);
        assert!(f
            .points
            .iter()
            .all(|p| p.source == ModelKind::Sdlstm && p.interval == Interval::Hour));
        assert_eq!(
            f.points[1].timestamp - f.points[0].timestamp,
            Duration::hours(1)
        );
        assert!(f.points.iter().all(|p| (p.value - 30.0).abs() < 1e-12));
    }

    #[test]
    fn crossing_the_volatile_window() {
        let h = history_until(at(5, 4, 0));
        let f = predict_hybrid(
            Some(&bias_lstm(0.3)),
            Some(&walk_arima()),
            &default_schedule(),
            &h,
            at(5, 9, 0),
        )
        .unwrap();
        let kinds: Vec<ModelKind> = f.points.iter().map(|p| p.source).collect();
        assert_eq!(kinds.len(), 1 + 12 + 1);
        assert_eq!(kinds[0], ModelKind::Sdlstm);
        assert!(kinds[1..13].iter().all(|k| *k == ModelKind::Arima));
        assert_eq!(kinds[13], ModelKind::Sdlstm);
        assert_eq!(f.points[1].timestamp, at(5, 5, 0));
        assert_eq!(f.points[12].timestamp, at(5, 7, 45));
        assert_eq!(f.points[13].timestamp, at(5, 8, 0));
    }

    #[test]
    fn missing_model_is_reported() {
        let h = history_until(at(5, 4, 0));
        let err = predict_hybrid(
            Some(&bias_lstm(0.3)),
            None,
            &default_schedule(),
            &h,
            at(5, 9, 0),
        )
        .unwrap_err();
        assert_eq!(err, CombinerError::UntrainedModel(ModelKind::Arima));
        // a horizon that never touches ARIMA does not need it
        assert!(predict_hybrid(
            Some(&bias_lstm(0.3)),
            None,
            &default_schedule(),
            &h,
            at(5, 5, 0)
        )
        .is_ok());
    }

    #[test]
    fn mid_hour_origin_skips_the_partial_hour() {
        let h = history_until(at(5, 10, 30));
        let f = predict_hybrid(
            Some(&bias_lstm(0.3)),
            None,
            &default_schedule(),
            &h,
            at(5, 13, 0),
        )
        .unwrap();
        let ts: Vec<_> = f.points.iter().map(|p| p.timestamp).collect();
        assert_eq!(ts, vec![at(5, 11, 0), at(5, 12, 0)]);
    }

    #[test]
    fn empty_horizon_rejected() {
        let h = history_until(at(5, 4, 0));
        assert!(matches!(
            predict_hybrid(None, None, &default_schedule(), &h, at(5, 4, 0)),
            Err(CombinerError::EmptyHorizon { .. })
        ));
    }

    #[test]
    fn node_entry_gap_and_threshold() {
        let mut entry = NodeEntry::new(default_schedule());
        let policy = UpdatePolicy {
            retrain_threshold: 8,
            ..UpdatePolicy::default()
        };
        let first = TrafficSeries::new(at(5, 0, 0), Interval::QuarterHour, vec![1.0; 4]).unwrap();
        assert_eq!(
            update_models(&mut entry, &first, &policy).unwrap(),
            UpdateOutcome::Appended
        );
        let gap = TrafficSeries::new(at(5, 2, 0), Interval::QuarterHour, vec![1.0]).unwrap();
        assert!(matches!(
            update_models(&mut entry, &gap, &policy),
            Err(CombinerError::HistoryGap { .. })
        ));
        assert_eq!(entry.history.as_ref().unwrap().len(), 4);
        let next = TrafficSeries::new(at(5, 1, 0), Interval::QuarterHour, vec![1.0; 4]).unwrap();
        // threshold reached but two hours cannot train a 24-hour window
        assert!(matches!(
            update_models(&mut entry, &next, &policy).unwrap(),
            UpdateOutcome::Deferred { .. }
        ));
        assert_eq!(entry.version, 0);
        assert_eq!(entry.pending, 8);
    }
}
