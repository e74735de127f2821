//! Accuracy metrics, per-hour error profiles and model comparisons.

use std::io::{Read, Write};

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::{self, ArimaModel, ArimaOrder};
use crate::combiner::{self, CombinerError, CombinerSchedule, HybridForecast, ModelKind};
use crate::datagen::{self, GenSpec};
use crate::sdlstm::{self, SdLstmModel, TrainConfig};
use crate::series::{format_timestamp, parse_timestamp, CsvError, Interval, TrafficSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("actual value at position {index} is zero; percentage error undefined")]
    ZeroActual { index: usize },
    #[error("length mismatch: {actual} actual values, {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("reports cover different spans: {0}")]
    SpanMismatch(String),
    #[error("need at least two reports to compare")]
    TooFewReports,
    #[error(transparent)]
    Combiner(#[from] CombinerError),
    #[error("benchmark: {0}")]
    Benchmark(String),
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum = 0.0;
    for (i, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if a == 0.0 {
            return Err(EvalError::ZeroActual { index: i });
        }
        sum += ape(a, p);
    }
    Ok(sum / actual.len() as f64)
}

fn ape(actual: f64, predicted: f64) -> f64 {
    100.0 * (actual - predicted).abs() / actual.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayClass {
    Working,
    NonWorking,
    All,
}

impl DayClass {
    pub fn admits(self, ts: DateTime<Utc>) -> bool {
        let weekend = ts.weekday().number_from_monday() >= 6;
        match self {
            DayClass::Working => !weekend,
            DayClass::NonWorking => weekend,
            DayClass::All => true,
        }
    }
}

impl std::str::FromStr for DayClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "working" => Ok(DayClass::Working),
            "non-working" => Ok(DayClass::NonWorking),
            "all" => Ok(DayClass::All),
            other => Err(format!(
                "unknown day class {other:?} (working, non-working, all)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub timestamp: DateTime<Utc>,
    pub actual: f64,
    pub predicted: f64,
    pub ape_percent: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Drop points whose actual is zero instead of failing; the number
    /// dropped is reported.
    pub exclude_zero_actuals: bool,
}

/// Everything but the per-point rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub label: String,
    pub day_class: DayClass,
    pub span_start: DateTime<Utc>,
    pub span_end: DateTime<Utc>,
    pub points: usize,
    pub excluded_zero_actuals: usize,
    pub overall_mape: f64,
    /// Mean APE per hour of day; `None` where no point fell in that hour.
    pub per_hour: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub summary: EvalSummary,
    pub per_point: Vec<PointError>,
}

impl EvalReport {
    /// Aggregates rows; also used to check that a report is recomputable
    /// from its own rows.
    pub fn from_points(
        label: &str,
        day_class: DayClass,
        span: (DateTime<Utc>, DateTime<Utc>),
        per_point: Vec<PointError>,
        excluded_zero_actuals: usize,
    ) -> Result<Self, EvalError> {
        if per_point.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut sums = [0.0; 24];
        let mut counts = [0usize; 24];
        for p in &per_point {
            let h = p.timestamp.hour() as usize;
            sums[h] += p.ape_percent;
            counts[h] += 1;
        }
        let overall = per_point.iter().map(|p| p.ape_percent).sum::<f64>() / per_point.len() as f64;
        let per_hour = sums
            .iter()
            .zip(counts)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect();
        Ok(Self {
            summary: EvalSummary {
                label: label.to_string(),
                day_class,
                span_start: span.0,
                span_end: span.1,
                points: per_point.len(),
                excluded_zero_actuals,
                overall_mape: overall,
                per_hour,
            },
            per_point,
        })
    }

    pub fn overall_mape(&self) -> f64 {
        self.summary.overall_mape
    }

    /// Mean APE over points whose minute of day falls in `[start, end)`.
    pub fn window_mape(&self, start_minute: u32, end_minute: u32) -> Option<f64> {
        let apes: Vec<f64> = self
            .per_point
            .iter()
            .filter(|p| {
                let m = crate::series::minute_of_day(p.timestamp);
                start_minute <= m && m < end_minute
            })
            .map(|p| p.ape_percent)
            .collect();
        (!apes.is_empty()).then(|| apes.iter().sum::<f64>() / apes.len() as f64)
    }
}

/// Value of `truth` over `[ts, ts + interval)`, summing finer samples.
fn truth_at(
    truth: &TrafficSeries,
    ts: DateTime<Utc>,
    interval: Interval,
) -> Result<f64, EvalError> {
    let step = truth.interval().secs();
    if interval.secs() < step || !interval.secs().is_multiple_of(step) {
        return Err(EvalError::Alignment(format!(
            "{}s forecast at {} cannot be compared with {step}s truth",
            interval.secs(),
            format_timestamp(ts)
        )));
    }
    let first = truth.index_of(ts).ok_or_else(|| {
        EvalError::Alignment(format!("no truth sample at {}", format_timestamp(ts)))
    })?;
    let k = (interval.secs() / step) as usize;
    if first + k > truth.len() {
        return Err(EvalError::Alignment(format!(
            "truth ends before the bucket starting {} is complete",
            format_timestamp(ts)
        )));
    }
    Ok(truth.counts()[first..first + k].iter().sum())
}

pub fn evaluate(
    forecast: &HybridForecast,
    truth: &TrafficSeries,
    day_class: DayClass,
    label: &str,
) -> Result<EvalReport, EvalError> {
    evaluate_with(forecast, truth, day_class, label, EvalOptions::default())
}

/// Compares each forecast point with the truth at the point's own
/// resolution (hourly points against hourly sums).
pub fn evaluate_with(
    forecast: &HybridForecast,
    truth: &TrafficSeries,
    day_class: DayClass,
    label: &str,
    opts: EvalOptions,
) -> Result<EvalReport, EvalError> {
    let mut rows = Vec::new();
    let mut excluded = 0;
    let mut span: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for (i, p) in forecast.points.iter().enumerate() {
        if !day_class.admits(p.timestamp) {
            continue;
        }
        let actual = truth_at(truth, p.timestamp, p.interval)?;
        let end = p.timestamp + p.interval.duration();
        span = Some(match span {
            None => (p.timestamp, end),
            Some((a, b)) => (a.min(p.timestamp), b.max(end)),
        });
        if actual == 0.0 {
            if opts.exclude_zero_actuals {
                excluded += 1;
                continue;
            }
            return Err(EvalError::ZeroActual { index: i });
        }
        rows.push(PointError {
            timestamp: p.timestamp,
            actual,
            predicted: p.value,
            ape_percent: ape(actual, p.value),
        });
    }
    let span = span.ok_or(EvalError::Empty)?;
    EvalReport::from_points(label, day_class, span, rows, excluded)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub label: String,
    pub overall_mape: f64,
    /// Per-hour MAPE minus the best model's, where both are defined.
    pub per_hour_vs_best: Vec<Option<f64>>,
}

/// Ascending by overall MAPE, ties by label.
pub fn compare(reports: &[EvalSummary]) -> Result<Vec<RankEntry>, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports);
    }
    let first = &reports[0];
    if let Some(r) = reports.iter().find(|r| {
        (r.span_start, r.span_end, r.day_class)
            != (first.span_start, first.span_end, first.day_class)
    }) {
        return Err(EvalError::SpanMismatch(format!(
            "{:?} covers {}..{} ({:?}), {:?} covers {}..{} ({:?})",
            first.label,
            format_timestamp(first.span_start),
            format_timestamp(first.span_end),
            first.day_class,
            r.label,
            format_timestamp(r.span_start),
            format_timestamp(r.span_end),
            r.day_class
        )));
    }
    let mut order: Vec<&EvalSummary> = reports.iter().collect();
    order.sort_by(|a, b| {
        a.overall_mape
            .total_cmp(&b.overall_mape)
            .then_with(|| a.label.cmp(&b.label))
    });
    let best = order[0];
    Ok(order
        .iter()
        .enumerate()
        .map(|(i, r)| RankEntry {
            rank: i + 1,
            label: r.label.clone(),
            overall_mape: r.overall_mape,
            per_hour_vs_best: r
                .per_hour
                .iter()
                .zip(&best.per_hour)
                .map(|(a, b)| Some((*a)? - (*b)?))
                .collect(),
        })
        .collect())
}

pub fn write_report_csv<W: Write>(report: &EvalReport, writer: W) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["timestamp", "actual", "predicted", "ape_percent"])?;
    for p in &report.per_point {
        wtr.write_record([
            format_timestamp(p.timestamp),
            p.actual.to_string(),
            p.predicted.to_string(),
            p.ape_percent.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<PointError>, CsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "actual", "predicted", "ape_percent"] {
        return Err(CsvError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |reason: String| CsvError::Row { line, reason };
        let num = |i: usize| -> Result<f64, CsvError> {
            record[i]
                .parse()
                .map_err(|_| row_err(format!("{:?} is not a number", &record[i])))
        };
        rows.push(PointError {
            timestamp: parse_timestamp(&record[0]).map_err(row_err)?,
            actual: num(1)?,
            predicted: num(2)?,
            ape_percent: num(3)?,
        });
    }
    Ok(rows)
}

/// Synthetic train/test experiment comparing the hybrid with each model
/// on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub gen: GenSpec,
    pub train_days: usize,
    pub test_days: usize,
    pub train: TrainConfig,
    /// Most recent training days ARIMA is fitted on.
    pub arima_days: usize,
    pub arima_order: Option<ArimaOrder>,
    pub arima_grid: [usize; 3],
    pub schedule: CombinerSchedule,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            gen: GenSpec {
                days: 74,
                ..GenSpec::default()
            },
            train_days: 60,
            test_days: 14,
            train: TrainConfig::default(),
            arima_days: 7,
            arima_order: None,
            arima_grid: [2, 1, 2],
            schedule: combiner::default_schedule(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub lstm: SdLstmModel,
    pub arima: ArimaModel,
    pub test: TrafficSeries,
    pub hybrid: EvalReport,
    pub sdlstm_only: EvalReport,
    pub arima_only: EvalReport,
}

pub const HYBRID_LABEL: &str = "hybrid";
pub const SDLSTM_LABEL: &str = "sdlstm";
pub const ARIMA_LABEL: &str = "arima";

/// Generates `train_days + test_days` of traffic, fits both models on the
/// training days and replays the test days one step at a time (each model
/// at its own interval) under three schedules.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkOutcome, EvalError> {
    let bench = |e: String| EvalError::Benchmark(e);
    let gen = GenSpec {
        days: cfg.train_days + cfg.test_days,
        ..cfg.gen.clone()
    };
    let (series, _) = datagen::generate(&gen).map_err(|e| bench(e.to_string()))?;
    let cut = gen.start + chrono::Duration::days(cfg.train_days as i64);
    let (train, test) = series
        .split_at_time(cut)
        .map_err(|e| bench(e.to_string()))?;

    let lstm = sdlstm::train(&train, &cfg.train).map_err(|e| bench(e.to_string()))?;
    let recent = train.tail(cfg.arima_days * 96);
    let arima = match cfg.arima_order {
        Some(order) => arima::fit(&recent, order),
        None => {
            let [p, d, q] = cfg.arima_grid;
            arima::select_and_fit(recent.counts(), p, d, q, recent.interval()).map(|s| s.model)
        }
    }
    .map_err(|e| bench(e.to_string()))?;

    let run = |schedule: &CombinerSchedule, label: &str| -> Result<EvalReport, EvalError> {
        let f = combiner::rolling_one_step(
            Some(&lstm),
            Some(&arima),
            schedule,
            &series,
            cut,
            series.end(),
        )?;
        evaluate(&f, &test, DayClass::All, label)
    };
    Ok(BenchmarkOutcome {
        hybrid: run(&cfg.schedule, HYBRID_LABEL)?,
        sdlstm_only: run(&CombinerSchedule::uniform(ModelKind::Sdlstm), SDLSTM_LABEL)?,
        arima_only: run(&CombinerSchedule::uniform(ModelKind::Arima), ARIMA_LABEL)?,
        lstm,
        arima,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiner::ForecastPoint;
    use chrono::TimeZone;

    fn at(d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 3, d, h, 0, 0).unwrap()
    }

    #[test]
    fn mape_hand_cases() {
        assert_eq!(mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap(), 10.0);
        assert_eq!(mape(&[3.0, 7.0], &[3.0, 7.0]).unwrap(), 0.0);
        assert_eq!(
            mape(&[1.0, 0.0], &[1.0, 1.0]),
            Err(EvalError::ZeroActual { index: 1 })
        );
        assert!(matches!(
            mape(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_point_report() {
        let truth = TrafficSeries::new(at(5, 0), Interval::Hour, vec![50.0, 80.0, 60.0]).unwrap();
        let f = HybridForecast {
            points: vec![ForecastPoint {
                timestamp: at(5, 1),
                value: 72.0,
                source: ModelKind::Sdlstm,
                interval: Interval::Hour,
            }],
        };
        let r = evaluate(&f, &truth, DayClass::All, "x").unwrap();
        assert!((r.overall_mape() - 10.0).abs() < 1e-12);
        assert_eq!(r.summary.per_hour.iter().filter(|h| h.is_some()).count(), 1);
        assert!((r.summary.per_hour[1].unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hourly_points_use_hourly_sums() {
        let truth = TrafficSeries::new(
            at(5, 0),
            Interval::QuarterHour,
            vec![10.0, 20.0, 30.0, 40.0],
        )
        .unwrap();
        let f = HybridForecast {
            points: vec![ForecastPoint {
                timestamp: at(5, 0),
                value: 100.0,
                source: ModelKind::Sdlstm,
                interval: Interval::Hour,
            }],
        };
        assert_eq!(
            evaluate(&f, &truth, DayClass::All, "x")
                .unwrap()
                .overall_mape(),
            0.0
        );
        let hourly = TrafficSeries::new(at(5, 0), Interval::Hour, vec![10.0]).unwrap();
        let quarter = HybridForecast {
            points: vec![ForecastPoint {
                timestamp: at(5, 0),
                value: 10.0,
                source: ModelKind::Arima,
                interval: Interval::QuarterHour,
            }],
        };
        assert!(matches!(
            evaluate(&quarter, &hourly, DayClass::All, "x"),
            Err(EvalError::Alignment(_))
        ));
    }

    #[test]
    fn zero_actuals_excluded_on_request() {
        let truth = TrafficSeries::new(at(5, 0), Interval::Hour, vec![0.0, 10.0]).unwrap();
        let f = HybridForecast {
            points: (0..2)
                .map(|h| ForecastPoint {
                    timestamp: at(5, h),
                    value: 10.0,
                    source: ModelKind::Sdlstm,
                    interval: Interval::Hour,
                })
                .collect(),
        };
        assert!(matches!(
            evaluate(&f, &truth, DayClass::All, "x"),
            Err(EvalError::ZeroActual { .. })
        ));
        let opts = EvalOptions {
            exclude_zero_actuals: true,
        };
        let r = evaluate_with(&f, &truth, DayClass::All, "x", opts).unwrap();
        assert_eq!(r.summary.excluded_zero_actuals, 1);
        assert_eq!(r.summary.points, 1);
    }

    fn summary(label: &str, m: f64) -> EvalSummary {
        EvalSummary {
            label: label.into(),
            day_class: DayClass::All,
            span_start: at(5, 0),
            span_end: at(6, 0),
            points: 1,
            excluded_zero_actuals: 0,
            overall_mape: m,
            per_hour: vec![Some(m); 24],
        }
    }

    #[test]
    fn ranking() {
        let r = compare(&[summary("B", 12.0), summary("A", 8.0)]).unwrap();
        assert_eq!(
            r.iter().map(|e| e.label.as_str()).collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert_eq!(r[1].per_hour_vs_best[0], Some(4.0));
        let r = compare(&[summary("b", 5.0), summary("a", 5.0)]).unwrap();
        assert_eq!(r[0].label, "a");
        let mut other = summary("c", 1.0);
        other.span_end = at(7, 0);
        assert!(matches!(
            compare(&[summary("a", 1.0), other]),
            Err(EvalError::SpanMismatch(_))
        ));
    }

    #[test]
    fn working_day_filter() {
        // 2018-03-10 is a Saturday
        assert!(DayClass::NonWorking.admits(at(10, 3)));
        assert!(!DayClass::Working.admits(at(10, 3)));
        assert!(DayClass::Working.admits(at(9, 3)));
    }
}
