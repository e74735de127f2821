//! Fixed-interval traffic count series, resampling, normalization and
//! singular-point detection.

use std::io::{Read, Write};

use chrono::{DateTime, Duration, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scale factor turning a MAD into a consistent estimate of a normal
/// standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("invalid series: {0}")]
    Invalid(String),
    #[error("cannot disaggregate a {from}s series into {to}s buckets")]
    DisaggregationUnsupported { from: u32, to: u32 },
    #[error("misaligned series: {0}")]
    MisalignedSeries(String),
    #[error("degenerate series: all values equal {0}")]
    DegenerateSeries(f64),
    #[error("series too short: need at least {needed} samples, have {actual}")]
    SeriesTooShort { needed: usize, actual: usize },
    #[error("empty singularity mask")]
    EmptyMask,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Sampling interval of a series. Only quarter-hour and hourly buckets are
/// meaningful for the forecasting pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Interval {
    QuarterHour,
    Hour,
}

impl Interval {
    pub const fn secs(self) -> u32 {
        match self {
            Interval::QuarterHour => 900,
            Interval::Hour => 3600,
        }
    }

    pub fn duration(self) -> Duration {
        Duration::seconds(i64::from(self.secs()))
    }

    pub fn from_secs(secs: u32) -> Result<Self, SeriesError> {
        match secs {
            900 => Ok(Interval::QuarterHour),
            3600 => Ok(Interval::Hour),
            other => Err(SeriesError::Invalid(format!(
                "interval must be 900 or 3600 seconds, got {other}"
            ))),
        }
    }

    /// True when `ts` falls exactly on a boundary of this interval.
    pub fn is_aligned(self, ts: DateTime<Utc>) -> bool {
        ts.timestamp_subsec_nanos() == 0 && ts.timestamp().rem_euclid(i64::from(self.secs())) == 0
    }

    /// Rounds `ts` down to the enclosing boundary.
    pub fn floor(self, ts: DateTime<Utc>) -> DateTime<Utc> {
        let secs = ts.timestamp();
        let step = i64::from(self.secs());
        DateTime::from_timestamp(secs - secs.rem_euclid(step), 0).expect("timestamp in range")
    }

    /// Rounds `ts` up to the next boundary (identity on a boundary).
    pub fn ceil(self, ts: DateTime<Utc>) -> DateTime<Utc> {
        let floored = self.floor(ts);
        if floored == ts {
            ts
        } else {
            floored + self.duration()
        }
    }
}

impl TryFrom<u32> for Interval {
    type Error = SeriesError;

    fn try_from(secs: u32) -> Result<Self, Self::Error> {
        Interval::from_secs(secs)
    }
}

impl From<Interval> for u32 {
    fn from(interval: Interval) -> u32 {
        interval.secs()
    }
}

/// Vehicle counts per fixed interval, starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSeries {
    start: DateTime<Utc>,
    interval: Interval,
    counts: Vec<f64>,
}

impl TrafficSeries {
    pub fn new(
        start: DateTime<Utc>,
        interval: Interval,
        counts: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if counts.is_empty() {
            return Err(SeriesError::Invalid(
                "series must hold at least one sample".into(),
            ));
        }
        if let Some((i, v)) = counts
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(SeriesError::Invalid(format!(
                "count at index {i} is {v}; counts must be finite and non-negative"
            )));
        }
        Ok(Self {
            start,
            interval,
            counts,
        })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<f64> {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Timestamp of sample `i`.
    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(i as i64 * i64::from(self.interval.secs()))
    }

    /// Timestamp one interval past the last sample.
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.len())
    }

    pub fn last_timestamp(&self) -> DateTime<Utc> {
        self.timestamp(self.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DateTime<Utc>, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.timestamp(i), c))
    }

    /// Index of the sample starting at `ts`, if it is inside the series and
    /// on the sampling grid.
    pub fn index_of(&self, ts: DateTime<Utc>) -> Option<usize> {
        let offset = (ts - self.start).num_seconds();
        let step = i64::from(self.interval.secs());
        if offset < 0 || offset % step != 0 || (ts - self.start).subsec_nanos() != 0 {
            return None;
        }
        let idx = (offset / step) as usize;
        (idx < self.len()).then_some(idx)
    }

    /// Sub-series over `range` of sample indices.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self, SeriesError> {
        if range.start >= range.end || range.end > self.len() {
            return Err(SeriesError::Invalid(format!(
                "slice {:?} out of bounds for length {}",
                range,
                self.len()
            )));
        }
        Ok(Self {
            start: self.timestamp(range.start),
            interval: self.interval,
            counts: self.counts[range].to_vec(),
        })
    }

    /// Samples strictly before `ts`.
    pub fn prefix_until(&self, ts: DateTime<Utc>) -> Result<Self, SeriesError> {
        let offset = (ts - self.start).num_seconds();
        let step = i64::from(self.interval.secs());
        let n = if offset <= 0 {
            0
        } else {
            ((offset + step - 1) / step) as usize
        };
        self.slice(0..n.min(self.len()))
    }

    /// Appends `count` as the next sample.
    pub fn push(&mut self, count: f64) -> Result<(), SeriesError> {
        if !count.is_finite() || count < 0.0 {
            return Err(SeriesError::Invalid(format!(
                "count {count} must be finite and non-negative"
            )));
        }
        self.counts.push(count);
        Ok(())
    }

    /// Appends `other`, which must start exactly where this series ends.
    pub fn extend(&mut self, other: &TrafficSeries) -> Result<(), SeriesError> {
        if other.interval != self.interval {
            return Err(SeriesError::MisalignedSeries(format!(
                "interval {}s does not match {}s",
                other.interval.secs(),
                self.interval.secs()
            )));
        }
        if other.start != self.end() {
            return Err(SeriesError::MisalignedSeries(format!(
                "appended series starts at {} but this series ends at {}",
                format_timestamp(other.start),
                format_timestamp(self.end())
            )));
        }
        self.counts.extend_from_slice(&other.counts);
        Ok(())
    }

    /// Keeps only the trailing `n` samples.
    pub fn tail(&self, n: usize) -> Self {
        let n = n.clamp(1, self.len());
        self.slice(self.len() - n..self.len())
            .expect("tail range valid")
    }

    /// Aggregates into coarser buckets by summation.
    pub fn resample(&self, target: Interval) -> Result<Self, SeriesError> {
        if target.secs() < self.interval.secs() {
            return Err(SeriesError::DisaggregationUnsupported {
                from: self.interval.secs(),
                to: target.secs(),
            });
        }
        if target == self.interval {
            return Ok(self.clone());
        }
        let ratio = (target.secs() / self.interval.secs()) as usize;
        if !target.is_aligned(self.start) {
            return Err(SeriesError::MisalignedSeries(format!(
                "start {} is not on a {}s boundary",
                format_timestamp(self.start),
                target.secs()
            )));
        }
        if !self.len().is_multiple_of(ratio) {
            return Err(SeriesError::MisalignedSeries(format!(
                "length {} is not a multiple of {ratio}",
                self.len()
            )));
        }
        let counts = self
            .counts
            .chunks_exact(ratio)
            .map(|c| c.iter().sum())
            .collect();
        Ok(Self {
            start: self.start,
            interval: target,
            counts,
        })
    }

    /// Drops leading and trailing samples so the series covers only whole
    /// `target` buckets, then resamples. Returns `None` if no whole bucket
    /// is covered.
    pub fn resample_complete(&self, target: Interval) -> Result<Option<Self>, SeriesError> {
        if target.secs() < self.interval.secs() {
            return Err(SeriesError::DisaggregationUnsupported {
                from: self.interval.secs(),
                to: target.secs(),
            });
        }
        let ratio = (target.secs() / self.interval.secs()) as usize;
        let first = target.ceil(self.start);
        let skip = ((first - self.start).num_seconds() / i64::from(self.interval.secs())) as usize;
        if skip >= self.len() {
            return Ok(None);
        }
        let whole = (self.len() - skip) / ratio * ratio;
        if whole == 0 {
            return Ok(None);
        }
        self.slice(skip..skip + whole)?.resample(target).map(Some)
    }

    /// Min-max scaling into [0, 1].
    pub fn normalize(&self) -> Result<(Self, NormParams), SeriesError> {
        let params = NormParams::fit(&self.counts)?;
        let counts = self.counts.iter().map(|&x| params.scale(x)).collect();
        Ok((
            Self {
                start: self.start,
                interval: self.interval,
                counts,
            },
            params,
        ))
    }

    pub fn denormalize(&self, params: &NormParams) -> Result<Self, SeriesError> {
        let counts: Vec<f64> = self.counts.iter().map(|&y| params.unscale(y)).collect();
        Self::new(self.start, self.interval, counts)
    }

    /// Chronological split; the first part holds `floor(len * fraction)`
    /// samples.
    pub fn split(&self, train_fraction: f64) -> Result<(Self, Self), SeriesError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(SeriesError::InvalidParameter(format!(
                "train fraction {train_fraction} must lie in (0, 1)"
            )));
        }
        let cut = (self.len() as f64 * train_fraction).floor() as usize;
        if cut == 0 || cut == self.len() {
            return Err(SeriesError::SeriesTooShort {
                needed: 2,
                actual: self.len(),
            });
        }
        Ok((self.slice(0..cut)?, self.slice(cut..self.len())?))
    }

    /// Splits at the first sample at or after `ts`.
    pub fn split_at_time(&self, ts: DateTime<Utc>) -> Result<(Self, Self), SeriesError> {
        let head = self.prefix_until(ts)?;
        let cut = head.len();
        if cut == self.len() {
            return Err(SeriesError::SeriesTooShort {
                needed: cut + 1,
                actual: self.len(),
            });
        }
        Ok((head, self.slice(cut..self.len())?))
    }
}

/// Min/max used for scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: f64,
    pub max: f64,
}

impl NormParams {
    pub fn new(min: f64, max: f64) -> Result<Self, SeriesError> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(SeriesError::InvalidParameter(format!(
                "normalization bounds ({min}, {max}) need max > min"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn fit(values: &[f64]) -> Result<Self, SeriesError> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Err(SeriesError::Invalid(
                "cannot normalize an empty series".into(),
            ));
        }
        if max <= min {
            return Err(SeriesError::DegenerateSeries(min));
        }
        Ok(Self { min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.min) / self.range()
    }

    pub fn unscale(&self, y: f64) -> f64 {
        // single rounding on the way back keeps the round trip within an ulp
        y.mul_add(self.range(), self.min)
    }
}

/// Per-sample singular-point flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityMask {
    pub flags: Vec<bool>,
    pub window: usize,
    pub threshold_k: f64,
}

impl SingularityMask {
    pub fn singular_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }
}

/// Rolling robust z-score detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub window: usize,
    pub k: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { window: 25, k: 3.0 }
    }
}

/// Bounds applied to the singularity ratio before it is used as a drop
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropoutBounds {
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for DropoutBounds {
    fn default() -> Self {
        Self {
            p_min: 0.05,
            p_max: 0.5,
        }
    }
}

impl DropoutBounds {
    pub fn validate(&self) -> Result<(), SeriesError> {
        if 0.0 < self.p_min && self.p_min < self.p_max && self.p_max < 1.0 {
            Ok(())
        } else {
            Err(SeriesError::InvalidParameter(format!(
                "dropout bounds need 0 < p_min < p_max < 1, got [{}, {}]",
                self.p_min, self.p_max
            )))
        }
    }
}

pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Flags samples whose distance from the centred rolling median exceeds
/// `k` robust standard deviations. Windows are clipped at the series edges.
pub fn detect_singular_points(
    series: &TrafficSeries,
    window: usize,
    k: f64,
) -> Result<SingularityMask, SeriesError> {
    detect_in_values(series.counts(), window, k)
}

pub fn detect_in_values(
    values: &[f64],
    window: usize,
    k: f64,
) -> Result<SingularityMask, SeriesError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(SeriesError::InvalidParameter(format!(
            "window must be odd and at least 3, got {window}"
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(SeriesError::InvalidParameter(format!(
            "k must be positive, got {k}"
        )));
    }
    if values.len() < window {
        return Err(SeriesError::SeriesTooShort {
            needed: window,
            actual: values.len(),
        });
    }
    let half = window / 2;
    let n = values.len();
    let mut buf = Vec::with_capacity(window);
    let flags = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            buf.clear();
            buf.extend_from_slice(&values[lo..hi]);
            let med = median_in_place(&mut buf);
            for v in buf.iter_mut() {
                *v = (*v - med).abs();
            }
            let mad = median_in_place(&mut buf);
            (values[t] - med).abs() > k * MAD_SCALE * mad
        })
        .collect();
    Ok(SingularityMask {
        flags,
        window,
        threshold_k: k,
    })
}

/// Fraction of singular samples, clamped into `bounds`.
pub fn singularity_ratio(
    mask: &SingularityMask,
    bounds: DropoutBounds,
) -> Result<f64, SeriesError> {
    bounds.validate()?;
    if mask.is_empty() {
        return Err(SeriesError::EmptyMask);
    }
    let ratio = mask.singular_count() as f64 / mask.len() as f64;
    Ok(ratio.clamp(bounds.p_min, bounds.p_max))
}

/// Counts `(dropped and marked, dropped)` over paired unit flags.
pub fn dropped_marked_counts(dropped: &[bool], marked: &[bool]) -> (usize, usize) {
    let both = dropped.iter().zip(marked).filter(|(&d, &m)| d && m).count();
    (both, dropped.iter().filter(|&&d| d).count())
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    let parsed = DateTime::parse_from_rfc3339(raw.trim())
        .map_err(|e| format!("invalid ISO-8601 timestamp {raw:?}: {e}"))?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(format!("timestamp {raw:?} is not UTC"));
    }
    Ok(parsed.with_timezone(&Utc))
}

/// Minute of day in UTC.
pub fn minute_of_day(ts: DateTime<Utc>) -> u32 {
    ts.hour() * 60 + ts.minute()
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("bad header: expected `timestamp,count`, found `{0}`")]
    Header(String),
    #[error("no data rows")]
    Empty,
    #[error("{0}")]
    Series(#[from] SeriesError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads the `timestamp,count` format. The interval is inferred from the
/// first two rows unless `expected` is given; a single-row file needs it.
pub fn read_csv<R: Read>(reader: R, expected: Option<Interval>) -> Result<TrafficSeries, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(CsvError::Empty),
    };
    if header.len() != 2 || &header[0] != "timestamp" || &header[1] != "count" {
        return Err(CsvError::Header(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }

    let mut start = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut interval = expected;
    let mut counts = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |reason: String| CsvError::Row { line, reason };
        if record.len() != 2 {
            return Err(row_err(format!(
                "expected 2 fields, found {}",
                record.len()
            )));
        }
        let ts = parse_timestamp(&record[0]).map_err(row_err)?;
        let raw = record[1].trim();
        let count: f64 = raw
            .parse()
            .map_err(|_| row_err(format!("count {raw:?} is not a decimal number")))?;
        if !count.is_finite() {
            return Err(row_err(format!("count {raw:?} is not finite")));
        }
        if count < 0.0 {
            return Err(row_err(format!("negative count {raw}")));
        }
        match prev {
            None => start = Some(ts),
            Some(p) => {
                let delta = (ts - p).num_seconds();
                if delta <= 0 {
                    return Err(row_err(format!(
                        "timestamp {} does not increase (duplicate or out of order)",
                        &record[0]
                    )));
                }
                let step = match interval {
                    Some(i) => i,
                    None => {
                        let i = Interval::from_secs(delta as u32).map_err(|_| {
                            row_err(format!("spacing of {delta}s is neither 900 nor 3600"))
                        })?;
                        interval = Some(i);
                        i
                    }
                };
                if delta != i64::from(step.secs()) {
                    return Err(row_err(format!(
                        "gap: expected {}, found {}",
                        format_timestamp(p + step.duration()),
                        &record[0]
                    )));
                }
            }
        }
        prev = Some(ts);
        counts.push(count);
    }
    let start = start.ok_or(CsvError::Empty)?;
    let interval = interval.ok_or_else(|| CsvError::Row {
        line: 2,
        reason: "cannot infer the interval from a single row".into(),
    })?;
    Ok(TrafficSeries::new(start, interval, counts)?)
}

pub fn write_csv<W: Write>(series: &TrafficSeries, writer: W) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["timestamp", "count"])?;
    for (ts, c) in series.iter() {
        wtr.write_record([format_timestamp(ts), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 3, 5, h, m, 0).unwrap()
    }

    fn quarter(counts: Vec<f64>) -> TrafficSeries {
        TrafficSeries::new(at(6, 0), Interval::QuarterHour, counts).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(TrafficSeries::new(at(0, 0), Interval::Hour, vec![]).is_err());
        assert!(TrafficSeries::new(at(0, 0), Interval::Hour, vec![1.0, -1.0]).is_err());
        assert!(TrafficSeries::new(at(0, 0), Interval::Hour, vec![f64::NAN]).is_err());
        assert!(Interval::from_secs(300).is_err());
    }

    #[test]
    fn resample_sums_quarters() {
        let hourly = quarter(vec![10.0, 12.0, 8.0, 10.0])
            .resample(Interval::Hour)
            .unwrap();
        assert_eq!(hourly.counts(), &[40.0]);
        assert_eq!(hourly.start(), at(6, 0));
        assert_eq!(hourly.interval(), Interval::Hour);
    }

    #[test]
    fn resample_identity_and_guards() {
        let s = quarter(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.resample(Interval::QuarterHour).unwrap(), s);
        let h = TrafficSeries::new(at(6, 0), Interval::Hour, vec![4.0]).unwrap();
        assert!(matches!(
            h.resample(Interval::QuarterHour),
            Err(SeriesError::DisaggregationUnsupported { .. })
        ));
        assert!(matches!(
            s.resample(Interval::Hour),
            Err(SeriesError::MisalignedSeries(_))
        ));
        let off = TrafficSeries::new(at(6, 15), Interval::QuarterHour, vec![1.0; 4]).unwrap();
        assert!(matches!(
            off.resample(Interval::Hour),
            Err(SeriesError::MisalignedSeries(_))
        ));
    }

    #[test]
    fn resample_complete_trims_partial_hours() {
        let s = TrafficSeries::new(
            at(5, 30),
            Interval::QuarterHour,
            (0..11).map(f64::from).collect(),
        )
        .unwrap();
        // 05:30, 05:45 dropped; 06:00..06:45 and 07:00..07:45 kept; 08:00 dropped
        let h = s.resample_complete(Interval::Hour).unwrap().unwrap();
        assert_eq!(h.start(), at(6, 0));
        assert_eq!(h.counts(), &[2.0 + 3.0 + 4.0 + 5.0, 6.0 + 7.0 + 8.0 + 9.0]);
        let short = TrafficSeries::new(at(5, 30), Interval::QuarterHour, vec![1.0; 3]).unwrap();
        assert!(short.resample_complete(Interval::Hour).unwrap().is_none());
    }

    #[test]
    fn normalize_endpoints() {
        let s = TrafficSeries::new(at(0, 0), Interval::Hour, vec![0.0, 5.0, 10.0]).unwrap();
        let (n, p) = s.normalize().unwrap();
        assert_eq!(n.counts(), &[0.0, 0.5, 1.0]);
        assert_eq!(
            p,
            NormParams {
                min: 0.0,
                max: 10.0
            }
        );
        assert_eq!(n.denormalize(&p).unwrap().counts(), &[0.0, 5.0, 10.0]);
    }

    #[test]
    fn normalize_degenerate() {
        let s = TrafficSeries::new(at(0, 0), Interval::Hour, vec![7.0; 3]).unwrap();
        assert!(matches!(
            s.normalize(),
            Err(SeriesError::DegenerateSeries(_))
        ));
    }

    #[test]
    fn denormalize_single_point() {
        let s = TrafficSeries::new(at(0, 0), Interval::Hour, vec![0.0]).unwrap();
        let p = NormParams::new(3.0, 4.0).unwrap();
        assert_eq!(s.denormalize(&p).unwrap().counts(), &[3.0]);
    }

    #[test]
    fn split_floor_and_partition() {
        let s = TrafficSeries::new(at(0, 0), Interval::Hour, (0..100).map(f64::from).collect())
            .unwrap();
        let (a, b) = s.split(0.8).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        assert_eq!(b.start(), a.end());
        let mut joined = a.clone();
        joined.extend(&b).unwrap();
        assert_eq!(joined, s);

        let one = TrafficSeries::new(at(0, 0), Interval::Hour, vec![1.0]).unwrap();
        assert!(matches!(
            one.split(0.5),
            Err(SeriesError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn constant_series_has_no_singular_points() {
        let mask = detect_in_values(&[5.0; 40], 25, 3.0).unwrap();
        assert_eq!(mask.singular_count(), 0);
    }

    #[test]
    fn mad_zero_flags_any_deviation() {
        let mut v = vec![5.0; 40];
        v[20] = 5.1;
        let mask = detect_in_values(&v, 25, 3.0).unwrap();
        assert_eq!(mask.indices().collect::<Vec<_>>(), vec![20]);
    }

    #[test]
    fn detector_guards() {
        assert!(detect_in_values(&[1.0; 10], 4, 3.0).is_err());
        assert!(detect_in_values(&[1.0; 10], 3, 0.0).is_err());
        assert!(matches!(
            detect_in_values(&[1.0; 10], 25, 3.0),
            Err(SeriesError::SeriesTooShort {
                needed: 25,
                actual: 10
            })
        ));
    }

    #[test]
    fn ratio_examples() {
        let bounds = DropoutBounds::default();
        let mut flags = vec![false; 200];
        flags.iter_mut().take(20).for_each(|f| *f = true);
        let mask = SingularityMask {
            flags,
            window: 25,
            threshold_k: 3.0,
        };
        assert!((singularity_ratio(&mask, bounds).unwrap() - 0.1).abs() < 1e-15);

        let none = SingularityMask {
            flags: vec![false; 200],
            window: 25,
            threshold_k: 3.0,
        };
        assert_eq!(singularity_ratio(&none, bounds).unwrap(), 0.05);
        let all = SingularityMask {
            flags: vec![true; 200],
            window: 25,
            threshold_k: 3.0,
        };
        assert_eq!(singularity_ratio(&all, bounds).unwrap(), 0.5);
        let empty = SingularityMask {
            flags: vec![],
            window: 25,
            threshold_k: 3.0,
        };
        assert!(matches!(
            singularity_ratio(&empty, bounds),
            Err(SeriesError::EmptyMask)
        ));
        let bad = DropoutBounds {
            p_min: 0.5,
            p_max: 0.1,
        };
        assert!(singularity_ratio(&none, bad).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = quarter(vec![10.0, 12.5, 0.0]);
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "timestamp,count\n2018-03-05T06:00:00Z,10\n2018-03-05T06:15:00Z,12.5\n2018-03-05T06:30:00Z,0\n"
        );
        assert_eq!(read_csv(buf.as_slice(), None).unwrap(), s);

        let gap = "timestamp,count\n2018-03-05T06:00:00Z,1\n2018-03-05T06:15:00Z,1\n2018-03-05T06:45:00Z,1\n";
        match read_csv(gap.as_bytes(), None) {
            Err(CsvError::Row { line, reason }) => {
                assert_eq!(line, 4);
                assert!(reason.contains("gap"));
            }
            other => panic!("expected gap error, got {other:?}"),
        }
        let dup = "timestamp,count\n2018-03-05T06:00:00Z,1\n2018-03-05T06:00:00Z,1\n";
        assert!(matches!(
            read_csv(dup.as_bytes(), None),
            Err(CsvError::Row { line: 3, .. })
        ));
        let neg = "timestamp,count\n2018-03-05T06:00:00Z,1\n2018-03-05T06:15:00Z,-2\n";
        assert!(matches!(
            read_csv(neg.as_bytes(), None),
            Err(CsvError::Row { line: 3, .. })
        ));
        let hdr = "time,count\n2018-03-05T06:00:00Z,1\n";
        assert!(matches!(
            read_csv(hdr.as_bytes(), None),
            Err(CsvError::Header(_))
        ));
        let local = "timestamp,count\n2018-03-05T06:00:00+01:00,1\n2018-03-05T06:15:00+01:00,1\n";
        assert!(matches!(
            read_csv(local.as_bytes(), None),
            Err(CsvError::Row { line: 2, .. })
        ));
        let single = "timestamp,count\n2018-03-05T06:00:00Z,1\n";
        assert!(read_csv(single.as_bytes(), None).is_err());
        assert_eq!(
            read_csv(single.as_bytes(), Some(Interval::Hour))
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn interval_rounding() {
        assert_eq!(Interval::Hour.floor(at(6, 45)), at(6, 0));
        assert_eq!(Interval::Hour.ceil(at(6, 45)), at(7, 0));
        assert_eq!(Interval::Hour.ceil(at(6, 0)), at(6, 0));
        assert!(Interval::QuarterHour.is_aligned(at(6, 45)));
        assert!(!Interval::Hour.is_aligned(at(6, 45)));
    }

    #[test]
    fn eq8_inclusion_on_counts() {
        let dropped = [true, false, true, true, false];
        let marked = [true, true, false, true, false];
        let (both, d) = dropped_marked_counts(&dropped, &marked);
        assert_eq!((both, d), (2, 3));
        assert!(both <= d);
    }
}
