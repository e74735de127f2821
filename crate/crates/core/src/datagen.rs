//! Seeded synthetic traffic with known spikes.
//!
//! Flow is a base rate plus gaussian rush-hour bumps, damped on weekends,
//! with white noise and rare symmetric spikes. Each bump's amplitude and
//! centre can wander from day to day, which is what makes the morning rush
//! hard to learn from the previous day alone.

use std::io::{Read, Write};

use chrono::{DateTime, Datelike, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{
    format_timestamp, parse_timestamp, CsvError, Interval, SeriesError, TrafficSeries,
};

const SAMPLES_PER_DAY: usize = 96;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid generator spec: {0}")]
pub struct GenSpecError(pub String);

/// One rush-hour bump, in vehicles per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RushPeak {
    pub center_minute: f64,
    pub width_minutes: f64,
    pub amplitude: f64,
    /// Relative sd of the per-day amplitude factor.
    #[serde(default)]
    pub amplitude_jitter: f64,
    /// Sd of the per-day shift of the centre, minutes.
    #[serde(default)]
    pub shift_jitter_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub days: usize,
    pub seed: u64,
    /// First sample; should be midnight UTC for day-of-week logic to line up.
    pub start: DateTime<Utc>,
    /// Vehicles per hour outside the peaks.
    pub base_level: f64,
    pub rush_peaks: Vec<RushPeak>,
    pub weekend_scale: f64,
    /// Noise sd per quarter-hour sample, in vehicles.
    pub noise_sd: f64,
    pub spike_rate: f64,
    pub spike_magnitude_sigmas: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            days: 74,
            seed: 0,
            start: Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap(),
            base_level: 1200.0,
            rush_peaks: vec![
                RushPeak {
                    center_minute: 390.0,
                    width_minutes: 45.0,
                    amplitude: 900.0,
                    amplitude_jitter: 0.4,
                    shift_jitter_minutes: 30.0,
                },
                RushPeak {
                    center_minute: 1050.0,
                    width_minutes: 150.0,
                    amplitude: 225.0,
                    amplitude_jitter: 0.1,
                    shift_jitter_minutes: 0.0,
                },
            ],
            weekend_scale: 0.9,
            noise_sd: 12.0,
            spike_rate: 0.02,
            spike_magnitude_sigmas: 12.0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenSpecError> {
        let bad = |m: String| Err(GenSpecError(m));
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        if !(self.base_level.is_finite() && self.base_level >= 0.0) {
            return bad(format!(
                "base_level {} must be non-negative",
                self.base_level
            ));
        }
        if !(self.weekend_scale > 0.0 && self.weekend_scale <= 1.0) {
            return bad(format!(
                "weekend_scale {} outside (0, 1]",
                self.weekend_scale
            ));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        if !(0.0..1.0).contains(&self.spike_rate) {
            return bad(format!("spike_rate {} outside [0, 1)", self.spike_rate));
        }
        if !(self.spike_magnitude_sigmas.is_finite() && self.spike_magnitude_sigmas >= 3.0) {
            return bad(format!(
                "spike_magnitude_sigmas {} must be at least 3",
                self.spike_magnitude_sigmas
            ));
        }
        for p in &self.rush_peaks {
            let finite = [
                p.center_minute,
                p.width_minutes,
                p.amplitude,
                p.amplitude_jitter,
                p.shift_jitter_minutes,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite
                || p.width_minutes <= 0.0
                || p.amplitude < 0.0
                || p.amplitude_jitter < 0.0
                || p.shift_jitter_minutes < 0.0
            {
                return bad(format!("invalid rush peak {p:?}"));
            }
        }
        Ok(())
    }
}

/// What the generator knows that the series does not show.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub spikes: Vec<bool>,
    /// Expected count per sample before noise and spikes.
    pub noiseless: Vec<f64>,
}

impl GroundTruth {
    pub fn spike_fraction(&self) -> f64 {
        self.spikes.iter().filter(|&&s| s).count() as f64 / self.spikes.len() as f64
    }
}

fn is_weekend(ts: DateTime<Utc>) -> bool {
    ts.weekday().number_from_monday() >= 6
}

pub fn generate(spec: &GenSpec) -> Result<(TrafficSeries, GroundTruth), GenSpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.days * SAMPLES_PER_DAY;
    let per_sample = f64::from(Interval::QuarterHour.secs()) / 3600.0;

    // (amplitude, centre) for every peak on every day
    let daily: Vec<Vec<(f64, f64)>> = (0..spec.days)
        .map(|_| {
            spec.rush_peaks
                .iter()
                .map(|p| {
                    let za: f64 = rng.sample(StandardNormal);
                    let zs: f64 = rng.sample(StandardNormal);
                    let amp = (p.amplitude * (1.0 + p.amplitude_jitter * za)).max(0.0);
                    (amp, p.center_minute + p.shift_jitter_minutes * zs)
                })
                .collect()
        })
        .collect();

    let mut noiseless = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut spikes = Vec::with_capacity(n);
    for i in 0..n {
        let ts = spec.start + Interval::QuarterHour.duration() * i as i32;
        let day = i / SAMPLES_PER_DAY;
        let minute = ((i % SAMPLES_PER_DAY) * 15) as f64;
        let mut rate = spec.base_level;
        for (p, &(amp, centre)) in spec.rush_peaks.iter().zip(&daily[day]) {
            let z = (minute - centre) / p.width_minutes;
            rate += amp * (-0.5 * z * z).exp();
        }
        if is_weekend(ts) {
            rate *= spec.weekend_scale;
        }
        let signal = rate * per_sample;

        let noise: f64 = rng.sample(StandardNormal);
        let mut x = signal + spec.noise_sd * noise;
        let spike = rng.random::<f64>() < spec.spike_rate;
        if spike {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            x += sign * spec.spike_magnitude_sigmas * spec.noise_sd;
        }
        noiseless.push(signal);
        counts.push(x.max(0.0));
        spikes.push(spike);
    }
    let series = TrafficSeries::new(spec.start, Interval::QuarterHour, counts)
        .map_err(|e: SeriesError| GenSpecError(e.to_string()))?;
    Ok((series, GroundTruth { spikes, noiseless }))
}

/// Sidecar `timestamp,is_spike,noiseless`, aligned row by row with the
/// series CSV.
pub fn write_truth_csv<W: Write>(
    series: &TrafficSeries,
    truth: &GroundTruth,
    writer: W,
) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["timestamp", "is_spike", "noiseless"])?;
    for (i, (ts, _)) in series.iter().enumerate() {
        wtr.write_record([
            format_timestamp(ts),
            u8::from(truth.spikes[i]).to_string(),
            truth.noiseless[i].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_truth_csv<R: Read>(reader: R) -> Result<(Vec<DateTime<Utc>>, GroundTruth), CsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "is_spike", "noiseless"] {
        return Err(CsvError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut stamps = Vec::new();
    let mut truth = GroundTruth {
        spikes: Vec::new(),
        noiseless: Vec::new(),
    };
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |reason: String| CsvError::Row { line, reason };
        stamps.push(parse_timestamp(&record[0]).map_err(row_err)?);
        truth.spikes.push(match &record[1] {
            "0" => false,
            "1" => true,
            other => return Err(row_err(format!("is_spike must be 0 or 1, found {other:?}"))),
        });
        truth.noiseless.push(
            record[2]
                .parse()
                .map_err(|_| row_err(format!("bad noiseless value {:?}", &record[2])))?,
        );
    }
    Ok((stamps, truth))
}
