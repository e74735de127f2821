//! Browser bindings for three small demos: spike detection on generated
//! traffic, an ARIMA forecast, and one day of hybrid forecasting.
//!
//! Every export takes a JSON request and returns a JSON response, so the
//! same functions run natively in tests.

use sdlstm_core::arima::{self, ArimaOrder};
use sdlstm_core::combiner::{
    rolling_one_step, CombinerSchedule, DaySchedule, ModelKind, ScheduleWindow,
};
use sdlstm_core::datagen::{generate, GenSpec};
use sdlstm_core::eval::{evaluate, mape, DayClass};
use sdlstm_core::sdlstm::{self, TrainConfig};
use sdlstm_core::series::{
    detect_singular_points, minute_of_day, singularity_ratio, DropoutBounds,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

type Outcome = Result<String, String>;

fn parse<T: for<'de> Deserialize<'de>>(request: &str) -> Result<T, String> {
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn reply<T: Serialize>(value: &T) -> Outcome {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SpikeRequest {
    pub seed: u64,
    pub days: usize,
    pub spike_rate: f64,
    pub noise_sd: f64,
    pub window: usize,
    pub k: f64,
}

impl Default for SpikeRequest {
    fn default() -> Self {
        let gen = GenSpec::default();
        Self {
            seed: 0,
            days: 3,
            spike_rate: 0.05,
            noise_sd: gen.noise_sd,
            window: 25,
            k: 3.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpikeResponse {
    pub counts: Vec<f64>,
    pub noiseless: Vec<f64>,
    pub true_spikes: Vec<usize>,
    pub flagged: Vec<usize>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub dropout_p: f64,
}

/// Generates a few days, runs the detector and reports how its flags line
/// up with the injected spikes.
pub fn generate_and_detect(request: &str) -> Outcome {
    let req: SpikeRequest = parse(request)?;
    let spec = GenSpec {
        days: req.days,
        seed: req.seed,
        spike_rate: req.spike_rate,
        noise_sd: req.noise_sd,
        ..GenSpec::default()
    };
    let (series, truth) = generate(&spec).map_err(|e| e.to_string())?;
    let mask = detect_singular_points(&series, req.window, req.k).map_err(|e| e.to_string())?;
    let true_spikes: Vec<usize> = (0..truth.spikes.len())
        .filter(|&i| truth.spikes[i])
        .collect();
    let flagged: Vec<usize> = mask.indices().collect();
    let hits = true_spikes.iter().filter(|&&i| mask.flags[i]).count() as f64;
    let ratio = |n: usize| (n > 0).then(|| hits / n as f64);
    reply(&SpikeResponse {
        recall: ratio(true_spikes.len()),
        precision: ratio(flagged.len()),
        dropout_p: singularity_ratio(&mask, DropoutBounds::default()).map_err(|e| e.to_string())?,
        counts: series.into_counts(),
        noiseless: truth.noiseless,
        true_spikes,
        flagged,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct ArimaRequest {
    pub seed: u64,
    /// Days of quarter-hour history to fit on.
    pub fit_days: usize,
    /// Forecast origin, minutes after midnight of the day after the fit.
    pub origin_minute: u32,
    pub horizon: usize,
    /// Fixed order; selected by AIC over (2,1,2) when absent.
    pub order: Option<[usize; 3]>,
}

impl Default for ArimaRequest {
    fn default() -> Self {
        Self {
            seed: 0,
            fit_days: 3,
            origin_minute: 300,
            horizon: 12,
            order: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ArimaResponse {
    pub order: String,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// The last day of history before the origin.
    pub history: Vec<f64>,
    pub forecast: Vec<f64>,
    pub actual: Vec<f64>,
    pub mape: Option<f64>,
}

/// Fits on `fit_days`, then forecasts `horizon` quarter hours from the
/// origin against the generated continuation.
pub fn arima_forecast(request: &str) -> Outcome {
    let req: ArimaRequest = parse(request)?;
    if req.horizon == 0 || req.origin_minute >= 1440 || !req.origin_minute.is_multiple_of(15) {
        return Err("horizon must be positive and the origin a quarter hour within the day".into());
    }
    let spec = GenSpec {
        days: req.fit_days + 2,
        seed: req.seed,
        ..GenSpec::default()
    };
    let (series, _) = generate(&spec).map_err(|e| e.to_string())?;
    let origin = req.fit_days * 96 + req.origin_minute as usize / 15;
    let fit_on = &series.counts()[origin - req.fit_days * 96..origin];
    let model = match req.order {
        Some([p, d, q]) => {
            let order = ArimaOrder::new(p, d, q).map_err(|e| e.to_string())?;
            arima::fit_values(fit_on, order, series.interval())
        }
        None => arima::select_and_fit(fit_on, 2, 1, 2, series.interval()).map(|s| s.model),
    }
    .map_err(|e| e.to_string())?;
    let forecast = model.forecast(req.horizon);
    let end = (origin + req.horizon).min(series.len());
    let actual = series.counts()[origin..end].to_vec();
    reply(&ArimaResponse {
        order: model.order.to_string(),
        intercept: model.intercept,
        ar: model.ar.clone(),
        ma: model.ma.clone(),
        history: series.counts()[origin - 96..origin].to_vec(),
        mape: mape(&actual, &forecast[..actual.len()]).ok(),
        forecast,
        actual,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct HybridRequest {
    pub seed: u64,
    pub train_days: usize,
    pub epochs: usize,
    pub arima_start_minute: u32,
    pub arima_end_minute: u32,
}

impl Default for HybridRequest {
    fn default() -> Self {
        Self {
            seed: 0,
            train_days: 10,
            epochs: 15,
            arima_start_minute: 300,
            arima_end_minute: 480,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DayPoint {
    pub minute: u32,
    pub value: f64,
    pub source: &'static str,
    pub interval_s: u32,
}

#[derive(Debug, Serialize)]
pub struct HybridResponse {
    pub dropout_p: f64,
    pub arima_order: String,
    /// Quarter-hour truth of the forecast day.
    pub truth: Vec<f64>,
    pub points: Vec<DayPoint>,
    pub hybrid_mape: f64,
    pub sdlstm_mape: f64,
}

fn schedule(req: &HybridRequest) -> Result<CombinerSchedule, String> {
    let (a, b) = (req.arima_start_minute, req.arima_end_minute);
    let mut windows = Vec::new();
    let mut push = |start, end, kind| {
        if start < end {
            windows.push(ScheduleWindow {
                start_minute: start,
                end_minute: end,
                kind,
            });
        }
    };
    push(0, a, ModelKind::Sdlstm);
    push(a, b, ModelKind::Arima);
    push(b, 1440, ModelKind::Sdlstm);
    DaySchedule::new(windows)
        .map(CombinerSchedule::single)
        .map_err(|e| e.to_string())
}

/// Trains briefly on `train_days`, then replays the following day one step
/// at a time under a schedule with a single ARIMA window.
pub fn hybrid_day(request: &str) -> Outcome {
    let req: HybridRequest = parse(request)?;
    if req.train_days < 2 || req.epochs == 0 {
        return Err("need at least two training days and one epoch".into());
    }
    let schedule = schedule(&req)?;
    let spec = GenSpec {
        days: req.train_days + 1,
        seed: req.seed,
        ..GenSpec::default()
    };
    let (series, _) = generate(&spec).map_err(|e| e.to_string())?;
    let cut = series.timestamp(req.train_days * 96);
    let (train, test) = series.split_at_time(cut).map_err(|e| e.to_string())?;

    let cfg = TrainConfig {
        epochs: req.epochs,
        seed: req.seed,
        ..TrainConfig::default()
    };
    let lstm = sdlstm::train(&train, &cfg).map_err(|e| e.to_string())?;
    let recent = train.tail(2 * 96);
    let arima_model = arima::select_and_fit(recent.counts(), 2, 1, 2, recent.interval())
        .map_err(|e| e.to_string())?
        .model;

    let run = |s: &CombinerSchedule| {
        rolling_one_step(
            Some(&lstm),
            Some(&arima_model),
            s,
            &series,
            cut,
            series.end(),
        )
        .map_err(|e| e.to_string())
    };
    let hybrid = run(&schedule)?;
    let lstm_only = run(&CombinerSchedule::uniform(ModelKind::Sdlstm))?;
    let score = |f| {
        evaluate(f, &test, DayClass::All, "demo")
            .map(|r| r.overall_mape())
            .map_err(|e| e.to_string())
    };
    reply(&HybridResponse {
        dropout_p: lstm.dropout_p,
        arima_order: arima_model.order.to_string(),
        hybrid_mape: score(&hybrid)?,
        sdlstm_mape: score(&lstm_only)?,
        truth: test.counts().to_vec(),
        points: hybrid
            .points
            .iter()
            .map(|p| DayPoint {
                minute: minute_of_day(p.timestamp),
                value: p.value,
                source: p.source.as_str(),
                interval_s: p.interval.secs(),
            })
            .collect(),
    })
}

fn to_js(outcome: Outcome) -> Result<String, JsError> {
    outcome.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = generateAndDetect)]
pub fn js_generate_and_detect(request: &str) -> Result<String, JsError> {
    to_js(generate_and_detect(request))
}

#[wasm_bindgen(js_name = arimaForecast)]
pub fn js_arima_forecast(request: &str) -> Result<String, JsError> {
    to_js(arima_forecast(request))
}

#[wasm_bindgen(js_name = hybridDay)]
pub fn js_hybrid_day(request: &str) -> Result<String, JsError> {
    to_js(hybrid_day(request))
}
