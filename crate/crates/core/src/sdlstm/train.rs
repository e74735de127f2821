use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{backward_sequence, run_sequence};
use super::dropout::DropoutMask;
use super::model::SdLstmModel;
use super::params::LstmParams;
use super::SdLstmError;
use crate::series::{
    detect_singular_points, singularity_ratio, DetectorConfig, DropoutBounds, Interval, NormParams,
    TrafficSeries,
};

/// Training hyperparameters. The seed drives weight init, batch order and
/// dropout masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub input_window: usize,
    pub hidden_size: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub detector: DetectorConfig,
    pub dropout_bounds: DropoutBounds,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            seed: 0,
            input_window: 24,
            hidden_size: 16,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            detector: DetectorConfig::default(),
            dropout_bounds: DropoutBounds::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SdLstmError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(SdLstmError::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )));
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(SdLstmError::InvalidConfig(
                "moment decay rates must be below 1".into(),
            ));
        }
        if self.epochs == 0
            || self.input_window == 0
            || self.hidden_size == 0
            || self.batch_size == 0
        {
            return Err(SdLstmError::InvalidConfig(
                "epochs, input_window, hidden_size and batch_size must be positive".into(),
            ));
        }
        self.dropout_bounds.validate()?;
        Ok(())
    }
}

/// One training example: `input_window` inputs and the next value.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<f64>,
    pub target: f64,
}

/// Sliding one-step-ahead windows over a (normalized) sequence.
pub fn sliding_windows(values: &[f64], input_window: usize) -> Vec<Window> {
    if values.len() <= input_window {
        return Vec::new();
    }
    (0..values.len() - input_window)
        .map(|i| Window {
            inputs: values[i..i + input_window].to_vec(),
            target: values[i + input_window],
        })
        .collect()
}

/// Mean squared error over `windows` and its exact gradient, with one
/// dropout mask per window drawn from `rng`.
pub fn loss_and_gradients<R: Rng + ?Sized>(
    params: &LstmParams,
    windows: &[Window],
    dropout_p: f64,
    rng: &mut R,
) -> Result<(f64, LstmParams), SdLstmError> {
    let masks: Vec<DropoutMask> = windows
        .iter()
        .map(|_| DropoutMask::sample(params.hidden_size, dropout_p, rng))
        .collect();
    loss_and_gradients_with_masks(params, windows, &masks)
}

/// Same as [`loss_and_gradients`] with caller-supplied masks.
pub fn loss_and_gradients_with_masks(
    params: &LstmParams,
    windows: &[Window],
    masks: &[DropoutMask],
) -> Result<(f64, LstmParams), SdLstmError> {
    if windows.is_empty() {
        return Err(SdLstmError::ShapeMismatch("empty batch".into()));
    }
    if masks.len() != windows.len() {
        return Err(SdLstmError::ShapeMismatch(format!(
            "{} masks for {} windows",
            masks.len(),
            windows.len()
        )));
    }
    let seq_len = windows[0].inputs.len();
    if seq_len == 0 || !seq_len.is_multiple_of(params.input_size) {
        return Err(SdLstmError::ShapeMismatch(format!(
            "window of {seq_len} inputs does not divide into input size {}",
            params.input_size
        )));
    }
    if let Some(w) = windows.iter().find(|w| w.inputs.len() != seq_len) {
        return Err(SdLstmError::ShapeMismatch(format!(
            "windows must share one length; found {} and {seq_len}",
            w.inputs.len()
        )));
    }
    if let Some(m) = masks.iter().find(|m| m.scales.len() != params.hidden_size) {
        return Err(SdLstmError::ShapeMismatch(format!(
            "mask of length {} for hidden size {}",
            m.scales.len(),
            params.hidden_size
        )));
    }

    let batch = windows.len() as f64;
    let mut grads = LstmParams::zeros(params.hidden_size, params.input_size);
    let mut loss = 0.0;
    for (window, mask) in windows.iter().zip(masks) {
        let (state, caches) = run_sequence(params, &window.inputs);
        let dropped = mask.apply(&state.h);
        let y = params
            .readout
            .iter()
            .zip(&dropped)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + params.readout_bias;
        let err = y - window.target;
        loss += err * err / batch;

        let dy = 2.0 * err / batch;
        grads.readout_bias += dy;
        for (g, h) in grads.readout.iter_mut().zip(&dropped) {
            *g += dy * h;
        }
        let dh: Vec<f64> = params
            .readout
            .iter()
            .zip(&mask.scales)
            .map(|(w, s)| dy * w * s)
            .collect();
        backward_sequence(params, &caches, &dh, &mut grads);
    }
    Ok((loss, grads))
}

/// First/second moment estimates for every weight.
#[derive(Debug, Clone)]
pub struct Adam {
    m: LstmParams,
    v: LstmParams,
    step: i32,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl Adam {
    pub fn new(params: &LstmParams, config: &TrainConfig) -> Self {
        Self {
            m: LstmParams::zeros(params.hidden_size, params.input_size),
            v: LstmParams::zeros(params.hidden_size, params.input_size),
            step: 0,
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
        }
    }

    pub fn update(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, w), (_, g)), (_, m)), (_, v)) in tensors {
            for k in 0..w.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                w[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Drop probability for `series`: the clamped fraction of singular samples,
/// measured at the series' native resolution.
pub fn adaptive_dropout(series: &TrafficSeries, config: &TrainConfig) -> Result<f64, SdLstmError> {
    let mask = detect_singular_points(series, config.detector.window, config.detector.k)?;
    Ok(singularity_ratio(&mask, config.dropout_bounds)?)
}

fn hourly_view(series: &TrafficSeries) -> Result<TrafficSeries, SdLstmError> {
    match series.interval() {
        Interval::Hour => Ok(series.clone()),
        Interval::QuarterHour => {
            series
                .resample_complete(Interval::Hour)?
                .ok_or(SdLstmError::SeriesTooShort {
                    needed: 4,
                    actual: series.len(),
                })
        }
    }
}

/// Fits a fresh model. The drop probability is fixed from the data before
/// any weight is touched. Quarter-hour input is inspected for singular
/// points at full resolution and then summed into hourly buckets for
/// fitting.
pub fn train(series: &TrafficSeries, config: &TrainConfig) -> Result<SdLstmModel, SdLstmError> {
    config.validate()?;
    let dropout_p = adaptive_dropout(series, config)?;
    let hourly = hourly_view(series)?;
    if hourly.len() < config.input_window + 1 {
        return Err(SdLstmError::SeriesTooShort {
            needed: config.input_window + 1,
            actual: hourly.len(),
        });
    }
    let norm = NormParams::fit(hourly.counts()).map_err(|_| SdLstmError::DegenerateSeries)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = LstmParams::init_uniform(config.hidden_size, 1, &mut rng);
    let mut model = SdLstmModel {
        params,
        dropout_p,
        norm,
        input_window: config.input_window,
        interval: Interval::Hour,
        training_loss: Vec::new(),
    };
    fit_epochs(&mut model, &hourly, config, config.epochs, &mut rng)?;
    Ok(model)
}

/// Continues training an existing model on `series` for `epochs` more
/// passes with fresh optimizer state. Normalization is kept; the drop
/// probability is re-measured on `series`.
pub fn resume(
    model: &SdLstmModel,
    series: &TrafficSeries,
    config: &TrainConfig,
    epochs: usize,
    seed: u64,
) -> Result<SdLstmModel, SdLstmError> {
    config.validate()?;
    let dropout_p = adaptive_dropout(series, config)?;
    let hourly = hourly_view(series)?;
    if hourly.len() < model.input_window + 1 {
        return Err(SdLstmError::SeriesTooShort {
            needed: model.input_window + 1,
            actual: hourly.len(),
        });
    }
    let mut next = model.clone();
    next.dropout_p = dropout_p;
    if epochs > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fit_epochs(&mut next, &hourly, config, epochs, &mut rng)?;
    }
    Ok(next)
}

fn fit_epochs(
    model: &mut SdLstmModel,
    hourly: &TrafficSeries,
    config: &TrainConfig,
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), SdLstmError> {
    let scaled: Vec<f64> = hourly
        .counts()
        .iter()
        .map(|&x| model.norm.scale(x))
        .collect();
    let windows = sliding_windows(&scaled, model.input_window);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut adam = Adam::new(&model.params, config);
    let mut batch = Vec::with_capacity(config.batch_size);
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| windows[i].clone()));
            let (loss, grads) = loss_and_gradients(&model.params, &batch, model.dropout_p, rng)?;
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut model.params, &grads);
        }
        let mean = epoch_loss / windows.len() as f64;
        if !mean.is_finite() {
            return Err(SdLstmError::NonFinite("training loss diverged".into()));
        }
        model.training_loss.push(mean);
    }
    Ok(())
}
