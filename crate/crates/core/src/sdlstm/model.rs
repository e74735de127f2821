use serde::{Deserialize, Serialize};

use super::cell::final_hidden;
use super::params::LstmParams;
use super::SdLstmError;
use crate::series::{Interval, NormParams, TrafficSeries};

/// A fitted one-step-ahead forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdLstmModel {
    pub params: LstmParams,
    /// Drop probability used while training, taken from the singularity
    /// ratio of the training data.
    pub dropout_p: f64,
    pub norm: NormParams,
    pub input_window: usize,
    pub interval: Interval,
    /// Mean training loss per epoch, in normalized units.
    #[serde(default)]
    pub training_loss: Vec<f64>,
}

impl SdLstmModel {
    pub fn validate(&self) -> Result<(), SdLstmError> {
        self.params.validate()?;
        if self.params.input_size != 1 {
            return Err(SdLstmError::ShapeMismatch(format!(
                "forecaster expects one input per step, params take {}",
                self.params.input_size
            )));
        }
        if self.input_window == 0 {
            return Err(SdLstmError::InvalidConfig(
                "input_window must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(SdLstmError::InvalidConfig(format!(
                "dropout_p {} outside [0, 1)",
                self.dropout_p
            )));
        }
        if !(self.norm.max > self.norm.min) {
            return Err(SdLstmError::InvalidConfig(
                "normalization needs max > min".into(),
            ));
        }
        Ok(())
    }

    /// Next value after `history`, which must be sampled at the model's
    /// interval. Dropout is inactive at inference.
    pub fn predict_next(&self, history: &TrafficSeries) -> Result<f64, SdLstmError> {
        if history.interval() != self.interval {
            return Err(SdLstmError::IntervalMismatch {
                expected: self.interval.secs(),
                actual: history.interval().secs(),
            });
        }
        self.predict_from_counts(history.counts())
    }

    /// Same as [`predict_next`](Self::predict_next) on raw counts; only the
    /// trailing `input_window` values are read.
    pub fn predict_from_counts(&self, counts: &[f64]) -> Result<f64, SdLstmError> {
        if counts.len() < self.input_window {
            return Err(SdLstmError::SeriesTooShort {
                needed: self.input_window,
                actual: counts.len(),
            });
        }
        let inputs: Vec<f64> = counts[counts.len() - self.input_window..]
            .iter()
            .map(|&x| self.norm.scale(x))
            .collect();
        let h = final_hidden(&self.params, &inputs);
        let y = self
            .params
            .readout
            .iter()
            .zip(&h)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.params.readout_bias;
        Ok(self.norm.unscale(y).max(0.0))
    }

    /// `steps` values ahead, feeding each prediction back as input.
    pub fn forecast_recursive(
        &self,
        counts: &[f64],
        steps: usize,
    ) -> Result<Vec<f64>, SdLstmError> {
        let mut buf: Vec<f64> = counts.to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let next = self.predict_from_counts(&buf)?;
            buf.push(next);
            out.push(next);
        }
        Ok(out)
    }
}
