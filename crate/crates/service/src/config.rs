use std::path::{Path, PathBuf};

use sdlstm_core::arima::ArimaOrder;
use sdlstm_core::combiner::{default_schedule, CombinerSchedule, UpdatePolicy};
use sdlstm_core::datagen::GenSpec;
use sdlstm_core::sdlstm::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Retraining settings of the streaming service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpdateSection {
    pub retrain_threshold: usize,
    pub retrain_epochs: usize,
    pub arima_window: usize,
    pub arima_order: Option<ArimaOrder>,
    pub arima_grid: [usize; 3],
    pub max_train_samples: usize,
}

impl Default for UpdateSection {
    fn default() -> Self {
        let p = UpdatePolicy::default();
        Self {
            retrain_threshold: p.retrain_threshold,
            retrain_epochs: p.retrain_epochs,
            arima_window: p.arima_window,
            arima_order: p.arima_order,
            arima_grid: p.arima_grid,
            max_train_samples: p.max_train_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub port: u16,
    pub data_dir: PathBuf,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            port: 7878,
            data_dir: PathBuf::from("registry"),
        }
    }
}

/// Contents of the `--config` TOML file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub train: TrainConfig,
    pub update: UpdateSection,
    pub schedule: CombinerSchedule,
    pub generate: GenSpec,
    pub service: ServiceSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            update: UpdateSection::default(),
            schedule: default_schedule(),
            generate: GenSpec::default(),
            service: ServiceSection::default(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => Config::default(),
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                Self::parse(&raw)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(raw: &str) -> Result<Self, CliError> {
        toml::from_str(raw).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.train
            .validate()
            .map_err(|e| CliError::Usage(format!("config [train]: {e}")))?;
        self.schedule
            .validate()
            .map_err(|e| CliError::Usage(format!("config [schedule]: {e}")))?;
        if self.update.retrain_threshold == 0 {
            return Err(CliError::Usage(
                "config [update]: retrain_threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn policy(&self) -> UpdatePolicy {
        let u = &self.update;
        UpdatePolicy {
            retrain_threshold: u.retrain_threshold,
            train: self.train.clone(),
            retrain_epochs: u.retrain_epochs,
            arima_window: u.arima_window,
            arima_order: u.arima_order,
            arima_grid: u.arima_grid,
            max_train_samples: u.max_train_samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdlstm_core::combiner::ModelKind;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = Config::parse(
            r#"
            [train]
            epochs = 5
            seed = 9
            [train.detector]
            window = 11
            k = 2.5
            [update]
            retrain_threshold = 8
            arima_order = { p = 1, d = 0, q = 1 }
            [schedule]
            default = [
              { start_minute = 0, end_minute = 360, kind = "sdlstm" },
              { start_minute = 360, end_minute = 1440, kind = "arima" },
            ]
            [schedule.weekdays]
            sun = [{ start_minute = 0, end_minute = 1440, kind = "sdlstm" }]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.train.detector.window, 11);
        assert_eq!(cfg.policy().retrain_threshold, 8);
        assert_eq!(
            cfg.update.arima_order,
            Some(ArimaOrder::new(1, 0, 1).unwrap())
        );
        assert_eq!(cfg.schedule.default.windows()[1].kind, ModelKind::Arima);
        assert!(cfg.schedule.weekdays.contains_key("sun"));
    }

    #[test]
    fn bad_schedule_rejected() {
        let err = Config::parse(
            r#"
            [schedule]
            default = [{ start_minute = 0, end_minute = 700, kind = "sdlstm" }]
            "#,
        );
        assert!(err.is_err());
        assert!(Config::parse("[bogus]\nx = 1").is_err());
    }
}
