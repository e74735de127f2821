use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use clap::{Parser, Subcommand};
use sdlstm_core::arima;
use sdlstm_core::combiner::{predict_hybrid, rolling_one_step};
use sdlstm_core::datagen::{generate, write_truth_csv};
use sdlstm_core::eval::{self, DayClass, EvalOptions, EvalSummary};
use sdlstm_core::sdlstm;
use sdlstm_core::series::{parse_timestamp, read_csv, write_csv, Interval, TrafficSeries};

use crate::config::Config;
use crate::error::CliError;
use crate::forecast_csv::{read_forecast, write_forecast};
use crate::modelfile::{Bundle, ModelFile, Payload, Provenance};
use crate::registry::{NodeRegistry, RetrainMode};

#[derive(Debug, Parser)]
#[command(
    name = "sdlstm",
    version,
    about = "Hybrid LSTM/ARIMA traffic-flow forecasting"
)]
pub struct Cli {
    /// TOML config with [train], [update], [schedule], [generate] and
    /// [service] sections.
    #[arg(long, global = true, env = "SDLSTM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the training and generator seeds.
    #[arg(long, global = true, env = "SDLSTM_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic 15-minute series plus its ground-truth sidecar.
    Generate {
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        spike_rate: Option<f64>,
        #[arg(long)]
        noise_sd: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.truth.csv`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Fit both models on a 15-minute series and write a bundle model file.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Forecast from a model file and history.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Quarter-hour history ending at the forecast origin (or the full
        /// truth with --rolling-from).
        #[arg(long)]
        history: PathBuf,
        /// Hours past the origin.
        #[arg(long, conflicts_with = "until")]
        horizon: Option<i64>,
        #[arg(long)]
        until: Option<String>,
        /// Replay one step at a time from this instant, using the true
        /// history up to each step.
        #[arg(long)]
        rolling_from: Option<String>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a forecast CSV against the truth.
    Evaluate {
        #[arg(long)]
        forecast: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "model")]
        label: String,
        #[arg(long, default_value = "all", value_parser = ["working", "non-working", "all"])]
        day_class: String,
        #[arg(long)]
        exclude_zero_actuals: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Rank evaluation summaries by overall MAPE.
    Compare {
        #[arg(required = true, num_args = 2..)]
        summaries: Vec<PathBuf>,
        /// Emit the ranking as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the line-protocol service.
    Serve {
        #[arg(long, env = "SDLSTM_PORT")]
        port: Option<u16>,
        #[arg(long, env = "SDLSTM_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1", env = "SDLSTM_BIND")]
        bind: String,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data("Io", format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data("Io", format!("cannot create {}: {e}", path.display())))
}

fn parse_ts(flag: &str, raw: &str) -> Result<DateTime<Utc>, CliError> {
    parse_timestamp(raw).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn default_truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.truth.csv"))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
        cfg.generate.seed = seed;
    }
    match cli.command {
        Command::Generate {
            days,
            spike_rate,
            noise_sd,
            out,
            truth,
        } => {
            let mut spec = cfg.generate.clone();
            if let Some(d) = days {
                spec.days = d;
            }
            if let Some(r) = spike_rate {
                spec.spike_rate = r;
            }
            if let Some(s) = noise_sd {
                spec.noise_sd = s;
            }
            let (series, gt) = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
            write_csv(&series, create(&out)?)?;
            let truth = truth.unwrap_or_else(|| default_truth_path(&out));
            write_truth_csv(&series, &gt, create(&truth)?)?;
            writeln!(
                stdout,
                "{}",
                serde_json::json!({
                    "series": out.display().to_string(),
                    "truth": truth.display().to_string(),
                    "samples": series.len(),
                    "spike_fraction": gt.spike_fraction(),
                })
            )
            .map_err(|e| CliError::data("Io", e.to_string()))?;
        }
        Command::Train { input, out, epochs } => {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let series = read_csv(open(&input)?, None)?;
            let file = train_bundle(&series, &cfg)?;
            file.save(&out)?;
            if let Payload::Bundle(b) = &file.payload {
                writeln!(
                    stdout,
                    "{}",
                    serde_json::json!({
                        "model": out.display().to_string(),
                        "dropout_p": b.sdlstm.dropout_p,
                        "arima_order": b.arima.order.to_string(),
                        "final_loss": b.sdlstm.training_loss.last(),
                    })
                )
                .map_err(|e| CliError::data("Io", e.to_string()))?;
            }
        }
        Command::Predict {
            model,
            history,
            horizon,
            until,
            rolling_from,
            out,
        } => {
            let bundle = ModelFile::load(&model)?.into_bundle()?;
            let series = read_csv(open(&history)?, Some(Interval::QuarterHour))?;
            let origin = match &rolling_from {
                Some(raw) => parse_ts("rolling-from", raw)?,
                None => series.end(),
            };
            let end = match (horizon, until) {
                (Some(h), None) if h > 0 => origin + Duration::hours(h),
                (Some(h), None) => {
                    return Err(CliError::Usage(format!(
                        "--horizon must be at least 1 hour, got {h}"
                    )))
                }
                (None, Some(raw)) => parse_ts("until", &raw)?,
                (None, None) => {
                    return Err(CliError::Usage(
                        "one of --horizon or --until is required".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap rejects both"),
            };
            let forecast = match rolling_from {
                Some(_) => rolling_one_step(
                    Some(&bundle.sdlstm),
                    Some(&bundle.arima),
                    &bundle.schedule,
                    &series,
                    origin,
                    end,
                )?,
                None => predict_hybrid(
                    Some(&bundle.sdlstm),
                    Some(&bundle.arima),
                    &bundle.schedule,
                    &series,
                    end,
                )?,
            };
            match out {
                Some(path) => write_forecast(&forecast, create(&path)?)?,
                None => write_forecast(&forecast, &mut *stdout)?,
            }
        }
        Command::Evaluate {
            forecast,
            truth,
            label,
            day_class,
            exclude_zero_actuals,
            out_csv,
            out_json,
        } => {
            let forecast = read_forecast(open(&forecast)?)?;
            let truth = read_csv(open(&truth)?, None)?;
            let class: DayClass = day_class.parse().map_err(CliError::Usage)?;
            let opts = EvalOptions {
                exclude_zero_actuals,
            };
            let report = eval::evaluate_with(&forecast, &truth, class, &label, opts)?;
            if let Some(path) = out_csv {
                eval::write_report_csv(&report, create(&path)?)?;
            }
            let summary =
                serde_json::to_string_pretty(&report.summary).expect("summary serializes");
            if let Some(path) = out_json {
                std::fs::write(&path, format!("{summary}\n")).map_err(|e| {
                    CliError::data("Io", format!("cannot write {}: {e}", path.display()))
                })?;
            }
            writeln!(stdout, "{summary}").map_err(|e| CliError::data("Io", e.to_string()))?;
        }
        Command::Compare { summaries, json } => {
            let mut loaded = Vec::new();
            for path in &summaries {
                let raw = std::fs::read_to_string(path).map_err(|e| {
                    CliError::data("Io", format!("cannot read {}: {e}", path.display()))
                })?;
                let s: EvalSummary = serde_json::from_str(&raw).map_err(|e| {
                    CliError::data("InvalidSummary", format!("{}: {e}", path.display()))
                })?;
                loaded.push(s);
            }
            let ranking = eval::compare(&loaded)?;
            let text = if json {
                serde_json::to_string_pretty(&ranking).expect("ranking serializes")
            } else {
                let mut t = format!("{:<4} {:<24} {:>12}\n", "rank", "label", "mape_percent");
                for r in &ranking {
                    t.push_str(&format!(
                        "{:<4} {:<24} {:>12.4}\n",
                        r.rank, r.label, r.overall_mape
                    ));
                }
                t.trim_end().to_string()
            };
            writeln!(stdout, "{text}").map_err(|e| CliError::data("Io", e.to_string()))?;
        }
        Command::Serve {
            port,
            data_dir,
            bind,
        } => {
            let port = port.unwrap_or(cfg.service.port);
            let data_dir = data_dir.unwrap_or_else(|| cfg.service.data_dir.clone());
            let registry = NodeRegistry::open(
                cfg.policy(),
                cfg.schedule.clone(),
                Some(data_dir.clone()),
                RetrainMode::Background,
            )
            .map_err(|e| CliError::data("RegistryError", e.to_string()))?;
            let listener = std::net::TcpListener::bind((bind.as_str(), port))
                .map_err(|e| CliError::Usage(format!("cannot bind {bind}:{port}: {e}")))?;
            let addr = listener
                .local_addr()
                .map_err(|e| CliError::data("Io", e.to_string()))?;
            eprintln!(
                "{}",
                serde_json::json!({
                    "event": "listening",
                    "addr": addr.to_string(),
                    "data_dir": data_dir.display().to_string(),
                    "nodes": registry.node_ids().len(),
                })
            );
            crate::server::run(listener, Arc::new(registry))
                .map_err(|e| CliError::data("Io", e.to_string()))?;
        }
    }
    Ok(())
}

/// Trains both models on a quarter-hour series. The recurrent model sees
/// the whole series; ARIMA the most recent `update.arima_window` samples.
pub fn train_bundle(series: &TrafficSeries, cfg: &Config) -> Result<ModelFile, CliError> {
    if series.interval() != Interval::QuarterHour {
        return Err(CliError::data(
            "IntervalMismatch",
            format!(
                "training needs quarter-hour data for the ARIMA windows, got {}s",
                series.interval().secs()
            ),
        ));
    }
    let lstm = sdlstm::train(series, &cfg.train)?;
    let recent = series.tail(cfg.update.arima_window.max(1));
    let arima_model = match cfg.update.arima_order {
        Some(order) => arima::fit(&recent, order)?,
        None => {
            let [p, d, q] = cfg.update.arima_grid;
            arima::select_and_fit(recent.counts(), p, d, q, recent.interval())?.model
        }
    };
    Ok(ModelFile::new(
        Payload::Bundle(Bundle {
            sdlstm: lstm,
            arima: arima_model,
            schedule: cfg.schedule.clone(),
        }),
        Provenance {
            train_config: Some(cfg.train.clone()),
            data_start: Some(series.start()),
            data_end: Some(series.end()),
            seed: Some(cfg.train.seed),
            version: 0,
        },
    ))
}
