use chrono::{Duration, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sdlstm_core::arima::{self, ArimaOrder};
use sdlstm_core::combiner::{
    default_schedule, predict_hybrid, update_models, CombinerSchedule, ModelKind, NodeEntry,
    UpdateOutcome, UpdatePolicy,
};
use sdlstm_core::datagen::{generate, GenSpec};
use sdlstm_core::eval::mape;
use sdlstm_core::sdlstm::{self, TrainConfig};
use sdlstm_core::series::detect_singular_points;
use sdlstm_core::{Interval, TrafficSeries};

fn arma_sample(n: usize, phi: f64, theta: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 200;
    let mut y = vec![0.0; n + burn];
    let mut prev_e = 0.0;
    for t in 0..n + burn {
        let e: f64 = StandardNormal.sample(&mut rng);
        let prev_y = if t > 0 { y[t - 1] } else { 0.0 };
        y[t] = phi * prev_y + e + theta * prev_e;
        prev_e = e;
    }
    y.split_off(burn)
}

#[test]
fn recovers_ar1_and_ma1() {
    let mut ar_hits = 0;
    let mut ma_hits = 0;
    for seed in 0..5 {
        let ar = arima::fit_values(
            &arma_sample(2000, 0.7, 0.0, seed),
            ArimaOrder::new(1, 0, 0).unwrap(),
            Interval::QuarterHour,
        )
        .unwrap();
        if (ar.ar[0] - 0.7).abs() <= 0.1 {
            ar_hits += 1;
        }
        let ma = arima::fit_values(
            &arma_sample(2000, 0.0, 0.5, 100 + seed),
            ArimaOrder::new(0, 0, 1).unwrap(),
            Interval::QuarterHour,
        )
        .unwrap();
        if (ma.ma[0] - 0.5).abs() <= 0.15 {
            ma_hits += 1;
        }
    }
    assert!(ar_hits >= 4, "AR(1) recovered in {ar_hits}/5 seeds");
    assert!(ma_hits >= 4, "MA(1) recovered in {ma_hits}/5 seeds");
}

#[test]
fn gauss_newton_never_increases_rss() {
    let y = arma_sample(600, 0.4, 0.3, 9);
    let trace =
        arima::fit_traced(&y, ArimaOrder::new(1, 0, 1).unwrap(), Interval::QuarterHour).unwrap();
    for pair in trace.rss_path.windows(2) {
        assert!(pair[1] <= pair[0]);
    }
}

#[test]
fn selection_prefers_the_generating_family() {
    let y = arma_sample(1500, 0.7, 0.0, 21);
    let sel = arima::select_and_fit(&y, 2, 1, 2, Interval::QuarterHour).unwrap();
    assert_eq!(sel.order.d, 0, "chose {}", sel.order);
    assert!(sel.order.p >= 1, "chose {}", sel.order);
    let best = sel
        .candidates
        .iter()
        .filter_map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best, sel.aic);
}

fn hourly_sinusoid(hours: usize) -> TrafficSeries {
    let start = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
    let counts = (0..hours)
        .map(|h| 500.0 + 200.0 * (2.0 * std::f64::consts::PI * h as f64 / 24.0).sin())
        .collect();
    TrafficSeries::new(start, Interval::Hour, counts).unwrap()
}

#[test]
fn learns_a_clean_daily_cycle() {
    let series = hourly_sinusoid(24 * 20);
    let (train, test) = series
        .split_at_time(series.start() + Duration::days(17))
        .unwrap();
    let cfg = TrainConfig {
        epochs: 150,
        ..TrainConfig::default()
    };
    let model = sdlstm::train(&train, &cfg).unwrap();
    assert!(model.training_loss.last() < model.training_loss.first());

    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    for i in 0..test.len() {
        let history = series.slice(0..train.len() + i).unwrap();
        predicted.push(model.predict_next(&history).unwrap());
        actual.push(test.counts()[i]);
    }
    let err = mape(&actual, &predicted).unwrap();
    assert!(err < 5.0, "MAPE {err}");
}

#[test]
fn training_is_deterministic() {
    let series = hourly_sinusoid(24 * 4);
    let cfg = TrainConfig {
        epochs: 5,
        seed: 17,
        ..TrainConfig::default()
    };
    let a = sdlstm::train(&series, &cfg).unwrap();
    let b = sdlstm::train(&series, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let c = sdlstm::train(&series, &TrainConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn ten_percent_spikes_set_the_drop_probability() {
    let spec = GenSpec {
        days: 60,
        spike_rate: 0.1,
        ..GenSpec::default()
    };
    let (series, truth) = generate(&spec).unwrap();
    let realized = truth.spike_fraction();
    assert!((0.09..=0.11).contains(&realized), "realized {realized}");
    let p = sdlstm::adaptive_dropout(&series, &TrainConfig::default()).unwrap();
    assert!((0.08..=0.12).contains(&p), "dropout_p {p}");
}

#[test]
fn default_spec_spikes_are_detected() {
    let (series, truth) = generate(&GenSpec::default()).unwrap();
    let mask = detect_singular_points(&series, 25, 3.0).unwrap();
    let spikes = truth.spikes.iter().filter(|s| **s).count();
    let hits = truth
        .spikes
        .iter()
        .zip(&mask.flags)
        .filter(|(s, f)| **s && **f)
        .count();
    let recall = hits as f64 / spikes as f64;
    assert!(recall >= 0.8, "recall {recall}");
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    cov / var
}

#[test]
fn generated_traffic_has_daily_seasonality() {
    let (series, _) = generate(&GenSpec {
        days: 28,
        ..GenSpec::default()
    })
    .unwrap();
    let x = series.counts();
    assert!(autocorrelation(x, 96) > autocorrelation(x, 48));
}

fn small_models(days: usize) -> (TrafficSeries, sdlstm::SdLstmModel, arima::ArimaModel) {
    let (series, _) = generate(&GenSpec {
        days,
        seed: 4,
        ..GenSpec::default()
    })
    .unwrap();
    let lstm = sdlstm::train(
        &series,
        &TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let arima = arima::fit(&series.tail(672), ArimaOrder::new(2, 1, 1).unwrap()).unwrap();
    (series, lstm, arima)
}

#[test]
fn uniform_schedules_reproduce_single_models_exactly() {
    let (series, lstm, arima_model) = small_models(10);
    let history = series
        .prefix_until(series.start() + Duration::days(9) + Duration::hours(4))
        .unwrap();
    let end = history.end() + Duration::hours(6);

    let only_lstm = predict_hybrid(
        Some(&lstm),
        None,
        &CombinerSchedule::uniform(ModelKind::Sdlstm),
        &history,
        end,
    )
    .unwrap();
    let hourly = history.resample_complete(Interval::Hour).unwrap().unwrap();
    let direct = lstm.forecast_recursive(hourly.counts(), 6).unwrap();
    let got: Vec<f64> = only_lstm.points.iter().map(|p| p.value).collect();
    assert_eq!(
        got.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        direct.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );

    let only_arima = predict_hybrid(
        None,
        Some(&arima_model),
        &CombinerSchedule::uniform(ModelKind::Arima),
        &history,
        end,
    )
    .unwrap();
    let counts = history.counts();
    let direct = arima_model
        .anchored(&counts[counts.len() - arima_model.n_obs..])
        .unwrap()
        .forecast(24);
    let got: Vec<f64> = only_arima.points.iter().map(|p| p.value).collect();
    assert_eq!(
        got.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        direct.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn every_point_follows_the_schedule() {
    let (series, lstm, arima_model) = small_models(10);
    let schedule = default_schedule();
    let history = series
        .prefix_until(series.start() + Duration::days(8) + Duration::minutes(45))
        .unwrap();
    let f = predict_hybrid(
        Some(&lstm),
        Some(&arima_model),
        &schedule,
        &history,
        history.end() + Duration::hours(30),
    )
    .unwrap();
    for pair in f.points.windows(2) {
        assert!(pair[0].timestamp < pair[1].timestamp);
        if pair[0].source == pair[1].source {
            assert_eq!(
                pair[1].timestamp - pair[0].timestamp,
                pair[0].interval.duration()
            );
        }
    }
    for p in &f.points {
        assert_eq!(p.source, schedule.kind_at(p.timestamp));
        assert_eq!(p.interval, p.source.interval());
    }
}

#[test]
fn update_rule_versions_and_threshold() {
    let (series, _, _) = small_models(4);
    let policy = UpdatePolicy {
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        retrain_epochs: 1,
        arima_window: 192,
        ..UpdatePolicy::default()
    };
    let mut entry = NodeEntry::new(default_schedule());
    let first_two_days = series.slice(0..192).unwrap();
    assert_eq!(
        update_models(&mut entry, &first_two_days, &policy).unwrap(),
        UpdateOutcome::Retrained { version: 1 }
    );

    // below the threshold nothing but the history changes
    let before = (entry.lstm.clone(), entry.arima.clone());
    let some = series.slice(192..250).unwrap();
    assert_eq!(
        update_models(&mut entry, &some, &policy).unwrap(),
        UpdateOutcome::Appended
    );
    assert_eq!(
        serde_json::to_string(&entry.lstm).unwrap(),
        serde_json::to_string(&before.0).unwrap()
    );
    assert_eq!(entry.arima, before.1);

    let rest = series.slice(250..300).unwrap();
    assert_eq!(
        update_models(&mut entry, &rest, &policy).unwrap(),
        UpdateOutcome::Retrained { version: 2 }
    );
    assert_eq!(entry.pending, 0);
}

#[test]
fn dropout_moves_toward_a_spiky_day() {
    let (clean, _) = generate(&GenSpec {
        days: 3,
        spike_rate: 0.0,
        ..GenSpec::default()
    })
    .unwrap();
    let policy = UpdatePolicy {
        train: TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        },
        retrain_epochs: 1,
        arima_window: 192,
        ..UpdatePolicy::default()
    };
    let mut entry = NodeEntry::new(default_schedule());
    update_models(&mut entry, &clean.slice(0..192).unwrap(), &policy).unwrap();
    let before = entry.lstm.as_ref().unwrap().dropout_p;

    let (spiky, _) = generate(&GenSpec {
        days: 3,
        spike_rate: 0.3,
        seed: 9,
        ..GenSpec::default()
    })
    .unwrap();
    let day = TrafficSeries::new(
        clean.slice(192..288).unwrap().start(),
        Interval::QuarterHour,
        spiky.counts()[192..288].to_vec(),
    )
    .unwrap();
    update_models(&mut entry, &day, &policy).unwrap();
    let after = entry.lstm.as_ref().unwrap().dropout_p;
    assert!(after > before, "{before} -> {after}");
}
