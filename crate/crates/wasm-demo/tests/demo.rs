use sdlstm_wasm::{arima_forecast, generate_and_detect, hybrid_day};
use serde_json::Value;

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn detection_demo_reports_flags() {
    let v = json(generate_and_detect(r#"{"seed":3,"days":2,"spike_rate":0.1}"#).unwrap());
    assert_eq!(v["counts"].as_array().unwrap().len(), 192);
    assert!(v["recall"].as_f64().unwrap() > 0.5);
    let p = v["dropout_p"].as_f64().unwrap();
    assert!((0.05..=0.5).contains(&p));
    assert!(generate_and_detect(r#"{"window":4}"#).is_err());
}

#[test]
fn arima_demo_forecasts_the_horizon() {
    let v = json(arima_forecast(r#"{"seed":1,"horizon":8,"order":[1,0,1]}"#).unwrap());
    assert_eq!(v["order"], "(1,0,1)");
    assert_eq!(v["forecast"].as_array().unwrap().len(), 8);
    assert_eq!(v["actual"].as_array().unwrap().len(), 8);
    assert_eq!(v["history"].as_array().unwrap().len(), 96);
    assert!(v["mape"].as_f64().unwrap() < 50.0);
    assert!(arima_forecast(r#"{"horizon":0}"#).is_err());
    assert!(arima_forecast("not json").is_err());
}

#[test]
fn hybrid_demo_follows_the_window() {
    let v = json(hybrid_day(r#"{"seed":2,"train_days":4,"epochs":2}"#).unwrap());
    let points = v["points"].as_array().unwrap();
    // 12 quarter hours between 05:00 and 08:00 plus 21 hourly points
    assert_eq!(points.len(), 33);
    for p in points {
        let minute = p["minute"].as_u64().unwrap();
        let expected = if (300..480).contains(&minute) {
            "arima"
        } else {
            "sdlstm"
        };
        assert_eq!(p["source"], expected);
    }
    assert_eq!(v["truth"].as_array().unwrap().len(), 96);
    assert!(hybrid_day(r#"{"arima_start_minute":310}"#).is_err());
}
