//! `timestamp,value,source,interval_s` files written by `predict`.

use std::io::{Read, Write};

use sdlstm_core::combiner::{ForecastPoint, HybridForecast, ModelKind};
use sdlstm_core::series::{format_timestamp, parse_timestamp, CsvError, Interval};

pub const HEADER: [&str; 4] = ["timestamp", "value", "source", "interval_s"];

pub fn write_forecast<W: Write>(forecast: &HybridForecast, writer: W) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    for p in &forecast.points {
        wtr.write_record([
            format_timestamp(p.timestamp),
            p.value.to_string(),
            p.source.as_str().to_string(),
            p.interval.secs().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_forecast<R: Read>(reader: R) -> Result<HybridForecast, CsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CsvError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |reason: String| CsvError::Row { line, reason };
        if record.len() != 4 {
            return Err(row_err(format!(
                "expected 4 fields, found {}",
                record.len()
            )));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| row_err(format!("value {:?} is not a number", &record[1])))?;
        let source: ModelKind = record[2].parse().map_err(row_err)?;
        let secs: u32 = record[3]
            .parse()
            .map_err(|_| row_err(format!("interval {:?} is not an integer", &record[3])))?;
        points.push(ForecastPoint {
            timestamp: parse_timestamp(&record[0]).map_err(row_err)?,
            value,
            source,
            interval: Interval::from_secs(secs).map_err(|e| row_err(e.to_string()))?,
        });
    }
    Ok(HybridForecast { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    #[test]
    fn round_trip() {
        let f = HybridForecast {
            points: vec![
                ForecastPoint {
                    timestamp: Utc.with_ymd_and_hms(2018, 1, 1, 4, 0, 0).unwrap(),
                    value: 1234.5678901234567,
                    source: ModelKind::Sdlstm,
                    interval: Interval::Hour,
                },
                ForecastPoint {
                    timestamp: Utc.with_ymd_and_hms(2018, 1, 1, 5, 0, 0).unwrap(),
                    value: 0.1 + 0.2,
                    source: ModelKind::Arima,
                    interval: Interval::QuarterHour,
                },
            ],
        };
        let mut buf = Vec::new();
        write_forecast(&f, &mut buf).unwrap();
        assert_eq!(read_forecast(buf.as_slice()).unwrap(), f);
    }
}
