//! Regular-interval traffic series: telemetry parsing, unit conversion,
//! gap repair, and train/holdout splitting.
//!
//! A [`TimeSeries`] is a run of samples spaced exactly `interval_s` seconds
//! apart. Gaps in the source data are materialized as missing-value points
//! rather than skipped, so downstream fill logic sees a uniform grid.

use crate::error::{Error, Result};

/// Expected sampling interval for ISP telemetry (one sample every five minutes).
pub const SAMPLE_INTERVAL_S: i64 = 300;

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Bps,
    Gbps,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Bps => "bps",
            Unit::Gbps => "gbps",
        }
    }
}

/// One sample: epoch-seconds timestamp (UTC) and an optional traffic volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    pub timestamp: i64,
    pub value: Option<f64>,
}

impl TimePoint {
    pub fn new(timestamp: i64, value: Option<f64>) -> Result<Self> {
        if timestamp < 0 {
            return Err(Error::InvalidParam(format!(
                "timestamp {timestamp} is negative"
            )));
        }
        if let Some(v) = value {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "value {v} must be finite and non-negative"
                )));
            }
        }
        Ok(TimePoint { timestamp, value })
    }
}

/// Ordered, fixed-interval traffic samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    points: Vec<TimePoint>,
    interval_s: i64,
    unit: Unit,
}

impl TimeSeries {
    /// Builds a series from points, checking the grid invariants:
    /// timestamps strictly increasing with consecutive points exactly
    /// `interval_s` apart.
    pub fn new(points: Vec<TimePoint>, interval_s: i64, unit: Unit) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("time series must contain at least one point"));
        }
        if interval_s <= 0 {
            return Err(Error::InvalidParam(format!(
                "interval_s must be positive, got {interval_s}"
            )));
        }
        for pair in points.windows(2) {
            let gap = pair[1].timestamp - pair[0].timestamp;
            if gap != interval_s {
                return Err(Error::InvalidParam(format!(
                    "timestamps {} and {} are {} s apart, expected {} s",
                    pair[0].timestamp, pair[1].timestamp, gap, interval_s
                )));
            }
        }
        Ok(TimeSeries {
            points,
            interval_s,
            unit,
        })
    }

    /// Convenience constructor from a start timestamp and optional values.
    pub fn from_values(
        start_timestamp: i64,
        interval_s: i64,
        unit: Unit,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| TimePoint::new(start_timestamp + i as i64 * interval_s, v))
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(points, interval_s, unit)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn interval_s(&self) -> i64 {
        self.interval_s
    }

    pub fn points(&self) -> &[TimePoint] {
        &self.points
    }

    pub fn timestamps(&self) -> impl Iterator<Item = i64> + '_ {
        self.points.iter().map(|p| p.timestamp)
    }

    pub fn missing_count(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_none()).count()
    }

    /// Values of a complete series; errors on the first missing value.
    pub fn dense_values(&self) -> Result<Vec<f64>> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| p.value.ok_or(Error::MissingValue(i)))
            .collect()
    }

    /// Converts a bps series to Gbps. Guards against double conversion.
    pub fn to_gbps(&self) -> Result<TimeSeries> {
        if self.unit != Unit::Bps {
            return Err(Error::UnitMismatch {
                expected: "bps",
                actual: self.unit.name(),
            });
        }
        let points = self
            .points
            .iter()
            .map(|p| TimePoint {
                timestamp: p.timestamp,
                value: p.value.map(|v| v / 1e9),
            })
            .collect();
        Ok(TimeSeries {
            points,
            interval_s: self.interval_s,
            unit: Unit::Gbps,
        })
    }

    /// Replaces each missing value with the nearest earlier present value.
    pub fn forward_fill(&self) -> Result<TimeSeries> {
        let mut last = match self.points[0].value {
            Some(v) => v,
            None => return Err(Error::LeadingMissing),
        };
        let points = self
            .points
            .iter()
            .map(|p| {
                if let Some(v) = p.value {
                    last = v;
                }
                TimePoint {
                    timestamp: p.timestamp,
                    value: Some(last),
                }
            })
            .collect();
        Ok(TimeSeries {
            points,
            interval_s: self.interval_s,
            unit: self.unit,
        })
    }

    /// Removes the final calendar day (UTC) when it holds fewer than a full
    /// day's worth of samples.
    pub fn drop_incomplete_trailing_day(&self) -> Result<TimeSeries> {
        if self.interval_s != SAMPLE_INTERVAL_S {
            return Err(Error::InvalidParam(format!(
                "expected {} s interval, got {} s",
                SAMPLE_INTERVAL_S, self.interval_s
            )));
        }
        let per_day = (SECONDS_PER_DAY / self.interval_s) as usize;
        let last_day = self.points.last().expect("series is non-empty").timestamp
            / SECONDS_PER_DAY;
        let trailing = self
            .points
            .iter()
            .rev()
            .take_while(|p| p.timestamp / SECONDS_PER_DAY == last_day)
            .count();
        if trailing >= per_day {
            return Ok(self.clone());
        }
        let keep = self.points.len() - trailing;
        if keep == 0 {
            return Err(Error::Empty(
                "dropping the incomplete trailing day removes every sample",
            ));
        }
        TimeSeries::new(self.points[..keep].to_vec(), self.interval_s, self.unit)
    }

    /// Splits a complete series into leading training days and trailing
    /// holdout days. The series length must be exactly
    /// `(train_days + holdout_days)` whole days.
    pub fn train_holdout_split(
        &self,
        train_days: usize,
        holdout_days: usize,
    ) -> Result<(TimeSeries, TimeSeries)> {
        if train_days == 0 || holdout_days == 0 {
            return Err(Error::InvalidParam(
                "train_days and holdout_days must be at least 1".into(),
            ));
        }
        if SECONDS_PER_DAY % self.interval_s != 0 {
            return Err(Error::InvalidParam(format!(
                "interval {} s does not divide a day",
                self.interval_s
            )));
        }
        let per_day = (SECONDS_PER_DAY / self.interval_s) as usize;
        let expected = (train_days + holdout_days) * per_day;
        if self.points.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.points.len(),
            });
        }
        if let Some(i) = self.points.iter().position(|p| p.value.is_none()) {
            return Err(Error::MissingValue(i));
        }
        let cut = train_days * per_day;
        let train = TimeSeries::new(self.points[..cut].to_vec(), self.interval_s, self.unit)?;
        let holdout = TimeSeries::new(self.points[cut..].to_vec(), self.interval_s, self.unit)?;
        Ok((train, holdout))
    }

    /// Writes a processed (complete, Gbps) series as `timestamp,gbps` CSV.
    pub fn to_csv(&self) -> Result<String> {
        if self.unit != Unit::Gbps {
            return Err(Error::UnitMismatch {
                expected: "gbps",
                actual: self.unit.name(),
            });
        }
        let mut out = String::from("timestamp,gbps\n");
        for (i, p) in self.points.iter().enumerate() {
            let v = p.value.ok_or(Error::MissingValue(i))?;
            out.push_str(&format!("{},{}\n", p.timestamp, v));
        }
        Ok(out)
    }

    /// Reads a `timestamp,gbps` CSV produced by [`TimeSeries::to_csv`].
    pub fn from_csv(text: &str) -> Result<TimeSeries> {
        let mut lines = text.lines();
        match lines.next() {
            Some("timestamp,gbps") => {}
            Some(other) => {
                return Err(Error::Format(format!(
                    "expected header 'timestamp,gbps', got '{other}'"
                )))
            }
            None => return Err(Error::Empty("series CSV has no content")),
        }
        let mut points = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (ts, val) = line.split_once(',').ok_or_else(|| {
                Error::Format(format!("line {}: expected 'timestamp,gbps'", lineno + 2))
            })?;
            let timestamp: i64 = ts
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad timestamp '{ts}'", lineno + 2)))?;
            let value: f64 = val
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad value '{val}'", lineno + 2)))?;
            points.push(TimePoint::new(timestamp, Some(value))?);
        }
        if points.is_empty() {
            return Err(Error::Empty("series CSV has no rows"));
        }
        let interval = if points.len() >= 2 {
            points[1].timestamp - points[0].timestamp
        } else {
            SAMPLE_INTERVAL_S
        };
        TimeSeries::new(points, interval, Unit::Gbps)
    }
}

/// Field names used when pulling records out of a telemetry document.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub timestamp_field: String,
    pub value_field: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            timestamp_field: "timestamp".into(),
            value_field: "bps".into(),
        }
    }
}

/// Parses a JSON telemetry document (array of records) into a bps series on
/// a regular 300 s grid. Grid slots with no record become missing points.
pub fn parse_telemetry(text: &str) -> Result<TimeSeries> {
    parse_telemetry_with(text, &ParseOptions::default())
}

pub fn parse_telemetry_with(text: &str, opts: &ParseOptions) -> Result<TimeSeries> {
    let doc: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Format(format!("telemetry document is not valid JSON: {e}")))?;
    let records = doc
        .as_array()
        .ok_or_else(|| Error::Format("telemetry document must be a JSON array".into()))?;
    if records.is_empty() {
        return Err(Error::Empty("telemetry document contains no records"));
    }

    let mut samples: Vec<(i64, f64)> = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let obj = record.as_object().ok_or_else(|| Error::Parse {
            record: i,
            reason: "record is not an object".into(),
        })?;
        let ts_value = obj.get(&opts.timestamp_field).ok_or_else(|| Error::Parse {
            record: i,
            reason: format!("missing field '{}'", opts.timestamp_field),
        })?;
        let timestamp = parse_timestamp(ts_value).map_err(|reason| Error::Parse { record: i, reason })?;
        if timestamp < 0 {
            return Err(Error::Parse {
                record: i,
                reason: format!("timestamp {timestamp} is negative"),
            });
        }
        let value = obj
            .get(&opts.value_field)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Parse {
                record: i,
                reason: format!("missing or non-numeric field '{}'", opts.value_field),
            })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Parse {
                record: i,
                reason: format!("value {value} must be finite and non-negative"),
            });
        }
        samples.push((timestamp, value));
    }

    samples.sort_by_key(|&(ts, _)| ts);
    for pair in samples.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateTimestamp(pair[0].0));
        }
    }

    let start = samples[0].0;
    let end = samples[samples.len() - 1].0;
    let span = end - start;
    let n_slots = (span / SAMPLE_INTERVAL_S) as usize + 1;
    let mut values: Vec<Option<f64>> = vec![None; n_slots];
    for (i, &(ts, v)) in samples.iter().enumerate() {
        let offset = ts - start;
        if offset % SAMPLE_INTERVAL_S != 0 {
            return Err(Error::Parse {
                record: i,
                reason: format!(
                    "timestamp {ts} is not on the {SAMPLE_INTERVAL_S} s grid anchored at {start}"
                ),
            });
        }
        values[(offset / SAMPLE_INTERVAL_S) as usize] = Some(v);
    }

    TimeSeries::from_values(start, SAMPLE_INTERVAL_S, Unit::Bps, values)
}

fn parse_timestamp(value: &serde_json::Value) -> std::result::Result<i64, String> {
    if let Some(ts) = value.as_i64() {
        return Ok(ts);
    }
    if let Some(s) = value.as_str() {
        return chrono::DateTime::parse_from_rfc3339(s)
            .map(|dt| dt.timestamp())
            .map_err(|e| format!("timestamp '{s}' is neither epoch seconds nor ISO-8601: {e}"));
    }
    Err(format!("timestamp {value} is neither epoch seconds nor ISO-8601"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<Option<f64>>) -> TimeSeries {
        TimeSeries::from_values(0, 300, Unit::Gbps, values).unwrap()
    }

    #[test]
    fn parse_two_records() {
        let s = parse_telemetry(r#"[{"timestamp": 0, "bps": 1e9}, {"timestamp": 300, "bps": 2e9}]"#)
            .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.unit(), Unit::Bps);
        assert_eq!(s.points()[0].value, Some(1e9));
        assert_eq!(s.points()[1].value, Some(2e9));
    }

    #[test]
    fn parse_materializes_gap() {
        let s = parse_telemetry(r#"[{"timestamp": 0, "bps": 1e9}, {"timestamp": 600, "bps": 2e9}]"#)
            .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.points()[1].value, None);
    }

    #[test]
    fn parse_rejects_negative_value() {
        let err = parse_telemetry(r#"[{"timestamp": 0, "bps": -5.0}]"#).unwrap_err();
        assert!(matches!(err, Error::Parse { record: 0, .. }));
    }

    #[test]
    fn parse_rejects_duplicate_timestamp() {
        let err = parse_telemetry(
            r#"[{"timestamp": 0, "bps": 1.0}, {"timestamp": 0, "bps": 2.0}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateTimestamp(0)));
    }

    #[test]
    fn parse_rejects_empty_document() {
        assert!(matches!(parse_telemetry("[]"), Err(Error::Empty(_))));
    }

    #[test]
    fn parse_rejects_off_grid_timestamp() {
        let err = parse_telemetry(
            r#"[{"timestamp": 0, "bps": 1.0}, {"timestamp": 450, "bps": 2.0}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn parse_accepts_iso8601_and_ignores_extra_fields() {
        let s = parse_telemetry(
            r#"[{"timestamp": "1970-01-01T00:00:00Z", "bps": 1.0, "iface": "xe-0/0/0"},
                {"timestamp": "1970-01-01T00:05:00Z", "bps": 2.0}]"#,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points()[1].timestamp, 300);
    }

    #[test]
    fn parse_with_custom_field_names() {
        let opts = ParseOptions {
            timestamp_field: "ts".into(),
            value_field: "bits".into(),
        };
        let s = parse_telemetry_with(r#"[{"ts": 0, "bits": 7.0}]"#, &opts).unwrap();
        assert_eq!(s.points()[0].value, Some(7.0));
    }

    #[test]
    fn to_gbps_divides_and_guards() {
        let s = TimeSeries::from_values(0, 300, Unit::Bps, vec![Some(1e9), Some(0.0), None])
            .unwrap();
        let g = s.to_gbps().unwrap();
        assert_eq!(g.unit(), Unit::Gbps);
        assert_eq!(g.points()[0].value, Some(1.0));
        assert_eq!(g.points()[1].value, Some(0.0));
        assert_eq!(g.points()[2].value, None);
        assert!(matches!(g.to_gbps(), Err(Error::UnitMismatch { .. })));
    }

    #[test]
    fn forward_fill_uses_previous_valid() {
        let s = series(vec![Some(1.0), None, None, Some(4.0)]);
        let f = s.forward_fill().unwrap();
        let vals = f.dense_values().unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0, 4.0]);
    }

    #[test]
    fn forward_fill_no_op_on_complete_series() {
        let s = series(vec![Some(1.0), Some(2.0)]);
        assert_eq!(s.forward_fill().unwrap(), s);
    }

    #[test]
    fn forward_fill_rejects_leading_missing() {
        let s = series(vec![None, Some(2.0)]);
        assert!(matches!(s.forward_fill(), Err(Error::LeadingMissing)));
    }

    #[test]
    fn forward_fill_is_idempotent() {
        let s = series(vec![Some(1.0), None, Some(3.0), None, None]);
        let once = s.forward_fill().unwrap();
        let twice = once.forward_fill().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn drop_trailing_day_removes_partial_day() {
        // 2 full days plus 35 samples of a third day.
        let n = 2 * 288 + 35;
        let s = series((0..n).map(|i| Some(i as f64)).collect());
        let d = s.drop_incomplete_trailing_day().unwrap();
        assert_eq!(d.len(), 2 * 288);
    }

    #[test]
    fn drop_trailing_day_keeps_complete_days() {
        let s = series((0..2 * 288).map(|i| Some(i as f64)).collect());
        let d = s.drop_incomplete_trailing_day().unwrap();
        assert_eq!(d.len(), 2 * 288);
    }

    #[test]
    fn drop_trailing_day_rejects_empty_result() {
        let s = series((0..10).map(|i| Some(i as f64)).collect());
        assert!(matches!(
            s.drop_incomplete_trailing_day(),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn split_29_days_default() {
        let s = series((0..29 * 288).map(|i| Some(i as f64)).collect());
        let (train, holdout) = s.train_holdout_split(21, 8).unwrap();
        assert_eq!(train.len(), 6048);
        assert_eq!(holdout.len(), 2304);
        assert_eq!(
            holdout.points()[0].timestamp,
            train.points().last().unwrap().timestamp + 300
        );
    }

    #[test]
    fn split_small() {
        let s = series((0..576).map(|i| Some(i as f64)).collect());
        let (train, holdout) = s.train_holdout_split(1, 1).unwrap();
        assert_eq!(train.len(), 288);
        assert_eq!(holdout.len(), 288);
    }

    #[test]
    fn split_rejects_wrong_length() {
        let s = series((0..28 * 288).map(|i| Some(i as f64)).collect());
        let err = s.train_holdout_split(21, 8).unwrap_err();
        match err {
            Error::LengthMismatch { expected, actual } => {
                assert_eq!(expected, 29 * 288);
                assert_eq!(actual, 28 * 288);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pipeline_preserves_length_and_timestamps() {
        let text = r#"[{"timestamp": 0, "bps": 1e9}, {"timestamp": 900, "bps": 3e9},
                       {"timestamp": 600, "bps": 2e9}]"#;
        let parsed = parse_telemetry(text).unwrap();
        let processed = parsed.to_gbps().unwrap().forward_fill().unwrap();
        assert_eq!(processed.len(), parsed.len());
        assert!(parsed
            .timestamps()
            .zip(processed.timestamps())
            .all(|(a, b)| a == b));
    }

    #[test]
    fn csv_round_trip() {
        let s = series(vec![Some(1.25), Some(0.5), Some(3.0)]);
        let csv = s.to_csv().unwrap();
        assert!(csv.starts_with("timestamp,gbps\n"));
        let back = TimeSeries::from_csv(&csv).unwrap();
        assert_eq!(back, s);
    }
}
