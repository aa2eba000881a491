//! Time-series containers and task assembly.
//!
//! A forecasting task couples a uniform-grid load series, zero or more
//! aligned weather channels, and the requirement record describing what is
//! being asked of a forecaster (granularity, horizon, aggregation level).
//! All types are immutable after construction; every operation is pure
//! given its seed, so tasks can be mapped over in parallel freely.

use std::ops::Range;
use std::path::Path;

use chrono::{NaiveDateTime, TimeDelta};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp format written by [`write_task_csv`]; ingestion also accepts
/// common ISO-8601 variants (space separator, fractional seconds, offsets).
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| t.naive_utc())
}

/// Load history on a uniform time grid.
///
/// Sample `n` corresponds to `start_time + n * step`. Values are kW, finite,
/// and non-empty; the constructor enforces all three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    start_time: NaiveDateTime,
    step_hours: f64,
    values: Vec<f64>,
}

impl LoadSeries {
    pub fn new(start_time: NaiveDateTime, step_hours: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyFile);
        }
        if !(step_hours > 0.0) || !step_hours.is_finite() {
            return Err(Error::Config {
                key: "step_hours".into(),
                reason: format!("must be positive and finite, got {step_hours}"),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedRow {
                line: pos + 2,
                reason: "non-finite load value".into(),
            });
        }
        Ok(Self {
            start_time,
            step_hours,
            values,
        })
    }

    pub fn start_time(&self) -> NaiveDateTime {
        self.start_time
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples covering one calendar day, when the grid divides a day evenly.
    pub fn samples_per_day(&self) -> Option<usize> {
        let per = 24.0 / self.step_hours;
        if (per - per.round()).abs() < 1e-9 && per >= 1.0 {
            Some(per.round() as usize)
        } else {
            None
        }
    }

    /// Same grid, different values. Length must be preserved.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.values.len(),
            });
        }
        Self::new(self.start_time, self.step_hours, values)
    }

    fn grid_matches(&self, other: &Self) -> bool {
        self.start_time == other.start_time
            && self.step_hours == other.step_hours
            && self.values.len() == other.values.len()
    }
}

/// Named exogenous channels aligned to a load grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    channels: Vec<WeatherChannel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherChannel {
    pub name: String,
    pub values: Vec<f64>,
}

impl WeatherSeries {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(channels: Vec<WeatherChannel>) -> Result<Self> {
        if let Some(first) = channels.first() {
            let n = first.values.len();
            for c in &channels {
                if c.values.len() != n {
                    return Err(Error::GridMismatch {
                        reason: format!(
                            "weather channel '{}' has {} samples, expected {}",
                            c.name,
                            c.values.len(),
                            n
                        ),
                    });
                }
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[WeatherChannel] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

/// Customer class of the metered load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadType {
    Residential,
    Commercial,
}

impl LoadType {
    /// Numeric encoding used in the feature vector: residential 0, commercial 1.
    pub fn code(self) -> f64 {
        match self {
            LoadType::Residential => 0.0,
            LoadType::Commercial => 1.0,
        }
    }
}

/// What is being asked of a forecaster on this task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRequirements {
    /// Sample spacing in hours: 0.25, 0.5, 1 or 24.
    pub granularity_hours: f64,
    /// Days of history behind the series: 30, 180 or 360.
    pub history_days: u32,
    /// Forecast horizon in hours: 4, 24, 168 or 720.
    pub horizon_hours: u32,
    /// Exogenous channel count: 0, 1 or 12.
    pub n_weather: u32,
    /// Aggregation level (metered customers behind the series).
    pub n_customers: u32,
    pub load_type: LoadType,
}

impl TaskRequirements {
    /// Horizon expressed in samples; the per-split test length K.
    pub fn horizon_samples(&self) -> Result<usize> {
        let k = f64::from(self.horizon_hours) / self.granularity_hours;
        if (k - k.round()).abs() > 1e-9 || k < 1.0 {
            return Err(Error::Config {
                key: "horizon_hours".into(),
                reason: format!(
                    "horizon {} h is not a positive whole number of {} h steps",
                    self.horizon_hours, self.granularity_hours
                ),
            });
        }
        Ok(k.round() as usize)
    }

    fn validate(&self) -> Result<()> {
        let gran_ok = [0.25, 0.5, 1.0, 24.0]
            .iter()
            .any(|g| (g - self.granularity_hours).abs() < 1e-9);
        if !gran_ok {
            return Err(Error::Config {
                key: "granularity_hours".into(),
                reason: format!("{} not in {{0.25, 0.5, 1, 24}}", self.granularity_hours),
            });
        }
        if ![30, 180, 360].contains(&self.history_days) {
            return Err(Error::Config {
                key: "history_days".into(),
                reason: format!("{} not in {{30, 180, 360}}", self.history_days),
            });
        }
        if ![4, 24, 168, 720].contains(&self.horizon_hours) {
            return Err(Error::Config {
                key: "horizon_hours".into(),
                reason: format!("{} not in {{4, 24, 168, 720}}", self.horizon_hours),
            });
        }
        if ![0, 1, 12].contains(&self.n_weather) {
            return Err(Error::Config {
                key: "n_weather".into(),
                reason: format!("{} not in {{0, 1, 12}}", self.n_weather),
            });
        }
        if self.n_customers == 0 {
            return Err(Error::Config {
                key: "n_customers".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// One forecasting task: load history, aligned weather, requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfTask {
    pub id: String,
    pub load: LoadSeries,
    pub weather: WeatherSeries,
    pub requirements: TaskRequirements,
}

impl LfTask {
    pub fn new(
        id: impl Into<String>,
        load: LoadSeries,
        weather: WeatherSeries,
        requirements: TaskRequirements,
    ) -> Result<Self> {
        requirements.validate()?;
        let k = requirements.horizon_samples()?;
        if load.len() < k {
            return Err(Error::TooShort {
                n: load.len(),
                need: k,
                what: "task horizon",
            });
        }
        if weather.channel_count() != requirements.n_weather as usize {
            return Err(Error::GridMismatch {
                reason: format!(
                    "{} weather channels present, requirements say {}",
                    weather.channel_count(),
                    requirements.n_weather
                ),
            });
        }
        if !weather.is_empty() && weather.len() != load.len() {
            return Err(Error::GridMismatch {
                reason: format!(
                    "weather length {} != load length {}",
                    weather.len(),
                    load.len()
                ),
            });
        }
        Ok(Self {
            id: id.into(),
            load,
            weather,
            requirements,
        })
    }

    /// Test length K in samples.
    pub fn horizon_samples(&self) -> usize {
        // Validated at construction; cannot fail afterwards.
        self.requirements.horizon_samples().expect("validated")
    }
}

/// One train/test partition of a task.
///
/// The test block is contiguous with length K; training data is everything
/// strictly before it, so a forecaster never sees samples that follow what
/// it must predict. Training length therefore lies in `[N-2K, N-K]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

impl SplitPair {
    pub fn k(&self) -> usize {
        self.test.len()
    }

    pub fn train_slice<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[self.train.clone()]
    }

    pub fn test_slice<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[self.test.clone()]
    }
}

/// Draw a train/test split with the test block start uniform over the
/// positions that keep at least `N - 2K` training samples before it.
pub fn random_split(task: &LfTask, rng: &mut impl Rng) -> Result<SplitPair> {
    let n = task.load.len();
    let k = task.horizon_samples();
    if n < 2 * k {
        return Err(Error::TooShort {
            n,
            need: 2 * k,
            what: "random_split",
        });
    }
    let start = rng.gen_range(n - 2 * k..=n - k);
    Ok(SplitPair {
        train: 0..start,
        test: start..start + k,
    })
}

/// Mean-downsample raw values by an integral factor, dropping a trailing
/// partial window.
pub(crate) fn downsample_mean(values: &[f64], factor: usize) -> Vec<f64> {
    values
        .chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

/// Resample a series to a coarser grid; each output sample is the arithmetic
/// mean of the covered input samples.
pub fn resample(series: &LoadSeries, target_step_hours: f64) -> Result<LoadSeries> {
    let src_min = (series.step_hours * 60.0).round() as u32;
    let tgt_min = (target_step_hours * 60.0).round() as u32;
    if tgt_min < src_min {
        return Err(Error::Upsample {
            source_minutes: src_min,
            target_minutes: tgt_min,
        });
    }
    if src_min == 0 || tgt_min % src_min != 0 {
        return Err(Error::NonIntegralRatio {
            source_minutes: src_min,
            target_minutes: tgt_min,
        });
    }
    let factor = (tgt_min / src_min) as usize;
    if factor == 1 {
        return Ok(series.clone());
    }
    let values = downsample_mean(&series.values, factor);
    LoadSeries::new(series.start_time, target_step_hours, values)
}

/// Pointwise sum of grid-matched series: the aggregate load of a group of
/// metered customers.
pub fn aggregate(series_list: &[LoadSeries]) -> Result<LoadSeries> {
    let first = series_list.first().ok_or(Error::EmptyFile)?;
    let mut sum = first.values.clone();
    for s in &series_list[1..] {
        if !first.grid_matches(s) {
            return Err(Error::GridMismatch {
                reason: "aggregate inputs differ in start, step or length".into(),
            });
        }
        for (acc, v) in sum.iter_mut().zip(&s.values) {
            *acc += v;
        }
    }
    LoadSeries::new(first.start_time, first.step_hours, sum)
}

/// Read a task data file: header row, first column ISO-8601 timestamps,
/// second column load in kW, any further columns weather channels named by
/// the header. Rows are sorted by timestamp before the uniform-grid check,
/// so only gaps and duplicates are rejected, not disorder.
pub fn ingest_csv(path: &Path) -> Result<(LoadSeries, WeatherSeries)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "need at least timestamp and load columns".into(),
        });
    }
    let weather_names: Vec<String> = headers.iter().skip(2).map(str::to_owned).collect();

    struct Row {
        t: NaiveDateTime,
        load: f64,
        weather: Vec<f64>,
        line: usize,
    }

    let mut rows: Vec<Row> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header
        let record = record.map_err(csv_error)?;
        if record.len() != headers.len() {
            return Err(Error::MalformedRow {
                line,
                reason: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        let t = parse_timestamp(&record[0]).ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("unparsable timestamp '{}'", &record[0]),
        })?;
        let load = parse_value(&record[1], line)?;
        let weather = record
            .iter()
            .skip(2)
            .map(|f| parse_value(f, line))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(Row {
            t,
            load,
            weather,
            line,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    rows.sort_by_key(|r| r.t);

    let step = if rows.len() > 1 {
        let d = rows[1].t - rows[0].t;
        if d <= TimeDelta::zero() {
            return Err(Error::NonUniformGrid {
                line: rows[1].line,
                reason: "duplicate timestamp".into(),
            });
        }
        d
    } else {
        TimeDelta::hours(1)
    };
    for w in rows.windows(2) {
        let d = w[1].t - w[0].t;
        if d != step {
            let reason = if d.is_zero() {
                "duplicate timestamp".to_string()
            } else {
                format!(
                    "gap: expected {} s spacing, found {} s",
                    step.num_seconds(),
                    d.num_seconds()
                )
            };
            return Err(Error::NonUniformGrid {
                line: w[1].line,
                reason,
            });
        }
    }

    let step_hours = step.num_seconds() as f64 / 3600.0;
    let load = LoadSeries::new(
        rows[0].t,
        step_hours,
        rows.iter().map(|r| r.load).collect(),
    )?;
    let channels = weather_names
        .into_iter()
        .enumerate()
        .map(|(c, name)| WeatherChannel {
            name,
            values: rows.iter().map(|r| r.weather[c]).collect(),
        })
        .collect();
    let weather = WeatherSeries::new(channels)?;
    Ok((load, weather))
}

/// Write a task data file in the layout [`ingest_csv`] reads. Values print
/// in shortest round-trip form, so read-back reproduces them exactly.
pub fn write_task_csv(path: &Path, load: &LoadSeries, weather: &WeatherSeries) -> Result<()> {
    if !weather.is_empty() && weather.len() != load.len() {
        return Err(Error::GridMismatch {
            reason: format!(
                "weather length {} != load length {}",
                weather.len(),
                load.len()
            ),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["timestamp".to_string(), "load_kw".to_string()];
    header.extend(weather.channels().iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(csv_error)?;

    let step = TimeDelta::seconds((load.step_hours() * 3600.0).round() as i64);
    let mut t = load.start_time();
    for (i, v) in load.values().iter().enumerate() {
        let mut record = vec![t.format(TS_FORMAT).to_string(), format!("{v}")];
        for c in weather.channels() {
            record.push(format!("{}", c.values[i]));
        }
        w.write_record(&record).map_err(csv_error)?;
        t += step;
    }
    w.flush()?;
    Ok(())
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("unparsable number '{field}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            line,
            reason: "non-finite value".into(),
        });
    }
    Ok(v)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedRow {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::Rng;
    use std::io::Write as _;

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2021, 3, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn series(step: f64, values: Vec<f64>) -> LoadSeries {
        LoadSeries::new(t0(), step, values).unwrap()
    }

    pub(crate) fn hourly_task(n: usize, horizon: u32) -> LfTask {
        let values: Vec<f64> = (0..n).map(|i| 100.0 + (i % 24) as f64).collect();
        LfTask::new(
            "t",
            series(1.0, values),
            WeatherSeries::empty(),
            TaskRequirements {
                granularity_hours: 1.0,
                history_days: 30,
                horizon_hours: horizon,
                n_weather: 0,
                n_customers: 1,
                load_type: LoadType::Residential,
            },
        )
        .unwrap()
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingest_quarter_hour_day() {
        let mut body = String::from("timestamp,load_kw\n");
        let mut t = t0();
        for i in 0..96 {
            body.push_str(&format!("{},{}\n", t.format(TS_FORMAT), i));
            t += TimeDelta::minutes(15);
        }
        let f = write_tmp(&body);
        let (load, weather) = ingest_csv(f.path()).unwrap();
        assert_eq!(load.len(), 96);
        assert!((load.step_hours() - 0.25).abs() < 1e-12);
        assert_eq!(weather.channel_count(), 0);
    }

    #[test]
    fn ingest_rejects_gap() {
        let body = "timestamp,load_kw\n\
                    2021-03-01T00:00:00,1\n\
                    2021-03-01T01:00:00,2\n\
                    2021-03-01T03:00:00,3\n";
        let f = write_tmp(body);
        match ingest_csv(f.path()) {
            Err(Error::NonUniformGrid { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected NonUniformGrid, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_duplicate() {
        let body = "timestamp,load_kw\n\
                    2021-03-01T00:00:00,1\n\
                    2021-03-01T00:00:00,2\n";
        let f = write_tmp(body);
        assert!(matches!(
            ingest_csv(f.path()),
            Err(Error::NonUniformGrid { .. })
        ));
    }

    #[test]
    fn ingest_weather_column() {
        let body = "timestamp,load_kw,temperature\n\
                    2021-03-01T00:00:00,1.5,10.0\n\
                    2021-03-01T01:00:00,2.5,11.0\n";
        let f = write_tmp(body);
        let (load, weather) = ingest_csv(f.path()).unwrap();
        assert_eq!(load.values(), &[1.5, 2.5]);
        assert_eq!(weather.channel_count(), 1);
        assert_eq!(weather.channels()[0].name, "temperature");
        assert_eq!(weather.channels()[0].values, vec![10.0, 11.0]);
    }

    #[test]
    fn ingest_rejects_empty_and_malformed() {
        let f = write_tmp("timestamp,load_kw\n");
        assert!(matches!(ingest_csv(f.path()), Err(Error::EmptyFile)));

        let f = write_tmp("timestamp,load_kw\n2021-03-01T00:00:00,abc\n");
        match ingest_csv(f.path()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn ingest_sorts_disordered_rows() {
        let body = "timestamp,load_kw\n\
                    2021-03-01T02:00:00,3\n\
                    2021-03-01T00:00:00,1\n\
                    2021-03-01T01:00:00,2\n";
        let f = write_tmp(body);
        let (load, _) = ingest_csv(f.path()).unwrap();
        assert_eq!(load.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn resample_quarter_hour_to_hour() {
        let s = series(0.25, vec![1.0, 2.0, 3.0, 4.0]);
        let r = resample(&s, 1.0).unwrap();
        assert_eq!(r.values(), &[2.5]);
        assert_eq!(r.step_hours(), 1.0);
    }

    #[test]
    fn resample_identity() {
        let s = series(1.0, vec![1.0, 2.0, 3.0]);
        assert_eq!(resample(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn resample_to_daily_matches_mean_oracle() {
        let values: Vec<f64> = (0..48).map(|i| (i * i) as f64 * 0.37 + 5.0).collect();
        let s = series(1.0, values.clone());
        let r = resample(&s, 24.0).unwrap();
        assert_eq!(r.len(), 2);
        for day in 0..2 {
            let oracle: f64 = values[day * 24..(day + 1) * 24].iter().sum::<f64>() / 24.0;
            assert!((r.values()[day] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_drops_trailing_partial_window() {
        let s = series(1.0, vec![1.0; 30]);
        let r = resample(&s, 24.0).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn resample_rejects_upsample_and_nonintegral() {
        let s = series(1.0, vec![1.0, 2.0]);
        assert!(matches!(resample(&s, 0.5), Err(Error::Upsample { .. })));
        let s = series(0.5, vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            resample(&s, 0.75),
            Err(Error::NonIntegralRatio { .. })
        ));
    }

    #[test]
    fn aggregate_identity_and_sum() {
        let a = series(1.0, vec![1.0, 1.0]);
        assert_eq!(aggregate(std::slice::from_ref(&a)).unwrap(), a);

        let b = series(1.0, vec![2.0, 2.0]);
        assert_eq!(aggregate(&[a, b]).unwrap().values(), &[3.0, 3.0]);
    }

    #[test]
    fn aggregate_fifty_series_matches_column_sum() {
        let mut r = rng(9);
        let list: Vec<LoadSeries> = (0..50)
            .map(|_| series(1.0, (0..24).map(|_| r.gen_range(0.0..10.0)).collect()))
            .collect();
        let agg = aggregate(&list).unwrap();
        for i in 0..24 {
            let oracle: f64 = list.iter().map(|s| s.values()[i]).sum();
            assert!((agg.values()[i] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_rejects_grid_mismatch() {
        let a = series(1.0, vec![1.0, 2.0]);
        let b = series(0.5, vec![1.0, 2.0]);
        assert!(matches!(
            aggregate(&[a, b]),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn split_contract_contiguous_block() {
        let task = hourly_task(100, 4);
        assert_eq!(task.horizon_samples(), 4);
        let mut r = rng(1);
        for _ in 0..50 {
            let sp = random_split(&task, &mut r).unwrap();
            assert_eq!(sp.test.len(), 4);
            assert_eq!(sp.train.end, sp.test.start);
            assert_eq!(sp.train.start, 0);
            assert!(sp.train.len() >= 100 - 8);
            assert!(sp.test.end <= 100);
        }
    }

    #[test]
    fn split_deterministic_under_seed() {
        let task = hourly_task(200, 24);
        let a = random_split(&task, &mut rng(7)).unwrap();
        let b = random_split(&task, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_too_short() {
        let values: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let task = LfTask::new(
            "short",
            series(1.0, values),
            WeatherSeries::empty(),
            TaskRequirements {
                granularity_hours: 1.0,
                history_days: 30,
                horizon_hours: 24,
                n_weather: 0,
                n_customers: 1,
                load_type: LoadType::Commercial,
            },
        )
        .unwrap();
        assert!(matches!(
            random_split(&task, &mut rng(0)),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn split_start_uniform_chi_squared() {
        // N=100, K=10 leaves 11 feasible start positions (80..=90).
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let load = series(0.25, values);
        let task = LfTask::new(
            "u",
            load,
            WeatherSeries::empty(),
            TaskRequirements {
                granularity_hours: 0.25,
                history_days: 30,
                horizon_hours: 4,
                n_weather: 0,
                n_customers: 1,
                load_type: LoadType::Residential,
            },
        )
        .unwrap();
        assert_eq!(task.horizon_samples(), 16);
        // 100 - 2*16 = 68 .. 84: 17 positions.
        let positions = 17usize;
        let draws = 1700 * 2;
        let mut counts = vec![0usize; positions];
        let mut r = rng(1234);
        for _ in 0..draws {
            let sp = random_split(&task, &mut r).unwrap();
            counts[sp.test.start - 68] += 1;
        }
        let expected = draws as f64 / positions as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // df = 16; the 0.999 quantile is 39.25. Generous but catches bias.
        assert!(chi2 < 39.25, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn csv_roundtrip_identity() {
        let mut r = rng(3);
        let load = series(0.5, (0..48).map(|_| r.gen_range(0.0..500.0)).collect());
        let weather = WeatherSeries::new(vec![WeatherChannel {
            name: "temperature".into(),
            values: (0..48).map(|_| r.gen_range(-10.0..35.0)).collect(),
        }])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_task_csv(f.path(), &load, &weather).unwrap();
        let (load2, weather2) = ingest_csv(f.path()).unwrap();
        assert_eq!(load, load2);
        assert_eq!(weather, weather2);
    }

    proptest! {
        #[test]
        fn resample_and_aggregate_commute(
            cols in 2usize..5,
            hours in 2usize..6,
            seed in 0u64..1000,
        ) {
            let mut r = rng(seed);
            let n = hours * 4; // quarter-hour grid
            let list: Vec<LoadSeries> = (0..cols)
                .map(|_| series(0.25, (0..n).map(|_| r.gen_range(0.0..100.0)).collect()))
                .collect();

            let agg_then_res = resample(&aggregate(&list).unwrap(), 1.0).unwrap();
            let res_then_agg = aggregate(
                &list.iter().map(|s| resample(s, 1.0).unwrap()).collect::<Vec<_>>(),
            )
            .unwrap();

            prop_assert_eq!(agg_then_res.len(), res_then_agg.len());
            for (a, b) in agg_then_res.values().iter().zip(res_then_agg.values()) {
                let scale = a.abs().max(1.0);
                prop_assert!((a - b).abs() / scale < 1e-12);
            }
        }

        #[test]
        fn split_never_overlaps_and_is_stable(n in 48usize..400, seed in 0u64..500) {
            let values: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let task = LfTask::new(
                "p",
                series(1.0, values),
                WeatherSeries::empty(),
                TaskRequirements {
                    granularity_hours: 1.0,
                    history_days: 30,
                    horizon_hours: 24,
                    n_weather: 0,
                    n_customers: 1,
                    load_type: LoadType::Residential,
                },
            )
            .unwrap();
            let a = random_split(&task, &mut rng(seed)).unwrap();
            let b = random_split(&task, &mut rng(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.train.end <= a.test.start);
            prop_assert_eq!(a.test.len(), 24);
            prop_assert!(a.test.end <= n);
            prop_assert!(a.train.len() + 2 * 24 >= n);
        }
    }
}
