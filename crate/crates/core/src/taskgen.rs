//! Synthetic corpus generation.
//!
//! Real distribution-system load recordings cannot ship with the crate, so
//! the generator synthesizes heterogeneous forecasting tasks over the full
//! requirement grid: four aggregation levels, weather-channel counts of
//! 0/1/12, histories of 30/180/360 days, horizons of 4/24/168/720 hours and
//! granularities of 0.25/0.5/1/24 hours, with invalid corners excluded (see
//! [`constraint_notes`]). Building loads are canonical daily shapes
//! modulated by weekday, temperature coupling and AR(1) noise; weather is a
//! seasonal-plus-daily sinusoid with correlated derived channels.
//!
//! Everything is a pure function of the master seed, so a corpus can be
//! regenerated bit-identically anywhere.

use chrono::{Datelike, NaiveDate, NaiveDateTime, TimeDelta, Timelike, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::seed::{fnv1a, mix, rng};
use crate::series::{LfTask, LoadSeries, LoadType, TaskRequirements, WeatherChannel, WeatherSeries};

/// All generated series start here; a Friday, so the first weekend falls on
/// day indices 1 and 2.
fn epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 1, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time")
}

/// How many customers sit behind the meter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationLevel {
    Building,
    Transformer,
    Microgrid,
    Feeder,
}

impl AggregationLevel {
    pub const ALL: [AggregationLevel; 4] = [
        AggregationLevel::Building,
        AggregationLevel::Transformer,
        AggregationLevel::Microgrid,
        AggregationLevel::Feeder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationLevel::Building => "building",
            AggregationLevel::Transformer => "transformer",
            AggregationLevel::Microgrid => "microgrid",
            AggregationLevel::Feeder => "feeder",
        }
    }

    /// Customer counts the level may draw from.
    pub fn customer_range(self) -> std::ops::RangeInclusive<u32> {
        match self {
            AggregationLevel::Building => 1..=1,
            AggregationLevel::Transformer => 3..=10,
            AggregationLevel::Microgrid => 50..=300,
            AggregationLevel::Feeder => 1000..=2000,
        }
    }
}

/// Physical template for one synthetic building. Per-building scale, phase
/// and sensitivity jitter are drawn around these values from the building's
/// derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthProfileParams {
    /// Mean demand scale in kW.
    pub base_kw: f64,
    /// Height of the daily-shape bumps relative to the flat floor.
    pub shape_amplitude: f64,
    /// Uniform per-building shift of the daily shape, in hours.
    pub phase_jitter_hours: f64,
    pub weekend_factor_residential: f64,
    pub weekend_factor_commercial: f64,
    /// kW per degree of distance from the 18 °C comfort point.
    pub temp_sensitivity: f64,
    /// Stationary standard deviation of one building's AR(1) noise, in kW.
    pub noise_std: f64,
    /// AR(1) coefficient at one-hour spacing; rescaled to the task grid.
    pub noise_phi_hourly: f64,
}

impl Default for SynthProfileParams {
    fn default() -> Self {
        Self {
            base_kw: 1.5,
            shape_amplitude: 1.0,
            phase_jitter_hours: 1.0,
            weekend_factor_residential: 1.25,
            weekend_factor_commercial: 0.35,
            temp_sensitivity: 0.045,
            noise_std: 0.10,
            noise_phi_hourly: 0.55,
        }
    }
}

impl SynthProfileParams {
    fn validate(&self) -> Result<()> {
        if !(self.base_kw > 0.0) {
            return Err(Error::Config {
                key: "base_kw".into(),
                reason: format!("must be positive, got {}", self.base_kw),
            });
        }
        if self.noise_std < 0.0 {
            return Err(Error::Config {
                key: "noise_std".into(),
                reason: format!("must be non-negative, got {}", self.noise_std),
            });
        }
        if !(0.0..1.0).contains(&self.noise_phi_hourly) {
            return Err(Error::Config {
                key: "noise_phi_hourly".into(),
                reason: format!("must lie in [0, 1), got {}", self.noise_phi_hourly),
            });
        }
        Ok(())
    }
}

/// Requirement grid a corpus is enumerated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub levels: Vec<AggregationLevel>,
    /// Exogenous channel counts: 0, 1 or 12.
    pub weather_counts: Vec<u32>,
    pub history_days: Vec<u32>,
    pub horizon_hours: Vec<u32>,
    pub granularity_hours: Vec<f64>,
    pub profile: SynthProfileParams,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            levels: AggregationLevel::ALL.to_vec(),
            weather_counts: vec![0, 1, 12],
            history_days: vec![30, 180, 360],
            horizon_hours: vec![4, 24, 168, 720],
            granularity_hours: vec![0.25, 0.5, 1.0, 24.0],
            profile: SynthProfileParams::default(),
            seed: 7,
        }
    }
}

/// Human-readable statements of the combination rules, in the order
/// [`combo_allowed`] applies them. Corpus index files quote these verbatim
/// so a reader can tell why a grid corner is absent.
pub fn constraint_notes() -> &'static [&'static str] {
    &[
        "720 h horizons are generated only at the feeder level",
        "12 weather channels are generated only at the feeder level",
        "horizons that are not a whole number of samples at the granularity are skipped",
        "history must cover two horizon blocks plus one day of training: 24*history_days >= 2*horizon_hours + 24",
    ]
}

/// Whether one grid combination yields a valid, splittable task.
pub fn combo_allowed(
    level: AggregationLevel,
    weather: u32,
    history_days: u32,
    horizon_hours: u32,
    granularity_hours: f64,
) -> bool {
    let feeder = level == AggregationLevel::Feeder;
    if horizon_hours == 720 && !feeder {
        return false;
    }
    if weather == 12 && !feeder {
        return false;
    }
    let steps = f64::from(horizon_hours) / granularity_hours;
    if (steps - steps.round()).abs() > 1e-9 || steps < 1.0 {
        return false;
    }
    u64::from(history_days) * 24 >= 2 * u64::from(horizon_hours) + 24
}

fn samples_per_day(granularity_hours: f64) -> Result<usize> {
    let per = 24.0 / granularity_hours;
    if !(granularity_hours > 0.0) || (per - per.round()).abs() > 1e-9 || per < 1.0 {
        return Err(Error::Config {
            key: "granularity_hours".into(),
            reason: format!("{granularity_hours} h does not divide a day into whole samples"),
        });
    }
    Ok(per.round() as usize)
}

fn step_delta(granularity_hours: f64) -> TimeDelta {
    TimeDelta::seconds((granularity_hours * 3600.0).round() as i64)
}

/// Stationary AR(1) path: `e[t] = phi e[t-1] + innovation`, innovation
/// variance chosen so the marginal standard deviation is `sigma` at every t.
fn ar1(n: usize, phi: f64, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let innovation = Normal::new(0.0, sigma * (1.0 - phi * phi).sqrt()).expect("finite std");
    let start = Normal::new(0.0, sigma).expect("finite std");
    let mut e = Vec::with_capacity(n);
    let mut prev = start.sample(rng);
    for _ in 0..n {
        e.push(prev);
        prev = phi * prev + innovation.sample(rng);
    }
    e
}

/// Gaussian bump on the 24-hour circle.
fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let mut d = (hour - center).abs();
    if d > 12.0 {
        d = 24.0 - d;
    }
    (-d * d / (2.0 * width * width)).exp()
}

/// Canonical unit-scale daily profiles: residential demand peaks in the
/// evening with a smaller morning shoulder, commercial demand sits on a
/// midday business-hours plateau.
fn daily_shape(load_type: LoadType, hour: f64, amplitude: f64) -> f64 {
    match load_type {
        LoadType::Residential => {
            0.55 + amplitude * (0.35 * bump(hour, 8.0, 1.8) + 0.75 * bump(hour, 19.0, 2.6))
        }
        LoadType::Commercial => 0.40 + amplitude * 0.90 * bump(hour, 13.5, 3.2),
    }
}

fn week_factor(load_type: LoadType, weekday: Weekday, params: &SynthProfileParams) -> f64 {
    if matches!(weekday, Weekday::Sat | Weekday::Sun) {
        match load_type {
            LoadType::Residential => params.weekend_factor_residential,
            LoadType::Commercial => params.weekend_factor_commercial,
        }
    } else {
        1.0
    }
}

/// Temperature in °C: yearly sinusoid peaking mid-July around a 13 °C mean,
/// a daily sinusoid peaking at 15:00, and AR(1) noise.
fn temperature(n: usize, granularity_hours: f64, seed: u64) -> Vec<f64> {
    let mut noise_rng = rng(mix(seed, 0));
    let phi = 0.97_f64.powf(granularity_hours);
    let noise = ar1(n, phi, 2.0, &mut noise_rng);
    let mut t = Vec::with_capacity(n);
    for (i, e) in noise.iter().enumerate() {
        let day = i as f64 * granularity_hours / 24.0;
        let hour = (i as f64 * granularity_hours) % 24.0;
        let seasonal = 13.0 - 10.0 * (TAU * (day - 196.0) / 365.0).cos();
        let daily = 4.5 * (TAU * (hour - 15.0) / 24.0).cos();
        t.push(seasonal + daily + e);
    }
    t
}

const CHANNEL_NAMES: [&str; 12] = [
    "temperature_c",
    "humidity_pct",
    "dew_point_c",
    "wind_speed_ms",
    "cloud_cover_pct",
    "pressure_hpa",
    "solar_wm2",
    "precip_mm",
    "temperature_lag_1d_c",
    "temperature_mean_1d_c",
    "heat_index_c",
    "wind_chill_c",
];

/// Synthetic weather on the requested grid. Channel 0 is always
/// temperature; the remaining channels are correlated transforms of it
/// (humidity-like inversions, lags, rolling means), each with its own noise
/// stream, so multi-channel tasks carry redundant but not identical inputs.
pub fn synth_weather(
    days: u32,
    granularity_hours: f64,
    channels: usize,
    seed: u64,
) -> Result<WeatherSeries> {
    if days == 0 {
        return Err(Error::Config {
            key: "days".into(),
            reason: "need at least one day".into(),
        });
    }
    if !(1..=12).contains(&channels) {
        return Err(Error::Config {
            key: "channels".into(),
            reason: format!("{channels} not in 1..=12"),
        });
    }
    let per_day = samples_per_day(granularity_hours)?;
    let n = days as usize * per_day;
    let temp = temperature(n, granularity_hours, mix(seed, 1));

    let mut columns: Vec<Vec<f64>> = vec![temp];
    for c in 1..channels {
        let mut crng = rng(mix(seed, 2 + c as u64));
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let temp = &columns[0];
        let col: Vec<f64> = match CHANNEL_NAMES[c] {
            "humidity_pct" => temp
                .iter()
                .map(|t| (78.0 - 1.4 * (t - 13.0) + 4.0 * unit.sample(&mut crng)).clamp(5.0, 100.0))
                .collect(),
            "dew_point_c" => temp
                .iter()
                .map(|t| t - 5.0 + unit.sample(&mut crng))
                .collect(),
            "wind_speed_ms" => temp
                .iter()
                .map(|t| (3.5 + 0.1 * (t - 13.0) + 1.5 * unit.sample(&mut crng)).abs())
                .collect(),
            "cloud_cover_pct" => temp
                .iter()
                .map(|t| (50.0 - 1.2 * (t - 13.0) + 12.0 * unit.sample(&mut crng)).clamp(0.0, 100.0))
                .collect(),
            "pressure_hpa" => temp
                .iter()
                .map(|t| 1013.0 - 0.4 * (t - 13.0) + 2.0 * unit.sample(&mut crng))
                .collect(),
            "solar_wm2" => {
                let cloud = &columns[4];
                temp.iter()
                    .enumerate()
                    .map(|(i, _)| {
                        let hour = (i as f64 * granularity_hours) % 24.0;
                        (520.0 * bump(hour, 12.5, 3.0) * (1.0 - cloud[i] / 140.0)
                            + 20.0 * unit.sample(&mut crng))
                        .max(0.0)
                    })
                    .collect()
            }
            "precip_mm" => {
                let cloud = &columns[4];
                (0..n)
                    .map(|i| (0.04 * (cloud[i] - 55.0) + 0.8 * unit.sample(&mut crng)).max(0.0))
                    .collect()
            }
            "temperature_lag_1d_c" => (0..n)
                .map(|i| temp[if i >= per_day { i - per_day } else { i }])
                .collect(),
            "temperature_mean_1d_c" => {
                let mut acc = 0.0;
                (0..n)
                    .map(|i| {
                        acc += temp[i];
                        if i >= per_day {
                            acc -= temp[i - per_day];
                        }
                        acc / (i + 1).min(per_day) as f64
                    })
                    .collect()
            }
            "heat_index_c" => {
                let hum = &columns[1];
                (0..n)
                    .map(|i| temp[i] + 0.08 * (hum[i] - 45.0).max(0.0))
                    .collect()
            }
            "wind_chill_c" => {
                let wind = &columns[3];
                (0..n).map(|i| temp[i] - 0.45 * wind[i]).collect()
            }
            other => unreachable!("unknown channel {other}"),
        };
        columns.push(col);
    }

    WeatherSeries::new(
        columns
            .into_iter()
            .zip(CHANNEL_NAMES)
            .map(|(values, name)| WeatherChannel {
                name: name.to_string(),
                values,
            })
            .collect(),
    )
}

/// One building's deterministic part: a weekly profile table plus its
/// realized temperature sensitivity.
struct BuildingDraw {
    weekly: Vec<f64>,
    sens: f64,
}

fn draw_building(
    load_type: LoadType,
    per_day: usize,
    granularity_hours: f64,
    params: &SynthProfileParams,
    rng: &mut impl Rng,
) -> BuildingDraw {
    let scale = rng.gen_range(0.6..1.4);
    let phase = if params.phase_jitter_hours > 0.0 {
        rng.gen_range(-params.phase_jitter_hours..params.phase_jitter_hours)
    } else {
        0.0
    };
    let sens = params.temp_sensitivity * rng.gen_range(0.5..1.5);

    let week_len = per_day * 7;
    let step = step_delta(granularity_hours);
    let mut t = epoch();
    let mut weekly = Vec::with_capacity(week_len);
    for _ in 0..week_len {
        let hour = f64::from(t.hour()) + f64::from(t.minute()) / 60.0;
        let shaped = daily_shape(
            load_type,
            (hour + phase).rem_euclid(24.0),
            params.shape_amplitude,
        );
        weekly.push(params.base_kw * scale * shaped * week_factor(load_type, t.weekday(), params));
        t += step;
    }
    BuildingDraw { weekly, sens }
}

fn aggregate_core(
    load_type: LoadType,
    n_buildings: u32,
    days: u32,
    granularity_hours: f64,
    weather: &WeatherSeries,
    params: &SynthProfileParams,
    seed: u64,
) -> Result<LoadSeries> {
    params.validate()?;
    if n_buildings == 0 {
        return Err(Error::Config {
            key: "n_buildings".into(),
            reason: "need at least one building".into(),
        });
    }
    if days == 0 {
        return Err(Error::Config {
            key: "days".into(),
            reason: "need at least one day".into(),
        });
    }
    let per_day = samples_per_day(granularity_hours)?;
    let n = days as usize * per_day;
    if weather.is_empty() || weather.len() != n {
        return Err(Error::GridMismatch {
            reason: format!(
                "weather provides {} samples of {} channels, load grid needs {}",
                weather.len(),
                weather.channel_count(),
                n
            ),
        });
    }
    let temp = &weather.channels()[0].values;

    // Independent same-phi AR(1) streams add up to one AR(1) stream with
    // pooled variance, and per-building weekly profiles add into a single
    // table, so the whole aggregate costs the same as one building. The
    // non-negativity floor is applied to the aggregate (the meter reading),
    // not per building.
    let building_seed = mix(seed, 1);
    let week_len = per_day * 7;
    let mut weekly = vec![0.0; week_len];
    let mut sens_total = 0.0;
    for b in 0..n_buildings {
        let mut brng = rng(mix(building_seed, u64::from(b)));
        let draw = draw_building(load_type, per_day, granularity_hours, params, &mut brng);
        for (acc, v) in weekly.iter_mut().zip(&draw.weekly) {
            *acc += v;
        }
        sens_total += draw.sens;
    }

    let phi = params.noise_phi_hourly.powf(granularity_hours);
    let sigma = params.noise_std * f64::from(n_buildings).sqrt();
    let mut nrng = rng(mix(seed, 2));
    let noise = ar1(n, phi, sigma, &mut nrng);

    let values: Vec<f64> = (0..n)
        .map(|t| (weekly[t % week_len] + sens_total * (temp[t] - 18.0).abs() + noise[t]).max(0.0))
        .collect();
    LoadSeries::new(epoch(), granularity_hours, values)
}

/// One building's load on the weather grid.
pub fn synth_building(
    load_type: LoadType,
    days: u32,
    granularity_hours: f64,
    weather: &WeatherSeries,
    params: &SynthProfileParams,
    seed: u64,
) -> Result<LoadSeries> {
    aggregate_core(load_type, 1, days, granularity_hours, weather, params, seed)
}

/// Pointwise sum of `n_buildings` independent buildings sharing a weather
/// series. Identical to summing [`synth_building`] outputs in distribution,
/// and bit-identical to it for `n_buildings = 1`.
pub fn synth_aggregate(
    load_type: LoadType,
    n_buildings: u32,
    days: u32,
    granularity_hours: f64,
    weather: &WeatherSeries,
    params: &SynthProfileParams,
    seed: u64,
) -> Result<LoadSeries> {
    aggregate_core(
        load_type,
        n_buildings,
        days,
        granularity_hours,
        weather,
        params,
        seed,
    )
}

#[derive(Debug, Clone, Copy)]
struct Combo {
    level: AggregationLevel,
    weather: u32,
    history_days: u32,
    horizon_hours: u32,
    granularity_hours: f64,
}

impl Combo {
    /// Stable key naming the grid cell; customer count and load type are
    /// drawn from it and appended to the final task id.
    fn key(&self) -> String {
        format!(
            "{}-w{:02}-d{:03}-h{:03}-g{:04}",
            self.level.name(),
            self.weather,
            self.history_days,
            self.horizon_hours,
            (self.granularity_hours * 60.0).round() as u32
        )
    }
}

fn build_task(combo: &Combo, spec: &CorpusSpec) -> Result<LfTask> {
    let combo_seed = mix(spec.seed, fnv1a(&combo.key()));
    let mut crng = rng(mix(combo_seed, 0));
    let n_customers = crng.gen_range(combo.level.customer_range());
    let load_type = if crng.gen_bool(0.5) {
        LoadType::Residential
    } else {
        LoadType::Commercial
    };

    // The physical simulation always sees temperature, even when the task
    // exposes no weather channels to the forecaster.
    let internal_channels = (combo.weather as usize).max(1);
    let weather = synth_weather(
        combo.history_days,
        combo.granularity_hours,
        internal_channels,
        mix(combo_seed, 1),
    )?;
    let load = synth_aggregate(
        load_type,
        n_customers,
        combo.history_days,
        combo.granularity_hours,
        &weather,
        &spec.profile,
        mix(combo_seed, 2),
    )?;
    let exposed = if combo.weather == 0 {
        WeatherSeries::empty()
    } else {
        weather
    };

    let id = format!(
        "{}-c{:04}-w{:02}-d{:03}-h{:03}-g{:04}",
        combo.level.name(),
        n_customers,
        combo.weather,
        combo.history_days,
        combo.horizon_hours,
        (combo.granularity_hours * 60.0).round() as u32
    );
    LfTask::new(
        id,
        load,
        exposed,
        TaskRequirements {
            granularity_hours: combo.granularity_hours,
            history_days: combo.history_days,
            horizon_hours: combo.horizon_hours,
            n_weather: combo.weather,
            n_customers,
            load_type,
        },
    )
}

/// Enumerate the constrained grid and synthesize one task per surviving
/// combination. Deterministic under `spec.seed`; tasks come back in
/// enumeration order (levels, then weather, history, horizon, granularity).
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<LfTask>> {
    if spec.levels.is_empty()
        || spec.weather_counts.is_empty()
        || spec.history_days.is_empty()
        || spec.horizon_hours.is_empty()
        || spec.granularity_hours.is_empty()
    {
        return Err(Error::EmptySpec);
    }
    let mut combos = Vec::new();
    for &level in &spec.levels {
        for &weather in &spec.weather_counts {
            for &history_days in &spec.history_days {
                for &horizon_hours in &spec.horizon_hours {
                    for &granularity_hours in &spec.granularity_hours {
                        if combo_allowed(level, weather, history_days, horizon_hours, granularity_hours)
                        {
                            combos.push(Combo {
                                level,
                                weather,
                                history_days,
                                horizon_hours,
                                granularity_hours,
                            });
                        }
                    }
                }
            }
        }
    }
    if combos.is_empty() {
        return Err(Error::EmptySpec);
    }
    combos
        .par_iter()
        .map(|combo| build_task(combo, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features;
    use proptest::prelude::*;

    fn quiet_params() -> SynthProfileParams {
        SynthProfileParams {
            phase_jitter_hours: 0.0,
            temp_sensitivity: 0.0,
            noise_std: 0.0,
            ..SynthProfileParams::default()
        }
    }

    #[test]
    fn fixed_seed_reproduces_weather() {
        let a = synth_weather(14, 0.5, 12, 99).unwrap();
        let b = synth_weather(14, 0.5, 12, 99).unwrap();
        assert_eq!(a, b);
        let c = synth_weather(14, 0.5, 12, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn weather_channel_count_matches_request() {
        for channels in [1, 12] {
            let w = synth_weather(3, 1.0, channels, 5).unwrap();
            assert_eq!(w.channel_count(), channels);
            assert_eq!(w.len(), 72);
        }
        assert!(synth_weather(3, 1.0, 0, 5).is_err());
        assert!(synth_weather(3, 1.0, 13, 5).is_err());
        assert!(synth_weather(0, 1.0, 1, 5).is_err());
    }

    #[test]
    fn temperature_autocorrelates_at_the_daily_lag() {
        // Oracle: sample ACF of the generated series at one-day lag.
        let hourly = synth_weather(120, 1.0, 1, 9).unwrap();
        let acf = features::acf(&hourly.channels()[0].values, 24).unwrap();
        assert!(acf >= 0.5, "hourly daily-lag ACF {acf}");

        let quarter = synth_weather(60, 0.25, 1, 9).unwrap();
        let acf = features::acf(&quarter.channels()[0].values, 96).unwrap();
        assert!(acf >= 0.5, "quarter-hourly daily-lag ACF {acf}");
    }

    #[test]
    fn derived_channels_track_temperature() {
        let w = synth_weather(60, 1.0, 12, 21).unwrap();
        let temp = &w.channels()[0].values;
        let name = |i: usize| w.channels()[i].name.as_str();
        let corr = |other: &[f64]| {
            let n = temp.len() as f64;
            let (mt, mo) = (features::mean(temp), features::mean(other));
            let cov: f64 = temp
                .iter()
                .zip(other)
                .map(|(a, b)| (a - mt) * (b - mo))
                .sum::<f64>()
                / n;
            cov / (features::std_dev(temp) * features::std_dev(other))
        };
        assert_eq!(name(1), "humidity_pct");
        assert!(corr(&w.channels()[1].values) < -0.5, "humidity anticorrelates");
        assert_eq!(name(2), "dew_point_c");
        assert!(corr(&w.channels()[2].values) > 0.9, "dew point tracks");
        assert_eq!(name(8), "temperature_lag_1d_c");
        assert!(corr(&w.channels()[8].values) > 0.5, "daily lag correlates");
    }

    #[test]
    fn zero_noise_zero_sensitivity_is_weekly_periodic() {
        let weather = synth_weather(21, 1.0, 1, 3).unwrap();
        let load =
            synth_building(LoadType::Residential, 21, 1.0, &weather, &quiet_params(), 8).unwrap();
        let v = load.values();
        let week = 7 * 24;
        for t in 0..v.len() - week {
            assert_eq!(v[t], v[t + week], "sample {t} differs one week later");
        }
        // Not constant: the weekly profile actually has structure.
        assert!(features::std_dev(&v[..week]) > 0.1);
    }

    #[test]
    fn residential_peaks_in_the_evening_commercial_in_business_hours() {
        // Oracle: definition of the canonical shapes. Day index 3 is the
        // first Monday, so no weekend factor interferes.
        let weather = synth_weather(7, 1.0, 1, 4).unwrap();
        let monday = 3 * 24..4 * 24;
        let argmax_hour = |load_type| {
            let load = synth_building(load_type, 7, 1.0, &weather, &quiet_params(), 8).unwrap();
            let day = &load.values()[monday.clone()];
            day.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let res = argmax_hour(LoadType::Residential);
        assert!((17..=22).contains(&res), "residential peak at {res}h");
        let com = argmax_hour(LoadType::Commercial);
        assert!((9..=17).contains(&com), "commercial peak at {com}h");
    }

    #[test]
    fn weekends_suppress_commercial_load() {
        let weather = synth_weather(14, 1.0, 1, 4).unwrap();
        let load =
            synth_building(LoadType::Commercial, 14, 1.0, &weather, &quiet_params(), 8).unwrap();
        let day_mean = |d: usize| features::mean(&load.values()[d * 24..(d + 1) * 24]);
        // Jan 1 2021 is a Friday: days 1, 2 are the first weekend.
        assert!(day_mean(1) < 0.5 * day_mean(0));
        assert!(day_mean(2) < 0.5 * day_mean(3));
    }

    #[test]
    fn aggregate_of_one_matches_single_building() {
        let weather = synth_weather(10, 1.0, 1, 6).unwrap();
        let params = SynthProfileParams::default();
        let single =
            synth_building(LoadType::Residential, 10, 1.0, &weather, &params, 42).unwrap();
        let agg =
            synth_aggregate(LoadType::Residential, 1, 10, 1.0, &weather, &params, 42).unwrap();
        assert_eq!(single, agg);
    }

    #[test]
    fn aggregation_shrinks_the_coefficient_of_variation() {
        // Oracle: variance pooling. Independent per-building noise averages
        // out in the aggregate while the mean scales linearly, so the
        // aggregate must be relatively smoother than any one building.
        let weather = synth_weather(30, 1.0, 1, 77).unwrap();
        let params = SynthProfileParams::default();
        let cv = |s: &LoadSeries| features::std_dev(s.values()) / features::mean(s.values());
        let single =
            synth_building(LoadType::Residential, 30, 1.0, &weather, &params, 5).unwrap();
        let agg =
            synth_aggregate(LoadType::Residential, 1000, 30, 1.0, &weather, &params, 5).unwrap();
        assert!(
            cv(&agg) < cv(&single),
            "aggregate CV {} vs single CV {}",
            cv(&agg),
            cv(&single)
        );
    }

    #[test]
    fn toy_spec_yields_the_full_product() {
        // 2 levels x 2 weather x 2 histories x 2 horizons x 1 granularity,
        // none of which trips a constraint.
        let spec = CorpusSpec {
            levels: vec![AggregationLevel::Building, AggregationLevel::Transformer],
            weather_counts: vec![0, 1],
            history_days: vec![180, 360],
            horizon_hours: vec![4, 24],
            granularity_hours: vec![1.0],
            ..CorpusSpec::default()
        };
        let corpus = generate_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), 16);
    }

    #[test]
    fn default_spec_count_matches_an_enumeration_oracle() {
        // Independent re-enumeration of the default grid with the
        // constraint rules restated inline.
        let mut expected = 0usize;
        for level in AggregationLevel::ALL {
            for w in [0u32, 1, 12] {
                for d in [30u32, 180, 360] {
                    for h in [4u32, 24, 168, 720] {
                        for g in [0.25f64, 0.5, 1.0, 24.0] {
                            let feeder = level == AggregationLevel::Feeder;
                            if h == 720 && !feeder {
                                continue;
                            }
                            if w == 12 && !feeder {
                                continue;
                            }
                            let steps = f64::from(h) / g;
                            if (steps - steps.round()).abs() > 1e-9 {
                                continue;
                            }
                            if u64::from(d) * 24 < 2 * u64::from(h) + 24 {
                                continue;
                            }
                            expected += 1;
                        }
                    }
                }
            }
        }
        let corpus = generate_corpus(&CorpusSpec::default()).unwrap();
        assert_eq!(corpus.len(), expected);
        assert!(corpus.len() >= 200, "got {}", corpus.len());
    }

    #[test]
    fn corpus_is_deterministic() {
        let spec = CorpusSpec {
            levels: vec![AggregationLevel::Transformer, AggregationLevel::Feeder],
            history_days: vec![30, 180],
            granularity_hours: vec![1.0, 24.0],
            ..CorpusSpec::default()
        };
        let a = generate_corpus(&spec).unwrap();
        let b = generate_corpus(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&CorpusSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn every_grid_value_appears_in_the_default_corpus() {
        let corpus = generate_corpus(&CorpusSpec::default()).unwrap();
        let has = |f: &dyn Fn(&TaskRequirements) -> bool| {
            corpus.iter().any(|t| f(&t.requirements))
        };
        for level in AggregationLevel::ALL {
            assert!(
                has(&|r| level.customer_range().contains(&r.n_customers)),
                "{} level missing",
                level.name()
            );
        }
        for w in [0, 1, 12] {
            assert!(has(&|r| r.n_weather == w), "weather count {w} missing");
        }
        for d in [30, 180, 360] {
            assert!(has(&|r| r.history_days == d), "history {d} missing");
        }
        for h in [4, 24, 168, 720] {
            assert!(has(&|r| r.horizon_hours == h), "horizon {h} missing");
        }
        for g in [0.25, 0.5, 1.0, 24.0] {
            assert!(
                has(&|r| (r.granularity_hours - g).abs() < 1e-9),
                "granularity {g} missing"
            );
        }
        assert!(has(&|r| r.load_type == LoadType::Residential));
        assert!(has(&|r| r.load_type == LoadType::Commercial));
    }

    #[test]
    fn generated_tasks_are_splittable_and_distinct() {
        let corpus = generate_corpus(&CorpusSpec::default()).unwrap();
        let mut ids = std::collections::HashSet::new();
        for task in &corpus {
            assert!(ids.insert(task.id.clone()), "duplicate id {}", task.id);
            let k = task.horizon_samples();
            assert!(
                task.load.len() >= 2 * k + 1,
                "{} has {} samples for horizon {k}",
                task.id,
                task.load.len()
            );
            assert_eq!(task.weather.channel_count(), task.requirements.n_weather as usize);
        }
    }

    #[test]
    fn empty_and_fully_constrained_specs_are_rejected() {
        let empty = CorpusSpec {
            levels: vec![],
            ..CorpusSpec::default()
        };
        assert!(matches!(generate_corpus(&empty), Err(Error::EmptySpec)));

        // Every combination violates the feeder-only horizon rule.
        let constrained = CorpusSpec {
            levels: vec![AggregationLevel::Building],
            horizon_hours: vec![720],
            ..CorpusSpec::default()
        };
        assert!(matches!(generate_corpus(&constrained), Err(Error::EmptySpec)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn load_is_nonnegative_and_finite(
            noise in 0.0..0.6f64,
            sens in 0.0..0.2f64,
            seed in 0u64..1000,
            commercial in any::<bool>(),
        ) {
            let weather = synth_weather(7, 1.0, 1, seed).unwrap();
            let params = SynthProfileParams {
                noise_std: noise,
                temp_sensitivity: sens,
                ..SynthProfileParams::default()
            };
            let load_type = if commercial { LoadType::Commercial } else { LoadType::Residential };
            let load = synth_building(load_type, 7, 1.0, &weather, &params, seed).unwrap();
            for v in load.values() {
                prop_assert!(v.is_finite() && *v >= 0.0);
            }
        }
    }
}
