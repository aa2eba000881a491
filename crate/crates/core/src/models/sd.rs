//! Similar-day forecaster: each forecast day copies the load profile of
//! the most similar complete day in the training range.
//!
//! Similarity decays with calendar distance at three scales (days within
//! a week, whole weeks, whole years), resets for exact yearly recurrences,
//! and is divided by the distance between the two days' z-scored weather
//! profiles. Days are counted from the series start, `day_len` samples
//! per day.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Scaler, TaskProfile};
use crate::series::{LfTask, SplitPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdConfig {
    /// Decay per day of offset within a week.
    pub decay_day: f64,
    /// Decay per whole week of distance.
    pub decay_week: f64,
    /// Decay per whole year of distance.
    pub decay_year: f64,
    /// Floor for the weather-distance divisor.
    pub min_exo_distance: f64,
}

impl Default for SdConfig {
    fn default() -> Self {
        Self {
            decay_day: 0.9,
            decay_week: 0.85,
            decay_year: 0.95,
            min_exo_distance: 1e-6,
        }
    }
}

/// Similarity of a candidate day `delta_days` behind the forecast day,
/// given the distance between the two days' weather profiles. Exact
/// yearly recurrences skip the calendar decay entirely.
pub fn sd_similarity(delta_days: usize, exo_distance: f64, cfg: &SdConfig) -> f64 {
    let recurring = delta_days % 365 == 0;
    let calendar = if recurring {
        1.0
    } else {
        cfg.decay_day.powi((delta_days % 7) as i32)
            * cfg.decay_week.powi((delta_days / 7) as i32)
            * cfg.decay_year.powi((delta_days / 365) as i32)
    };
    calendar / exo_distance.max(cfg.min_exo_distance)
}

/// The chosen source day for one forecast day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayPick {
    pub fore_day: usize,
    pub hist_day: usize,
    pub delta_days: usize,
    pub gamma: f64,
}

/// A fitted forecaster: one source-day choice per day the test range
/// touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdParams {
    pub day_len: usize,
    pub first_fore_day: usize,
    pub picks: Vec<DayPick>,
}

/// Weather profile distance between a forecast day and a complete
/// history day, over the offsets the forecast day actually has.
fn exo_distance(
    task: &LfTask,
    scalers: &[Scaler],
    fore_start: usize,
    hist_start: usize,
    len: usize,
) -> f64 {
    if scalers.is_empty() {
        return 1.0;
    }
    let mut sum = 0.0;
    for (c, scaler) in scalers.iter().enumerate() {
        let values = &task.weather.channels()[c].values;
        for o in 0..len {
            let d = scaler.transform(values[fore_start + o]) - scaler.transform(values[hist_start + o]);
            sum += d * d;
        }
    }
    sum.sqrt()
}

/// Pick a source day for every day the split's test range touches.
pub fn fit(
    task: &LfTask,
    split: &SplitPair,
    cfg: &SdConfig,
    profile: &TaskProfile,
) -> Result<SdParams> {
    let n = task.load.len();
    let day_len = profile.day_len;
    let train_days = split.train.end / day_len;
    if train_days == 0 {
        return Err(Error::Infeasible {
            model: "SD",
            reason: format!(
                "no complete day in {} training samples of day length {day_len}",
                split.train.len()
            ),
        });
    }
    let scalers: Vec<Scaler> = task
        .weather
        .channels()
        .iter()
        .map(|ch| Scaler::fit(&ch.values[split.train.clone()]))
        .collect();

    let first_fore_day = split.test.start / day_len;
    let last_fore_day = (split.test.end - 1) / day_len;
    let mut picks = Vec::with_capacity(last_fore_day - first_fore_day + 1);
    for fd in first_fore_day..=last_fore_day {
        let fore_start = fd * day_len;
        let avail = ((fd + 1) * day_len).min(n) - fore_start;
        let mut best: Option<DayPick> = None;
        // Recent days first, so equal similarity resolves to the
        // smallest calendar distance.
        for hist in (0..train_days).rev() {
            let delta = fd - hist;
            let exo = exo_distance(task, &scalers, fore_start, hist * day_len, avail);
            let gamma = sd_similarity(delta, exo, cfg);
            if best.map_or(true, |b| gamma > b.gamma) {
                best = Some(DayPick {
                    fore_day: fd,
                    hist_day: hist,
                    delta_days: delta,
                    gamma,
                });
            }
        }
        picks.push(best.expect("train_days >= 1"));
    }
    Ok(SdParams {
        day_len,
        first_fore_day,
        picks,
    })
}

/// Copy each test sample from its day's chosen source day, preserving
/// the intra-day offset.
pub fn forecast(params: &SdParams, task: &LfTask, split: &SplitPair) -> Result<Vec<f64>> {
    let y = task.load.values();
    let mut out = Vec::with_capacity(split.k());
    for idx in split.test.clone() {
        let fd = idx / params.day_len;
        let pick = fd
            .checked_sub(params.first_fore_day)
            .and_then(|i| params.picks.get(i))
            .ok_or_else(|| Error::GridMismatch {
                reason: format!("forecast split reaches day {fd}, outside the fitted range"),
            })?;
        out.push(y[pick.hist_day * params.day_len + idx % params.day_len]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TaskProfile;
    use crate::series::{
        LfTask, LoadSeries, LoadType, SplitPair, TaskRequirements, WeatherChannel, WeatherSeries,
    };

    fn base_time() -> chrono::NaiveDateTime {
        chrono::NaiveDate::from_ymd_opt(2022, 5, 2)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn periodic_task(n_days: usize, horizon_hours: u32, weather: Option<Vec<f64>>) -> LfTask {
        let values: Vec<f64> = (0..n_days * 24)
            .map(|t| 20.0 + 5.0 * (std::f64::consts::PI * 2.0 * (t % 24) as f64 / 24.0).sin())
            .collect();
        let (ws, n_weather) = match weather {
            Some(v) => (
                WeatherSeries::new(vec![WeatherChannel {
                    name: "temperature".into(),
                    values: v,
                }])
                .unwrap(),
                1,
            ),
            None => (WeatherSeries::empty(), 0),
        };
        LfTask::new(
            "sd-test",
            LoadSeries::new(base_time(), 1.0, values).unwrap(),
            ws,
            TaskRequirements {
                granularity_hours: 1.0,
                history_days: 30,
                horizon_hours,
                n_weather,
                n_customers: 3,
                load_type: LoadType::Commercial,
            },
        )
        .unwrap()
    }

    #[test]
    fn similarity_plugin_values() {
        let cfg = SdConfig::default();
        assert!((sd_similarity(1, 1.0, &cfg) - 0.9).abs() < 1e-12);
        assert!((sd_similarity(7, 1.0, &cfg) - 0.85).abs() < 1e-12);
        assert!((sd_similarity(14, 1.0, &cfg) - 0.7225).abs() < 1e-12);
        assert!((sd_similarity(8, 1.0, &cfg) - 0.765).abs() < 1e-12);
        assert!((sd_similarity(365, 1.0, &cfg) - 1.0).abs() < 1e-12);
        assert!((sd_similarity(1, 2.0, &cfg) - 0.45).abs() < 1e-12);
    }

    #[test]
    fn copies_a_daily_cycle_exactly() {
        let task = periodic_task(10, 24, None);
        let profile = TaskProfile::of(&task);
        let split = SplitPair {
            train: 0..216,
            test: 216..240,
        };
        let params = fit(&task, &split, &SdConfig::default(), &profile).unwrap();
        let fc = forecast(&params, &task, &split).unwrap();
        assert_eq!(fc, split.test_slice(task.load.values()));
    }

    #[test]
    fn partial_day_horizon_copies_offsets() {
        let task = periodic_task(10, 4, None);
        let profile = TaskProfile::of(&task);
        let split = SplitPair {
            train: 0..218,
            test: 218..222,
        };
        let params = fit(&task, &split, &SdConfig::default(), &profile).unwrap();
        let fc = forecast(&params, &task, &split).unwrap();
        assert_eq!(fc, split.test_slice(task.load.values()));
    }

    #[test]
    fn yesterday_beats_other_gaps_then_week_alignment_takes_over() {
        let task = periodic_task(30, 168, None);
        let profile = TaskProfile::of(&task);
        let split = SplitPair {
            train: 0..552,
            test: 552..720,
        };
        let params = fit(&task, &split, &SdConfig::default(), &profile).unwrap();
        assert_eq!(params.picks.len(), 7);
        // Without weather every distance floors at 1, so the calendar
        // decay alone decides: gap 1 scores 0.9; once the nearest
        // candidate is 2 days back, a whole week (0.85) wins over 0.81.
        assert_eq!(params.picks[0].delta_days, 1);
        for pick in &params.picks[1..] {
            assert_eq!(pick.delta_days, 7);
        }
    }

    #[test]
    fn matching_weather_overrides_calendar_distance() {
        // Day 6 repeats the forecast day's weather exactly; all other
        // days are far away in profile space.
        let weather: Vec<f64> = (0..240)
            .map(|t| {
                let day = t / 24;
                let hour = (t % 24) as f64;
                if day == 6 || day == 9 {
                    hour
                } else {
                    100.0 + day as f64 + hour
                }
            })
            .collect();
        let task = periodic_task(10, 24, Some(weather));
        let profile = TaskProfile::of(&task);
        let split = SplitPair {
            train: 0..216,
            test: 216..240,
        };
        let params = fit(&task, &split, &SdConfig::default(), &profile).unwrap();
        assert_eq!(params.picks[0].hist_day, 6);
    }

    #[test]
    fn picks_are_invariant_to_weather_rescaling() {
        let weather: Vec<f64> = (0..240)
            .map(|t| ((t / 24) as f64).mul_add(3.0, ((t % 24) as f64 / 3.0).cos()))
            .collect();
        let scaled: Vec<f64> = weather.iter().map(|v| v * 10.0).collect();
        let split = SplitPair {
            train: 0..216,
            test: 216..240,
        };
        let a = {
            let task = periodic_task(10, 24, Some(weather));
            fit(&task, &split, &SdConfig::default(), &TaskProfile::of(&task)).unwrap()
        };
        let b = {
            let task = periodic_task(10, 24, Some(scaled));
            fit(&task, &split, &SdConfig::default(), &TaskProfile::of(&task)).unwrap()
        };
        let days_a: Vec<usize> = a.picks.iter().map(|p| p.hist_day).collect();
        let days_b: Vec<usize> = b.picks.iter().map(|p| p.hist_day).collect();
        assert_eq!(days_a, days_b);
    }

    #[test]
    fn forecasting_outside_the_fitted_range_is_rejected() {
        let task = periodic_task(10, 24, None);
        let profile = TaskProfile::of(&task);
        let fitted_on = SplitPair {
            train: 0..216,
            test: 216..240,
        };
        let params = fit(&task, &fitted_on, &SdConfig::default(), &profile).unwrap();
        let other = SplitPair {
            train: 0..192,
            test: 192..216,
        };
        assert!(matches!(
            forecast(&params, &task, &other),
            Err(Error::GridMismatch { .. })
        ));
    }
}
