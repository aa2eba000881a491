//! The candidate forecaster zoo: six SARIMA structures, two LSTM sizes, an
//! ε-insensitive SVR and a similar-day forecaster, behind one fit/predict
//! contract.
//!
//! Every candidate takes a task plus one train/test split, trains on the
//! samples strictly before the test block, and emits a K-step forecast of
//! the block. Multi-step forecasts roll forward recursively on their own
//! predictions; test-range weather is treated as known input (the usual
//! perfect-weather-forecast convention). Infeasible or non-converged
//! candidates are recorded as failures with infinite error rather than
//! aborting the tournament.

pub mod lstm;
pub mod sarima;
pub mod sd;
pub mod svr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;
use crate::series::{LfTask, SplitPair};

/// The ten candidates, in fixed tournament order.
///
/// The order is load-bearing: labels, score vectors and tie-breaks all use
/// the 1-based index. Lower index wins ties throughout the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Sarima211,
    Sarima313,
    Sarima412,
    Sarima414,
    Sarima512,
    Sarima515,
    Lstm125,
    Lstm200,
    Svr,
    Sd,
}

/// Number of candidate models.
pub const MODEL_COUNT: usize = 10;

impl ModelId {
    pub const ALL: [ModelId; MODEL_COUNT] = [
        ModelId::Sarima211,
        ModelId::Sarima313,
        ModelId::Sarima412,
        ModelId::Sarima414,
        ModelId::Sarima512,
        ModelId::Sarima515,
        ModelId::Lstm125,
        ModelId::Lstm200,
        ModelId::Svr,
        ModelId::Sd,
    ];

    /// 1-based position in the candidate table.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|m| *m == self).unwrap() + 1
    }

    /// Human-readable candidate name, e.g. "SARIMA(2,1,1)".
    pub fn name(self) -> &'static str {
        match self {
            ModelId::Sarima211 => "SARIMA(2,1,1)",
            ModelId::Sarima313 => "SARIMA(3,1,3)",
            ModelId::Sarima412 => "SARIMA(4,1,2)",
            ModelId::Sarima414 => "SARIMA(4,1,4)",
            ModelId::Sarima512 => "SARIMA(5,1,2)",
            ModelId::Sarima515 => "SARIMA(5,1,5)",
            ModelId::Lstm125 => "LSTM(125)",
            ModelId::Lstm200 => "LSTM(200)",
            ModelId::Svr => "SVR",
            ModelId::Sd => "SD",
        }
    }

    pub fn from_index(index: usize) -> Option<ModelId> {
        Self::ALL.get(index.checked_sub(1)?).copied()
    }

    /// Non-seasonal (p, q) orders for the SARIMA candidates. The seasonal
    /// orders repeat the same values; d = D = 1 throughout.
    pub fn sarima_orders(self) -> Option<(usize, usize)> {
        match self {
            ModelId::Sarima211 => Some((2, 1)),
            ModelId::Sarima313 => Some((3, 3)),
            ModelId::Sarima412 => Some((4, 2)),
            ModelId::Sarima414 => Some((4, 4)),
            ModelId::Sarima512 => Some((5, 2)),
            ModelId::Sarima515 => Some((5, 5)),
            _ => None,
        }
    }

    pub fn lstm_hidden_units(self) -> Option<usize> {
        match self {
            ModelId::Lstm125 => Some(125),
            ModelId::Lstm200 => Some(200),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable knobs of the zoo. [`ZooConfig::default`] carries the
/// per-model reference settings; [`ZooConfig::tournament`] is the profile
/// the labeling tournament uses, trading per-fit polish for the thousands
/// of fits Algorithm-style repeated splitting performs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZooConfig {
    pub sarima: sarima::SarimaConfig,
    pub lstm: lstm::LstmConfig,
    pub svr: svr::SvrConfig,
    pub sd: sd::SdConfig,
}

impl Default for ZooConfig {
    fn default() -> Self {
        Self {
            sarima: sarima::SarimaConfig::default(),
            lstm: lstm::LstmConfig::default(),
            svr: svr::SvrConfig::default(),
            sd: sd::SdConfig::default(),
        }
    }
}

impl ZooConfig {
    /// Faster training profile for the repeated-split tournament: shorter
    /// LSTM schedules, capped SARIMA/SVR sample windows. Model structures
    /// (orders, hidden units) are untouched.
    pub fn tournament() -> Self {
        Self {
            sarima: sarima::SarimaConfig {
                max_css_len: 512,
                nm_max_iter: 80,
                ..sarima::SarimaConfig::default()
            },
            lstm: lstm::LstmConfig {
                epochs: 1,
                learning_rate: 5e-3,
                window_cap: 12,
                max_windows: 5,
                ..lstm::LstmConfig::default()
            },
            svr: svr::SvrConfig {
                max_samples: 120,
                ..svr::SvrConfig::default()
            },
            sd: sd::SdConfig::default(),
        }
    }
}

/// Per-task quantities every candidate needs, computed once per task
/// rather than once per (model, split) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskProfile {
    /// Detected dominant period in samples.
    pub period: usize,
    /// Samples per calendar day (1 on a daily grid).
    pub day_len: usize,
    /// Test length K in samples.
    pub k: usize,
}

impl TaskProfile {
    pub fn of(task: &LfTask) -> Self {
        let gran = task.requirements.granularity_hours;
        let day_len = if gran < 24.0 {
            (24.0 / gran).round() as usize
        } else {
            1
        };
        // Series too short for period detection fall back to the natural
        // cycle of their grid: one day sub-daily, one week daily.
        let period = features::periodicity(task.load.values(), gran)
            .unwrap_or(if gran < 24.0 { day_len } else { 7 });
        Self {
            period,
            day_len,
            k: task.horizon_samples(),
        }
    }

}

/// Minimum-data screening. `true` means every possible random split of the
/// task leaves enough training data for the model, so the worst-case train
/// length `N - 2K` is what gets tested.
pub fn feasible(model: ModelId, task: &LfTask, cfg: &ZooConfig, profile: &TaskProfile) -> bool {
    let n = task.load.len();
    let k = profile.k;
    if n < 2 * k {
        return false;
    }
    let train_len = n - 2 * k;
    match model {
        ModelId::Sarima211
        | ModelId::Sarima313
        | ModelId::Sarima412
        | ModelId::Sarima414
        | ModelId::Sarima512
        | ModelId::Sarima515 => {
            let (p, q) = model.sarima_orders().unwrap();
            train_len >= 3 * profile.period + p + q + 20
        }
        ModelId::Lstm125 | ModelId::Lstm200 => {
            let window = cfg.lstm.window_len(profile.period);
            // Windows predict one step ahead, so one window consumes
            // window + 1 samples; require ten of them.
            train_len >= 10 * (window + 1)
        }
        ModelId::Svr => {
            let window = cfg.svr.window_len(profile.period);
            train_len >= window + cfg.svr.min_samples
        }
        ModelId::Sd => n >= 2 * profile.day_len && train_len >= profile.day_len,
    }
}

/// Feasibility of every candidate for one task, in slot order.
pub fn feasibility_mask(task: &LfTask, cfg: &ZooConfig, profile: &TaskProfile) -> [bool; MODEL_COUNT] {
    let mut mask = [false; MODEL_COUNT];
    for (slot, &model) in ModelId::ALL.iter().enumerate() {
        mask[slot] = feasible(model, task, cfg, profile);
    }
    mask
}

/// A trained candidate, ready to forecast its own task/split.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Sarima(sarima::SarimaParams),
    Lstm(lstm::LstmState),
    Svr(svr::SvrState),
    Sd(sd::SdParams),
}

/// Train one candidate on the split's training range.
pub fn fit(
    model: ModelId,
    task: &LfTask,
    split: &SplitPair,
    seed: u64,
    cfg: &ZooConfig,
    profile: &TaskProfile,
) -> Result<FittedModel> {
    if !feasible(model, task, cfg, profile) {
        return Err(Error::Infeasible {
            model: model.name(),
            reason: "task fails the minimum-data rule".into(),
        });
    }
    let y_train = split.train_slice(task.load.values());
    match model {
        ModelId::Sarima211
        | ModelId::Sarima313
        | ModelId::Sarima412
        | ModelId::Sarima414
        | ModelId::Sarima512
        | ModelId::Sarima515 => {
            let (p, q) = model.sarima_orders().unwrap();
            let orders = sarima::SarimaOrders {
                p,
                d: 1,
                q,
                sp: p,
                sd: 1,
                sq: q,
                s: profile.period.max(2),
            };
            Ok(FittedModel::Sarima(sarima::fit(
                y_train,
                orders,
                &cfg.sarima,
            )?))
        }
        ModelId::Lstm125 | ModelId::Lstm200 => {
            let hidden = model.lstm_hidden_units().unwrap();
            Ok(FittedModel::Lstm(lstm::fit(
                task, split, hidden, seed, &cfg.lstm, profile,
            )?))
        }
        ModelId::Svr => Ok(FittedModel::Svr(svr::fit(task, split, &cfg.svr, profile)?)),
        ModelId::Sd => Ok(FittedModel::Sd(sd::fit(task, split, &cfg.sd, profile)?)),
    }
}

/// Forecast the split's test range with a fitted candidate.
pub fn predict(
    fitted: &FittedModel,
    task: &LfTask,
    split: &SplitPair,
) -> Result<Vec<f64>> {
    let y_train = split.train_slice(task.load.values());
    let k = split.k();
    let forecast = match fitted {
        FittedModel::Sarima(m) => sarima::forecast(m, y_train, k),
        FittedModel::Lstm(m) => lstm::forecast(m, task, split),
        FittedModel::Svr(m) => svr::forecast(m, task, split),
        FittedModel::Sd(m) => sd::forecast(m, task, split)?,
    };
    debug_assert_eq!(forecast.len(), k);
    Ok(forecast)
}

/// Root mean squared error: `sqrt(sum((y_hat - y)^2) / K)`.
pub fn rmse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: y_hat.len(),
            right: y.len(),
        });
    }
    let k = y.len() as f64;
    let sse: f64 = y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / k).sqrt())
}

/// Mean absolute percentage error with a floor on tiny denominators:
/// `(1/K) * sum(|y_hat - y| / max(|y|, 1e-6 * mean|y|))`.
pub fn mape(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: y_hat.len(),
            right: y.len(),
        });
    }
    let mean_abs = y.iter().map(|v| v.abs()).sum::<f64>() / y.len() as f64;
    let floor = 1e-6 * mean_abs;
    let total: f64 = y_hat
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
        .sum();
    Ok(total / y.len() as f64)
}

/// One candidate's result on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub model: ModelId,
    /// Test RMSE; infinite when the model failed or was infeasible.
    pub rmse: f64,
    /// Test MAPE; infinite when the model failed or was infeasible.
    pub mape: f64,
    /// Wall-clock training time. Reporting only, never persisted.
    pub fit_time_s: f64,
    pub failure: bool,
}

impl ModelOutcome {
    fn failure(model: ModelId) -> Self {
        Self {
            model,
            rmse: f64::INFINITY,
            mape: f64::INFINITY,
            fit_time_s: 0.0,
            failure: true,
        }
    }
}

/// Run every candidate on one split. The row always has length 10 in
/// candidate-table order; failures carry infinite error.
pub fn run_all(
    task: &LfTask,
    split: &SplitPair,
    seed: u64,
    cfg: &ZooConfig,
    profile: &TaskProfile,
) -> Vec<ModelOutcome> {
    let y_test = split.test_slice(task.load.values());
    ModelId::ALL
        .iter()
        .enumerate()
        .map(|(idx, &model)| {
            if !feasible(model, task, cfg, profile) {
                return ModelOutcome::failure(model);
            }
            let model_seed = crate::seed::mix(seed, idx as u64);
            let started = std::time::Instant::now();
            let fitted = match fit(model, task, split, model_seed, cfg, profile) {
                Ok(f) => f,
                Err(_) => return ModelOutcome::failure(model),
            };
            let fit_time_s = started.elapsed().as_secs_f64();
            let forecast = match predict(&fitted, task, split) {
                Ok(f) => f,
                Err(_) => return ModelOutcome::failure(model),
            };
            if forecast.iter().any(|v| !v.is_finite()) {
                return ModelOutcome::failure(model);
            }
            let rmse = rmse(&forecast, y_test).unwrap_or(f64::INFINITY);
            let mape = mape(&forecast, y_test).unwrap_or(f64::INFINITY);
            if !rmse.is_finite() {
                return ModelOutcome::failure(model);
            }
            ModelOutcome {
                model,
                rmse,
                mape,
                fit_time_s,
                failure: false,
            }
        })
        .collect()
}


/// Z-score transform fitted on a training slice. A zero-variance slice
/// scales by 1 so transforms stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub(crate) struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Self {
        let mean = features::mean(values);
        let std = features::std_dev(values);
        Self {
            mean,
            std: if std > 0.0 { std } else { 1.0 },
        }
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}
