//! Task meta-features: the 16-dimensional vector that describes a
//! forecasting task to the metalearners.
//!
//! Positions 1-6 copy the task requirements (data length in days, weather
//! channel count, granularity, horizon, customer count, load type); positions
//! 7-16 are statistics of the load series (mean, max, min, std, kurtosis,
//! skewness, fickleness, highest ACF, highest PACF, periodicity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::LfTask;

/// Column names in vector order, used by the CSV feature report.
pub const FEATURE_NAMES: [&str; 16] = [
    "data_length_days",
    "n_weather",
    "granularity_hours",
    "horizon_hours",
    "n_customers",
    "load_type",
    "mean_kw",
    "max_kw",
    "min_kw",
    "std_kw",
    "kurtosis",
    "skewness",
    "fickleness",
    "h_acf",
    "h_pacf",
    "periodicity_samples",
];

/// The 16 meta-features of one task, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub data_length_days: f64,
    pub n_weather: f64,
    pub granularity_hours: f64,
    pub horizon_hours: f64,
    pub n_customers: f64,
    pub load_type: f64,
    pub mean_kw: f64,
    pub max_kw: f64,
    pub min_kw: f64,
    pub std_kw: f64,
    pub kurtosis: f64,
    pub skewness: f64,
    pub fickleness: f64,
    pub h_acf: f64,
    pub h_pacf: f64,
    pub periodicity_samples: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; 16] {
        [
            self.data_length_days,
            self.n_weather,
            self.granularity_hours,
            self.horizon_hours,
            self.n_customers,
            self.load_type,
            self.mean_kw,
            self.max_kw,
            self.min_kw,
            self.std_kw,
            self.kurtosis,
            self.skewness,
            self.fickleness,
            self.h_acf,
            self.h_pacf,
            self.periodicity_samples,
        ]
    }

    pub fn from_array(a: &[f64; 16]) -> FeatureVector {
        FeatureVector {
            data_length_days: a[0],
            n_weather: a[1],
            granularity_hours: a[2],
            horizon_hours: a[3],
            n_customers: a[4],
            load_type: a[5],
            mean_kw: a[6],
            max_kw: a[7],
            min_kw: a[8],
            std_kw: a[9],
            kurtosis: a[10],
            skewness: a[11],
            fickleness: a[12],
            h_acf: a[13],
            h_pacf: a[14],
            periodicity_samples: a[15],
        }
    }
}

/// Arithmetic mean.
pub fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Population standard deviation (divides by N, not N-1).
pub fn std_dev(y: &[f64]) -> f64 {
    let m = mean(y);
    (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64).sqrt()
}

/// Standardized fourth moment: `(1/(N sigma^4)) * sum((y - mean)^4)`.
/// A standard normal sample gives about 3.
pub fn kurtosis(y: &[f64]) -> Result<f64> {
    let (m, s) = (mean(y), std_dev(y));
    if s == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let m4 = y.iter().map(|v| (v - m).powi(4)).sum::<f64>() / y.len() as f64;
    Ok(m4 / s.powi(4))
}

/// Standardized third moment: `(1/(N sigma^3)) * sum((y - mean)^3)`.
pub fn skewness(y: &[f64]) -> Result<f64> {
    let (m, s) = (mean(y), std_dev(y));
    if s == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let m3 = y.iter().map(|v| (v - m).powi(3)).sum::<f64>() / y.len() as f64;
    Ok(m3 / s.powi(3))
}

fn sign3(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Fraction of consecutive sample pairs staying on the same side of the
/// mean: `(1/N) * sum over n of 1{sign(y(n-1) - mean) == sign(y(n) - mean)}`.
/// Low values mean the series keeps crossing its mean.
pub fn fickleness(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let m = mean(y);
    let equal_pairs = y
        .windows(2)
        .filter(|w| sign3(w[0] - m) == sign3(w[1] - m))
        .count();
    equal_pairs as f64 / y.len() as f64
}

/// Autocorrelations at lags `0..=max_lag` (index 0 is always 1).
///
/// Lag k is the Pearson correlation between the series and its k-shifted
/// copy, each overlap window centered and scaled on its own support. A
/// noise-free periodic signal therefore scores exactly 1 at its period
/// regardless of sample count, and every value lies in `[-1, 1]`. Windows
/// with zero variance (constant series) score 0 rather than 0/0.
pub fn acf_all(y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = y.len();
    let mut r = vec![0.0; max_lag + 1];
    r[0] = 1.0;
    // Global centering shrinks magnitudes before the prefix-sum algebra;
    // per-window recentering below makes it exact regardless.
    let g = mean(y);
    let z: Vec<f64> = y.iter().map(|v| v - g).collect();
    let mut prefix_s = vec![0.0; n + 1];
    let mut prefix_q = vec![0.0; n + 1];
    for i in 0..n {
        prefix_s[i + 1] = prefix_s[i] + z[i];
        prefix_q[i + 1] = prefix_q[i] + z[i] * z[i];
    }
    for lag in 1..=max_lag.min(n.saturating_sub(2)) {
        let w = n - lag; // overlap length
        let s1 = prefix_s[w];
        let q1 = prefix_q[w];
        let s2 = prefix_s[n] - prefix_s[lag];
        let q2 = prefix_q[n] - prefix_q[lag];
        let dot: f64 = (0..w).map(|i| z[i] * z[i + lag]).sum();
        let num = dot - s1 * s2 / w as f64;
        let den = ((q1 - s1 * s1 / w as f64) * (q2 - s2 * s2 / w as f64)).sqrt();
        if den > 0.0 {
            r[lag] = (num / den).clamp(-1.0, 1.0);
        }
    }
    r
}

/// Autocorrelation at one lag. Lag 0 is 1 by definition; other lags must
/// satisfy `1 <= lag <= N/2`.
pub fn acf(y: &[f64], lag: usize) -> Result<f64> {
    if lag == 0 {
        return Ok(1.0);
    }
    if lag > y.len() / 2 {
        return Err(Error::LagOutOfRange { lag, n: y.len() });
    }
    Ok(acf_all(y, lag)[lag])
}

/// Partial autocorrelations at lags `1..=max_lag` via the Durbin-Levinson
/// recursion (index 0 unused, set to 1). Degenerate steps (prediction error
/// hitting zero, as for noise-free periodic series) zero the remaining lags.
pub fn pacf_all(y: &[f64], max_lag: usize) -> Vec<f64> {
    let r = acf_all(y, max_lag);
    let mut pacf = vec![0.0; max_lag + 1];
    pacf[0] = 1.0;
    if max_lag == 0 {
        return pacf;
    }
    let mut phi = vec![0.0; max_lag + 1];
    let mut prev = vec![0.0; max_lag + 1];
    phi[1] = r[1];
    pacf[1] = r[1];
    let mut err = 1.0 - r[1] * r[1];
    for k in 2..=max_lag {
        if err.abs() < 1e-12 {
            break;
        }
        prev[..k].copy_from_slice(&phi[..k]);
        let mut num = r[k];
        for j in 1..k {
            num -= prev[j] * r[k - j];
        }
        // The lag-windowed correlations are not guaranteed to form a
        // positive-definite sequence; clamping keeps the recursion sane.
        let phi_kk = (num / err).clamp(-1.0, 1.0);
        phi[k] = phi_kk;
        for j in 1..k {
            phi[j] = prev[j] - phi_kk * prev[k - j];
        }
        pacf[k] = if phi_kk.is_finite() { phi_kk } else { 0.0 };
        err *= 1.0 - phi_kk * phi_kk;
    }
    pacf
}

/// Partial autocorrelation at one lag, `1 <= lag <= N/2`.
pub fn pacf(y: &[f64], lag: usize) -> Result<f64> {
    if lag == 0 {
        return Ok(1.0);
    }
    if lag > y.len() / 2 {
        return Err(Error::LagOutOfRange { lag, n: y.len() });
    }
    Ok(pacf_all(y, lag)[lag])
}

/// Lag window searched by [`h_acf`]/[`h_pacf`]: up to twice the expected
/// period so the period itself and its first harmonic are both visible,
/// never past N/2 where the sample estimates lose support.
fn h_lag_bound(n: usize, expected_period: usize) -> usize {
    (n / 2).min(2 * expected_period.max(1)).max(1)
}

/// Highest absolute autocorrelation over lags `1..=min(N/2, 2*period)`.
pub fn h_acf(y: &[f64], expected_period: usize) -> Result<f64> {
    if y.len() < 8 {
        return Err(Error::TooShort {
            n: y.len(),
            need: 8,
            what: "h_acf",
        });
    }
    let bound = h_lag_bound(y.len(), expected_period);
    Ok(acf_all(y, bound)[1..]
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs())))
}

/// Highest absolute partial autocorrelation over the same lag window.
pub fn h_pacf(y: &[f64], expected_period: usize) -> Result<f64> {
    if y.len() < 8 {
        return Err(Error::TooShort {
            n: y.len(),
            need: 8,
            what: "h_pacf",
        });
    }
    let bound = h_lag_bound(y.len(), expected_period);
    Ok(pacf_all(y, bound)[1..]
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs())))
}

/// Candidate periods in samples for a grid: daily and weekly cycles for
/// sub-daily data, weekly and monthly cycles for daily data.
pub fn candidate_periods(granularity_hours: f64) -> [usize; 2] {
    if granularity_hours < 24.0 {
        let per_day = (24.0 / granularity_hours).round() as usize;
        [24 * per_day / 24, 168 * per_day / 24]
    } else {
        [7, 30]
    }
}

/// Dominant period of the series in samples.
///
/// Picks the candidate period with the largest autocorrelation when any
/// candidate exceeds 0.2; otherwise falls back to the lag with the largest
/// autocorrelation. The fallback searches `[1, min(N/2, 2 * largest
/// candidate)]`: load cycles beyond twice the weekly (or monthly) scale are
/// not meaningful, and the cap keeps the large-lag estimates, which have
/// thin overlap support, from winning on noise.
pub fn periodicity(y: &[f64], granularity_hours: f64) -> Result<usize> {
    let all = candidate_periods(granularity_hours);
    // A candidate needs three full cycles of support. On short series the
    // longer candidate drops out of the running instead of failing the
    // whole feature.
    let candidates: Vec<usize> = all.iter().copied().filter(|&c| y.len() >= 3 * c).collect();
    let Some(&largest) = candidates.last() else {
        return Err(Error::TooShort {
            n: y.len(),
            need: 3 * all[0],
            what: "periodicity",
        });
    };
    let max_lag = (y.len() / 2).min(2 * largest);
    let r = acf_all(y, max_lag);
    // When cycles nest (a daily pattern repeats weekly too), the longer
    // candidate scores the same ACF; prefer the fundamental period unless
    // the longer one is genuinely stronger.
    const TIE_MARGIN: f64 = 0.01;
    let (mut best, mut best_r) = (None, 0.2);
    for &c in &candidates {
        if r[c] > best_r + if best.is_some() { TIE_MARGIN } else { 0.0 } {
            best = Some(c);
            best_r = r[c];
        }
    }
    if let Some(p) = best {
        return Ok(p);
    }
    // No candidate stands out: take the strongest lag outright.
    let mut arg = 1;
    for lag in 2..r.len() {
        if r[lag] > r[arg] {
            arg = lag;
        }
    }
    Ok(arg)
}

/// Compute the full 16-feature vector for a task.
pub fn extract_features(task: &LfTask) -> Result<FeatureVector> {
    let y = task.load.values();
    let req = &task.requirements;

    let s = std_dev(y);
    if s == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let period = periodicity(y, req.granularity_hours)?;

    Ok(FeatureVector {
        data_length_days: f64::from(req.history_days),
        n_weather: f64::from(req.n_weather),
        granularity_hours: req.granularity_hours,
        horizon_hours: f64::from(req.horizon_hours),
        n_customers: f64::from(req.n_customers),
        load_type: req.load_type.code(),
        mean_kw: mean(y),
        max_kw: y.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v)),
        min_kw: y.iter().fold(f64::INFINITY, |a, &v| a.min(v)),
        std_kw: s,
        kurtosis: kurtosis(y)?,
        skewness: skewness(y)?,
        fickleness: fickleness(y),
        h_acf: h_acf(y, period)?,
        h_pacf: h_pacf(y, period)?,
        periodicity_samples: period as f64,
    })
}
