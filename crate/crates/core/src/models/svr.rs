//! Support vector regression with a Gaussian kernel, trained by
//! sequential minimal optimization on the epsilon-insensitive dual.
//!
//! Inputs are a z-scored lag window of the load plus the current weather
//! reading; the dual is solved over 2n box-constrained variables (one
//! alpha pair per sample) under the usual balance constraint, picking the
//! maximal violating pair each round. No randomness is involved, so a fit
//! is deterministic for a given split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Scaler, TaskProfile};
use crate::series::{LfTask, SplitPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrConfig {
    /// Box constraint on each dual variable.
    pub c: f64,
    /// Half-width of the insensitive tube, in z-scored units.
    pub epsilon: f64,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    /// Most recent training samples kept per fit.
    pub max_samples: usize,
    /// Fewest samples worth fitting on.
    pub min_samples: usize,
    /// Lag window = one detected period, capped here.
    pub window_cap: usize,
    /// Iteration budget scales with sample count.
    pub max_iter_per_sample: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            epsilon: 0.01,
            tol: 1e-3,
            max_samples: 400,
            min_samples: 30,
            window_cap: 24,
            max_iter_per_sample: 400,
        }
    }
}

impl SvrConfig {
    /// Lag window length for a task with the given period.
    pub fn window_len(&self, period: usize) -> usize {
        period.clamp(2, self.window_cap.max(2))
    }
}

/// A trained regressor: support coefficients over the stored training
/// samples, plus the scalers needed to rebuild inputs when forecasting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrState {
    pub window: usize,
    pub converged: bool,
    pub(crate) dim: usize,
    pub(crate) inputs: Vec<f64>,
    pub(crate) targets: Vec<f64>,
    /// 2n dual variables: `[0,n)` alpha, `[n,2n)` alpha-star.
    pub(crate) a: Vec<f64>,
    pub(crate) beta: Vec<f64>,
    pub(crate) bias: f64,
    /// Kernel exponent coefficient, `K(x,y) = exp(-gamma * |x-y|^2)`.
    pub(crate) gamma: f64,
    pub(crate) epsilon: f64,
    pub(crate) c: f64,
    pub(crate) load_scaler: Scaler,
    pub(crate) weather_scalers: Vec<Scaler>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Maximal violating pair over the gradient-derived values `v`, given the
/// active-set membership implied by `a`. Returns
/// `(max over up-set, its index, min over low-set, its index)`.
fn violating_pair(a: &[f64], v: &[f64], n: usize, c: f64) -> (f64, usize, f64, usize) {
    let mut up = f64::NEG_INFINITY;
    let mut ui = usize::MAX;
    let mut lo = f64::INFINITY;
    let mut li = usize::MAX;
    for t in 0..2 * n {
        let positive = t < n;
        let at = a[t];
        let can_up = if positive { at < c } else { at > 0.0 };
        let can_lo = if positive { at > 0.0 } else { at < c };
        if can_up && v[t] > up {
            up = v[t];
            ui = t;
        }
        if can_lo && v[t] < lo {
            lo = v[t];
            li = t;
        }
    }
    (up, ui, lo, li)
}

/// Train on the split's training range.
pub fn fit(
    task: &LfTask,
    split: &SplitPair,
    cfg: &SvrConfig,
    profile: &TaskProfile,
) -> Result<SvrState> {
    let y = task.load.values();
    let train = &split.train;
    let window = cfg.window_len(profile.period);
    let first = train.start + window;
    if train.end < first + cfg.min_samples {
        return Err(Error::Infeasible {
            model: "svr",
            reason: format!(
                "{} training samples for window {window} and floor {}",
                train.len(),
                cfg.min_samples
            ),
        });
    }
    let load_scaler = Scaler::fit(&y[train.clone()]);
    let weather_scalers: Vec<Scaler> = task
        .weather
        .channels()
        .iter()
        .map(|ch| Scaler::fit(&ch.values[train.clone()]))
        .collect();
    let dim = window + weather_scalers.len();
    let start = first.max(train.end.saturating_sub(cfg.max_samples));
    let n = train.end - start;

    let mut inputs = Vec::with_capacity(n * dim);
    let mut targets = Vec::with_capacity(n);
    for i in start..train.end {
        for lag in (i - window)..i {
            inputs.push(load_scaler.transform(y[lag]));
        }
        for (c, scaler) in weather_scalers.iter().enumerate() {
            inputs.push(scaler.transform(task.weather.channels()[c].values[i]));
        }
        targets.push(load_scaler.transform(y[i]));
    }

    // Median pairwise squared distance sets the kernel scale.
    let mut d2 = vec![0.0; n * n];
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(&inputs[i * dim..(i + 1) * dim], &inputs[j * dim..(j + 1) * dim]);
            d2[i * n + j] = d;
            d2[j * n + i] = d;
            upper.push(d);
        }
    }
    upper.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = upper.get(upper.len() / 2).copied().unwrap_or(1.0);
    let gamma = 1.0 / (2.0 * median.max(1e-12));
    let gram: Vec<f64> = d2.iter().map(|&d| (-gamma * d).exp()).collect();
    drop(d2);

    // SMO over 2n variables. With all duals at zero the gradient terms
    // reduce to the targets offset by the tube half-width.
    let mut a = vec![0.0; 2 * n];
    let mut beta = vec![0.0; n];
    let mut v = vec![0.0; 2 * n];
    for s in 0..n {
        v[s] = targets[s] - cfg.epsilon;
        v[n + s] = targets[s] + cfg.epsilon;
    }
    let mut converged = false;
    for _ in 0..cfg.max_iter_per_sample * n {
        let (up, ui, lo, li) = violating_pair(&a, &v, n, cfg.c);
        if ui == usize::MAX || li == usize::MAX || up - lo <= cfg.tol {
            converged = true;
            break;
        }
        let si = ui % n;
        let sj = li % n;
        let eta =
            (gram[si * n + si] + gram[sj * n + sj] - 2.0 * gram[si * n + sj]).max(1e-12);
        let room_i = if ui < n { cfg.c - a[ui] } else { a[ui] };
        let room_j = if li < n { a[li] } else { cfg.c - a[li] };
        let lambda = ((up - lo) / eta).min(room_i).min(room_j);
        if lambda <= 0.0 {
            break;
        }
        if ui < n {
            a[ui] += lambda;
        } else {
            a[ui] -= lambda;
        }
        if li < n {
            a[li] -= lambda;
        } else {
            a[li] += lambda;
        }
        beta[si] += lambda;
        beta[sj] -= lambda;
        for s in 0..n {
            let d = lambda * (gram[s * n + si] - gram[s * n + sj]);
            v[s] -= d;
            v[n + s] -= d;
        }
    }

    // A sample never needs weight on both sides of the tube; cancel any
    // numerically shared mass. This leaves beta and the gradients intact.
    for s in 0..n {
        let shared = a[s].min(a[n + s]);
        if shared > 0.0 {
            a[s] -= shared;
            a[n + s] -= shared;
        }
    }
    let (up, ui, lo, li) = violating_pair(&a, &v, n, cfg.c);
    let bias = if ui != usize::MAX && li != usize::MAX {
        (up + lo) / 2.0
    } else {
        targets.iter().sum::<f64>() / n as f64
    };
    if !bias.is_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonConvergence {
            model: "svr",
            reason: "non-finite dual solution".into(),
        });
    }

    Ok(SvrState {
        window,
        converged,
        dim,
        inputs,
        targets,
        a,
        beta,
        bias,
        gamma,
        epsilon: cfg.epsilon,
        c: cfg.c,
        load_scaler,
        weather_scalers,
    })
}

fn decide(state: &SvrState, x: &[f64]) -> f64 {
    let n = state.targets.len();
    let mut acc = state.bias;
    for m in 0..n {
        let b = state.beta[m];
        if b != 0.0 {
            let d = sq_dist(x, &state.inputs[m * state.dim..(m + 1) * state.dim]);
            acc += b * (-state.gamma * d).exp();
        }
    }
    acc
}

/// Recursive K-step forecast feeding predictions back into the lag window.
pub fn forecast(state: &SvrState, task: &LfTask, split: &SplitPair) -> Vec<f64> {
    let y = task.load.values();
    let k = split.k();
    let mut lags: Vec<f64> = y[split.test.start - state.window..split.test.start]
        .iter()
        .map(|&v| state.load_scaler.transform(v))
        .collect();
    let mut x = vec![0.0; state.dim];
    let mut out = Vec::with_capacity(k);
    for idx in split.test.clone() {
        let tail = lags.len() - state.window;
        x[..state.window].copy_from_slice(&lags[tail..]);
        for (c, scaler) in state.weather_scalers.iter().enumerate() {
            x[state.window + c] = scaler.transform(task.weather.channels()[c].values[idx]);
        }
        let pred_z = decide(state, &x);
        lags.push(pred_z);
        out.push(state.load_scaler.inverse(pred_z));
    }
    out
}

/// In-sample RMSE over the stored training samples, in z-scored units
/// (the same units as the tube half-width).
pub fn train_rmse(state: &SvrState) -> f64 {
    let n = state.targets.len();
    let sse: f64 = (0..n)
        .map(|m| {
            let pred = decide(state, &state.inputs[m * state.dim..(m + 1) * state.dim]);
            let e = pred - state.targets[m];
            e * e
        })
        .sum();
    (sse / n as f64).sqrt()
}

/// Largest Karush-Kuhn-Tucker violation of the stored dual solution:
/// the optimality gap across the active sets plus any box breach.
/// Recomputed from scratch, independent of the solver's bookkeeping.
pub fn kkt_violation(state: &SvrState) -> f64 {
    let n = state.targets.len();
    let mut v = vec![0.0; 2 * n];
    for s in 0..n {
        let xs = &state.inputs[s * state.dim..(s + 1) * state.dim];
        let mut g = 0.0;
        for m in 0..n {
            let b = state.beta[m];
            if b != 0.0 {
                let d = sq_dist(xs, &state.inputs[m * state.dim..(m + 1) * state.dim]);
                g += b * (-state.gamma * d).exp();
            }
        }
        v[s] = state.targets[s] - g - state.epsilon;
        v[n + s] = state.targets[s] - g + state.epsilon;
    }
    let (up, ui, lo, li) = violating_pair(&state.a, &v, n, state.c);
    let gap = if ui != usize::MAX && li != usize::MAX {
        (up - lo).max(0.0)
    } else {
        0.0
    };
    let box_breach = state
        .a
        .iter()
        .map(|&x| (-x).max(x - state.c).max(0.0))
        .fold(0.0, f64::max);
    gap.max(box_breach)
}
