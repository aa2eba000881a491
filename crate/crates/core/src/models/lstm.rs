//! Single-layer LSTM forecaster trained by backpropagation through time.
//!
//! One recurrent layer plus a linear head, trained on z-scored inputs to
//! predict the next load sample from a window of past load and current
//! weather. Weights live in flat row-major arrays; the gate order inside
//! the stacked weight matrix is `[input, forget, cell, output]`. Training
//! uses per-window Adam updates with a seeded shuffle, so a fixed seed
//! reproduces parameters bit for bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Scaler, TaskProfile};
use crate::seed::rng;
use crate::series::{LfTask, SplitPair};

/// Training schedule and shape knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Input window = one detected period, capped here.
    pub window_cap: usize,
    /// Most recent training windows kept per fit.
    pub max_windows: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 1e-3,
            window_cap: 168,
            max_windows: 256,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl LstmConfig {
    /// Input window length for a task with the given period.
    pub fn window_len(&self, period: usize) -> usize {
        period.clamp(1, self.window_cap.max(1))
    }
}

/// The network parameters: stacked gate weights over `[x; h]`, gate
/// biases, and the linear head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Net {
    pub hidden: usize,
    pub input_dim: usize,
    /// `4H x (I+H)` row-major; rows `[0,H)` input gate, `[H,2H)` forget,
    /// `[2H,3H)` cell candidate, `[3H,4H)` output gate.
    pub w: Vec<f64>,
    /// `4H` gate biases.
    pub b: Vec<f64>,
    /// `H` head weights.
    pub v: Vec<f64>,
    pub b_out: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Grads {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub b_out: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-window activation cache for backpropagation.
struct Cache {
    steps: usize,
    xh: Vec<f64>,     // steps x (I+H)
    gates: Vec<f64>,  // steps x 4H, post-activation
    c: Vec<f64>,      // steps x H
    tanh_c: Vec<f64>, // steps x H
    h: Vec<f64>,      // steps x H
    preds: Vec<f64>,  // steps
}

impl Net {
    fn new_seeded(hidden: usize, input_dim: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let cols = input_dim + hidden;
        let ws = 1.0 / (cols as f64).sqrt();
        let w = (0..4 * hidden * cols).map(|_| r.gen_range(-ws..ws)).collect();
        let vs = 1.0 / (hidden as f64).sqrt();
        let v = (0..hidden).map(|_| r.gen_range(-vs..vs)).collect();
        Self {
            hidden,
            input_dim,
            w,
            b: vec![0.0; 4 * hidden],
            v,
            b_out: 0.0,
        }
    }

    /// One recurrent step. `xh` must hold `[x; h_prev]`; `h` and `c` are
    /// updated in place. Returns the head output.
    fn step(&self, xh: &[f64], c: &mut [f64], h: &mut [f64], gates_out: Option<&mut [f64]>) -> f64 {
        let hd = self.hidden;
        let cols = self.input_dim + hd;
        let mut acts = vec![0.0; 4 * hd];
        for (r, slot) in acts.iter_mut().enumerate() {
            let row = &self.w[r * cols..(r + 1) * cols];
            let mut sum = self.b[r];
            for (wv, xv) in row.iter().zip(xh) {
                sum += wv * xv;
            }
            *slot = sum;
        }
        for u in 0..hd {
            let i = sigmoid(acts[u]);
            let f = sigmoid(acts[hd + u]);
            let g = acts[2 * hd + u].tanh();
            let o = sigmoid(acts[3 * hd + u]);
            c[u] = f * c[u] + i * g;
            h[u] = o * c[u].tanh();
            acts[u] = i;
            acts[hd + u] = f;
            acts[2 * hd + u] = g;
            acts[3 * hd + u] = o;
        }
        if let Some(out) = gates_out {
            out.copy_from_slice(&acts);
        }
        let mut pred = self.b_out;
        for (vv, hv) in self.v.iter().zip(h.iter()) {
            pred += vv * hv;
        }
        pred
    }

    /// Mean-squared one-step-ahead loss over a window, with cache.
    fn forward_window(&self, inputs: &[f64], targets: &[f64]) -> (f64, Cache) {
        let steps = targets.len();
        let hd = self.hidden;
        let cols = self.input_dim + hd;
        let mut cache = Cache {
            steps,
            xh: vec![0.0; steps * cols],
            gates: vec![0.0; steps * 4 * hd],
            c: vec![0.0; steps * hd],
            tanh_c: vec![0.0; steps * hd],
            h: vec![0.0; steps * hd],
            preds: vec![0.0; steps],
        };
        let mut c = vec![0.0; hd];
        let mut h = vec![0.0; hd];
        let mut loss = 0.0;
        for t in 0..steps {
            let xh = &mut cache.xh[t * cols..(t + 1) * cols];
            xh[..self.input_dim]
                .copy_from_slice(&inputs[t * self.input_dim..(t + 1) * self.input_dim]);
            xh[self.input_dim..].copy_from_slice(&h);
            let xh = &cache.xh[t * cols..(t + 1) * cols];
            let pred = self.step(
                xh,
                &mut c,
                &mut h,
                Some(&mut cache.gates[t * 4 * hd..(t + 1) * 4 * hd]),
            );
            cache.c[t * hd..(t + 1) * hd].copy_from_slice(&c);
            for u in 0..hd {
                cache.tanh_c[t * hd + u] = c[u].tanh();
            }
            cache.h[t * hd..(t + 1) * hd].copy_from_slice(&h);
            cache.preds[t] = pred;
            let e = pred - targets[t];
            loss += e * e;
        }
        (loss / steps as f64, cache)
    }

    /// Backpropagation through time over one cached window.
    fn backward(&self, cache: &Cache, targets: &[f64]) -> Grads {
        let hd = self.hidden;
        let cols = self.input_dim + hd;
        let steps = cache.steps;
        let mut g = Grads {
            w: vec![0.0; self.w.len()],
            b: vec![0.0; self.b.len()],
            v: vec![0.0; self.v.len()],
            b_out: 0.0,
        };
        let mut dh_carry = vec![0.0; hd];
        let mut dc_carry = vec![0.0; hd];
        let mut da = vec![0.0; 4 * hd];
        for t in (0..steps).rev() {
            let dpred = 2.0 * (cache.preds[t] - targets[t]) / steps as f64;
            g.b_out += dpred;
            let h_t = &cache.h[t * hd..(t + 1) * hd];
            let gates = &cache.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let tanh_c = &cache.tanh_c[t * hd..(t + 1) * hd];
            for u in 0..hd {
                g.v[u] += dpred * h_t[u];
                let dh = dpred * self.v[u] + dh_carry[u];
                let i = gates[u];
                let f = gates[hd + u];
                let gg = gates[2 * hd + u];
                let o = gates[3 * hd + u];
                let tc = tanh_c[u];
                let dc = dh * o * (1.0 - tc * tc) + dc_carry[u];
                let c_prev = if t > 0 { cache.c[(t - 1) * hd + u] } else { 0.0 };
                da[u] = dc * gg * i * (1.0 - i);
                da[hd + u] = dc * c_prev * f * (1.0 - f);
                da[2 * hd + u] = dc * i * (1.0 - gg * gg);
                da[3 * hd + u] = dh * tc * o * (1.0 - o);
                dc_carry[u] = dc * f;
            }
            let xh = &cache.xh[t * cols..(t + 1) * cols];
            dh_carry.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * hd {
                let dar = da[r];
                g.b[r] += dar;
                if dar == 0.0 {
                    continue;
                }
                let wrow = &self.w[r * cols..(r + 1) * cols];
                let grow = &mut g.w[r * cols..(r + 1) * cols];
                for cix in 0..cols {
                    grow[cix] += dar * xh[cix];
                }
                for u in 0..hd {
                    dh_carry[u] += wrow[self.input_dim + u] * dar;
                }
            }
        }
        g
    }
}

/// Loss and analytic gradient for one window; exposed for the
/// finite-difference gradient check.
pub(crate) fn loss_and_grad(net: &Net, inputs: &[f64], targets: &[f64]) -> (f64, Grads) {
    let (loss, cache) = net.forward_window(inputs, targets);
    let grad = net.backward(&cache, targets);
    (loss, grad)
}

pub(crate) fn window_loss(net: &Net, inputs: &[f64], targets: &[f64]) -> f64 {
    net.forward_window(inputs, targets).0
}

/// Compare the backpropagated gradient against central finite differences
/// on a small randomly-initialized network and return the worst relative
/// error over every parameter. Verifies the training math end to end.
pub fn gradient_check(hidden: usize, steps: usize, seed: u64) -> f64 {
    let net = Net::new_seeded(hidden, 1, seed);
    let mut r = rng(crate::seed::mix(seed, 0x67636b));
    let inputs: Vec<f64> = (0..steps).map(|_| r.gen_range(-1.0..1.0)).collect();
    let targets: Vec<f64> = (0..steps).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (_, grads) = loss_and_grad(&net, &inputs, &targets);

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut probe = |analytic: f64, perturb: &mut dyn FnMut(&mut Net, f64)| {
        let mut plus = net.clone();
        perturb(&mut plus, h);
        let mut minus = net.clone();
        perturb(&mut minus, -h);
        let numeric = (window_loss(&plus, &inputs, &targets)
            - window_loss(&minus, &inputs, &targets))
            / (2.0 * h);
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    };
    for p in 0..net.w.len() {
        probe(grads.w[p], &mut |n, d| n.w[p] += d);
    }
    for p in 0..net.b.len() {
        probe(grads.b[p], &mut |n, d| n.b[p] += d);
    }
    for p in 0..net.v.len() {
        probe(grads.v[p], &mut |n, d| n.v[p] += d);
    }
    probe(grads.b_out, &mut |n, d| n.b_out += d);
    worst
}

/// A trained forecaster: network plus the scalers and window geometry
/// needed to rebuild its inputs at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub hidden: usize,
    pub window: usize,
    pub seed: u64,
    pub(crate) net: Net,
    pub(crate) load_scaler: Scaler,
    pub(crate) weather_scalers: Vec<Scaler>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(len: usize, cfg: &LstmConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64, step: i32) {
        let correction =
            (1.0 - self.beta2.powi(step)).sqrt() / (1.0 - self.beta1.powi(step));
        let a = lr * correction;
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            params[i] -= a * self.m[i] / (self.v[i].sqrt() + self.eps);
        }
    }
}

fn input_row(
    out: &mut [f64],
    load_z: f64,
    idx: usize,
    task: &LfTask,
    weather_scalers: &[Scaler],
) {
    out[0] = load_z;
    for (c, scaler) in weather_scalers.iter().enumerate() {
        out[1 + c] = scaler.transform(task.weather.channels()[c].values[idx]);
    }
}

/// Train on the split's training range.
pub fn fit(
    task: &LfTask,
    split: &SplitPair,
    hidden: usize,
    seed: u64,
    cfg: &LstmConfig,
    profile: &TaskProfile,
) -> Result<LstmState> {
    let y = task.load.values();
    let train = &split.train;
    let window = cfg.window_len(profile.period);
    if train.len() < window + 2 {
        return Err(Error::Infeasible {
            model: "lstm",
            reason: format!("{} training samples for window {window}", train.len()),
        });
    }
    let load_scaler = Scaler::fit(&y[train.clone()]);
    let weather_scalers: Vec<Scaler> = task
        .weather
        .channels()
        .iter()
        .map(|ch| Scaler::fit(&ch.values[train.clone()]))
        .collect();
    let input_dim = 1 + weather_scalers.len();

    // Non-overlapping windows, most recent first, then restored to
    // chronological order. A window starting at a consumes inputs
    // [a, a+window) and targets [a+1, a+window].
    let mut starts = Vec::new();
    let mut a = train.end as i64 - window as i64 - 1;
    while a >= train.start as i64 && starts.len() < cfg.max_windows {
        starts.push(a as usize);
        a -= window as i64;
    }
    starts.reverse();
    if starts.is_empty() {
        return Err(Error::Infeasible {
            model: "lstm",
            reason: "no complete training window".into(),
        });
    }

    let mut net = Net::new_seeded(hidden, input_dim, seed);
    let mut adam_w = Adam::new(net.w.len(), cfg);
    let mut adam_b = Adam::new(net.b.len(), cfg);
    let mut adam_v = Adam::new(net.v.len(), cfg);
    let mut adam_bo = Adam::new(1, cfg);

    let mut inputs = vec![0.0; window * input_dim];
    let mut targets = vec![0.0; window];
    let mut order: Vec<usize> = (0..starts.len()).collect();
    let mut shuffle_rng = rng(crate::seed::mix(seed, 0x5u64));
    let mut step = 0i32;
    for _ in 0..cfg.epochs {
        // Fisher-Yates with the dedicated stream keeps epochs reproducible.
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for &wi in &order {
            let a0 = starts[wi];
            for t in 0..window {
                let idx = a0 + t;
                input_row(
                    &mut inputs[t * input_dim..(t + 1) * input_dim],
                    load_scaler.transform(y[idx]),
                    idx,
                    task,
                    &weather_scalers,
                );
                targets[t] = load_scaler.transform(y[idx + 1]);
            }
            let (_, cache) = net.forward_window(&inputs, &targets);
            let grads = net.backward(&cache, &targets);
            step += 1;
            adam_w.update(&mut net.w, &grads.w, cfg.learning_rate, step);
            adam_b.update(&mut net.b, &grads.b, cfg.learning_rate, step);
            adam_v.update(&mut net.v, &grads.v, cfg.learning_rate, step);
            let mut bo = [net.b_out];
            adam_bo.update(&mut bo, &[grads.b_out], cfg.learning_rate, step);
            net.b_out = bo[0];
        }
    }

    if net.w.iter().chain(&net.b).chain(&net.v).any(|p| !p.is_finite())
        || !net.b_out.is_finite()
    {
        return Err(Error::NonConvergence {
            model: "lstm",
            reason: "non-finite parameters after training".into(),
        });
    }
    Ok(LstmState {
        hidden,
        window,
        seed,
        net,
        load_scaler,
        weather_scalers,
    })
}

/// Recursive K-step forecast: warm up the state on the last window of
/// training data, then feed predictions back as the load input while
/// weather stays known.
pub fn forecast(state: &LstmState, task: &LfTask, split: &SplitPair) -> Vec<f64> {
    let y = task.load.values();
    let k = split.k();
    let input_dim = 1 + state.weather_scalers.len();
    let hd = state.hidden;
    let mut c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    let mut xh = vec![0.0; input_dim + hd];

    let warm_start = split.test.start.saturating_sub(state.window);
    let mut pred_z = 0.0;
    let mut advance = |load_z: f64, idx: usize, c: &mut Vec<f64>, h: &mut Vec<f64>| {
        input_row(&mut xh[..input_dim], load_z, idx, task, &state.weather_scalers);
        for (slot, hv) in xh[input_dim..].iter_mut().zip(h.iter()) {
            *slot = *hv;
        }
        state.net.step(&xh, c, h, None)
    };
    for idx in warm_start..split.test.start {
        pred_z = advance(state.load_scaler.transform(y[idx]), idx, &mut c, &mut h);
    }

    let mut out = Vec::with_capacity(k);
    out.push(state.load_scaler.inverse(pred_z));
    for step in 1..k {
        let idx = split.test.start + step - 1;
        pred_z = advance(pred_z, idx, &mut c, &mut h);
        out.push(state.load_scaler.inverse(pred_z));
    }
    out
}
