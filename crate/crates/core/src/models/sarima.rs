//! Seasonal ARIMA estimated by conditional sum of squares.
//!
//! The model is the multiplicative form `phi(B) PHI(B^s) w_t = theta(B)
//! THETA(B^s) e_t` on the differenced series `w = (1-B)^d (1-B^s)^D y`,
//! with the `1 + theta B` sign convention on the MA side. Estimation runs
//! Hannan-Rissanen initialization (long-AR residual proxy, then least
//! squares on lagged values and proxies) followed by derivative-free
//! refinement of the conditional sum of squares. No intercept is fitted:
//! differencing removes the level, and the candidate structures all have
//! d = D = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::optim::nelder_mead;

/// Estimation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SarimaConfig {
    /// Most recent differenced samples used in the CSS objective.
    pub max_css_len: usize,
    /// Nelder-Mead iteration budget for the refinement stage.
    pub nm_max_iter: usize,
    /// Nelder-Mead convergence tolerance on the objective spread.
    pub nm_tol: f64,
    /// Coefficient box half-width; outside it the objective is infinite.
    pub coef_bound: f64,
}

impl Default for SarimaConfig {
    fn default() -> Self {
        Self {
            max_css_len: 2048,
            nm_max_iter: 400,
            nm_tol: 1e-8,
            coef_bound: 0.995,
        }
    }
}

/// Model orders. `d` and `sd` (the differencing orders) are 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarimaOrders {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Seasonal AR order P.
    pub sp: usize,
    /// Seasonal differencing order D.
    pub sd: usize,
    /// Seasonal MA order Q.
    pub sq: usize,
    /// Seasonal period in samples.
    pub s: usize,
}

impl SarimaOrders {
    fn n_coefs(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    /// First index of the differenced series with full lag support.
    fn warmup(&self) -> usize {
        (self.p + self.s * self.sp).max(self.q + self.s * self.sq)
    }

    fn validate(&self) -> Result<()> {
        if self.d > 1 || self.sd > 1 {
            return Err(Error::Config {
                key: "sarima.orders".into(),
                reason: "differencing orders beyond 1 are not supported".into(),
            });
        }
        if self.s == 0 {
            return Err(Error::Config {
                key: "sarima.s".into(),
                reason: "seasonal period must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// A fitted model: orders plus coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaParams {
    pub orders: SarimaOrders,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sphi: Vec<f64>,
    pub stheta: Vec<f64>,
    /// Innovation variance from the minimized CSS.
    pub sigma2: f64,
}

/// Apply the configured differencing: `w = (1-B)^d (1-B^s)^D y`.
fn difference(y: &[f64], orders: &SarimaOrders) -> Vec<f64> {
    let mut z: Vec<f64> = if orders.d == 1 {
        y.windows(2).map(|w| w[1] - w[0]).collect()
    } else {
        y.to_vec()
    };
    if orders.sd == 1 {
        let s = orders.s;
        z = (s..z.len()).map(|t| z[t] - z[t - s]).collect();
    }
    z
}

/// One-step prediction of `w[t]` from its own past and past innovations.
#[inline]
fn predict_w(
    w: &[f64],
    eps: &[f64],
    t: usize,
    orders: &SarimaOrders,
    phi: &[f64],
    theta: &[f64],
    sphi: &[f64],
    stheta: &[f64],
) -> f64 {
    let s = orders.s;
    let mut pred = 0.0;
    for (i, &c) in phi.iter().enumerate() {
        pred += c * w[t - (i + 1)];
    }
    for (bi, &cc) in sphi.iter().enumerate() {
        let base = t - s * (bi + 1);
        pred += cc * w[base];
        // Multiplicative cross terms carry the opposite sign on the AR side.
        for (i, &c) in phi.iter().enumerate() {
            pred -= c * cc * w[base - (i + 1)];
        }
    }
    for (j, &c) in theta.iter().enumerate() {
        pred += c * eps[t - (j + 1)];
    }
    for (bj, &cc) in stheta.iter().enumerate() {
        let base = t - s * (bj + 1);
        pred += cc * eps[base];
        for (j, &c) in theta.iter().enumerate() {
            pred += c * cc * eps[base - (j + 1)];
        }
    }
    pred
}

/// Innovations over `w` with zero initialization inside the warmup range.
fn css_residuals(
    w: &[f64],
    orders: &SarimaOrders,
    phi: &[f64],
    theta: &[f64],
    sphi: &[f64],
    stheta: &[f64],
) -> Vec<f64> {
    let t0 = orders.warmup();
    let mut eps = vec![0.0; w.len()];
    for t in t0..w.len() {
        let e = w[t] - predict_w(w, &eps, t, orders, phi, theta, sphi, stheta);
        if !e.is_finite() || e.abs() > 1e120 {
            // Explosive parameter region: poison the tail and bail out.
            for slot in eps.iter_mut().skip(t) {
                *slot = f64::INFINITY;
            }
            return eps;
        }
        eps[t] = e;
    }
    eps
}

fn unpack<'a>(c: &'a [f64], orders: &SarimaOrders) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
    let (phi, rest) = c.split_at(orders.p);
    let (theta, rest) = rest.split_at(orders.q);
    let (sphi, stheta) = rest.split_at(orders.sp);
    (phi, theta, sphi, stheta)
}

fn css_mean(w: &[f64], orders: &SarimaOrders, c: &[f64], bound: f64) -> f64 {
    if c.iter().any(|v| v.abs() >= bound) {
        return f64::INFINITY;
    }
    let (phi, theta, sphi, stheta) = unpack(c, orders);
    let eps = css_residuals(w, orders, phi, theta, sphi, stheta);
    let t0 = orders.warmup();
    let n = w.len() - t0;
    eps[t0..].iter().map(|e| e * e).sum::<f64>() / n as f64
}

/// Residual proxies from a long autoregression, for Hannan-Rissanen
/// initialization. Falls back to `None` when the regression is too thin.
fn long_ar_residuals(w: &[f64], orders: &SarimaOrders) -> Option<Vec<f64>> {
    let mut lags: Vec<usize> = (1..=(w.len() / 4).min(20).max(1)).collect();
    let la = *lags.last().unwrap();
    if orders.sp + orders.sq > 0 && orders.s > la && w.len() > 2 * (orders.s + 2) {
        lags.push(orders.s);
        lags.push(orders.s + 1);
    }
    let offset = *lags.last().unwrap();
    let rows = w.len().checked_sub(offset)?;
    if rows < lags.len() + 5 {
        return None;
    }
    let mut x = Vec::with_capacity(rows * lags.len());
    let mut y = Vec::with_capacity(rows);
    for t in offset..w.len() {
        for &lag in &lags {
            x.push(w[t - lag]);
        }
        y.push(w[t]);
    }
    let beta = least_squares(&x, lags.len(), &y).ok()?;
    let mut eps = vec![0.0; w.len()];
    for t in offset..w.len() {
        let pred: f64 = lags.iter().zip(&beta).map(|(&lag, b)| b * w[t - lag]).sum();
        eps[t] = w[t] - pred;
    }
    Some(eps)
}

/// Hannan-Rissanen starting point: regress `w` on its own lags and the
/// residual proxies, ignoring the multiplicative cross terms. Zeros when
/// the data cannot support the regression.
fn hr_init(w: &[f64], orders: &SarimaOrders) -> Vec<f64> {
    let n_coefs = orders.n_coefs();
    if n_coefs == 0 {
        return Vec::new();
    }
    let zeros = vec![0.0; n_coefs];
    let Some(eps) = long_ar_residuals(w, orders) else {
        return zeros;
    };
    let offset = orders.warmup();
    let Some(rows) = w.len().checked_sub(offset) else {
        return zeros;
    };
    if rows < n_coefs + 5 {
        return zeros;
    }
    let mut x = Vec::with_capacity(rows * n_coefs);
    let mut y = Vec::with_capacity(rows);
    for t in offset..w.len() {
        for i in 1..=orders.p {
            x.push(w[t - i]);
        }
        for j in 1..=orders.q {
            x.push(eps[t - j]);
        }
        for bi in 1..=orders.sp {
            x.push(w[t - orders.s * bi]);
        }
        for bj in 1..=orders.sq {
            x.push(eps[t - orders.s * bj]);
        }
        y.push(w[t]);
    }
    match least_squares(&x, n_coefs, &y) {
        Ok(beta) => beta.into_iter().map(|b| b.clamp(-0.9, 0.9)).collect(),
        Err(_) => zeros,
    }
}

/// Fit by CSS on the most recent `max_css_len` differenced samples.
pub fn fit(y: &[f64], orders: SarimaOrders, cfg: &SarimaConfig) -> Result<SarimaParams> {
    orders.validate()?;
    let w_full = difference(y, &orders);
    let start = w_full.len().saturating_sub(cfg.max_css_len);
    let w = &w_full[start..];

    let t0 = orders.warmup();
    let usable = w.len().saturating_sub(t0);
    let needed = (2 * orders.n_coefs()).max(10);
    if usable < needed {
        return Err(Error::NonConvergence {
            model: "sarima",
            reason: format!(
                "{usable} usable differenced samples after warmup, need {needed}"
            ),
        });
    }

    let init = hr_init(w, &orders);
    let coefs = if init.is_empty() {
        init
    } else {
        let m = nelder_mead(
            |c| css_mean(w, &orders, c, cfg.coef_bound),
            &init,
            0.1,
            cfg.nm_max_iter,
            cfg.nm_tol,
        );
        if !m.value.is_finite() {
            return Err(Error::NonConvergence {
                model: "sarima",
                reason: "objective non-finite over the searched region".into(),
            });
        }
        m.x
    };

    let sigma2 = css_mean(w, &orders, &coefs, f64::INFINITY);
    if !sigma2.is_finite() || coefs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonConvergence {
            model: "sarima",
            reason: "non-finite parameters".into(),
        });
    }
    let (phi, theta, sphi, stheta) = unpack(&coefs, &orders);
    Ok(SarimaParams {
        orders,
        phi: phi.to_vec(),
        theta: theta.to_vec(),
        sphi: sphi.to_vec(),
        stheta: stheta.to_vec(),
        sigma2,
    })
}

/// In-sample innovations on a series (warmup range excluded). Used to
/// check residual whiteness.
pub fn residuals(params: &SarimaParams, y: &[f64]) -> Vec<f64> {
    let w = difference(y, &params.orders);
    let eps = css_residuals(
        &w,
        &params.orders,
        &params.phi,
        &params.theta,
        &params.sphi,
        &params.stheta,
    );
    eps[params.orders.warmup().min(eps.len())..].to_vec()
}

/// K-step forecast: extend `w` recursively with future innovations at
/// zero, then undo the seasonal and ordinary differencing.
pub fn forecast(params: &SarimaParams, y_train: &[f64], k: usize) -> Vec<f64> {
    let orders = &params.orders;
    let s = orders.s;

    // Differencing chain, keeping the intermediate level for integration:
    // y --(1-B)^d--> z --(1-B^s)^D--> w.
    let mut z: Vec<f64> = if orders.d == 1 {
        y_train.windows(2).map(|w| w[1] - w[0]).collect()
    } else {
        y_train.to_vec()
    };
    let mut w: Vec<f64> = if orders.sd == 1 {
        (s..z.len()).map(|t| z[t] - z[t - s]).collect()
    } else {
        z.clone()
    };

    let mut eps = css_residuals(&w, orders, &params.phi, &params.theta, &params.sphi, &params.stheta);
    let mut y = y_train.to_vec();
    let t_known = w.len();

    for h in 0..k {
        let t = t_known + h;
        let w_new = if t >= orders.warmup() {
            predict_w(
                &w,
                &eps,
                t,
                orders,
                &params.phi,
                &params.theta,
                &params.sphi,
                &params.stheta,
            )
        } else {
            0.0
        };
        w.push(w_new);
        eps.push(0.0);
        let z_new = if orders.sd == 1 {
            w_new + z[z.len() - s]
        } else {
            w_new
        };
        z.push(z_new);
        let y_new = if orders.d == 1 {
            z_new + y[y.len() - 1]
        } else {
            z_new
        };
        y.push(y_new);
    }
    y.split_off(y_train.len())
}
