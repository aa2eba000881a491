//! Derivative-free minimization via the Nelder-Mead simplex method.
//!
//! Used to refine conditional-sum-of-squares objectives whose gradients are
//! awkward (recursive innovation filters). Dimensions stay small (≤ 10
//! coefficients), the regime where Nelder-Mead is dependable.

/// Result of a simplex run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`.
///
/// `step` sets the initial simplex edge length per coordinate. Convergence
/// is declared when the simplex's value spread falls below `tol`.
/// Non-finite objective values are treated as `+inf`, so `f` may encode
/// constraints by returning `f64::INFINITY` outside the feasible box.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_iter: usize, tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let clean = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    if n == 0 {
        let value = clean(f(x0));
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            converged: true,
        };
    }

    // Standard coefficients: reflection, expansion, contraction, shrink.
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        // Nonzero offset even when x0[i] == 0, else the simplex degenerates.
        v[i] += if v[i].abs() > 1e-12 { step * v[i].abs() } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| clean(f(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // Order best -> worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if (values[worst] - values[best]).abs() <= tol
            || (values[worst].is_infinite() && values[best].is_infinite())
        {
            converged = values[best].is_finite();
            break;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; n];
        for (idx, v) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for k in 0..n {
                centroid[k] += v[k];
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect()
        };

        let reflected = blend(&centroid, &simplex[worst], alpha);
        let fr = clean(f(&reflected));

        if fr < values[best] {
            let expanded = blend(&centroid, &simplex[worst], gamma);
            let fe = clean(f(&expanded));
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = blend(&centroid, &simplex[worst], -rho);
            let fc = clean(f(&contracted));
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink everything toward the best vertex.
                let anchor = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for k in 0..n {
                        simplex[idx][k] = anchor[k] + sigma * (simplex[idx][k] - anchor[k]);
                    }
                    values[idx] = clean(f(&simplex[idx]));
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    Minimum {
        x: simplex.swap_remove(best),
        value: values[best],
        iterations,
        converged,
    }
}
