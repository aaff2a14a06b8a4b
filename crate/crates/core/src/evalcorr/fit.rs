use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap for the damped Gauss-Newton loop.
pub const MAX_ITERATIONS: usize = 1000;

/// Stop once an accepted step improves the residual sum of squares by less
/// than this fraction.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

/// f(x) = β1·(0.5 − 1/(1 + exp(β2·(x − β3)))) + β4·x + β5
pub fn logistic5(beta: &[f64; 5], x: f64) -> f64 {
    let [b1, b2, b3, b4, b5] = *beta;
    b1 * (0.5 - 1.0 / (1.0 + (b2 * (x - b3)).exp())) + b4 * x + b5
}

/// Partial derivatives of `logistic5` with respect to β1..β5.
fn gradient(beta: &[f64; 5], x: f64) -> [f64; 5] {
    let [b1, b2, b3, _, _] = *beta;
    let e = (b2 * (x - b3)).exp();
    // d/dz of -1/(1+e^z) is e^z/(1+e^z)^2, written to stay finite for large z
    let s = if e.is_finite() { e / ((1.0 + e) * (1.0 + e)) } else { 0.0 };
    let sig = if e.is_finite() { 1.0 / (1.0 + e) } else { 0.0 };
    [0.5 - sig, b1 * s * (x - b3), -b1 * s * b2, x, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub beta: [f64; 5],
    pub converged: bool,
    /// Root-mean-square residual on the fitted points.
    pub rmse: f64,
    pub iterations: usize,
}

impl LogisticFit {
    pub fn eval(&self, x: f64) -> f64 {
        logistic5(&self.beta, x)
    }

    pub fn apply(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

fn rss(beta: &[f64; 5], x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (yi - logistic5(beta, xi)).powi(2)).sum()
}

/// Solves the 5×5 system `a·d = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let pivot = (col..5).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..5 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut d = [0.0; 5];
    for row in (0..5).rev() {
        let tail: f64 = (row + 1..5).map(|k| a[row][k] * d[k]).sum();
        d[row] = (b[row] - tail) / a[row][row];
    }
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Levenberg-Marquardt from `start`. The residual never increases from one
/// accepted iterate to the next.
fn levenberg_marquardt(start: [f64; 5], x: &[f64], y: &[f64]) -> (LogisticFit, f64) {
    let mut beta = start;
    let mut cost = rss(&beta, x, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = [[0.0; 5]; 5];
        let mut jtr = [0.0; 5];
        for (&xi, &yi) in x.iter().zip(y) {
            let g = gradient(&beta, xi);
            let r = yi - logistic5(&beta, xi);
            for i in 0..5 {
                jtr[i] += g[i] * r;
                for j in 0..5 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            if let Some(step) = solve5(damped, jtr) {
                let mut trial = beta;
                for (t, s) in trial.iter_mut().zip(step) {
                    *t += s;
                }
                let trial_cost = rss(&trial, x, y);
                if trial_cost.is_finite() && trial_cost <= cost {
                    let gain = cost - trial_cost;
                    beta = trial;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if gain <= RELATIVE_TOLERANCE * cost.max(f64::MIN_POSITIVE) {
                        converged = true;
                    }
                    cost = trial_cost;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point
            converged = true;
        }
        if converged || cost == 0.0 {
            converged = true;
            break;
        }
    }
    let n = x.len() as f64;
    (
        LogisticFit {
            beta,
            converged,
            rmse: (cost / n).sqrt(),
            iterations,
        },
        cost,
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Least-squares line `y = a·x + b`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Fits the five-parameter logistic mapping from metric scores `x` to
/// opinion scores `y`.
///
/// Starts from β3 = median(x), β1 = range(y), β2 = ±1/std(x), β4 = 0,
/// β5 = mean(y) (both slopes are tried, so decreasing relations fit as
/// well as increasing ones), and also from the least-squares line. The
/// lowest residual wins, which means the result is never worse than a
/// linear fit.
pub fn fit_logistic(x: &[f64], y: &[f64]) -> Result<LogisticFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!("{} scores vs {} targets", x.len(), y.len())));
    }
    if x.len() < 6 {
        return Err(Error::TooFewPoints {
            needed: 6,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input to logistic fit".into()));
    }
    let mx = mean(x);
    let sd = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::ConstantInput);
    }
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = ols(x, y);
    let starts = [
        [ymax - ymin, 1.0 / sd, median(x), 0.0, mean(y)],
        [ymax - ymin, -1.0 / sd, median(x), 0.0, mean(y)],
        [0.0, 1.0 / sd, median(x), a, b],
    ];
    let mut best: Option<(LogisticFit, f64)> = None;
    for s in starts {
        let (fit, cost) = levenberg_marquardt(s, x, y);
        if best.as_ref().map_or(true, |(_, c)| cost < *c) {
            best = Some((fit, cost));
        }
    }
    Ok(best.expect("at least one start").0)
}
