//! L2-regularized logistic regression.
//!
//! Objective: mean negative log-likelihood + `lambda * ||w||^2`, bias
//! unpenalized. Minimized from zero by damped Newton steps (falling back to
//! steepest descent when the Hessian is not positive definite) with an
//! Armijo backtracking line search, so the loss never increases.

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 10_000;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// The training objective over a fixed design matrix. Parameters are laid out
/// as `[w_0, .., w_{d-1}, bias]`.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    rows: &'a [Vec<f64>],
    targets: Vec<f64>,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(rows: &'a [Vec<f64>], labels: &[bool], lambda: f64) -> Self {
        Self {
            rows,
            targets: labels.iter().map(|&l| f64::from(u8::from(l))).collect(),
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn score(&self, row: &[f64], params: &[f64]) -> f64 {
        let d = row.len();
        row.iter().zip(&params[..d]).map(|(x, w)| x * w).sum::<f64>() + params[d]
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let d = self.dim();
        let n = self.rows.len() as f64;
        let nll: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(row, &y)| {
                let z = self.score(row, params);
                softplus(z) - y * z
            })
            .sum();
        let penalty: f64 = params[..d].iter().map(|w| w * w).sum();
        nll / n + self.lambda * penalty
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let n = self.rows.len() as f64;
        let mut grad = vec![0.0; d + 1];
        for (row, &y) in self.rows.iter().zip(&self.targets) {
            let residual = sigmoid(self.score(row, params)) - y;
            for (g, x) in grad.iter_mut().zip(row) {
                *g += residual * x;
            }
            grad[d] += residual;
        }
        for g in &mut grad {
            *g /= n;
        }
        for (g, w) in grad[..d].iter_mut().zip(&params[..d]) {
            *g += 2.0 * self.lambda * w;
        }
        grad
    }

    // Symmetric fill reads clearer with explicit indices.
    #[allow(clippy::needless_range_loop)]
    fn hessian(&self, params: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let n = self.rows.len() as f64;
        let mut h = vec![vec![0.0; d + 1]; d + 1];
        let mut aug = vec![1.0; d + 1];
        for row in self.rows {
            let p = sigmoid(self.score(row, params));
            let weight = p * (1.0 - p);
            aug[..d].copy_from_slice(row);
            for i in 0..=d {
                let wi = weight * aug[i];
                for j in 0..=i {
                    h[i][j] += wi * aug[j];
                }
            }
        }
        for i in 0..=d {
            for j in 0..=i {
                h[i][j] /= n;
                h[j][i] = h[i][j];
            }
        }
        for (i, row) in h.iter_mut().enumerate().take(d) {
            row[i] += 2.0 * self.lambda;
        }
        h
    }
}

/// Solves `a x = b` for symmetric positive definite `a`.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if v <= 1e-14 || !v.is_finite() {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

pub fn train_logistic(rows: &[Vec<f64>], labels: &[bool]) -> Result<LogisticFit> {
    train_logistic_with(rows, labels, DEFAULT_LAMBDA)
}

pub fn train_logistic_with(rows: &[Vec<f64>], labels: &[bool], lambda: f64) -> Result<LogisticFit> {
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if rows.len() < 2 {
        return Err(Error::Training(format!("need at least 2 rows, got {}", rows.len())));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Training("one-class training data".into()));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: bad.len(),
        });
    }

    let objective = LogisticObjective::new(rows, labels, lambda);
    let mut params = vec![0.0; d + 1];
    let mut loss = objective.loss(&params);
    if !loss.is_finite() {
        return Err(Error::Training("non-finite loss".into()));
    }
    let mut history = vec![loss];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let grad = objective.gradient(&params);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training("non-finite gradient".into()));
        }
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;

        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let direction = cholesky_solve(&objective.hessian(&params), &neg_grad)
            .filter(|dir| dir.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>() < 0.0)
            .unwrap_or(neg_grad);
        let slope: f64 = direction.iter().zip(&grad).map(|(a, g)| a * g).sum();

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&direction).map(|(p, dir)| p + step * dir).collect();
            let trial_loss = objective.loss(&trial);
            if trial_loss.is_finite() && trial_loss <= loss + 1e-4 * step * slope {
                accepted = Some((trial, trial_loss));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((next, next_loss)) => {
                params = next;
                loss = next_loss;
                history.push(loss);
            }
            None => {
                // No representable decrease left along a descent direction.
                converged = true;
                break;
            }
        }
    }

    if !loss.is_finite() {
        return Err(Error::Training("non-finite loss".into()));
    }
    let bias = params.pop().expect("bias present");
    Ok(LogisticFit {
        weights: params,
        bias,
        iterations,
        converged,
        loss_history: history,
    })
}
