//! L2-penalized logistic regression fitted by iteratively reweighted least
//! squares, with a gradient-descent fallback when the Newton system is not
//! positive definite.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, Label};
use crate::error::{Error, Result};

/// Linear scores are clipped to this magnitude before the sigmoid.
pub const SCORE_CLIP: f64 = 30.0;

const GD_STEPS_PER_ITERATION: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub max_iterations: usize,
    pub convergence_tolerance: f64,
    pub l2_penalty: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            max_iterations: 25,
            convergence_tolerance: 1e-8,
            l2_penalty: 0.0,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidHyperparameter("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidHyperparameter(
                "convergence_tolerance must be > 0".into(),
            ));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::InvalidHyperparameter("l2_penalty must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogisticFitInfo {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_fallback: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-SCORE_CLIP, SCORE_CLIP);
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    /// Model with zero slopes and the intercept at the log-odds of `prior`.
    pub fn prior(n_features: usize, prior: f64) -> Self {
        let p = prior.clamp(1e-12, 1.0 - 1e-12);
        LogisticModel {
            intercept: (p / (1.0 - p)).ln(),
            coefficients: vec![0.0; n_features],
        }
    }

    pub fn linear_score(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, rows: &FeatureMatrix) -> Vec<f64> {
        rows.rows().map(|r| sigmoid(self.linear_score(r))).collect()
    }
}

/// Penalized negative log-likelihood. `beta[0]` is the unpenalized intercept.
pub fn log_loss(beta: &[f64], x: &FeatureMatrix, y: &[f64], l2: f64) -> f64 {
    let mut loss = 0.0;
    for (row, &yi) in x.rows().zip(y) {
        let eta = eta(beta, row);
        loss += softplus(eta) - yi * eta;
    }
    loss + 0.5 * l2 * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`log_loss`].
pub fn log_loss_gradient(beta: &[f64], x: &FeatureMatrix, y: &[f64], l2: f64) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (row, &yi) in x.rows().zip(y) {
        let r = 1.0 / (1.0 + (-eta(beta, row)).exp()) - yi;
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    for (gj, bj) in g[1..].iter_mut().zip(&beta[1..]) {
        *gj += l2 * bj;
    }
    g
}

fn eta(beta: &[f64], row: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

pub fn fit(
    params: &LogisticParams,
    x: &FeatureMatrix,
    labels: &[Label],
) -> Result<(LogisticModel, LogisticFitInfo)> {
    params.validate()?;
    let n = x.n_rows();
    let p = x.n_cols();
    if n != labels.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    let y: Vec<f64> = labels.iter().map(|l| f64::from(u8::from(l.is_positive()))).collect();
    let n_pos = y.iter().sum::<f64>();
    if n_pos == 0.0 || n_pos == n as f64 {
        return Err(Error::DegenerateData("labels are constant".into()));
    }

    // Constant columns carry no information and make the Newton system
    // singular; their coefficients stay at zero.
    let active: Vec<usize> = (0..p)
        .filter(|&j| {
            let mut it = x.rows().map(|r| r[j]);
            let first = it.next().unwrap_or(0.0);
            it.any(|v| v != first)
        })
        .collect();
    let xa = x.rows().flat_map(|r| active.iter().map(move |&j| r[j])).collect();
    let xa = FeatureMatrix::new(xa, active.len())?;

    let l2 = params.l2_penalty;
    let dim = active.len() + 1;
    let mut beta = vec![0.0; dim];
    beta[0] = (n_pos / (n as f64 - n_pos)).ln();
    let mut loss = log_loss(&beta, &xa, &y, l2);
    let mut info = LogisticFitInfo::default();

    while info.iterations < params.max_iterations {
        info.iterations += 1;
        let Some(step) = newton_step(&beta, &xa, &y, l2) else {
            info.gradient_fallback = true;
            let budget = (params.max_iterations - info.iterations + 1) * GD_STEPS_PER_ITERATION;
            info.converged = gradient_descent(&mut beta, &xa, &y, l2, params, budget);
            loss = log_loss(&beta, &xa, &y, l2);
            break;
        };
        // step halving until the loss does not increase
        let mut t = 1.0;
        let mut next: Vec<f64>;
        let mut next_loss;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            next_loss = log_loss(&next, &xa, &y, l2);
            if next_loss <= loss || t < 1e-10 {
                break;
            }
            t *= 0.5;
        }
        let change = (loss - next_loss).abs() / (next_loss.abs() + 0.1);
        beta = next;
        loss = next_loss;
        if change < params.convergence_tolerance {
            info.converged = true;
            break;
        }
    }

    if !loss.is_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularFit("non-finite coefficients".into()));
    }
    let mut coefficients = vec![0.0; p];
    for (k, &j) in active.iter().enumerate() {
        coefficients[j] = beta[k + 1];
    }
    Ok((
        LogisticModel {
            intercept: beta[0],
            coefficients,
        },
        info,
    ))
}

/// Solve `H · step = g` for the Newton step; `None` if `H` is not
/// positive definite.
fn newton_step(beta: &[f64], x: &FeatureMatrix, y: &[f64], l2: f64) -> Option<Vec<f64>> {
    let dim = beta.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut g = DVector::<f64>::zeros(dim);
    let mut z = vec![0.0; dim];
    z[0] = 1.0;
    for (row, &yi) in x.rows().zip(y) {
        let mu = sigmoid(eta(beta, row));
        let w = mu * (1.0 - mu);
        z[1..].copy_from_slice(row);
        for a in 0..dim {
            g[a] += (mu - yi) * z[a];
            let wa = w * z[a];
            for b in a..dim {
                h[(a, b)] += wa * z[b];
            }
        }
    }
    for a in 0..dim {
        if a > 0 {
            h[(a, a)] += l2;
            g[a] += l2 * beta[a];
        }
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    let chol = h.cholesky()?;
    let step = chol.solve(&g);
    step.iter().all(|s| s.is_finite()).then(|| step.iter().copied().collect())
}

/// Backtracking gradient descent; returns true if it converged.
fn gradient_descent(
    beta: &mut Vec<f64>,
    x: &FeatureMatrix,
    y: &[f64],
    l2: f64,
    params: &LogisticParams,
    budget: usize,
) -> bool {
    let mut loss = log_loss(beta, x, y, l2);
    let mut lr = 1.0 / x.n_rows() as f64;
    for _ in 0..budget {
        let g = log_loss_gradient(beta, x, y, l2);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            return true;
        }
        // Armijo backtracking
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = beta.iter().zip(&g).map(|(b, gj)| b - lr * gj).collect();
            let cl = log_loss(&cand, x, y, l2);
            if cl <= loss - 0.5 * lr * g2 {
                accepted = Some((cand, cl));
                break;
            }
            lr *= 0.5;
        }
        let Some((cand, cl)) = accepted else {
            return false;
        };
        let change = (loss - cl).abs() / (cl.abs() + 0.1);
        *beta = cand;
        loss = cl;
        lr *= 2.0;
        if change < params.convergence_tolerance {
            return true;
        }
    }
    false
}
