//! L2-regularised logistic regression.
//!
//! Minimises `0.5 * |w|^2 + C * sum_i log(1 + exp(-s_i (w.x_i + b)))` with
//! `s_i` in {-1, +1} and an unregularised bias, using L-BFGS from the zero
//! vector with a backtracking Armijo line search. Every accepted step
//! strictly lowers the objective.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_binary_targets, sigmoid};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    /// Inverse regularisation strength.
    pub c: f64,
    pub max_iterations: usize,
    /// Stop once the Euclidean gradient norm falls below this.
    pub tolerance: f64,
    pub fit_intercept: bool,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            c: 1.0,
            max_iterations: 1000,
            tolerance: 1e-6,
            fit_intercept: true,
            memory: 10,
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c.is_nan() || self.c <= 0.0 || self.tolerance.is_nan() || self.tolerance <= 0.0 || self.memory == 0 {
            return Err(Error::InvalidInput(format!(
                "logistic regression needs C > 0, tolerance > 0 and memory > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub fingerprint: String,
    pub config: LrConfig,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn decision(&self, x: &FeatureVector) -> Result<f64> {
        if x.fingerprint() != self.fingerprint || x.len() != self.weights.len() {
            return Err(Error::LayoutMismatch {
                expected: self.fingerprint.clone(),
                found: x.fingerprint().to_string(),
            });
        }
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        self.decision(x).map(sigmoid)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<bool> {
        self.predict_proba(x).map(|p| p >= 0.5)
    }
}

/// Objective values and gradient norms after each accepted iterate,
/// starting with the zero vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LrTrace {
    pub objective: Vec<f64>,
    pub gradient_norm: Vec<f64>,
}

/// The regularised log-loss over a fixed training set. Parameters are the
/// weights followed by the bias.
pub struct LogisticObjective<'a> {
    x: &'a FeatureMatrix,
    signs: Vec<f64>,
    c: f64,
    fit_intercept: bool,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: &'a FeatureMatrix, y: &[bool], c: f64, fit_intercept: bool) -> Self {
        LogisticObjective {
            x,
            signs: y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect(),
            c,
            fit_intercept,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.n_cols() + 1
    }

    fn margins(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = params.split_at(self.x.n_cols());
        self.x.rows().par_iter().map(|r| r.dot(w) + b[0]).collect()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let d = self.x.n_cols();
        let reg = 0.5 * params[..d].iter().map(|w| w * w).sum::<f64>();
        let loss: f64 = self
            .margins(params)
            .iter()
            .zip(&self.signs)
            .map(|(z, s)| softplus(-s * z))
            .sum();
        reg + self.c * loss
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let d = self.x.n_cols();
        let margins = self.margins(params);
        let mut grad = params.to_vec();
        grad[d] = 0.0;
        let mut loss = 0.0;
        for ((row, z), s) in self.x.rows().iter().zip(&margins).zip(&self.signs) {
            loss += softplus(-s * z);
            let coef = -s * sigmoid(-s * z) * self.c;
            row.for_each(|j, v| grad[j] += coef * v);
            grad[d] += coef;
        }
        if !self.fit_intercept {
            grad[d] = 0.0;
        }
        let reg = 0.5 * params[..d].iter().map(|w| w * w).sum::<f64>();
        (reg + self.c * loss, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn train_logreg(x: &FeatureMatrix, y: &[bool], cfg: &LrConfig) -> Result<LinearModel> {
    fit_logreg(x, y, cfg).map(|(m, _)| m)
}

pub fn fit_logreg(x: &FeatureMatrix, y: &[bool], cfg: &LrConfig) -> Result<(LinearModel, LrTrace)> {
    cfg.validate()?;
    check_binary_targets(x, y)?;
    let objective = LogisticObjective::new(x, y, cfg.c, cfg.fit_intercept);
    let n = objective.dim();
    let mut params = vec![0.0; n];
    let (mut f, mut g) = objective.value_and_gradient(&params);
    let mut trace = LrTrace {
        objective: vec![f],
        gradient_norm: vec![norm(&g)],
    };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut converged = norm(&g) < cfg.tolerance;

    while !converged && iterations < cfg.max_iterations {
        let mut direction = two_loop(&g, &history);
        let mut slope = dot(&direction, &g);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            direction = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() && iterations == 0 {
            1.0 / norm(&g).max(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<f64> = params.iter().zip(&direction).map(|(p, d)| p + step * d).collect();
            let (fc, gc) = objective.value_and_gradient(&candidate);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope && fc < f {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next, g_next)) = accepted else {
            // no representable decrease along the search direction
            log::debug!("logistic regression line search stalled at iteration {iterations}");
            break;
        };

        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) && sy > 0.0 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        params = next;
        f = f_next;
        g = g_next;
        iterations += 1;
        trace.objective.push(f);
        trace.gradient_norm.push(norm(&g));
        converged = norm(&g) < cfg.tolerance;
    }

    let bias = params.pop().unwrap_or(0.0);
    Ok((
        LinearModel {
            weights: params,
            bias,
            fingerprint: x.fingerprint().to_string(),
            config: *cfg,
            iterations,
            converged,
        },
        trace,
    ))
}

/// L-BFGS two-loop recursion: returns `-H g` for the implicit inverse Hessian.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
