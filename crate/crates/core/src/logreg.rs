//! L2-regularized logistic regression trained by full-batch gradient
//! descent with Armijo backtracking, supporting per-example sample weights.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ProbEstimates};
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub tolerance: f64,
    /// Fixed step size; `None` selects the step by backtracking line search.
    pub learning_rate: Option<f64>,
    /// Inverse regularization strength C; lambda = 1/C.
    pub reg_inverse_c: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 500,
            tolerance: 1e-6,
            learning_rate: None,
            reg_inverse_c: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg_inverse_c: f64,
    pub converged: bool,
    #[serde(skip)]
    pub iterations_used: usize,
}

impl LogisticModel {
    /// sigma(w . x + b)
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let z = dot(&self.weights, x) + self.bias;
        sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log(1 + e^-z) for y=1, log(1 + e^z) for y=0, evaluated stably.
fn log_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Weighted regularized objective:
/// sum_i w_i * l(sigma(w.x_i + b), y_i) + (lambda/2) ||w||^2,
/// with the bias unregularized.
pub fn objective(
    d: &Dataset,
    labels: &[u8],
    sample_w: &[f64],
    lambda: f64,
    w: &[f64],
    b: f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..d.n() {
        let z = dot(w, d.row(i)) + b;
        total += sample_w[i] * log_loss(z, labels[i] as f64);
    }
    total + 0.5 * lambda * dot(w, w)
}

/// Analytic gradient of [`objective`] w.r.t. (w, b).
pub fn gradient(
    d: &Dataset,
    labels: &[u8],
    sample_w: &[f64],
    lambda: f64,
    w: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let m = d.m();
    let mut gw = vec![0.0; m];
    let mut gb = 0.0;
    for i in 0..d.n() {
        let x = d.row(i);
        let z = dot(w, x) + b;
        let r = sample_w[i] * (sigmoid(z) - labels[i] as f64);
        for j in 0..m {
            gw[j] += r * x[j];
        }
        gb += r;
    }
    for j in 0..m {
        gw[j] += lambda * w[j];
    }
    (gw, gb)
}

/// Fits the weighted objective by gradient descent. Non-convergence is
/// not an error; the returned model carries `converged = false`.
pub fn fit(
    d: &Dataset,
    labels: &[u8],
    weights: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<LogisticModel> {
    let n = d.n();
    if n == 0 {
        return Err(Error::TooFewExamples { n: 0, k: 1 });
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let default_w;
    let sample_w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: n,
                });
            }
            if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Parse(
                    "sample weights must be finite and nonnegative".into(),
                ));
            }
            w
        }
        None => {
            default_w = vec![1.0; n];
            &default_w
        }
    };
    // Both classes must carry positive weight, or p_s1 cannot be calibrated.
    let mut class_weight = [0.0f64; 2];
    for i in 0..n {
        class_weight[labels[i] as usize] += sample_w[i];
    }
    if class_weight[0] <= 0.0 || class_weight[1] <= 0.0 {
        return Err(Error::SingleClassInput);
    }
    if cfg.reg_inverse_c <= 0.0 {
        return Err(Error::Parse("reg_inverse_c must be > 0".into()));
    }
    let lambda = 1.0 / cfg.reg_inverse_c;
    let m = d.m();

    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let mut obj = objective(d, labels, sample_w, lambda, &w, b);
    let mut converged = false;
    let mut iters = 0;
    let mut step = cfg.learning_rate.unwrap_or(1.0);

    for _ in 0..cfg.max_iters {
        let (gw, gb) = gradient(d, labels, sample_w, lambda, &w, b);
        let gnorm_inf = gw
            .iter()
            .chain(std::iter::once(&gb))
            .fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm_inf < cfg.tolerance {
            converged = true;
            break;
        }
        iters += 1;
        let gsq = dot(&gw, &gw) + gb * gb;
        if cfg.learning_rate.is_some() {
            for j in 0..m {
                w[j] -= step * gw[j];
            }
            b -= step * gb;
            obj = objective(d, labels, sample_w, lambda, &w, b);
            continue;
        }
        // Armijo backtracking; retry from a doubled step each iteration.
        step = (step * 2.0).min(1e6);
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(wj, gj)| wj - step * gj).collect();
            let bt = b - step * gb;
            let new_obj = objective(d, labels, sample_w, lambda, &wt, bt);
            if new_obj <= obj - 1e-4 * step * gsq || step < 1e-18 {
                w = wt;
                b = bt;
                obj = new_obj;
                break;
            }
            step *= 0.5;
        }
    }

    Ok(LogisticModel {
        weights: w,
        bias: b,
        reg_inverse_c: cfg.reg_inverse_c,
        converged,
        iterations_used: iters,
    })
}

/// Out-of-the-box in-sample probabilities, clamped away from 0 and 1.
pub fn predict_proba(model: &LogisticModel, d: &Dataset) -> Result<ProbEstimates> {
    if d.m() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            got: d.m(),
        });
    }
    let g = (0..d.n()).map(|i| model.predict_one(d.row(i))).collect();
    Ok(ProbEstimates {
        g,
        fold_of: vec![0; d.n()],
    })
}
