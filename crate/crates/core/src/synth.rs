//! Synthetic Gaussian benchmark machinery: dataset generation,
//! class-conditional label corruption, uniform added-noise injection,
//! the two-valued oracle probability, and evaluation metrics.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::{complete_rates, Dataset, NoiseRates, ProbEstimates};
use crate::error::{Error, Result};

/// Positive-class variance of the generator (negatives use unit variance).
pub const POS_VARIANCE: f64 = 0.8;
/// Half-width of the uniform box that added-noise features are drawn from.
pub const NOISE_BOX: f64 = 10.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Separability: positives center at (d, d, ..., d).
    pub d: f64,
    pub dim: usize,
    pub n: usize,
    pub p_y1: f64,
    /// Fraction of n replaced by uniform-box examples with random labels.
    pub noise_frac: f64,
    /// Target noise pair; converted to (rho1, rho0) via the known p_y1.
    pub pi1: f64,
    pub rho1: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            d: 4.0,
            dim: 2,
            n: 5000,
            p_y1: 0.2,
            noise_frac: 0.0,
            pi1: 0.0,
            rho1: 0.0,
            trials: 200,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_y1 > 0.0 && self.p_y1 < 1.0) {
            return Err(Error::InfeasibleConfig(format!(
                "p_y1={} outside (0,1)",
                self.p_y1
            )));
        }
        if !(0.0..1.0).contains(&self.noise_frac) {
            return Err(Error::InfeasibleConfig(format!(
                "noise_frac={} outside [0,1)",
                self.noise_frac
            )));
        }
        if self.dim == 0 {
            return Err(Error::InfeasibleConfig("dim must be >= 1".into()));
        }
        // The pair must admit a valid rho0.
        rates_from_target_pair(self.pi1, self.rho1, self.p_y1)?;
        Ok(())
    }
}

/// Converts the (pi1, rho1) experiment axis to a full rate bundle using
/// the known generator prior: p_s1 = p_y1 (1-rho1) / (1-pi1) and
/// rho0 = pi1 p_s1 / (1-p_y1).
pub fn rates_from_target_pair(pi1: f64, rho1: f64, p_y1: f64) -> Result<NoiseRates> {
    if !(0.0..1.0).contains(&pi1) || !(0.0..1.0).contains(&rho1) {
        return Err(Error::InfeasibleConfig(format!(
            "(pi1={pi1}, rho1={rho1}) outside [0,1)"
        )));
    }
    let p_s1 = p_y1 * (1.0 - rho1) / (1.0 - pi1);
    if !(p_s1 > 0.0 && p_s1 < 1.0) {
        return Err(Error::InfeasibleConfig(format!(
            "implied p_s1={p_s1} outside (0,1)"
        )));
    }
    let rho0 = pi1 * p_s1 / (1.0 - p_y1);
    if rho1 + rho0 >= 1.0 {
        return Err(Error::InfeasibleConfig(format!(
            "(pi1={pi1}, rho1={rho1}) implies rho0={rho0} with rho1+rho0 >= 1"
        )));
    }
    complete_rates(rho1, rho0, p_s1).map_err(|e| Error::InfeasibleConfig(e.to_string()))
}

/// A generated sample: the dataset carries the true labels both as
/// observed and hidden; `noise_origin[i]` flags examples drawn from the
/// third (uniform) distribution, which are excluded from p_y1 bookkeeping.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub dataset: Dataset,
    pub noise_origin: Vec<bool>,
}

/// Draws n examples: labels Bernoulli(p_y1), negatives from N(0, I),
/// positives from N(d*1, 0.8 I); then replaces floor(noise_frac * n)
/// examples with uniform-box features and uniformly random labels.
pub fn generate(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<SynthSample> {
    cfg.validate()?;
    let m = cfg.dim;
    let pos = Normal::new(cfg.d, POS_VARIANCE.sqrt()).expect("valid normal");
    let neg = Normal::new(0.0, 1.0).expect("valid normal");
    let mut features = Vec::with_capacity(cfg.n * m);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let y = u8::from(rng.random_bool(cfg.p_y1));
        let dist = if y == 1 { &pos } else { &neg };
        for _ in 0..m {
            features.push(dist.sample(rng));
        }
        labels.push(y);
    }
    let mut noise_origin = vec![false; cfg.n];
    let n_noise = (cfg.noise_frac * cfg.n as f64).floor() as usize;
    if n_noise > 0 {
        let mut idx: Vec<usize> = (0..cfg.n).collect();
        idx.partial_shuffle(rng, n_noise);
        for &i in idx.iter().take(n_noise) {
            for j in 0..m {
                features[i * m + j] = rng.random_range(-NOISE_BOX..NOISE_BOX);
            }
            labels[i] = u8::from(rng.random_bool(0.5));
            noise_origin[i] = true;
        }
    }
    let dataset = Dataset::new(features, m, labels.clone(), Some(labels))?;
    Ok(SynthSample {
        dataset,
        noise_origin,
    })
}

/// Labels after class-conditional flipping, with the realized flip counts.
#[derive(Debug, Clone)]
pub struct CorruptResult {
    pub s: Vec<u8>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub flipped_pos: usize,
    pub flipped_neg: usize,
}

impl CorruptResult {
    pub fn realized_rho1(&self) -> f64 {
        if self.n_pos == 0 {
            0.0
        } else {
            self.flipped_pos as f64 / self.n_pos as f64
        }
    }

    pub fn realized_rho0(&self) -> f64 {
        if self.n_neg == 0 {
            0.0
        } else {
            self.flipped_neg as f64 / self.n_neg as f64
        }
    }

    /// The exact rate bundle realized by this draw (ratios of integer
    /// counts), as used by the exactness theorems.
    pub fn realized_rates(&self) -> Result<NoiseRates> {
        let n = (self.n_pos + self.n_neg) as f64;
        let n_s1 = self.n_pos - self.flipped_pos + self.flipped_neg;
        let n_s0 = self.n_neg - self.flipped_neg + self.flipped_pos;
        NoiseRates::new(
            self.realized_rho1(),
            self.realized_rho0(),
            self.flipped_neg as f64 / n_s1 as f64,
            self.flipped_pos as f64 / n_s0 as f64,
            n_s1 as f64 / n,
            self.n_pos as f64 / n,
        )
    }
}

/// Flips each positive label with probability rho1 and each negative
/// with probability rho0, independently.
pub fn corrupt(y: &[u8], rho1: f64, rho0: f64, rng: &mut ChaCha8Rng) -> Result<CorruptResult> {
    for (name, v) in [("rho1", rho1), ("rho0", rho0)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidRates(format!("{name}={v} outside [0,1)")));
        }
    }
    if rho1 + rho0 >= 1.0 {
        return Err(Error::InvalidRates(format!(
            "rho1+rho0={} must be < 1",
            rho1 + rho0
        )));
    }
    let mut out = CorruptResult {
        s: Vec::with_capacity(y.len()),
        n_pos: 0,
        n_neg: 0,
        flipped_pos: 0,
        flipped_neg: 0,
    };
    for &yi in y {
        let (rate, count, flips) = if yi == 1 {
            (rho1, &mut out.n_pos, &mut out.flipped_pos)
        } else {
            (rho0, &mut out.n_neg, &mut out.flipped_neg)
        };
        *count += 1;
        let flip = rate > 0.0 && rng.random_bool(rate);
        if flip {
            *flips += 1;
            out.s.push(1 - yi);
        } else {
            out.s.push(yi);
        }
    }
    Ok(out)
}

/// The two-valued oracle probability: g = 1-rho1 on true positives,
/// rho0 on true negatives. Requires hidden labels.
pub fn ideal_g(d: &Dataset, rho1: f64, rho0: f64) -> Result<ProbEstimates> {
    let y = d.hidden_labels().ok_or(Error::MissingHiddenLabels)?;
    let g = y
        .iter()
        .map(|&yi| if yi == 1 { 1.0 - rho1 } else { rho0 })
        .collect();
    Ok(ProbEstimates {
        g,
        fold_of: vec![0; d.n()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub f1: f64,
    pub error: f64,
    pub auc_pr: Option<f64>,
}

/// F1, misclassification error, and (when scores are given) the area
/// under the precision-recall curve by step integration.
pub fn evaluate(pred: &[u8], scores: Option<&[f64]>, truth: &[u8]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if let Some(sc) = scores {
        if sc.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: sc.len(),
                right: truth.len(),
            });
        }
    }
    let n = truth.len();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut wrong = 0usize;
    for i in 0..n {
        match (pred[i], truth[i]) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
        if pred[i] != truth[i] {
            wrong += 1;
        }
    }
    let f1 = if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    let error = if n == 0 { 0.0 } else { wrong as f64 / n as f64 };
    let auc_pr = scores.and_then(|sc| auc_pr(sc, truth));
    Ok(Metrics { f1, error, auc_pr })
}

/// Average precision: sum of precision-at-threshold weighted by recall
/// increments, scanning scores in descending order with ties grouped.
fn auc_pr(scores: &[f64], truth: &[u8]) -> Option<f64> {
    let total_pos = truth.iter().filter(|&&y| y == 1).count();
    if total_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        // Process a tie group at once.
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if truth[order[j]] == 1 {
                tp += 1;
            }
            seen += 1;
            j += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / seen as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Some(area)
}
