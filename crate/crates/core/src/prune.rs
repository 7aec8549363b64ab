//! Rank-based pruning: remove the pi1-fraction least-confident observed
//! positives and the pi0-fraction most-confident observed negatives,
//! then refit with class-conditionally reweighted loss.

use serde::{Deserialize, Serialize};

use crate::crossval::{cv_predict_proba, make_folds};
use crate::data::{complete_rates, split_labels, Dataset, NoiseRates, ProbEstimates, Thresholds};
use crate::error::{Error, Result};
use crate::estimate::{confident_counts, estimate_rates, thresholds, ConfidentCounts};
use crate::logreg::{self, FitConfig, LogisticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Smallest,
    Largest,
}

/// k-th order statistic (1-based) by quickselect; no full sort.
pub fn select_kth(values: &[f64], k: usize, direction: Direction) -> Result<f64> {
    let len = values.len();
    if k == 0 || k > len {
        return Err(Error::RankOutOfRange { k, len });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("select_kth requires finite values".into()));
    }
    let target = match direction {
        Direction::Smallest => k - 1,
        Direction::Largest => len - k,
    };
    let mut v = values.to_vec();
    Ok(quickselect(&mut v, target))
}

/// In-place quickselect with median-of-three pivots and three-way
/// partitioning (robust to duplicate-heavy inputs).
fn quickselect(v: &mut [f64], mut target: usize) -> f64 {
    let mut lo = 0usize;
    let mut hi = v.len();
    loop {
        if hi - lo <= 1 {
            return v[lo];
        }
        let mid = lo + (hi - lo) / 2;
        let pivot = median3(v[lo], v[mid], v[hi - 1]);
        // Dutch national flag partition of [lo, hi) around pivot.
        let (mut i, mut lt, mut gt) = (lo, lo, hi);
        while i < gt {
            if v[i] < pivot {
                v.swap(i, lt);
                lt += 1;
                i += 1;
            } else if v[i] > pivot {
                gt -= 1;
                v.swap(i, gt);
            } else {
                i += 1;
            }
        }
        let k = lo + target;
        if k < lt {
            hi = lt;
            target = k - lo;
        } else if k < gt {
            return pivot;
        } else {
            target = k - gt;
            lo = gt;
        }
    }
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Retained confident examples plus their loss weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResult {
    /// Sorted indices of X_conf.
    pub kept_indices: Vec<usize>,
    /// One weight per kept index: 1/(1-rho1) for s=1, 1/(1-rho0) for s=0.
    pub weights: Vec<f64>,
    /// Smallest retained g among observed positives.
    pub k1_threshold: f64,
    /// Largest retained g among observed negatives.
    pub k0_threshold: f64,
    pub removed_pos: usize,
    pub removed_neg: usize,
}

/// Removal count floor(pi * size), with a tolerance so that exact
/// integer fractions (e.g. realized rates) do not round down.
fn removal_count(pi: f64, size: usize) -> usize {
    let t = pi * size as f64;
    if (t - t.round()).abs() < 1e-9 {
        t.round() as usize
    } else {
        t.floor() as usize
    }
}

/// Prunes by rank. The cut value k1 is the g of the last retained
/// positive; all positives with g >= k1 are kept, so duplicate g values
/// at the cut may keep more examples than the target count. The
/// reported removal counts are the actual removals.
pub fn prune(g: &ProbEstimates, s: &[u8], rates: &NoiseRates) -> Result<PruneResult> {
    if g.len() != s.len() {
        return Err(Error::LengthMismatch {
            left: g.len(),
            right: s.len(),
        });
    }
    let (pos_idx, neg_idx) = split_labels(s);
    let gp: Vec<f64> = pos_idx.iter().map(|&i| g.g[i]).collect();
    let gn: Vec<f64> = neg_idx.iter().map(|&i| g.g[i]).collect();

    let r1 = removal_count(rates.pi1, gp.len());
    let r0 = removal_count(rates.pi0, gn.len());
    if r1 >= gp.len() {
        return Err(Error::OverPrune {
            remove: r1,
            size: gp.len(),
            label: 1,
        });
    }
    if r0 >= gn.len() {
        return Err(Error::OverPrune {
            remove: r0,
            size: gn.len(),
            label: 0,
        });
    }

    let k1 = select_kth(&gp, r1 + 1, Direction::Smallest)?;
    let k0 = select_kth(&gn, r0 + 1, Direction::Largest)?;

    let w_pos = 1.0 / (1.0 - rates.rho1);
    let w_neg = 1.0 / (1.0 - rates.rho0);
    let mut kept_indices = Vec::with_capacity(g.len());
    let mut weights = Vec::with_capacity(g.len());
    let mut removed_pos = 0;
    let mut removed_neg = 0;
    for (i, (&gi, &si)) in g.g.iter().zip(s).enumerate() {
        if si == 1 {
            if gi >= k1 {
                kept_indices.push(i);
                weights.push(w_pos);
            } else {
                removed_pos += 1;
            }
        } else if gi <= k0 {
            kept_indices.push(i);
            weights.push(w_neg);
        } else {
            removed_neg += 1;
        }
    }
    Ok(PruneResult {
        kept_indices,
        weights,
        k1_threshold: k1,
        k0_threshold: k0,
        removed_pos,
        removed_neg,
    })
}

/// Part 1 of the pipeline: cross-validated g, thresholds, confident
/// counts, and the completed rate bundle.
#[derive(Debug, Clone)]
pub struct NoiseEstimate {
    pub rates: NoiseRates,
    pub thresholds: Thresholds,
    pub counts: ConfidentCounts,
    pub g: ProbEstimates,
}

pub fn estimate_noise(
    d: &Dataset,
    cfg: &FitConfig,
    cv_k: usize,
    seed: u64,
) -> Result<NoiseEstimate> {
    let s = d.observed_labels();
    let plan = make_folds(d, s, cv_k, true, seed)?;
    let g = cv_predict_proba(d, s, &plan, cfg)?;
    let t = thresholds(&g, s)?;
    let counts = confident_counts(&g, s, &t);
    let (rho1, rho0) = estimate_rates(&counts)?;
    let rates = complete_rates(rho1, rho0, d.p_s1())?;
    Ok(NoiseEstimate {
        rates,
        thresholds: t,
        counts,
        g,
    })
}

#[derive(Debug, Clone)]
pub struct RankPruneOutput {
    pub model: LogisticModel,
    pub rates: NoiseRates,
    pub prune: PruneResult,
}

/// The full pipeline: estimate noise rates from cross-validated
/// probabilities (or take them as given), prune by rank, and refit
/// with reweighted loss on the retained examples.
pub fn rank_prune_fit(
    d: &Dataset,
    cfg: &FitConfig,
    cv_k: usize,
    seed: u64,
    rates_override: Option<NoiseRates>,
) -> Result<RankPruneOutput> {
    let s = d.observed_labels();
    let plan = make_folds(d, s, cv_k, true, seed)?;
    let g = cv_predict_proba(d, s, &plan, cfg)?;
    let rates = match rates_override {
        Some(r) => r,
        None => {
            let t = thresholds(&g, s)?;
            let counts = confident_counts(&g, s, &t);
            let (rho1, rho0) = estimate_rates(&counts)?;
            complete_rates(rho1, rho0, d.p_s1())?
        }
    };
    let pruned = prune(&g, s, &rates)?;
    let conf = d.subset(&pruned.kept_indices);
    let conf_labels: Vec<u8> = pruned.kept_indices.iter().map(|&i| s[i]).collect();
    let model = logreg::fit(&conf, &conf_labels, Some(&pruned.weights), cfg)?;
    Ok(RankPruneOutput {
        model,
        rates,
        prune: pruned,
    })
}
