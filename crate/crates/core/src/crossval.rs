//! Out-of-sample probability estimation via k-fold cross-validation.
//! Every g_i is produced by a model that never saw example i.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, ProbEstimates};
use crate::error::{Error, Result};
use crate::logreg::{self, FitConfig};

#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub stratified: bool,
    pub seed: u64,
}

/// Deterministic fold assignment. Stratified plans keep per-fold label
/// counts within one example of each other; if either class has fewer
/// than k members the plan falls back to unstratified (recorded in the
/// returned plan's `stratified` flag).
pub fn make_folds(
    d: &Dataset,
    labels: &[u8],
    k: usize,
    stratified: bool,
    seed: u64,
) -> Result<FoldPlan> {
    let n = d.n();
    if k < 2 {
        return Err(Error::InfeasibleConfig(format!(
            "fold count k={k} must be >= 2"
        )));
    }
    if n < k {
        return Err(Error::TooFewExamples { n, k });
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    let do_stratify = stratified && n_pos >= k && n_neg >= k;

    let mut assignment = vec![0usize; n];
    if do_stratify {
        for class in [1u8, 0u8] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut rng);
            for (pos, &i) in idx.iter().enumerate() {
                assignment[i] = pos % k;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        stratified: do_stratify,
        seed,
    })
}

/// For each fold, fits on the complement and predicts on the fold.
/// If a training split ends up single-class and the plan was not
/// stratified, retries once with stratification forced.
pub fn cv_predict_proba(
    d: &Dataset,
    labels: &[u8],
    plan: &FoldPlan,
    cfg: &FitConfig,
) -> Result<ProbEstimates> {
    match run_folds(d, labels, plan, cfg) {
        Err(Error::SingleClassInput) if !plan.stratified => {
            let retry = make_folds(d, labels, plan.k, true, plan.seed)?;
            if !retry.stratified {
                return Err(Error::SingleClassInput);
            }
            run_folds(d, labels, &retry, cfg)
        }
        other => other,
    }
}

fn run_folds(
    d: &Dataset,
    labels: &[u8],
    plan: &FoldPlan,
    cfg: &FitConfig,
) -> Result<ProbEstimates> {
    let n = d.n();
    if plan.assignment.len() != n {
        return Err(Error::LengthMismatch {
            left: plan.assignment.len(),
            right: n,
        });
    }
    let mut g = vec![0.0; n];
    for fold in 0..plan.k {
        let train_idx: Vec<usize> = (0..n).filter(|&i| plan.assignment[i] != fold).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| plan.assignment[i] == fold).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train = d.subset(&train_idx);
        let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = logreg::fit(&train, &train_labels, None, cfg)?;
        for &i in &test_idx {
            g[i] = model.predict_one(d.row(i));
        }
    }
    Ok(ProbEstimates {
        g,
        fold_of: plan.assignment.clone(),
    })
}
