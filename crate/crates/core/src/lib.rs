//! Noise-robust binary classification with asymmetrically mislabeled
//! training data.
//!
//! The pipeline estimates the per-class label-noise rates from
//! cross-validated predicted probabilities, prunes the least-confident
//! examples in each observed class by rank, and refits the classifier
//! with a class-conditionally reweighted loss. A synthetic Gaussian
//! benchmark harness and an MNIST IDX loader support end-to-end
//! evaluation.
//!
//! ```
//! use rankprune::logreg::FitConfig;
//! use rankprune::prune::rank_prune_fit;
//! use rankprune::synth::{corrupt, generate, SynthConfig};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let sample = generate(&SynthConfig { n: 400, ..Default::default() }, &mut rng).unwrap();
//! let y = sample.dataset.hidden_labels().unwrap().to_vec();
//! let corrupted = corrupt(&y, 0.3, 0.1, &mut rng).unwrap();
//! let train = sample.dataset.with_observed_labels(corrupted.s).unwrap();
//!
//! let out = rank_prune_fit(&train, &FitConfig::default(), 3, 0, None).unwrap();
//! assert!(out.rates.rho1 < 0.5);
//! ```

pub mod crossval;
pub mod data;
pub mod error;
pub mod estimate;
pub mod logreg;
pub mod mnist;
pub mod prune;
pub mod sweep;
pub mod synth;

pub use data::{
    complete_rates, split_by_observed_label, Dataset, NoiseRates, ProbEstimates, Thresholds,
};
pub use error::{Error, Result};
pub use logreg::{FitConfig, LogisticModel};
pub use prune::{estimate_noise, prune, rank_prune_fit, PruneResult};
