//! Multi-trial benchmark sweeps over the synthetic generator, with
//! per-trial and aggregated CSV output.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::format_float;
use crate::error::{Error, Result};
use crate::logreg::{self, FitConfig, LogisticModel};
use crate::prune::rank_prune_fit;
use crate::synth::{corrupt, evaluate, generate, rates_from_target_pair, SynthConfig};

/// Which generator parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Separability,
    Dimension,
    TrainSize,
    NoiseFrac,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Separability => "d",
            Axis::Dimension => "dim",
            Axis::TrainSize => "n",
            Axis::NoiseFrac => "noise_frac",
        }
    }

    pub fn parse(s: &str) -> Result<Axis> {
        match s {
            "d" => Ok(Axis::Separability),
            "dim" => Ok(Axis::Dimension),
            "n" => Ok(Axis::TrainSize),
            "noise_frac" => Ok(Axis::NoiseFrac),
            other => Err(Error::InfeasibleConfig(format!("unknown axis {other:?}"))),
        }
    }

    fn apply(&self, cfg: &mut SynthConfig, value: f64) -> Result<()> {
        match self {
            Axis::Separability => cfg.d = value,
            Axis::Dimension => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InfeasibleConfig(format!(
                        "dim={value} must be a positive integer"
                    )));
                }
                cfg.dim = value as usize;
            }
            Axis::TrainSize => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InfeasibleConfig(format!(
                        "n={value} must be a positive integer"
                    )));
                }
                cfg.n = value as usize;
            }
            Axis::NoiseFrac => {
                if !(0.0..1.0).contains(&value) {
                    return Err(Error::InfeasibleConfig(format!(
                        "noise_frac={value} outside [0,1)"
                    )));
                }
                cfg.noise_frac = value;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Rank pruning given the true noise rates.
    Rp,
    /// Rank pruning with its own noise-rate estimation.
    RpRho,
    /// Plain fit on the corrupted labels.
    Naive,
    /// Fit on the hidden true labels.
    Truth,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rp, Method::RpRho, Method::Naive, Method::Truth];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rp => "RP",
            Method::RpRho => "RP_rho",
            Method::Naive => "naive",
            Method::Truth => "truth",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "RP" => Ok(Method::Rp),
            "RP_rho" => Ok(Method::RpRho),
            "naive" => Ok(Method::Naive),
            "truth" => Ok(Method::Truth),
            other => Err(Error::InfeasibleConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// One benchmark trial for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub axis: String,
    pub axis_value: f64,
    pub pi1: f64,
    pub rho1: f64,
    pub trial: usize,
    pub method: String,
    pub f1: Option<f64>,
    pub error: Option<f64>,
    pub auc_pr: Option<f64>,
    pub rho1_hat: Option<f64>,
    pub rho0_hat: Option<f64>,
    pub pi1_hat: Option<f64>,
    pub pi0_hat: Option<f64>,
    pub seed: u64,
    pub wall_ms: u64,
    pub failure: Option<String>,
}

/// Counter-based seed splitting so trial streams are independent of
/// scheduling order.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut z = master ^ 0x9E3779B97F4A7C15;
    for &p in parts {
        z ^= splitmix64(p.wrapping_add(0xA0761D6478BD642F));
        z = splitmix64(z);
    }
    z
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs every (axis value, pair, trial, method) cell: fresh seeded
/// generation, corruption, independent clean test set, method fit, and
/// metrics against the true test labels. Per-trial failures are
/// recorded, not fatal; infeasible pairs are rejected up front.
pub fn run_sweep(
    axis: Axis,
    values: &[f64],
    pairs: &[(f64, f64)],
    cfg: &SynthConfig,
    methods: &[Method],
    fit_cfg: &FitConfig,
    cv_k: usize,
) -> Result<Vec<ExperimentRecord>> {
    if values.is_empty() {
        return Err(Error::InfeasibleConfig("empty axis values list".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InfeasibleConfig(
            "empty (pi1, rho1) pairs list".into(),
        ));
    }
    // Reject infeasible pairs before any work.
    for &(pi1, rho1) in pairs {
        rates_from_target_pair(pi1, rho1, cfg.p_y1)?;
    }
    let mut records = Vec::new();
    for (vi, &value) in values.iter().enumerate() {
        let mut trial_cfg = *cfg;
        axis.apply(&mut trial_cfg, value)?;
        for (pi, &(pi1, rho1)) in pairs.iter().enumerate() {
            trial_cfg.pi1 = pi1;
            trial_cfg.rho1 = rho1;
            trial_cfg.validate()?;
            for trial in 0..cfg.trials {
                let seed = derive_seed(cfg.seed, &[vi as u64, pi as u64, trial as u64]);
                let cell = run_trial(&trial_cfg, methods, fit_cfg, cv_k, seed);
                for (method, outcome, wall_ms) in cell {
                    let mut rec = ExperimentRecord {
                        axis: axis.name().to_string(),
                        axis_value: value,
                        pi1,
                        rho1,
                        trial,
                        method: method.name().to_string(),
                        f1: None,
                        error: None,
                        auc_pr: None,
                        rho1_hat: None,
                        rho0_hat: None,
                        pi1_hat: None,
                        pi0_hat: None,
                        seed,
                        wall_ms,
                        failure: None,
                    };
                    match outcome {
                        Ok(out) => {
                            rec.f1 = Some(out.f1);
                            rec.error = Some(out.error);
                            rec.auc_pr = out.auc_pr;
                            rec.rho1_hat = out.rates.map(|r| r.0);
                            rec.rho0_hat = out.rates.map(|r| r.1);
                            rec.pi1_hat = out.rates.map(|r| r.2);
                            rec.pi0_hat = out.rates.map(|r| r.3);
                        }
                        Err(e) => rec.failure = Some(e.to_string()),
                    }
                    records.push(rec);
                }
            }
        }
    }
    Ok(records)
}

struct TrialOutcome {
    f1: f64,
    error: f64,
    auc_pr: Option<f64>,
    rates: Option<(f64, f64, f64, f64)>,
}

type CellResults = Vec<(Method, Result<TrialOutcome>, u64)>;

fn run_trial(
    cfg: &SynthConfig,
    methods: &[Method],
    fit_cfg: &FitConfig,
    cv_k: usize,
    seed: u64,
) -> CellResults {
    let mut results = Vec::new();
    let setup = || -> Result<_> {
        let mut rng_train = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
        let mut rng_corrupt = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
        let mut rng_test = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3]));
        let sample = generate(cfg, &mut rng_train)?;
        let target = rates_from_target_pair(cfg.pi1, cfg.rho1, cfg.p_y1)?;
        let y = sample
            .dataset
            .hidden_labels()
            .expect("generator sets hidden labels")
            .to_vec();
        let corrupted = corrupt(&y, target.rho1, target.rho0, &mut rng_corrupt)?;
        let train = sample.dataset.with_observed_labels(corrupted.s.clone())?;
        let test_cfg = SynthConfig {
            noise_frac: 0.0,
            ..*cfg
        };
        let test = generate(&test_cfg, &mut rng_test)?.dataset;
        Ok((train, y, target, test))
    };
    let (train, y, target, test) = match setup() {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            for &m in methods {
                results.push((m, Err(Error::InfeasibleConfig(msg.clone())), 0));
            }
            return results;
        }
    };
    let test_y = test
        .hidden_labels()
        .expect("generator sets hidden labels")
        .to_vec();

    for &method in methods {
        let start = Instant::now();
        let outcome = (|| -> Result<TrialOutcome> {
            let (model, rates): (LogisticModel, Option<(f64, f64, f64, f64)>) = match method {
                Method::Truth => (logreg::fit(&train, &y, None, fit_cfg)?, None),
                Method::Naive => (
                    logreg::fit(&train, train.observed_labels(), None, fit_cfg)?,
                    None,
                ),
                Method::Rp => {
                    // Given the true CNP rates; inverse rates from the
                    // observed label balance.
                    let given =
                        crate::data::complete_rates(target.rho1, target.rho0, train.p_s1())?;
                    let out = rank_prune_fit(&train, fit_cfg, cv_k, seed, Some(given))?;
                    (
                        out.model,
                        Some((given.rho1, given.rho0, given.pi1, given.pi0)),
                    )
                }
                Method::RpRho => {
                    let out = rank_prune_fit(&train, fit_cfg, cv_k, seed, None)?;
                    let r = out.rates;
                    (out.model, Some((r.rho1, r.rho0, r.pi1, r.pi0)))
                }
            };
            let scores: Vec<f64> = (0..test.n())
                .map(|i| model.predict_one(test.row(i)))
                .collect();
            let pred: Vec<u8> = scores.iter().map(|&p| u8::from(p > 0.5)).collect();
            let metrics = evaluate(&pred, Some(&scores), &test_y)?;
            Ok(TrialOutcome {
                f1: metrics.f1,
                error: metrics.error,
                auc_pr: metrics.auc_pr,
                rates,
            })
        })();
        results.push((method, outcome, start.elapsed().as_millis() as u64));
    }
    results
}

pub const TRIAL_CSV_HEADER: &str =
    "axis,axis_value,pi1,rho1,trial,method,f1,error,auc_pr,rho1_hat,rho0_hat,pi1_hat,pi0_hat,seed";

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Per-trial CSV, one row per trial-method.
pub fn write_trials_csv<W: Write>(records: &[ExperimentRecord], mut w: W) -> Result<()> {
    writeln!(w, "{TRIAL_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            format_float(r.axis_value),
            format_float(r.pi1),
            format_float(r.rho1),
            r.trial,
            r.method,
            opt(r.f1),
            opt(r.error),
            opt(r.auc_pr),
            opt(r.rho1_hat),
            opt(r.rho0_hat),
            opt(r.pi1_hat),
            opt(r.pi0_hat),
            r.seed
        )?;
    }
    Ok(())
}

/// Parses the per-trial CSV back (timing and failure detail are not
/// part of the wire format).
pub fn read_trials_csv<R: std::io::Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad float {s:?}")))
        }
    };
    let parse_f64 = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad float {s:?}")))
    };
    for record in rdr.records() {
        let r = record?;
        out.push(ExperimentRecord {
            axis: r[0].to_string(),
            axis_value: parse_f64(&r[1])?,
            pi1: parse_f64(&r[2])?,
            rho1: parse_f64(&r[3])?,
            trial: r[4]
                .parse()
                .map_err(|_| Error::Parse(format!("bad trial {:?}", &r[4])))?,
            method: r[5].to_string(),
            f1: parse_opt(&r[6])?,
            error: parse_opt(&r[7])?,
            auc_pr: parse_opt(&r[8])?,
            rho1_hat: parse_opt(&r[9])?,
            rho0_hat: parse_opt(&r[10])?,
            pi1_hat: parse_opt(&r[11])?,
            pi0_hat: parse_opt(&r[12])?,
            seed: r[13]
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed {:?}", &r[13])))?,
            wall_ms: 0,
            failure: None,
        });
    }
    Ok(out)
}

/// Aggregated CSV: mean and standard error per (axis value, pair, method).
pub fn write_aggregate_csv<W: Write>(records: &[ExperimentRecord], mut w: W) -> Result<()> {
    writeln!(
        w,
        "axis,axis_value,pi1,rho1,method,trials,failures,f1_mean,f1_se,error_mean,error_se,auc_pr_mean,auc_pr_se"
    )?;
    let mut groups: Vec<(String, f64, f64, f64, String)> = Vec::new();
    for r in records {
        let key = (
            r.axis.clone(),
            r.axis_value,
            r.pi1,
            r.rho1,
            r.method.clone(),
        );
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (axis, value, pi1, rho1, method) in groups {
        let members: Vec<&ExperimentRecord> = records
            .iter()
            .filter(|r| {
                r.axis == axis
                    && r.axis_value == value
                    && r.pi1 == pi1
                    && r.rho1 == rho1
                    && r.method == method
            })
            .collect();
        let failures = members.iter().filter(|r| r.failure.is_some()).count();
        let mean_se = |get: fn(&ExperimentRecord) -> Option<f64>| -> (String, String) {
            let vals: Vec<f64> = members.iter().filter_map(|r| get(r)).collect();
            if vals.is_empty() {
                return (String::new(), String::new());
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(1.0);
            let se = (var / n).sqrt();
            (format_float(mean), format_float(se))
        };
        let (f1m, f1s) = mean_se(|r| r.f1);
        let (em, es) = mean_se(|r| r.error);
        let (am, asd) = mean_se(|r| r.auc_pr);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            axis,
            format_float(value),
            format_float(pi1),
            format_float(rho1),
            method,
            members.len(),
            failures,
            f1m,
            f1s,
            em,
            es,
            am,
            asd
        )?;
    }
    Ok(())
}
