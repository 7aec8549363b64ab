//! Core immutable types: datasets with observed (possibly corrupted) labels,
//! noise-rate bundles, and out-of-sample probability vectors.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard below which `1 - rho1 - rho0` is treated as zero.
const DENOM_GUARD: f64 = 1e-6;
/// Upper clamp for derived inverse noise rates.
const RATE_CLAMP_MAX: f64 = 0.9999;

/// A feature matrix with observed binary labels `s`, optionally carrying
/// hidden true labels `y` for benchmarking. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n * m
    n: usize,
    m: usize,
    observed: Vec<u8>,
    hidden: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        m: usize,
        observed: Vec<u8>,
        hidden: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = observed.len();
        if n > 0 && m == 0 {
            return Err(Error::Parse(
                "feature width must be >= 1 for non-empty data".into(),
            ));
        }
        if features.len() != n * m {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: n * m,
            });
        }
        if let Some(l) = observed.iter().find(|&&l| l > 1) {
            return Err(Error::Parse(format!("label {l} is not 0/1")));
        }
        if let Some(y) = &hidden {
            if y.len() != n {
                return Err(Error::LengthMismatch {
                    left: y.len(),
                    right: n,
                });
            }
            if let Some(l) = y.iter().find(|&&l| l > 1) {
                return Err(Error::Parse(format!("hidden label {l} is not 0/1")));
            }
        }
        Ok(Dataset {
            features,
            n,
            m,
            observed,
            hidden,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.m..(i + 1) * self.m]
    }

    pub fn observed_labels(&self) -> &[u8] {
        &self.observed
    }

    pub fn hidden_labels(&self) -> Option<&[u8]> {
        self.hidden.as_deref()
    }

    /// Fraction of observed labels that are positive.
    pub fn p_s1(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.observed.iter().filter(|&&s| s == 1).count() as f64 / self.n as f64
    }

    /// Row subset as a new dataset (labels follow the rows).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.m);
        let mut observed = Vec::with_capacity(indices.len());
        let mut hidden = self
            .hidden
            .as_ref()
            .map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            features.extend_from_slice(self.row(i));
            observed.push(self.observed[i]);
            if let (Some(h), Some(y)) = (hidden.as_mut(), self.hidden.as_ref()) {
                h.push(y[i]);
            }
        }
        Dataset {
            features,
            n: indices.len(),
            m: self.m,
            observed,
            hidden,
        }
    }

    /// Same features, different observed labels.
    pub fn with_observed_labels(&self, labels: Vec<u8>) -> Result<Dataset> {
        Dataset::new(self.features.clone(), self.m, labels, self.hidden.clone())
    }

    /// Reads a dataset from CSV with header `f0,...,f{m-1},s[,y]`.
    /// Labels are parsed strictly as 0/1.
    pub fn from_csv_path(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let s_col = cols
            .iter()
            .position(|&c| c == "s")
            .ok_or_else(|| Error::Parse("missing label column `s`".into()))?;
        let y_col = cols.iter().position(|&c| c == "y");
        let m = s_col;
        for (j, c) in cols.iter().enumerate().take(m) {
            if *c != format!("f{j}") {
                return Err(Error::Parse(format!("expected header f{j}, got {c}")));
            }
        }
        let mut features = Vec::new();
        let mut observed = Vec::new();
        let mut hidden: Vec<u8> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            for j in 0..m {
                let v: f64 = record[j]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad feature value {:?}", &record[j])))?;
                features.push(v);
            }
            observed.push(parse_binary_label(&record[s_col])?);
            if let Some(yc) = y_col {
                hidden.push(parse_binary_label(&record[yc])?);
            }
        }
        Dataset::new(features, m, observed, y_col.map(|_| hidden))
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv_writer(file)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.m).map(|j| format!("f{j}")).collect();
        header.push("s".into());
        if self.hidden.is_some() {
            header.push("y".into());
        }
        wtr.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format_float(*v)).collect();
            rec.push(self.observed[i].to_string());
            if let Some(y) = &self.hidden {
                rec.push(y[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn parse_binary_label(field: &str) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Parse(format!("label {other:?} is not 0/1"))),
    }
}

/// Floats are written with 9 significant digits.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:.8e}")
}

/// The noise-rate quadruple plus class priors.
///
/// `rho1 = P(s=0|y=1)`, `rho0 = P(s=1|y=0)`, `pi1 = P(y=0|s=1)`,
/// `pi0 = P(y=1|s=0)`; `p_s1` and `p_y1` are the observed and true
/// positive fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRates {
    pub rho1: f64,
    pub rho0: f64,
    pub pi1: f64,
    pub pi0: f64,
    pub p_s1: f64,
    pub p_y1: f64,
    /// Set when a derived rate fell outside [0, 1) and was clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl NoiseRates {
    /// Builds a bundle from a complete, already-consistent quadruple,
    /// e.g. realized flip fractions. Verifies the inversion identities.
    pub fn new(rho1: f64, rho0: f64, pi1: f64, pi0: f64, p_s1: f64, p_y1: f64) -> Result<Self> {
        validate_rho_pair(rho1, rho0)?;
        validate_prior(p_s1)?;
        validate_prior(p_y1)?;
        for (name, v) in [("pi1", pi1), ("pi0", pi0)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidRates(format!("{name}={v} outside [0,1)")));
            }
        }
        let pi1_check = rho0 * (1.0 - p_y1) / p_s1;
        let pi0_check = rho1 * p_y1 / (1.0 - p_s1);
        if (pi1 - pi1_check).abs() > 1e-9 || (pi0 - pi0_check).abs() > 1e-9 {
            return Err(Error::InvalidRates(format!(
                "inconsistent rates: pi1={pi1} vs {pi1_check}, pi0={pi0} vs {pi0_check}"
            )));
        }
        Ok(NoiseRates {
            rho1,
            rho0,
            pi1,
            pi0,
            p_s1,
            p_y1,
            clamped: false,
        })
    }
}

fn validate_rho_pair(rho1: f64, rho0: f64) -> Result<()> {
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
    Ok(())
}

fn validate_prior(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidRates(format!("prior {p} outside (0,1)")));
    }
    Ok(())
}

/// Derives the inverse rates and true prior from `(rho1, rho0, p_s1)`:
///
/// `pi1 = (rho0/p_s1) * (1 - p_s1 - rho1) / (1 - rho1 - rho0)` and the
/// `pi0` analogue. Derived values falling outside [0, 1) are clamped
/// into range and flagged; this happens when estimated rates are
/// incompatible with the observed label balance.
pub fn complete_rates(rho1: f64, rho0: f64, p_s1: f64) -> Result<NoiseRates> {
    validate_rho_pair(rho1, rho0)?;
    validate_prior(p_s1)?;
    let denom = 1.0 - rho1 - rho0;
    if denom <= DENOM_GUARD {
        return Err(Error::InvalidRates(format!(
            "1-rho1-rho0={denom} too close to zero"
        )));
    }
    let mut clamped = false;
    let mut clamp = |v: f64| -> f64 {
        if (0.0..=RATE_CLAMP_MAX).contains(&v) {
            v
        } else {
            clamped = true;
            v.clamp(0.0, RATE_CLAMP_MAX)
        }
    };
    let pi1 = clamp(rho0 / p_s1 * (1.0 - p_s1 - rho1) / denom);
    let pi0 = clamp(rho1 / (1.0 - p_s1) * (p_s1 - rho0) / denom);
    let p_y1 = clamp((p_s1 - rho0) / denom).max(DENOM_GUARD);
    Ok(NoiseRates {
        rho1,
        rho0,
        pi1,
        pi0,
        p_s1,
        p_y1,
        clamped,
    })
}

/// Per-example out-of-sample probabilities `g(x) = P(s-hat = 1 | x)`,
/// each produced by a model that never saw the example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimates {
    pub g: Vec<f64>,
    pub fold_of: Vec<usize>,
}

impl ProbEstimates {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// Class-mean probability thresholds used for confident counting:
/// `lb_y1` is the mean g over observed positives, `ub_y0` over negatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lb_y1: f64,
    pub ub_y0: f64,
}

/// Splits indices by observed label: returns (positives, negatives).
pub fn split_by_observed_label(d: &Dataset) -> (Vec<usize>, Vec<usize>) {
    split_labels(d.observed_labels())
}

/// Same split, directly on a label slice.
pub fn split_labels(s: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &l) in s.iter().enumerate() {
        if l == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (pos, neg)
}
