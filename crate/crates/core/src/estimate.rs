//! Confident-counts noise-rate estimation, plus the closed-form
//! theoretical estimators used to validate it when the probability
//! estimate is imperfect or the class supports overlap.

use serde::{Deserialize, Serialize};

use crate::data::{complete_rates, ProbEstimates, Thresholds};
use crate::error::{Error, Result};

/// Sizes of the four confident sets. The counts need not sum to n:
/// examples between the two thresholds belong to no set, examples at
/// a collapsed threshold may belong to two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidentCounts {
    /// s=1 with g >= lb_y1
    pub n_py1: usize,
    /// s=0 with g >= lb_y1
    pub n_ny1: usize,
    /// s=1 with g <= ub_y0
    pub n_py0: usize,
    /// s=0 with g <= ub_y0
    pub n_ny0: usize,
}

/// Inputs for the closed-form estimators: true rates, hidden set sizes,
/// deviation-set counts, support overlap, and mean probability deviation
/// over each observed class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub rho1: f64,
    pub rho0: f64,
    /// |P|, |N|: hidden positive / negative set sizes.
    pub size_p: usize,
    pub size_n: usize,
    /// Hidden positives with g below lb_y1.
    pub dev_p1: usize,
    /// Hidden negatives with g at or above lb_y1.
    pub dev_n1: usize,
    /// Hidden positives with g at or below ub_y0.
    pub dev_p0: usize,
    /// Hidden negatives with g above ub_y0.
    pub dev_n0: usize,
    /// Fraction of examples whose class supports overlap.
    pub delta_p_overlap: f64,
    /// Mean of g - g* over observed positives / negatives.
    pub mean_dg_pos: f64,
    pub mean_dg_neg: f64,
    pub p_s1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryRates {
    pub rho1_thry: f64,
    pub rho0_thry: f64,
    pub lb_thry: f64,
    pub ub_thry: f64,
}

/// Class-mean thresholds: lb_y1 = mean g over s=1, ub_y0 = mean over s=0.
pub fn thresholds(g: &ProbEstimates, s: &[u8]) -> Result<Thresholds> {
    if g.len() != s.len() {
        return Err(Error::LengthMismatch {
            left: g.len(),
            right: s.len(),
        });
    }
    let mut sum = [0.0f64; 2];
    let mut count = [0usize; 2];
    for (gi, &si) in g.g.iter().zip(s) {
        sum[si as usize] += gi;
        count[si as usize] += 1;
    }
    if count[1] == 0 {
        return Err(Error::EmptyClass(1));
    }
    if count[0] == 0 {
        return Err(Error::EmptyClass(0));
    }
    Ok(Thresholds {
        lb_y1: sum[1] / count[1] as f64,
        ub_y0: sum[0] / count[0] as f64,
    })
}

/// Counts the four confident sets. Comparisons are inclusive: >= for
/// the lower bound, <= for the upper bound.
pub fn confident_counts(g: &ProbEstimates, s: &[u8], t: &Thresholds) -> ConfidentCounts {
    let mut c = ConfidentCounts {
        n_py1: 0,
        n_ny1: 0,
        n_py0: 0,
        n_ny0: 0,
    };
    for (gi, &si) in g.g.iter().zip(s) {
        if *gi >= t.lb_y1 {
            if si == 1 {
                c.n_py1 += 1;
            } else {
                c.n_ny1 += 1;
            }
        }
        if *gi <= t.ub_y0 {
            if si == 1 {
                c.n_py0 += 1;
            } else {
                c.n_ny0 += 1;
            }
        }
    }
    c
}

/// The confident-counts estimators:
/// rho1_hat = n_ny1 / (n_ny1 + n_py1), rho0_hat = n_py0 / (n_py0 + n_ny0).
/// Estimates are reported raw; clamping happens only when rates are
/// completed downstream.
pub fn estimate_rates(counts: &ConfidentCounts) -> Result<(f64, f64)> {
    let denom1 = counts.n_ny1 + counts.n_py1;
    let denom0 = counts.n_py0 + counts.n_ny0;
    if denom1 == 0 {
        return Err(Error::DegenerateCounts("no confident y=1 examples".into()));
    }
    if denom0 == 0 {
        return Err(Error::DegenerateCounts("no confident y=0 examples".into()));
    }
    Ok((
        counts.n_ny1 as f64 / denom1 as f64,
        counts.n_py0 as f64 / denom0 as f64,
    ))
}

/// Closed-form estimators for imperfect g and overlapping support:
///
/// rho1_thry = rho1 + (1-rho1-rho0) |dN1| / (|P| - |dP1| + |dN1|)
/// rho0_thry = rho0 + (1-rho1-rho0) |dP0| / (|N| - |dN0| + |dP0|)
/// lb_thry   = LB*  + E_P~[dg] - (1-rho1-rho0)^2 dp_o / p_s1
/// ub_thry   = UB*  + E_N~[dg] + (1-rho1-rho0)^2 dp_o / (1-p_s1)
pub fn theoretical_rates(t: &TheoryInputs) -> Result<TheoryRates> {
    let denom1 = t.size_p as i64 - t.dev_p1 as i64 + t.dev_n1 as i64;
    let denom0 = t.size_n as i64 - t.dev_n0 as i64 + t.dev_p0 as i64;
    if denom1 <= 0 {
        return Err(Error::DegenerateCounts(format!(
            "|P|-|dP1|+|dN1| = {denom1}"
        )));
    }
    if denom0 <= 0 {
        return Err(Error::DegenerateCounts(format!(
            "|N|-|dN0|+|dP0| = {denom0}"
        )));
    }
    let keep = 1.0 - t.rho1 - t.rho0;
    let rho1_thry = t.rho1 + keep * t.dev_n1 as f64 / denom1 as f64;
    let rho0_thry = t.rho0 + keep * t.dev_p0 as f64 / denom0 as f64;

    let nr = complete_rates(t.rho1, t.rho0, t.p_s1)?;
    let lb_star = (1.0 - t.rho1) * (1.0 - nr.pi1) + t.rho0 * nr.pi1;
    let ub_star = (1.0 - t.rho1) * nr.pi0 + t.rho0 * (1.0 - nr.pi0);
    let lb_thry = lb_star + t.mean_dg_pos - keep * keep * t.delta_p_overlap / t.p_s1;
    let ub_thry = ub_star + t.mean_dg_neg + keep * keep * t.delta_p_overlap / (1.0 - t.p_s1);
    Ok(TheoryRates {
        rho1_thry,
        rho0_thry,
        lb_thry,
        ub_thry,
    })
}

impl TheoryInputs {
    /// Builds the inputs from a benchmark sample where the hidden labels
    /// and the perfect probability g* are known.
    #[allow(clippy::too_many_arguments)]
    pub fn from_sample(
        g: &ProbEstimates,
        g_star: &[f64],
        s: &[u8],
        y: &[u8],
        t: &Thresholds,
        rho1: f64,
        rho0: f64,
        delta_p_overlap: f64,
    ) -> Result<TheoryInputs> {
        let n = g.len();
        if g_star.len() != n || s.len() != n || y.len() != n {
            return Err(Error::LengthMismatch {
                left: g_star.len(),
                right: n,
            });
        }
        let mut inputs = TheoryInputs {
            rho1,
            rho0,
            size_p: 0,
            size_n: 0,
            dev_p1: 0,
            dev_n1: 0,
            dev_p0: 0,
            dev_n0: 0,
            delta_p_overlap,
            mean_dg_pos: 0.0,
            mean_dg_neg: 0.0,
            p_s1: 0.0,
        };
        let mut dg_sum = [0.0f64; 2];
        let mut s_count = [0usize; 2];
        for i in 0..n {
            let gi = g.g[i];
            dg_sum[s[i] as usize] += gi - g_star[i];
            s_count[s[i] as usize] += 1;
            if y[i] == 1 {
                inputs.size_p += 1;
                if gi < t.lb_y1 {
                    inputs.dev_p1 += 1;
                }
                if gi <= t.ub_y0 {
                    inputs.dev_p0 += 1;
                }
            } else {
                inputs.size_n += 1;
                if gi >= t.lb_y1 {
                    inputs.dev_n1 += 1;
                }
                if gi > t.ub_y0 {
                    inputs.dev_n0 += 1;
                }
            }
        }
        if s_count[0] == 0 || s_count[1] == 0 {
            return Err(Error::EmptyClass(if s_count[1] == 0 { 1 } else { 0 }));
        }
        inputs.mean_dg_pos = dg_sum[1] / s_count[1] as f64;
        inputs.mean_dg_neg = dg_sum[0] / s_count[0] as f64;
        inputs.p_s1 = s_count[1] as f64 / n as f64;
        Ok(inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_example() -> (ProbEstimates, Vec<u8>) {
        let g = ProbEstimates {
            g: vec![0.9, 0.85, 0.2, 0.8, 0.15, 0.1],
            fold_of: vec![0; 6],
        };
        (g, vec![1, 1, 1, 0, 0, 0])
    }

    #[test]
    fn thresholds_hand_worked() {
        let (g, s) = six_example();
        let t = thresholds(&g, &s).unwrap();
        assert!((t.lb_y1 - 0.65).abs() < 1e-12);
        assert!((t.ub_y0 - 0.35).abs() < 1e-12);
    }

    #[test]
    fn thresholds_zero_noise_ideal() {
        let g = ProbEstimates {
            g: vec![1.0, 1.0, 0.0, 0.0],
            fold_of: vec![0; 4],
        };
        let s = vec![1, 1, 0, 0];
        let t = thresholds(&g, &s).unwrap();
        assert_eq!(t.lb_y1, 1.0);
        assert_eq!(t.ub_y0, 0.0);
    }

    #[test]
    fn thresholds_empty_class() {
        let g = ProbEstimates {
            g: vec![0.5, 0.5],
            fold_of: vec![0; 2],
        };
        assert!(matches!(thresholds(&g, &[1, 1]), Err(Error::EmptyClass(0))));
        assert!(matches!(thresholds(&g, &[0, 0]), Err(Error::EmptyClass(1))));
    }

    #[test]
    fn ideal_thresholds_match_interpolation_identities() {
        // Exact composition: |P~| = 10 with 2 mislabeled negatives,
        // |N~| = 20 with 6 mislabeled positives; two-valued oracle g.
        let rho1 = 0.3;
        let rho0 = 0.1;
        let mut g = Vec::new();
        let mut s = Vec::new();
        for _ in 0..8 {
            g.push(1.0 - rho1);
            s.push(1u8);
        } // s=1, y=1
        for _ in 0..2 {
            g.push(rho0);
            s.push(1u8);
        } // s=1, y=0
        for _ in 0..6 {
            g.push(1.0 - rho1);
            s.push(0u8);
        } // s=0, y=1
        for _ in 0..14 {
            g.push(rho0);
            s.push(0u8);
        } // s=0, y=0
        let pi1 = 2.0 / 10.0;
        let pi0 = 6.0 / 20.0;
        let g = ProbEstimates {
            fold_of: vec![0; g.len()],
            g,
        };
        let t = thresholds(&g, &s).unwrap();
        let lb_expect = (1.0 - rho1) * (1.0 - pi1) + rho0 * pi1;
        let ub_expect = (1.0 - rho1) * pi0 + rho0 * (1.0 - pi0);
        assert!((t.lb_y1 - lb_expect).abs() < 1e-9);
        assert!((t.ub_y0 - ub_expect).abs() < 1e-9);
        // Interpolation bounds from the noise-rate ordering.
        assert!(rho0 < t.lb_y1 && t.lb_y1 <= 1.0 - rho1);
        assert!(rho0 <= t.ub_y0 && t.ub_y0 < 1.0 - rho1);
    }

    #[test]
    fn counts_hand_worked() {
        let (g, s) = six_example();
        let t = thresholds(&g, &s).unwrap();
        let c = confident_counts(&g, &s, &t);
        assert_eq!(
            c,
            ConfidentCounts {
                n_py1: 2,
                n_ny1: 1,
                n_py0: 1,
                n_ny0: 2
            }
        );
        let (r1, r0) = estimate_rates(&c).unwrap();
        assert!((r1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((r0 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_g_lands_in_both_sets() {
        let g = ProbEstimates {
            g: vec![0.4; 5],
            fold_of: vec![0; 5],
        };
        let s = vec![1, 1, 0, 0, 0];
        let t = thresholds(&g, &s).unwrap();
        let c = confident_counts(&g, &s, &t);
        assert_eq!(
            c,
            ConfidentCounts {
                n_py1: 2,
                n_ny1: 3,
                n_py0: 2,
                n_ny0: 3
            }
        );
    }

    #[test]
    fn zero_noise_counts() {
        let g = ProbEstimates {
            g: vec![1.0, 1.0, 0.0, 0.0],
            fold_of: vec![0; 4],
        };
        let s = vec![1, 1, 0, 0];
        let t = thresholds(&g, &s).unwrap();
        let c = confident_counts(&g, &s, &t);
        assert_eq!(c.n_ny1, 0);
        assert_eq!(c.n_py0, 0);
        let (r1, r0) = estimate_rates(&c).unwrap();
        assert_eq!((r1, r0), (0.0, 0.0));
    }

    #[test]
    fn degenerate_counts_error() {
        let c = ConfidentCounts {
            n_py1: 0,
            n_ny1: 0,
            n_py0: 1,
            n_ny0: 1,
        };
        assert!(matches!(
            estimate_rates(&c),
            Err(Error::DegenerateCounts(_))
        ));
        let c = ConfidentCounts {
            n_py1: 1,
            n_ny1: 1,
            n_py0: 0,
            n_ny0: 0,
        };
        assert!(matches!(
            estimate_rates(&c),
            Err(Error::DegenerateCounts(_))
        ));
    }

    #[test]
    fn theory_ideal_limit() {
        let t = TheoryInputs {
            rho1: 0.3,
            rho0: 0.1,
            size_p: 100,
            size_n: 200,
            dev_p1: 0,
            dev_n1: 0,
            dev_p0: 0,
            dev_n0: 0,
            delta_p_overlap: 0.0,
            mean_dg_pos: 0.0,
            mean_dg_neg: 0.0,
            p_s1: 0.4,
        };
        let r = theoretical_rates(&t).unwrap();
        assert_eq!(r.rho1_thry, 0.3);
        assert_eq!(r.rho0_thry, 0.1);
        let nr = complete_rates(0.3, 0.1, 0.4).unwrap();
        let lb_star = 0.7 * (1.0 - nr.pi1) + 0.1 * nr.pi1;
        let ub_star = 0.7 * nr.pi0 + 0.1 * (1.0 - nr.pi0);
        assert!((r.lb_thry - lb_star).abs() < 1e-12);
        assert!((r.ub_thry - ub_star).abs() < 1e-12);
    }

    #[test]
    fn theory_hand_worked() {
        let t = TheoryInputs {
            rho1: 0.2,
            rho0: 0.1,
            size_p: 10,
            size_n: 50,
            dev_p1: 2,
            dev_n1: 1,
            dev_p0: 0,
            dev_n0: 0,
            delta_p_overlap: 0.0,
            mean_dg_pos: 0.0,
            mean_dg_neg: 0.0,
            p_s1: 0.25,
        };
        let r = theoretical_rates(&t).unwrap();
        assert!((r.rho1_thry - (0.2 + 0.7 / 9.0)).abs() < 1e-12);
        assert_eq!(r.rho0_thry, 0.1);
    }

    #[test]
    fn theory_upper_bound_bias() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let rho1: f64 = rng.random_range(0.0..0.45);
            let rho0: f64 = rng.random_range(0.0..0.45);
            let size_p = rng.random_range(10..200usize);
            let size_n = rng.random_range(10..200usize);
            let t = TheoryInputs {
                rho1,
                rho0,
                size_p,
                size_n,
                dev_p1: rng.random_range(0..size_p / 2),
                dev_n1: rng.random_range(0..size_n / 2),
                dev_p0: rng.random_range(0..size_p / 2),
                dev_n0: rng.random_range(0..size_n / 2),
                delta_p_overlap: 0.0,
                mean_dg_pos: 0.0,
                mean_dg_neg: 0.0,
                p_s1: rng.random_range(rho0.max(0.05)..(1.0 - rho1).min(0.95)),
            };
            let r = theoretical_rates(&t).unwrap();
            assert!(r.rho1_thry >= rho1);
            assert!(r.rho0_thry >= rho0);
            if t.dev_n1 == 0 {
                assert_eq!(r.rho1_thry, rho1);
            } else {
                assert!(r.rho1_thry > rho1);
            }
            if t.dev_p0 == 0 {
                assert_eq!(r.rho0_thry, rho0);
            } else {
                assert!(r.rho0_thry > rho0);
            }
        }
    }

    #[test]
    fn theory_degenerate_denominator() {
        let t = TheoryInputs {
            rho1: 0.1,
            rho0: 0.1,
            size_p: 5,
            size_n: 5,
            dev_p1: 5,
            dev_n1: 0,
            dev_p0: 0,
            dev_n0: 0,
            delta_p_overlap: 0.0,
            mean_dg_pos: 0.0,
            mean_dg_neg: 0.0,
            p_s1: 0.5,
        };
        assert!(matches!(
            theoretical_rates(&t),
            Err(Error::DegenerateCounts(_))
        ));
    }
}
