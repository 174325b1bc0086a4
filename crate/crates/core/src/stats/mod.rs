//! Histogram-level hypothesis tests.
//!
//! The two-way likelihood ratio `L` compares "two datasets drawn from two
//! multinomials" against "both drawn from one pooled multinomial", with every
//! multinomial set to its maximum-likelihood estimate. It is available in
//! three algebraically equivalent forms (direct, weighted KL, entropy) which
//! the test-suite holds against each other. Alongside it live the Pearson χ²
//! statistics, the G statistic (`G = 2L` for pooled expectations), the χ²
//! survival probability and the threshold decision rules.
//!
//! All logarithms are natural; `0 · ln 0` is taken as 0 everywhere.

mod gamma;

pub use gamma::{chi2_survival, ln_gamma, regularized_gamma_q};

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "sums to one" checks on probability vectors.
const NORMALIZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("count vector must have at least one bin")]
    Empty,
    #[error("bin {bin}: count {value} is negative or not finite")]
    InvalidCount { bin: usize, value: f64 },
    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("length mismatch: {left} bins vs {right} bins")]
    LengthMismatch { left: usize, right: usize },
    #[error("dataset has no counts")]
    AllZero,
    #[error("bin {bin}: hypothesis gives zero probability to observed data (infinite evidence)")]
    InfiniteEvidence { bin: usize },
    #[error("bin {bin}: expected count is zero where the observed count is positive")]
    ZeroExpected { bin: usize },
    #[error("statistic must be finite and nonnegative, got {0}")]
    InvalidStatistic(f64),
    #[error("gamma shape must be positive and finite, got {0}")]
    InvalidShape(f64),
    #[error("degrees of freedom must be at least 1")]
    InvalidDf,
    #[error("incomplete gamma failed to converge within {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Nonnegative per-bin counts. Counts are real-valued so that smoothed
/// (fractional) counts are admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CountVector {
    counts: Vec<f64>,
    total: f64,
}

impl CountVector {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(StatsError::Empty);
        }
        if let Some((bin, &value)) = counts.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
            return Err(StatsError::InvalidCount { bin, value });
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    /// Histogram of `values` over `bins` bins. Values `>= bins` are rejected.
    pub fn histogram(values: &[usize], bins: usize) -> Result<Self> {
        let mut counts = vec![0.0; bins];
        for &v in values {
            match counts.get_mut(v) {
                Some(c) => *c += 1.0,
                None => return Err(StatsError::LengthMismatch { left: v + 1, right: bins }),
            }
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0.0
    }

    /// Number of bins with a positive count.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0.0).count()
    }

    /// Counts divided by their total.
    pub fn normalized(&self) -> Result<Self> {
        if self.total <= 0.0 {
            return Err(StatsError::AllZero);
        }
        Self::new(self.counts.iter().map(|c| c / self.total).collect())
    }

    pub fn is_normalized(&self) -> bool {
        (self.total - 1.0).abs() <= NORMALIZED_TOL
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.counts.iter().map(|c| c * k).collect())
    }

    /// Writes `bin_index,count` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{i},{}", crate::format_f64(*c))?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for CountVector {
    type Error = StatsError;

    fn try_from(counts: Vec<f64>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<CountVector> for Vec<f64> {
    fn from(v: CountVector) -> Self {
        v.counts
    }
}

/// Which statistic a [`TestResult`] carries, selecting the rejection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    /// Pearson χ²; rejects when `χ² > ν`.
    Chi2,
    /// G statistic; rejects when `G > 2ν`.
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: StatisticKind,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub reject_null: bool,
}

/// `x ln(x / y)`, with `0 ln(0 / y) = 0`.
#[inline]
pub(crate) fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

#[inline]
fn neg_xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

fn check_pair(r: &CountVector, s: &CountVector) -> Result<()> {
    if r.len() != s.len() {
        return Err(StatsError::LengthMismatch { left: r.len(), right: s.len() });
    }
    if r.total() <= 0.0 || s.total() <= 0.0 {
        return Err(StatsError::AllZero);
    }
    Ok(())
}

/// Shannon entropy `−Σ x ln x` of a normalized distribution, in nats.
pub fn entropy(dist: &CountVector) -> Result<f64> {
    if !dist.is_normalized() {
        return Err(StatsError::NotNormalized(dist.total()));
    }
    Ok(dist.counts().iter().map(|&x| neg_xlogx(x)).sum::<f64>().max(0.0))
}

/// Kullback–Leibler divergence `Σ p ln(p / q)` of two normalized distributions.
pub fn kl_divergence(p: &CountVector, q: &CountVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(StatsError::LengthMismatch { left: p.len(), right: q.len() });
    }
    for d in [p, q] {
        if !d.is_normalized() {
            return Err(StatsError::NotNormalized(d.total()));
        }
    }
    let mut acc = 0.0;
    for (bin, (&pi, &qi)) in p.counts().iter().zip(q.counts()).enumerate() {
        if pi > 0.0 && qi == 0.0 {
            return Err(StatsError::InfiniteEvidence { bin });
        }
        acc += xlogx_over_y(pi, qi);
    }
    Ok(acc)
}

/// Two-way log likelihood ratio `L` between datasets `r` and `s`:
///
/// `L = Σ_i R_i ln((R_i/R) / p_i) + Σ_i S_i ln((S_i/S) / p_i)`,
/// with the pooled estimate `p_i = (R_i + S_i) / (R + S)`.
pub fn two_way_likelihood_ratio(r: &CountVector, s: &CountVector) -> Result<f64> {
    check_pair(r, s)?;
    let (rt, st) = (r.total(), s.total());
    let n = rt + st;
    let mut acc = 0.0;
    for (&ri, &si) in r.counts().iter().zip(s.counts()) {
        let pooled = ri + si;
        if pooled == 0.0 {
            continue;
        }
        // (R_i / R) / ((R_i + S_i) / (R + S)) rearranged to keep one division per ratio.
        acc += xlogx_over_y(ri, rt * pooled / n);
        acc += xlogx_over_y(si, st * pooled / n);
    }
    Ok(acc.max(0.0))
}

/// `L` through the entropy identity `−[R·γ_r + S·γ_s − (R+S)·γ_p]`.
pub fn two_way_likelihood_ratio_entropy(r: &CountVector, s: &CountVector) -> Result<f64> {
    check_pair(r, s)?;
    let (rt, st) = (r.total(), s.total());
    let pooled = CountVector::new(r.counts().iter().zip(s.counts()).map(|(a, b)| a + b).collect())?;
    let gamma_r = entropy(&r.normalized()?)?;
    let gamma_s = entropy(&s.normalized()?)?;
    let gamma_p = entropy(&pooled.normalized()?)?;
    Ok(-(rt * gamma_r + st * gamma_s - (rt + st) * gamma_p))
}

/// `L` as the count-weighted divergence of each dataset from the pooled
/// distribution: `R·KL(r‖p) + S·KL(s‖p)`.
pub fn two_way_likelihood_ratio_kl(r: &CountVector, s: &CountVector) -> Result<f64> {
    check_pair(r, s)?;
    let pooled = CountVector::new(r.counts().iter().zip(s.counts()).map(|(a, b)| a + b).collect())?;
    let p = pooled.normalized()?;
    Ok(r.total() * kl_divergence(&r.normalized()?, &p)? + s.total() * kl_divergence(&s.normalized()?, &p)?)
}

/// One-way log likelihood ratio `Σ_i F_i ln(r_i / s_i)` of i.i.d. binned data
/// under hypotheses `h_r` and `h_s`. Positive values favour `h_r`.
pub fn one_way_likelihood_ratio(data: &CountVector, h_r: &CountVector, h_s: &CountVector) -> Result<f64> {
    for h in [h_r, h_s] {
        if h.len() != data.len() {
            return Err(StatsError::LengthMismatch { left: data.len(), right: h.len() });
        }
        if !h.is_normalized() {
            return Err(StatsError::NotNormalized(h.total()));
        }
    }
    let mut acc = 0.0;
    for (bin, ((&f, &r), &s)) in data.counts().iter().zip(h_r.counts()).zip(h_s.counts()).enumerate() {
        if f == 0.0 {
            continue;
        }
        if r == 0.0 || s == 0.0 {
            return Err(StatsError::InfiniteEvidence { bin });
        }
        acc += f * (r / s).ln();
    }
    Ok(acc)
}

/// Expected counts under the pooled null: `E_R(i) = R·(R_i+S_i)/(R+S)` and
/// likewise for `S`.
pub fn expected_counts(r: &CountVector, s: &CountVector) -> Result<(CountVector, CountVector)> {
    check_pair(r, s)?;
    let (rt, st) = (r.total(), s.total());
    let n = rt + st;
    let pooled: Vec<f64> = r.counts().iter().zip(s.counts()).map(|(a, b)| a + b).collect();
    let er = pooled.iter().map(|p| rt * p / n).collect();
    let es = pooled.iter().map(|p| st * p / n).collect();
    Ok((CountVector::new(er)?, CountVector::new(es)?))
}

/// Pearson `Σ (O_i − E_i)² / E_i`, skipping bins where both are zero.
pub fn pearson_chi2(observed: &CountVector, expected: &CountVector) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(StatsError::LengthMismatch { left: observed.len(), right: expected.len() });
    }
    let mut acc = 0.0;
    for (bin, (&o, &e)) in observed.counts().iter().zip(expected.counts()).enumerate() {
        if e == 0.0 {
            if o > 0.0 {
                return Err(StatsError::ZeroExpected { bin });
            }
            continue;
        }
        acc += (o - e) * (o - e) / e;
    }
    Ok(acc)
}

/// Two-column χ² in compact form:
/// `Σ_i (√(S/R)·R_i − √(R/S)·S_i)² / (R_i + S_i)`.
pub fn chi2_two_way(r: &CountVector, s: &CountVector) -> Result<f64> {
    check_pair(r, s)?;
    let a = (s.total() / r.total()).sqrt();
    let b = (r.total() / s.total()).sqrt();
    Ok(r.counts()
        .iter()
        .zip(s.counts())
        .filter(|(ri, si)| *ri + *si > 0.0)
        .map(|(&ri, &si)| {
            let d = a * ri - b * si;
            d * d / (ri + si)
        })
        .sum())
}

/// One-way G statistic `2 Σ O_i ln(O_i / E_i)`.
pub fn g_statistic(observed: &CountVector, expected: &CountVector) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(StatsError::LengthMismatch { left: observed.len(), right: expected.len() });
    }
    let mut acc = 0.0;
    for (bin, (&o, &e)) in observed.counts().iter().zip(expected.counts()).enumerate() {
        if o > 0.0 && e <= 0.0 {
            return Err(StatsError::ZeroExpected { bin });
        }
        acc += xlogx_over_y(o, e);
    }
    Ok(2.0 * acc)
}

/// G summed over both columns with pooled expected counts. Equals `2L`.
pub fn g_two_way(r: &CountVector, s: &CountVector) -> Result<f64> {
    let (er, es) = expected_counts(r, s)?;
    Ok(g_statistic(r, &er)? + g_statistic(s, &es)?)
}

/// Number of bins in which at least one dataset has a count.
pub fn degrees_of_freedom(r: &CountVector, s: &CountVector) -> Result<usize> {
    check_pair(r, s)?;
    let df = r.counts().iter().zip(s.counts()).filter(|(a, b)| *a + *b > 0.0).count();
    if df == 0 {
        return Err(StatsError::AllZero);
    }
    Ok(df)
}

/// Fills in the p-value `Q(ν/2, statistic/2)` and applies the strict
/// threshold rule for `kind` (`G > 2ν` or `χ² > ν`).
///
/// For G the statistic is fed to the χ² survival function unchanged.
pub fn decide(statistic: f64, df: usize, kind: StatisticKind) -> Result<TestResult> {
    if !(statistic.is_finite() && statistic >= 0.0) {
        return Err(StatsError::InvalidStatistic(statistic));
    }
    let p_value = chi2_survival(statistic, df)?;
    let reject_null = match kind {
        StatisticKind::Chi2 => statistic > df as f64,
        StatisticKind::G => statistic > 2.0 * df as f64,
    };
    Ok(TestResult { kind, statistic, df, p_value, reject_null })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CountVector {
        CountVector::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn count_vector_validation() {
        assert_eq!(CountVector::new(vec![]), Err(StatsError::Empty));
        assert_eq!(CountVector::new(vec![1.0, -2.0]), Err(StatsError::InvalidCount { bin: 1, value: -2.0 }));
        assert!(CountVector::new(vec![f64::NAN]).is_err());
        let v = cv(&[1.0, 2.5, 0.0]);
        assert_eq!(v.total(), 3.5);
        assert_eq!(v.occupied(), 2);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1.0,2.5,0.0]");
        let back: CountVector = serde_json::from_str("[1.0,2.5,0.0]").unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&cv(&[1.0])).unwrap(), 0.0);
        assert!(close(entropy(&cv(&[0.5, 0.5])).unwrap(), std::f64::consts::LN_2, 1e-15));
        assert!(close(entropy(&cv(&[0.25, 0.75])).unwrap(), 0.562_335_144_618_808_3, 1e-12));
        assert!(close(entropy(&cv(&[0.0, 1.0])).unwrap(), 0.0, 0.0));
        assert_eq!(entropy(&cv(&[0.5, 0.6])), Err(StatsError::NotNormalized(1.1)));
    }

    #[test]
    fn two_way_examples() {
        let ln2 = std::f64::consts::LN_2;
        for f in [two_way_likelihood_ratio, two_way_likelihood_ratio_entropy, two_way_likelihood_ratio_kl] {
            assert!(close(f(&cv(&[5.0, 5.0]), &cv(&[5.0, 5.0])).unwrap(), 0.0, 1e-12));
            assert!(close(f(&cv(&[10.0, 0.0]), &cv(&[0.0, 10.0])).unwrap(), 20.0 * ln2, 1e-12));
            // 20·KL([.5,.5]‖[1/3,2/3]) + 40·KL([.25,.75]‖[1/3,2/3])
            assert!(close(f(&cv(&[10.0, 10.0]), &cv(&[10.0, 30.0])).unwrap(), 1.834_500_701_737_529, 1e-12));
        }
    }

    #[test]
    fn two_way_errors() {
        let err = two_way_likelihood_ratio(&cv(&[1.0]), &cv(&[1.0, 2.0]));
        assert_eq!(err, Err(StatsError::LengthMismatch { left: 1, right: 2 }));
        assert_eq!(two_way_likelihood_ratio(&cv(&[1.0, 0.0]), &cv(&[0.0, 0.0])), Err(StatsError::AllZero));
    }

    #[test]
    fn one_way_examples() {
        let half = cv(&[0.5, 0.5]);
        assert_eq!(one_way_likelihood_ratio(&cv(&[3.0, 7.0]), &half, &half).unwrap(), 0.0);
        let l = one_way_likelihood_ratio(&cv(&[10.0, 0.0]), &cv(&[0.9, 0.1]), &half).unwrap();
        assert!(close(l, 5.877_866_649_021_191, 1e-12));
        assert_eq!(one_way_likelihood_ratio(&cv(&[0.0, 0.0]), &cv(&[0.9, 0.1]), &half).unwrap(), 0.0);
        assert_eq!(one_way_likelihood_ratio(&cv(&[1.0, 1.0]), &cv(&[1.0, 0.0]), &half), Err(StatsError::InfiniteEvidence { bin: 1 }));
    }

    #[test]
    fn expected_counts_examples() {
        let (er, es) = expected_counts(&cv(&[10.0, 0.0]), &cv(&[0.0, 10.0])).unwrap();
        assert_eq!(er.counts(), &[5.0, 5.0]);
        assert_eq!(es.counts(), &[5.0, 5.0]);
        let (er, es) = expected_counts(&cv(&[10.0, 10.0]), &cv(&[10.0, 30.0])).unwrap();
        assert!(close(er.counts()[0], 20.0 / 3.0, 1e-12) && close(er.counts()[1], 40.0 / 3.0, 1e-12));
        assert!(close(er.total(), 20.0, 1e-9) && close(es.total(), 40.0, 1e-9));
        let r = cv(&[3.0, 1.0, 4.0]);
        let (er, es) = expected_counts(&r, &r).unwrap();
        assert_eq!(er, r);
        assert_eq!(es, r);
    }

    #[test]
    fn chi2_examples_match_expected_counts_form() {
        let cases: [(&[f64], &[f64], f64); 3] =
            [(&[5.0, 5.0], &[5.0, 5.0], 0.0), (&[10.0, 0.0], &[0.0, 10.0], 20.0), (&[10.0, 10.0], &[10.0, 30.0], 3.75)];
        for (r, s, want) in cases {
            let (r, s) = (cv(r), cv(s));
            let compact = chi2_two_way(&r, &s).unwrap();
            let (er, es) = expected_counts(&r, &s).unwrap();
            let two_term = pearson_chi2(&r, &er).unwrap() + pearson_chi2(&s, &es).unwrap();
            assert!(close(compact, want, 1e-12), "{compact} vs {want}");
            assert!(close(compact, two_term, 1e-9));
        }
    }

    #[test]
    fn g_examples() {
        let e = cv(&[4.0, 6.0]);
        assert_eq!(g_statistic(&e, &e).unwrap(), 0.0);
        let g = g_two_way(&cv(&[10.0, 0.0]), &cv(&[0.0, 10.0])).unwrap();
        assert!(close(g, 27.725_887_222_397_812, 1e-12));
        let g = g_statistic(&cv(&[12.0, 8.0]), &cv(&[10.0, 10.0])).unwrap();
        assert!(close(g, 2.0 * (12.0 * 1.2f64.ln() + 8.0 * 0.8f64.ln()), 1e-14));
        assert!(close(g, 0.805_420_542_027_555, 1e-12));
        assert_eq!(g_statistic(&cv(&[1.0, 1.0]), &cv(&[2.0, 0.0])), Err(StatsError::ZeroExpected { bin: 1 }));
    }

    #[test]
    fn degrees_of_freedom_examples() {
        assert_eq!(degrees_of_freedom(&cv(&[10.0, 0.0]), &cv(&[0.0, 10.0])).unwrap(), 2);
        assert_eq!(degrees_of_freedom(&cv(&[1.0, 0.0, 0.0]), &cv(&[0.0, 0.0, 0.0])), Err(StatsError::AllZero));
        assert_eq!(degrees_of_freedom(&cv(&[1.0, 0.0, 2.0]), &cv(&[0.0, 0.0, 1.0])).unwrap(), 2);
    }

    #[test]
    fn decide_examples() {
        let t = decide(27.73, 2, StatisticKind::G).unwrap();
        assert!(t.reject_null);
        assert!(t.p_value < 1e-5);
        let t = decide(0.0, 5, StatisticKind::Chi2).unwrap();
        assert!(!t.reject_null);
        assert_eq!(t.p_value, 1.0);
        assert!(!decide(6.0, 3, StatisticKind::G).unwrap().reject_null);
        assert!(decide(6.000_001, 3, StatisticKind::G).unwrap().reject_null);
        assert!(!decide(3.0, 3, StatisticKind::Chi2).unwrap().reject_null);
        assert!(decide(-1.0, 3, StatisticKind::G).is_err());
        assert_eq!(decide(1.0, 0, StatisticKind::G), Err(StatsError::InvalidDf));
    }

    #[test]
    fn histogram_csv_dump() {
        let mut buf = Vec::new();
        cv(&[1.0, 0.5]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin,count\n0,1.0000000000000000e0\n1,5.0000000000000000e-1\n");
    }
}
