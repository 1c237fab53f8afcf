//! Goodness-of-fit tests and machine-readable test reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Default per-test significance level.
pub const DEFAULT_ALPHA: f64 = 0.001;

/// One line of suite output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n: u64,
    pub seed: u64,
    pub pass: bool,
    /// Short identifier of the property under test.
    #[serde(rename = "paper_ref")]
    pub claim: String,
}

impl TestReport {
    pub fn new(
        name: impl Into<String>,
        claim: impl Into<String>,
        statistic: f64,
        threshold: f64,
        n: u64,
        seed: u64,
        pass: bool,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            threshold,
            n,
            seed,
            pass,
            claim: claim.into(),
        }
    }

    /// Report for a pathwise identity: passes when `max_error <= tol`.
    pub fn identity(
        name: impl Into<String>,
        claim: impl Into<String>,
        max_error: f64,
        tol: f64,
        n: u64,
        seed: u64,
    ) -> Self {
        Self::new(name, claim, max_error, tol, n, seed, max_error <= tol)
    }

    /// Non-finite statistics come out as `null`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2)) is the CDF
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            s += (-(m * m) * c).exp();
        }
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// `x` with `P(K > x) = alpha`.
pub fn kolmogorov_critical(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.1, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rejection rule for a KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KsThreshold {
    /// Asymptotic critical value at this significance level.
    Alpha(f64),
    /// Fixed bound on the sup distance.
    Distance(f64),
}

/// `sup_x |F_n(x) - F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // tied samples form one jump; compare the left limit of F before it
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        let f_left = cdf(xs[i].next_down());
        d = d.max((f_left - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample sup distance between empirical CDFs.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    y.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn need(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return invalid(format!("{what}: empty sample"));
    }
    Ok(())
}

pub fn ks_one_sample(
    name: &str,
    claim: &str,
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    rule: KsThreshold,
    seed: u64,
) -> Result<TestReport> {
    need(samples.len(), name)?;
    let d = ks_statistic(samples, cdf);
    let n = samples.len();
    let threshold = match rule {
        KsThreshold::Alpha(a) => kolmogorov_critical(a) / (n as f64).sqrt(),
        KsThreshold::Distance(t) => t,
    };
    Ok(TestReport::new(
        name,
        claim,
        d,
        threshold,
        n as u64,
        seed,
        d <= threshold,
    ))
}

pub fn ks_two_sample(
    name: &str,
    claim: &str,
    a: &[f64],
    b: &[f64],
    rule: KsThreshold,
    seed: u64,
) -> Result<TestReport> {
    need(a.len(), name)?;
    need(b.len(), name)?;
    let d = ks_two_sample_statistic(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let threshold = match rule {
        KsThreshold::Alpha(al) => kolmogorov_critical(al) * ((n + m) / (n * m)).sqrt(),
        KsThreshold::Distance(t) => t,
    };
    Ok(TestReport::new(
        name,
        claim,
        d,
        threshold,
        (a.len() + b.len()) as u64,
        seed,
        d <= threshold,
    ))
}

/// Pearson chi-square after merging tail bins until every bin expects at
/// least `min_expected` counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// `counts[i]` observed in bin `i` with probability `probs[i]`; the
/// probabilities should include any tail bin and sum to one.
pub fn chi_square_pmf(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquare> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return invalid("need matching counts and probabilities, at least two bins");
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return invalid("no observations");
    }
    let t = total as f64;
    let mut obs: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let mut exp: Vec<f64> = probs.iter().map(|p| p * t).collect();
    while exp.len() > 2 && *exp.last().unwrap() < min_expected {
        let (o, e) = (obs.pop().unwrap(), exp.pop().unwrap());
        *obs.last_mut().unwrap() += o;
        *exp.last_mut().unwrap() += e;
    }
    if exp.iter().any(|e| *e <= 0.0) {
        return invalid("a bin has zero expected count");
    }
    let statistic: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = exp.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map(|c| c.sf(statistic))
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
        bins: exp.len(),
    })
}

/// [`chi_square_pmf`] as a report: the statistic against the upper
/// `alpha` quantile of its chi-square law.
pub fn chi_square_report(
    name: &str,
    claim: &str,
    counts: &[u64],
    probs: &[f64],
    min_expected: f64,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    let c = chi_square_pmf(counts, probs, min_expected)?;
    let threshold = ChiSquared::new(c.dof as f64)
        .map(|d| d.inverse_cdf(1.0 - alpha))
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    let n = counts.iter().sum();
    Ok(TestReport::new(
        name,
        claim,
        c.statistic,
        threshold,
        n,
        seed,
        c.statistic <= threshold,
    ))
}

/// `z` score of `hits` successes in `trials` against probability `p`;
/// passes when `|z| <= 3`.
pub fn binomial_test(name: &str, claim: &str, hits: u64, trials: u64, p: f64, seed: u64) -> Result<TestReport> {
    if trials == 0 || !(0.0..=1.0).contains(&p) {
        return invalid("binomial test needs trials and p in [0,1]");
    }
    let n = trials as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    let z = if sd == 0.0 {
        if hits as f64 == n * p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (hits as f64 - n * p) / sd
    };
    Ok(TestReport::new(name, claim, z.abs(), 3.0, trials, seed, z.abs() <= 3.0))
}

/// Sample mean within `3 sd/sqrt(n)` of `mean`, with `sd` known.
pub fn mean_test(name: &str, claim: &str, samples: &[f64], mean: f64, sd: f64, seed: u64) -> Result<TestReport> {
    need(samples.len(), name)?;
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let z = (m - mean) / (sd / n.sqrt());
    Ok(TestReport::new(
        name,
        claim,
        z.abs(),
        3.0,
        samples.len() as u64,
        seed,
        z.abs() <= 3.0,
    ))
}

/// Pearson correlation with the `|r| < 4/sqrt(N)` rule.
pub fn correlation_test(name: &str, claim: &str, a: &[f64], b: &[f64], seed: u64) -> Result<TestReport> {
    if a.len() != b.len() || a.len() < 3 {
        return invalid("correlation needs two samples of equal length >= 3");
    }
    let r = crate::multiclass::pearson(a, b);
    let t = 4.0 / (a.len() as f64).sqrt();
    Ok(TestReport::new(
        name,
        claim,
        r.abs(),
        t,
        a.len() as u64,
        seed,
        r.abs() < t,
    ))
}

/// Summary of a list of reports.
pub fn pass_fraction(reports: &[TestReport]) -> f64 {
    if reports.is_empty() {
        return 1.0;
    }
    reports.iter().filter(|r| r.pass).count() as f64 / reports.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    #[test]
    fn kolmogorov_reference_values() {
        // K quantiles: P(K > 1.3581) = 0.05, P(K > 1.9495) = 0.001
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_critical(0.001) - 1.9495).abs() < 1e-3);
        // both series agree where they meet
        let a = kolmogorov_survival(0.999_999);
        let b = kolmogorov_survival(1.000_001);
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn ks_one_sample_accepts_correct_and_rejects_wrong_law() {
        let mut s = RngSpec::new(1, "ks").stream();
        let x: Vec<f64> = (0..20_000).map(|_| s.exp(2.0)).collect();
        let ok = ks_one_sample(
            "exp2",
            "t",
            &x,
            |v| 1.0 - (-v / 2.0).exp(),
            KsThreshold::Alpha(0.001),
            1,
        )
        .unwrap();
        assert!(ok.pass, "{ok:?}");
        let bad = ks_one_sample(
            "exp2.2",
            "t",
            &x,
            |v| 1.0 - (-v / 2.2).exp(),
            KsThreshold::Alpha(0.001),
            1,
        )
        .unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn ks_statistic_small_case() {
        // uniform CDF, samples 0.1 0.5 0.9: max gap is 0.2333.. at 0.1 (1/3 - 0.1)
        let d = ks_statistic(&[0.5, 0.1, 0.9], |v| v.clamp(0.0, 1.0));
        assert!((d - (1.0 / 3.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn ks_with_atom_uses_jump_correctly() {
        // half the mass at zero, exactly half the samples at zero
        let mut x = vec![0.0; 500];
        x.extend((0..500).map(|i| (i as f64 + 0.5) / 500.0));
        let d = ks_statistic(&x, |v| if v < 0.0 { 0.0 } else { 0.5 + 0.5 * v.min(1.0) });
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample_statistic(&a, &a), 0.0);
        assert_eq!(ks_two_sample_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn chi_square_merges_tail() {
        let c = chi_square_pmf(&[50, 30, 15, 4, 1], &[0.5, 0.3, 0.15, 0.04, 0.01], 5.0).unwrap();
        assert_eq!(c.bins, 4);
        assert!(c.statistic.abs() < 1e-12);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square_pmf(&[90, 10], &[0.5, 0.5], 5.0).unwrap();
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn binomial_and_correlation() {
        assert!(binomial_test("b", "t", 500, 1000, 0.5, 0).unwrap().pass);
        assert!(!binomial_test("b", "t", 600, 1000, 0.5, 0).unwrap().pass);
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(!correlation_test("c", "t", &a, &a, 0).unwrap().pass);
    }

    #[test]
    fn report_json_field_names() {
        let r = TestReport::new("n", "claim-id", 0.5, 1.0, 10, 7, true);
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["n", "name", "paper_ref", "pass", "seed", "statistic", "threshold"]
        );
        assert_eq!(v["paper_ref"], "claim-id");
    }
}
