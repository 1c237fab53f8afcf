//! Multi-line queueing dynamics and the multiclass measures `mu^rho`.
//!
//! `nu^rho` is the product of i.i.d. exponential lines with means
//! `rho_1 < .. < rho_n`; `mu^rho` is its image under the coupled map
//! `eta^i = D^(i)(I^i, I^{i-1}, .., I^1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{MultiConfig, SeqWindow};
use crate::queueing::{departures_raw, dn_raw, lindley_raw, ChainPolicy, IdentityReport};
use crate::rng::{sample_product_exp, RngSpec};

fn check_driving(config: &MultiConfig, omega: &SeqWindow) -> Result<()> {
    if !config.lines[0].aligned(omega) {
        return invalid("driving sequence must be aligned with the lines");
    }
    omega.validate("driving sequence")?;
    for l in &config.lines {
        l.validate("line")?;
    }
    Ok(())
}

fn rate(config: &MultiConfig, i: usize) -> Option<f64> {
    config.rates.as_ref().map(|r| r[i])
}

fn untrimmed(policy: &ChainPolicy) -> ChainPolicy {
    match policy {
        ChainPolicy::BurnIn { .. } => ChainPolicy::BurnIn { fraction: 0.0 },
        ChainPolicy::Stationary { rng, driving_mean, .. } => ChainPolicy::Stationary {
            rng: rng.clone(),
            driving_mean: *driving_mean,
            burn_in: 0.0,
        },
        p => p.clone(),
    }
}

fn to_config(offset: i64, lines: Vec<Vec<f64>>, rates: Option<Vec<f64>>) -> MultiConfig {
    MultiConfig {
        lines: lines.into_iter().map(|v| SeqWindow::new(offset, v)).collect(),
        rates,
    }
}

/// Multiline step: line 1 is served by `omega`, line `i+1` by the dual
/// services `R(I^i, w^i)` left behind by line `i`.
pub fn multiline_step(config: &MultiConfig, omega: &SeqWindow, policy: &ChainPolicy) -> Result<MultiConfig> {
    check_driving(config, omega)?;
    let mut w = omega.values.clone();
    let mut out = Vec::with_capacity(config.n_lines());
    for (i, line) in config.lines.iter().enumerate() {
        let j = policy.start(&format!("multiline/line{i}"), rate(config, i), policy.driving_mean())?;
        let (d, _, r) = lindley_raw(j, &line.values, &w);
        out.push(d);
        w = r;
    }
    policy.trim_config(to_config(config.offset(), out, config.rates.clone()))
}

/// Coupled step: every line is served by the same `omega`.
pub fn coupled_step(config: &MultiConfig, omega: &SeqWindow, policy: &ChainPolicy) -> Result<MultiConfig> {
    check_driving(config, omega)?;
    let mut out = Vec::with_capacity(config.n_lines());
    for (i, line) in config.lines.iter().enumerate() {
        let j = policy.start(&format!("coupled/line{i}"), rate(config, i), policy.driving_mean())?;
        out.push(departures_raw(j, &line.values, &omega.values));
    }
    policy.trim_config(to_config(config.offset(), out, config.rates.clone()))
}

/// The coupled map `eta^i = D^(i)(I^i, .., I^1)` applied to a product
/// configuration whose rates are increasing.
pub fn coupled_map(config: &MultiConfig, policy: &ChainPolicy) -> Result<MultiConfig> {
    for l in &config.lines {
        l.validate("line")?;
    }
    let raw = coupled_map_raw(config, policy, "coupled-map")?;
    policy.trim_config(to_config(config.offset(), raw, config.rates.clone()))
}

fn coupled_map_raw(config: &MultiConfig, policy: &ChainPolicy, label: &str) -> Result<Vec<Vec<f64>>> {
    let n = config.n_lines();
    (0..n)
        .map(|i| {
            let args: Vec<&[f64]> = (0..=i).rev().map(|l| config.lines[l].values.as_slice()).collect();
            let means: Option<Vec<f64>> = config.rates.as_ref().map(|r| (0..=i).rev().map(|l| r[l]).collect());
            dn_raw(&args, policy, means.as_deref(), &format!("{label}/line{i}"))
        })
        .collect()
}

/// Window for [`sample_mu_rho`]: `length` values starting at `offset`,
/// after discarding a burn-in prefix of `burn_in` times the simulated
/// length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub offset: i64,
    pub length: usize,
    pub burn_in: f64,
}

impl WindowSpec {
    pub fn new(offset: i64, length: usize) -> Self {
        WindowSpec {
            offset,
            length,
            burn_in: 0.2,
        }
    }
}

/// Samples `mu^rho` on a window.
///
/// Rates may be repeated or unordered: the distinct values are sorted,
/// sampled, and the lines mapped back, so equal rates give equal lines.
///
/// Each queue starts from its stationary sojourn law. All queues served by
/// the same line `I^j` take that start from one shared uniform, which keeps
/// the lines ordered pointwise: a larger arrival stream meets a smaller
/// initial sojourn. For at most two distinct rates the window is exactly
/// stationary; with more, the joint boundary law is approximate and the
/// burn-in prefix absorbs it. Lines use the child streams `line{l}` of
/// `rng`, so scaling all rates by a constant scales the sample by it.
pub fn sample_mu_rho(rates: &[f64], window: &WindowSpec, rng: &RngSpec) -> Result<MultiConfig> {
    if rates.is_empty() {
        return invalid("need at least one rate");
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return invalid(format!("rates must be positive, got {r}"));
    }
    if !(0.0..1.0).contains(&window.burn_in) {
        return invalid(format!("burn-in fraction must be in [0,1), got {}", window.burn_in));
    }
    let mut sigma = rates.to_vec();
    sigma.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sigma.dedup();
    let total = (((window.length as f64) / (1.0 - window.burn_in)).ceil() as usize).max(window.length);
    let drop = total - window.length;
    let product = sample_product_exp(&sigma, window.offset - drop as i64, total, rng);
    let uniforms: Vec<f64> = (0..sigma.len())
        .map(|j| rng.derive(&format!("start{j}")).stream().uniform())
        .collect();
    let eta: Vec<Vec<f64>> = (0..sigma.len())
        .map(|l| {
            let mut x = product.lines[l].values.clone();
            for j in (0..l).rev() {
                let rate = 1.0 / sigma[j] - 1.0 / sigma[l];
                let start = -uniforms[j].ln() / rate;
                x = departures_raw(start, &x, &product.lines[j].values);
            }
            x
        })
        .collect();
    let lines = rates
        .iter()
        .map(|r| {
            let l = sigma.iter().position(|s| s == r).unwrap();
            SeqWindow::new(window.offset, eta[l][drop..].to_vec())
        })
        .collect();
    MultiConfig::new(lines, Some(rates.to_vec()))
}

/// The arrays `eta^{i,j}` (`j <= i`) and `xi^{i,j}` (`j <= i`), 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TriArray {
    pub eta: Vec<Vec<SeqWindow>>,
    pub xi: Vec<Vec<SeqWindow>>,
}

impl TriArray {
    pub fn n(&self) -> usize {
        self.eta.len()
    }

    /// `(eta^{1,1}, .., eta^{n,n})`.
    pub fn diagonal(&self) -> MultiConfig {
        MultiConfig {
            lines: (0..self.n()).map(|i| self.eta[i][i].clone()).collect(),
            rates: None,
        }
    }
}

/// Builds the triangular arrays of a product configuration:
/// `eta^{i,1} = I^i`, `eta^{i,j} = D(eta^{i,j-1}, xi^{i-1,j-1})`,
/// `xi^{i,j-1} = R(eta^{i,j-1}, xi^{i-1,j-1})` and `xi^{i,i} = eta^{i,i}`.
/// Under empty starts the diagonal equals [`coupled_map`].
pub fn build_triangular_arrays(config: &MultiConfig, policy: &ChainPolicy) -> Result<TriArray> {
    for l in &config.lines {
        l.validate("line")?;
    }
    let n = config.n_lines();
    let mut eta: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    let mut xi: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut erow = vec![config.lines[i].values.clone()];
        let mut xrow = Vec::with_capacity(i + 1);
        for j in 1..=i {
            let start = policy.start(&format!("tri/{i}/{j}"), rate(config, i), rate(config, j - 1))?;
            let (d, _, r) = lindley_raw(start, &erow[j - 1], &xi[i - 1][j - 1]);
            erow.push(d);
            xrow.push(r);
        }
        xrow.push(erow[i].clone());
        eta.push(erow);
        xi.push(xrow);
    }
    let o = config.offset();
    let trim = |rows: Vec<Vec<Vec<f64>>>| -> Result<Vec<Vec<SeqWindow>>> {
        rows.into_iter()
            .map(|row| row.into_iter().map(|v| policy.trim(SeqWindow::new(o, v))).collect())
            .collect()
    };
    Ok(TriArray {
        eta: trim(eta)?,
        xi: trim(xi)?,
    })
}

/// Compares the coupled step after the coupled map with the coupled map
/// after the multiline step. Exact under empty starts.
pub fn check_intertwining_dynamics(
    config: &MultiConfig,
    omega: &SeqWindow,
    policy: &ChainPolicy,
) -> Result<IdentityReport> {
    if matches!(policy, ChainPolicy::Stationary { .. }) {
        return invalid("pathwise identities need deterministic starts");
    }
    let raw = untrimmed(policy);
    let lhs = coupled_step(&coupled_map(config, &raw)?, omega, &raw)?;
    let rhs = coupled_map(&multiline_step(config, omega, &raw)?, &raw)?;
    let lhs = policy.trim_config(lhs)?;
    let rhs = policy.trim_config(rhs)?;
    let mut rep = IdentityReport {
        name: "coupled step intertwines with multiline step".into(),
        max_abs_error: 0.0,
        checked: 0,
    };
    for (a, b) in lhs.lines.iter().zip(&rhs.lines) {
        for (x, y) in a.values.iter().zip(&b.values) {
            rep.max_abs_error = rep.max_abs_error.max((x - y).abs());
            rep.checked += 1;
        }
    }
    Ok(rep)
}

/// Pairwise correlations between variables that should be independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub names: Vec<String>,
    /// Row-major `names.len()^2` matrix of Pearson coefficients.
    pub matrix: Vec<f64>,
    pub samples: usize,
    pub max_abs: f64,
    /// `4 / sqrt(samples)`
    pub threshold: f64,
    pub pass: bool,
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Correlation matrix of named samples with the `4/sqrt(N)` rule.
pub fn correlation_report(names: Vec<String>, columns: &[Vec<f64>]) -> Result<CorrelationReport> {
    let m = columns.len();
    if m != names.len() || m < 2 {
        return invalid("need at least two named columns");
    }
    let n = columns[0].len();
    if n < 3 || columns.iter().any(|c| c.len() != n) {
        return invalid("columns must share a length of at least 3");
    }
    let mut matrix = vec![1.0; m * m];
    let mut max_abs: f64 = 0.0;
    for a in 0..m {
        for b in 0..a {
            let r = pearson(&columns[a], &columns[b]);
            matrix[a * m + b] = r;
            matrix[b * m + a] = r;
            max_abs = max_abs.max(r.abs());
        }
    }
    let threshold = 4.0 / (n as f64).sqrt();
    Ok(CorrelationReport {
        names,
        matrix,
        samples: n,
        max_abs,
        threshold,
        pass: max_abs < threshold,
    })
}

/// Independence structure of a sample of arrays at index `k`: the dual
/// services `xi^{n,j}` at `k` and `k-1` (`j < n`), `eta^n_{k-1}`, the
/// successive differences `eta^j_k - eta^{j-1}_k` and `eta^1_k`, where
/// `eta^j = eta^{j,j}`. Each array is one independent replica.
pub fn check_independence_structure(samples: &[TriArray], k: i64) -> Result<CorrelationReport> {
    let Some(first) = samples.first() else {
        return invalid("no samples");
    };
    let n = first.n();
    if n < 2 {
        return invalid("need at least two lines");
    }
    let mut names = Vec::new();
    for j in 0..n - 1 {
        names.push(format!("xi[{n},{}]_k", j + 1));
        names.push(format!("xi[{n},{}]_(k-1)", j + 1));
    }
    names.push(format!("eta[{n}]_(k-1)"));
    for j in (1..n).rev() {
        names.push(format!("eta[{}]_k-eta[{}]_k", j + 1, j));
    }
    names.push("eta[1]_k".into());
    let mut cols = vec![Vec::with_capacity(samples.len()); names.len()];
    for a in samples {
        if a.n() != n {
            return invalid("arrays differ in size");
        }
        let at = |w: &SeqWindow, i: i64| {
            w.get(i)
                .ok_or_else(|| crate::Error::InvalidArgument(format!("index {i} outside window")))
        };
        let top = n - 1;
        let mut c = 0;
        for j in 0..n - 1 {
            cols[c].push(at(&a.xi[top][j], k)?);
            cols[c + 1].push(at(&a.xi[top][j], k - 1)?);
            c += 2;
        }
        cols[c].push(at(&a.eta[top][top], k - 1)?);
        c += 1;
        for j in (1..n).rev() {
            cols[c].push(at(&a.eta[j][j], k)? - at(&a.eta[j - 1][j - 1], k)?);
            c += 1;
        }
        cols[c].push(at(&a.eta[0][0], k)?);
    }
    correlation_report(names, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_exp_window;
    use proptest::prelude::*;

    fn product(seed: u64, rates: &[f64], len: usize) -> MultiConfig {
        sample_product_exp(rates, 0, len, &RngSpec::new(seed, "mc-test"))
    }

    const EMPTY: ChainPolicy = ChainPolicy::BurnIn { fraction: 0.0 };

    #[test]
    fn first_line_of_coupled_map_is_input() {
        let c = product(1, &[1.0, 2.0, 3.0], 50);
        let e = coupled_map(&c, &EMPTY).unwrap();
        assert_eq!(e.lines[0], c.lines[0]);
    }

    #[test]
    fn multiline_matches_manual_queues() {
        let c = product(2, &[1.5, 2.5], 40);
        let w = sample_exp_window(0, 40, 1.0, &RngSpec::new(2, "w"));
        let out = multiline_step(&c, &w, &ChainPolicy::GivenJ(0.3)).unwrap();
        let (d1, _, r1) = lindley_raw(0.3, &c.lines[0].values, &w.values);
        let d2 = departures_raw(0.3, &c.lines[1].values, &r1);
        assert_eq!(out.lines[0].values, d1);
        assert_eq!(out.lines[1].values, d2);
    }

    #[test]
    fn ties_duplicate_lines_and_order_is_restored() {
        let spec = WindowSpec::new(0, 300);
        let rng = RngSpec::new(4, "mu");
        let tied = sample_mu_rho(&[2.0, 1.0, 2.0], &spec, &rng).unwrap();
        assert_eq!(tied.lines[0], tied.lines[2]);
        let sorted = sample_mu_rho(&[1.0, 2.0], &spec, &rng).unwrap();
        assert_eq!(tied.lines[1], sorted.lines[0]);
        assert_eq!(tied.lines[0], sorted.lines[1]);
        assert_eq!(tied.rates, Some(vec![2.0, 1.0, 2.0]));
    }

    #[test]
    fn rejects_bad_rates() {
        let spec = WindowSpec::new(0, 10);
        let rng = RngSpec::new(4, "mu");
        assert!(sample_mu_rho(&[], &spec, &rng).is_err());
        assert!(sample_mu_rho(&[1.0, 0.0], &spec, &rng).is_err());
        assert!(sample_mu_rho(&[1.0, f64::NAN], &spec, &rng).is_err());
    }

    #[test]
    fn mu_lines_are_ordered() {
        let s = sample_mu_rho(&[1.0, 1.5, 3.0], &WindowSpec::new(-50, 500), &RngSpec::new(9, "mu")).unwrap();
        assert_eq!(s.offset(), -50);
        assert_eq!(s.len(), 500);
        for k in -50..450 {
            let c = s.column(k).unwrap();
            assert!(c[0] <= c[1] && c[1] <= c[2]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scaling_rates_scales_sample(seed in 0u64..1_000_000, c in 1.0f64..4.0) {
            let spec = WindowSpec::new(0, 200);
            let rng = RngSpec::new(seed, "mu");
            let a = sample_mu_rho(&[1.0, 2.0, 3.5], &spec, &rng).unwrap();
            let b = sample_mu_rho(&[c, 2.0 * c, 3.5 * c], &spec, &rng).unwrap();
            for (la, lb) in a.lines.iter().zip(&b.lines) {
                for (x, y) in la.values.iter().zip(&lb.values) {
                    prop_assert!(*y + 1e-9 * y.max(1.0) >= *x);
                    prop_assert!((x * c - y).abs() <= 1e-9 * y.max(1.0));
                }
            }
        }

        #[test]
        fn diagonal_equals_coupled_map(seed in 0u64..1_000_000, n in 1usize..5, len in 1usize..120) {
            let rates: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
            let c = product(seed, &rates, len);
            let tri = build_triangular_arrays(&c, &EMPTY).unwrap();
            let e = coupled_map(&c, &EMPTY).unwrap();
            for (a, b) in tri.diagonal().lines.iter().zip(&e.lines) {
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn intertwining_is_exact_from_empty_queues(seed in 0u64..1_000_000, n in 1usize..5, len in 1usize..150) {
            let rates: Vec<f64> = (0..n).map(|i| 1.5 + i as f64).collect();
            let c = product(seed, &rates, len);
            let w = sample_exp_window(0, len, 1.0, &RngSpec::new(seed, "omega"));
            let rep = check_intertwining_dynamics(&c, &w, &EMPTY).unwrap();
            prop_assert!(rep.holds(1e-9), "{:?}", rep);
        }

        #[test]
        fn coupled_step_preserves_order(seed in 0u64..1_000_000) {
            let s = sample_mu_rho(&[1.2, 2.0, 3.0], &WindowSpec::new(0, 200), &RngSpec::new(seed, "mu")).unwrap();
            let w = sample_exp_window(0, 200, 1.0, &RngSpec::new(seed, "omega"));
            let t = coupled_step(&s, &w, &ChainPolicy::GivenJ(0.0)).unwrap();
            for k in 0..200 {
                let c = t.column(k).unwrap();
                prop_assert!(c[0] <= c[1] && c[1] <= c[2]);
            }
        }
    }
}
