//! Tandem-queue maps on finite windows.
//!
//! With arrivals `I` (inter-arrival times) and services `w` on indices
//! `m+1..=n` and the sojourn time `J_m` of the customer before the window,
//!
//! ```text
//! D_k = w_k + (I_k - J_{k-1})^+     departures
//! J_k = w_k + (J_{k-1} - I_k)^+     sojourn times
//! R_k = I_k min J_{k-1}             dual services
//! ```
//!
//! `J_left = 0` is a queue that starts empty; it is the same as restricting
//! the supremum in the last-passage form of `D` to the window. Every
//! composite identity in [`check_multiqueue_identities`] holds exactly under
//! that start.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{MultiConfig, Point, SeqWindow};
use crate::lpp::GTable;
use crate::rng::RngSpec;

/// Full output of one pass of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueOutput {
    pub departures: SeqWindow,
    pub sojourn: SeqWindow,
    pub dual_service: SeqWindow,
    /// `J` just before the (possibly trimmed) window.
    pub sojourn_left: f64,
    /// `J` at the last index of the window.
    pub last_in_queue: f64,
}

/// How the single queue is started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// Use this `J_left`.
    GivenJ(f64),
    /// Draw `J_left` from the stationary sojourn law, exponential with
    /// rate `1/service_mean - 1/arrival_mean`.
    StationaryExp {
        arrival_mean: f64,
        service_mean: f64,
        rng: RngSpec,
    },
    /// Start empty and drop this fraction of the window from the output.
    BurnIn { fraction: f64 },
}

/// How every queue of a multi-stage map is started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChainPolicy {
    /// Same `J_left` for every queue, nothing dropped.
    GivenJ(f64),
    /// Every queue starts empty; this fraction of the final output is dropped.
    BurnIn { fraction: f64 },
    /// Every queue draws its own `J_left` from its stationary law, using the
    /// declared line means and `driving_mean` for an external service
    /// sequence. Draws are independent across queues, so joint laws are only
    /// correct away from the left edge; `burn_in` is dropped at the end.
    Stationary {
        rng: RngSpec,
        driving_mean: f64,
        burn_in: f64,
    },
}

/// Sojourn time of a stationary M/M/1 queue, i.e. `Exp` with rate
/// `1/service_mean - 1/arrival_mean`, drawn from `rng`.
pub fn stationary_sojourn(arrival_mean: f64, service_mean: f64, rng: &RngSpec) -> Result<f64> {
    if !(service_mean > 0.0 && arrival_mean > service_mean) {
        return invalid(format!(
            "stationary start needs 0 < service mean < arrival mean, got {service_mean} and {arrival_mean}"
        ));
    }
    let rate = 1.0 / service_mean - 1.0 / arrival_mean;
    Ok(rng.stream().exp(1.0 / rate))
}

fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..1.0).contains(&f) {
        return invalid(format!("burn-in fraction must be in [0,1), got {f}"));
    }
    Ok(())
}

impl ChainPolicy {
    fn drop_len(&self, len: usize) -> Result<usize> {
        let f = match self {
            ChainPolicy::GivenJ(_) => 0.0,
            ChainPolicy::BurnIn { fraction } => *fraction,
            ChainPolicy::Stationary { burn_in, .. } => *burn_in,
        };
        check_fraction(f)?;
        Ok((f * len as f64).floor() as usize)
    }

    /// Starting sojourn time for one queue of the chain.
    pub(crate) fn start(&self, stage: &str, arrival_mean: Option<f64>, service_mean: Option<f64>) -> Result<f64> {
        match self {
            ChainPolicy::GivenJ(j) => {
                if !(j.is_finite() && *j >= 0.0) {
                    return invalid(format!("J_left must be finite and nonnegative, got {j}"));
                }
                Ok(*j)
            }
            ChainPolicy::BurnIn { .. } => Ok(0.0),
            ChainPolicy::Stationary { rng, .. } => match (arrival_mean, service_mean) {
                (Some(a), Some(s)) => stationary_sojourn(a, s, &rng.derive(stage)),
                _ => invalid("stationary start needs declared rates"),
            },
        }
    }

    pub(crate) fn driving_mean(&self) -> Option<f64> {
        match self {
            ChainPolicy::Stationary { driving_mean, .. } => Some(*driving_mean),
            _ => None,
        }
    }

    pub(crate) fn trim(&self, w: SeqWindow) -> Result<SeqWindow> {
        let n = self.drop_len(w.len())?;
        Ok(w.drop_prefix(n))
    }

    pub(crate) fn trim_config(&self, c: MultiConfig) -> Result<MultiConfig> {
        let n = self.drop_len(c.len())?;
        Ok(c.drop_prefix(n))
    }
}

/// Raw recursion on slices: `(departures, sojourn, dual services)`.
pub(crate) fn lindley_raw(j_left: f64, arr: &[f64], srv: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = arr.len();
    let mut dep = Vec::with_capacity(n);
    let mut soj = Vec::with_capacity(n);
    let mut dual = Vec::with_capacity(n);
    let mut j = j_left;
    for (&i, &w) in arr.iter().zip(srv) {
        dep.push(w + (i - j).max(0.0));
        dual.push(i.min(j));
        j = w + (j - i).max(0.0);
        soj.push(j);
    }
    (dep, soj, dual)
}

/// Departures only.
pub(crate) fn departures_raw(j_left: f64, arr: &[f64], srv: &[f64]) -> Vec<f64> {
    let mut j = j_left;
    arr.iter()
        .zip(srv)
        .map(|(&i, &w)| {
            let d = w + (i - j).max(0.0);
            j = w + (j - i).max(0.0);
            d
        })
        .collect()
}

fn check_pair(arrivals: &SeqWindow, services: &SeqWindow) -> Result<()> {
    if !arrivals.aligned(services) {
        return invalid("arrival and service windows must be aligned");
    }
    arrivals.validate("arrivals")?;
    services.validate("services")
}

/// One pass of the recursion from a given `J_left`.
pub fn lindley_iterate(j_left: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<QueueOutput> {
    check_pair(arrivals, services)?;
    if !(j_left.is_finite() && j_left >= 0.0) {
        return invalid(format!("J_left must be finite and nonnegative, got {j_left}"));
    }
    let (dep, soj, dual) = lindley_raw(j_left, &arrivals.values, &services.values);
    let last = soj.last().copied().unwrap_or(j_left);
    let o = arrivals.offset;
    Ok(QueueOutput {
        departures: SeqWindow::new(o, dep),
        sojourn: SeqWindow::new(o, soj),
        dual_service: SeqWindow::new(o, dual),
        sojourn_left: j_left,
        last_in_queue: last,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Runs the queue under `policy` and applies any burn-in trimming.
pub fn run_queue(arrivals: &SeqWindow, services: &SeqWindow, policy: &BoundaryPolicy) -> Result<QueueOutput> {
    check_pair(arrivals, services)?;
    let (j, fraction) = match policy {
        BoundaryPolicy::GivenJ(j) => (*j, 0.0),
        BoundaryPolicy::StationaryExp {
            arrival_mean,
            service_mean,
            rng,
        } => (stationary_sojourn(*arrival_mean, *service_mean, rng)?, 0.0),
        BoundaryPolicy::BurnIn { fraction } => (0.0, *fraction),
    };
    check_fraction(fraction)?;
    if !arrivals.is_empty() && mean(&services.values) >= mean(&arrivals.values) {
        log::warn!(
            "queue looks unstable: mean service {:.4} >= mean inter-arrival {:.4}",
            mean(&services.values),
            mean(&arrivals.values)
        );
    }
    let out = lindley_iterate(j, arrivals, services)?;
    let drop = (fraction * arrivals.len() as f64).floor() as usize;
    if drop == 0 {
        return Ok(out);
    }
    let left = out.sojourn.values[drop - 1];
    Ok(QueueOutput {
        departures: out.departures.drop_prefix(drop),
        sojourn: out.sojourn.drop_prefix(drop),
        dual_service: out.dual_service.drop_prefix(drop),
        sojourn_left: left,
        last_in_queue: out.last_in_queue,
    })
}

/// Departure map `D(I, w)`.
pub fn queue_d(arrivals: &SeqWindow, services: &SeqWindow, policy: &BoundaryPolicy) -> Result<SeqWindow> {
    Ok(run_queue(arrivals, services, policy)?.departures)
}

/// Sojourn map `S(I, w)`.
pub fn queue_s(arrivals: &SeqWindow, services: &SeqWindow, policy: &BoundaryPolicy) -> Result<SeqWindow> {
    Ok(run_queue(arrivals, services, policy)?.sojourn)
}

/// Dual service map `R(I, w)`.
pub fn queue_r(arrivals: &SeqWindow, services: &SeqWindow, policy: &BoundaryPolicy) -> Result<SeqWindow> {
    Ok(run_queue(arrivals, services, policy)?.dual_service)
}

/// Untrimmed multi-queue departures `D^(n)(z1, .., zn)` on slices; stage
/// `s` serves with `z_{s+1}`.
pub(crate) fn dn_raw(zetas: &[&[f64]], policy: &ChainPolicy, means: Option<&[f64]>, label: &str) -> Result<Vec<f64>> {
    let mut x = zetas[0].to_vec();
    for s in 1..zetas.len() {
        let j = policy.start(&format!("{label}/stage{s}"), means.map(|m| m[0]), means.map(|m| m[s]))?;
        x = departures_raw(j, &x, zetas[s]);
    }
    Ok(x)
}

/// Multi-queue departures `D^(n)(z1, .., zn)`, the left fold
/// `D(..D(D(z1, z2), z3).., zn)`. Under a stationary policy the line rates
/// are used as the means of `z1..zn`.
pub fn queue_dn(zetas: &MultiConfig, policy: &ChainPolicy) -> Result<SeqWindow> {
    for l in &zetas.lines {
        l.validate("multi-queue input")?;
    }
    let slices: Vec<&[f64]> = zetas.lines.iter().map(|l| l.values.as_slice()).collect();
    let x = dn_raw(&slices, policy, zetas.rates.as_deref(), "dn")?;
    policy.trim(SeqWindow::new(zetas.offset(), x))
}

/// Last-passage values on the strip `[m, n] x {0, 1}` with bottom-row
/// increments `I`, top-row weights `w` (both on `m+1..=n`) and
/// `H_{(m,1)} = J_m`. Row 0 holds `H_{(k,0)}`, row 1 holds `H_{(k,1)}`.
pub fn strip_lpp_h(j_m: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<GTable> {
    check_pair(arrivals, services)?;
    let m = arrivals.offset - 1;
    let cols = arrivals.len() + 1;
    let mut values = vec![0.0; 2 * cols];
    values[cols] = j_m;
    for c in 1..cols {
        values[c] = values[c - 1] + arrivals.values[c - 1];
        values[cols + c] = values[cols + c - 1].max(values[c]) + services.values[c - 1];
    }
    Ok(GTable {
        origin: Point::new(m, 0),
        rows: 2,
        cols,
        values,
    })
}

/// Largest deviation seen by one pathwise check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub max_abs_error: f64,
    pub checked: usize,
}

impl IdentityReport {
    fn new(name: &str) -> Self {
        IdentityReport {
            name: name.to_string(),
            max_abs_error: 0.0,
            checked: 0,
        }
    }

    fn record(&mut self, a: f64, b: f64) {
        self.max_abs_error = self.max_abs_error.max((a - b).abs());
        self.checked += 1;
    }

    /// Records `a >= b`; the error is the size of any violation.
    fn record_ge(&mut self, a: f64, b: f64) {
        self.max_abs_error = self.max_abs_error.max(b - a);
        self.checked += 1;
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_abs_error <= tol
    }
}

fn prefix(v: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(v.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for x in v {
        acc += x;
        p.push(acc);
    }
    p
}

/// Conservation laws and order relations of a single queue.
pub fn check_single_queue(j_left: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<Vec<IdentityReport>> {
    let out = lindley_iterate(j_left, arrivals, services)?;
    let (i, w) = (&arrivals.values, &services.values);
    let (d, j, r) = (&out.departures.values, &out.sojourn.values, &out.dual_service.values);
    let mut cons_j = IdentityReport::new("conservation I+J=J_prev+D");
    let mut cons_w = IdentityReport::new("conservation w+I=R+D");
    let mut dep_ge = IdentityReport::new("D(I,w) >= w");
    let mut j_prev = j_left;
    for k in 0..i.len() {
        cons_j.record(i[k] + j[k], j_prev + d[k]);
        cons_w.record(w[k] + i[k], r[k] + d[k]);
        dep_ge.record_ge(d[k], w[k]);
        j_prev = j[k];
    }
    // The same quantities read off the two-level strip.
    let h = strip_lpp_h(j_left, arrivals, services)?;
    let mut strip = IdentityReport::new("Lindley output equals strip increments");
    for (c, k) in (1..h.cols).zip(arrivals.offset..) {
        let top = h.value(Point::new(k, 1));
        strip.record(d[c - 1], top - h.value(Point::new(k - 1, 1)));
        strip.record(j[c - 1], top - h.value(Point::new(k, 0)));
    }
    Ok(vec![cons_j, cons_w, dep_ge, strip])
}

/// Monotonicity of `D` in its arrival argument and of the multi-queue map
/// in its number of stages. `bigger` must dominate `arrivals` pointwise.
pub fn check_monotonicity(
    arrivals: &SeqWindow,
    bigger: &SeqWindow,
    services: &SeqWindow,
    extra: &SeqWindow,
) -> Result<Vec<IdentityReport>> {
    check_pair(arrivals, services)?;
    check_pair(bigger, services)?;
    check_pair(extra, services)?;
    let mut mono = IdentityReport::new("D monotone in arrivals");
    let a = departures_raw(0.0, &arrivals.values, &services.values);
    let b = departures_raw(0.0, &bigger.values, &services.values);
    for (x, y) in a.iter().zip(&b) {
        mono.record_ge(*y, *x);
    }
    // D^(3)(extra, arrivals, services) >= D^(2)(arrivals, services)
    let mut stages = IdentityReport::new("D^(n) >= D^(n-1) of the tail");
    let outer = departures_raw(
        0.0,
        &departures_raw(0.0, &extra.values, &arrivals.values),
        &services.values,
    );
    for (x, y) in a.iter().zip(&outer) {
        stages.record_ge(*y, *x);
    }
    Ok(vec![mono, stages])
}

/// Runs the queue, feeds the reversed outputs back in from the right end
/// and compares with the reversed inputs.
pub fn check_duality(j_m: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<IdentityReport> {
    let out = lindley_iterate(j_m, arrivals, services)?;
    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
    let (d2, j2, r2) = lindley_raw(
        out.last_in_queue,
        &rev(&out.departures.values),
        &rev(&out.dual_service.values),
    );
    let mut rep = IdentityReport::new("reversed queue reproduces inputs");
    let n = arrivals.len();
    for idx in 0..n {
        rep.record(d2[idx], arrivals.values[n - 1 - idx]);
        rep.record(r2[idx], services.values[n - 1 - idx]);
        // J'_{-n+1+idx} = J_{n-1-idx}; index n-1-idx of J is sojourn[n-2-idx]
        let expected = if idx + 1 < n {
            out.sojourn.values[n - 2 - idx]
        } else {
            j_m
        };
        rep.record(j2[idx], expected);
    }
    Ok(rep)
}

/// `max_j (sum_m^j I + sum_j^n w)` equals the same expression in the
/// outputs `(R, D)`, for every right end `n` of the window. `j_left` is
/// the sojourn time just before the window.
pub fn check_t_identity(j_left: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<IdentityReport> {
    let out = lindley_iterate(j_left, arrivals, services)?;
    let pi = prefix(&arrivals.values);
    let pw = prefix(&services.values);
    let pr = prefix(&out.dual_service.values);
    let pd = prefix(&out.departures.values);
    let mut rep = IdentityReport::new("T identity");
    for n in 1..=arrivals.len() {
        let mut t = f64::NEG_INFINITY;
        let mut tt = f64::NEG_INFINITY;
        for j in 1..=n {
            t = t.max(pi[j] + pw[n] - pw[j - 1]);
            tt = tt.max(pr[j] + pd[n] - pd[j - 1]);
        }
        rep.record(t, tt);
    }
    Ok(rep)
}

/// Closed forms for the strip values: the direct supremum, the split at
/// every `k`, and the dual expression of `H(n,1) - H(l,0)` for every `l`.
pub fn check_strip_identities(j_m: f64, arrivals: &SeqWindow, services: &SeqWindow) -> Result<Vec<IdentityReport>> {
    let h = strip_lpp_h(j_m, arrivals, services)?;
    let out = lindley_iterate(j_m, arrivals, services)?;
    let len = arrivals.len();
    let bottom = |k: usize| h.values[k];
    let top = |k: usize| h.values[h.cols + k];
    let pi = prefix(&arrivals.values);
    let pw = prefix(&services.values);
    let pd = prefix(&out.departures.values);
    let pr = prefix(&out.dual_service.values);
    // sojourn at local index k (k = 0 is J_m)
    let jl = |k: usize| if k == 0 { j_m } else { out.sojourn.values[k - 1] };

    let mut direct = IdentityReport::new("strip value as a supremum");
    for n in 1..=len {
        let mut best = j_m + pw[n];
        for j in 1..=n {
            best = best.max(pi[j] + pw[n] - pw[j - 1]);
        }
        direct.record(top(n), best);
    }

    let mut split = IdentityReport::new("strip value split at every k");
    for k in 0..=len {
        split.record(top(len), pi[k] + jl(k) + pd[len] - pd[k]);
    }

    let mut dual = IdentityReport::new("strip value in dual variables");
    for l in 0..len {
        let mut best = pr[len] - pr[l] + jl(len);
        for j in l + 1..=len {
            best = best.max(pr[j] - pr[l] + pd[len] - pd[j - 1]);
        }
        dual.record(top(len) - bottom(l), best);
    }
    Ok(vec![direct, split, dual])
}

fn reject_random_starts(policy: &ChainPolicy) -> Result<()> {
    if matches!(policy, ChainPolicy::Stationary { .. }) {
        return invalid("pathwise identities need deterministic starts");
    }
    Ok(())
}

/// Pathwise identities between compositions of `D` and `R`.
///
/// `inputs` holds `I^1..I^n` (n >= 2) and `omega` is `w^1`; with
/// `w^{j+1} = R(I^j, w^j)` this checks
///
/// ```text
/// D(D(I^2, w^2), D(I^1, w^1))          = D(D(I^2, I^1), w^1)
/// D^(n+1)(I^n, .., I^1, w^1)            = D^(n)(D(I^n, w^n), .., D(I^1, w^1))
/// D^(n+1)(I^n, .., I^1, w^1)            = D(D^(n)(I^n, .., I^2, w^2), D(I^1, w^1))
/// ```
///
/// Exact when every queue starts empty.
pub fn check_multiqueue_identities(
    inputs: &MultiConfig,
    omega: &SeqWindow,
    policy: &ChainPolicy,
) -> Result<Vec<IdentityReport>> {
    reject_random_starts(policy)?;
    let n = inputs.n_lines();
    if n < 2 {
        return invalid("need at least two arrival lines");
    }
    if !inputs.lines[0].aligned(omega) {
        return invalid("omega must be aligned with the inputs");
    }
    let j0 = policy.start("", None, None)?;
    let i: Vec<&[f64]> = inputs.lines.iter().map(|l| l.values.as_slice()).collect();

    // w^1..w^n and D(I^j, w^j)
    let mut ws: Vec<Vec<f64>> = vec![omega.values.clone()];
    let mut dj: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let (d, _, r) = lindley_raw(j0, i[j], &ws[j]);
        dj.push(d);
        if j + 1 < n {
            ws.push(r);
        }
    }
    let d = |a: &[f64], b: &[f64]| departures_raw(j0, a, b);
    let fold = |z: &[&[f64]]| {
        let mut x = z[0].to_vec();
        for s in &z[1..] {
            x = departures_raw(j0, &x, s);
        }
        x
    };
    let drop = policy.drop_len(omega.len())?;
    let cmp = |name: &str, a: &[f64], b: &[f64]| {
        let mut rep = IdentityReport::new(name);
        for k in drop..a.len() {
            rep.record(a[k], b[k]);
        }
        rep
    };

    let lhs = d(&d(i[1], &ws[1]), &dj[0]);
    let rhs = d(&d(i[1], i[0]), &omega.values);
    let r120 = cmp("two-class intertwining", &lhs, &rhs);

    // arguments I^n, .., I^1, w^1
    let mut full: Vec<&[f64]> = i.iter().rev().copied().collect();
    full.push(&omega.values);
    let big = fold(&full);
    let outputs: Vec<&[f64]> = dj.iter().rev().map(|v| v.as_slice()).collect();
    let r126 = cmp("multi-queue intertwining", &big, &fold(&outputs));

    let mut tail: Vec<&[f64]> = i[1..].iter().rev().copied().collect();
    tail.push(&ws[1]);
    let r127 = cmp("multi-queue peeling", &big, &d(&fold(&tail), &dj[0]));
    Ok(vec![r120, r126, r127])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_exp_window, RngSpec};
    use proptest::prelude::*;

    fn win(seed: u64, label: &str, len: usize, mean: f64) -> SeqWindow {
        sample_exp_window(1, len, mean, &RngSpec::new(seed, label))
    }

    #[test]
    fn hand_computed_queue() {
        let i = SeqWindow::new(1, vec![1.0, 3.0, 0.5]);
        let w = SeqWindow::new(1, vec![2.0, 1.0, 1.0]);
        let out = lindley_iterate(0.5, &i, &w).unwrap();
        // k=1: D = 2 + 0.5 = 2.5, J = 2, R = 0.5
        // k=2: D = 1 + 1 = 2, J = 1, R = 2
        // k=3: D = 1 + 0 = 1, J = 1.5, R = 0.5
        assert_eq!(out.departures.values, vec![2.5, 2.0, 1.0]);
        assert_eq!(out.sojourn.values, vec![2.0, 1.0, 1.5]);
        assert_eq!(out.dual_service.values, vec![0.5, 2.0, 0.5]);
        assert_eq!(out.last_in_queue, 1.5);
    }

    #[test]
    fn burn_in_trims_every_output() {
        let i = win(1, "i", 100, 2.0);
        let w = win(1, "w", 100, 1.0);
        let full = lindley_iterate(0.0, &i, &w).unwrap();
        let out = run_queue(&i, &w, &BoundaryPolicy::BurnIn { fraction: 0.2 }).unwrap();
        assert_eq!(out.departures.offset, 21);
        assert_eq!(out.departures.values, full.departures.values[20..].to_vec());
        assert_eq!(out.sojourn_left, full.sojourn.values[19]);
        assert!(run_queue(&i, &w, &BoundaryPolicy::BurnIn { fraction: 1.0 }).is_err());
    }

    #[test]
    fn stationary_start_rejects_unstable_means() {
        let rng = RngSpec::new(1, "s");
        assert!(stationary_sojourn(1.0, 2.0, &rng).is_err());
        assert!(stationary_sojourn(2.0, 1.0, &rng).unwrap() >= 0.0);
    }

    #[test]
    fn rejects_misaligned_and_negative() {
        let i = SeqWindow::new(1, vec![1.0, 2.0]);
        assert!(lindley_iterate(0.0, &i, &SeqWindow::new(2, vec![1.0, 2.0])).is_err());
        assert!(lindley_iterate(0.0, &i, &SeqWindow::new(1, vec![1.0, -2.0])).is_err());
        assert!(lindley_iterate(-1.0, &i, &i).is_err());
    }

    #[test]
    fn dn_with_one_line_is_identity() {
        let z = MultiConfig::new(vec![win(3, "z", 20, 1.0)], None).unwrap();
        assert_eq!(queue_dn(&z, &ChainPolicy::GivenJ(0.0)).unwrap(), z.lines[0]);
    }

    #[test]
    fn strip_table_hand_values() {
        let i = SeqWindow::new(1, vec![1.0, 3.0]);
        let w = SeqWindow::new(1, vec![2.0, 1.0]);
        let h = strip_lpp_h(0.5, &i, &w).unwrap();
        assert_eq!(h.values, vec![0.0, 1.0, 4.0, 0.5, 3.0, 5.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn single_queue_laws(seed in 0u64..1_000_000, j in 0.0f64..5.0, len in 1usize..200) {
            let i = win(seed, "i", len, 2.0);
            let w = win(seed, "w", len, 1.0);
            for rep in check_single_queue(j, &i, &w).unwrap() {
                prop_assert!(rep.holds(1e-9), "{:?}", rep);
            }
            prop_assert!(check_duality(j, &i, &w).unwrap().holds(1e-9));
            prop_assert!(check_t_identity(j, &i, &w).unwrap().holds(1e-9));
            for rep in check_strip_identities(j, &i, &w).unwrap() {
                prop_assert!(rep.holds(1e-9), "{:?}", rep);
            }
        }

        #[test]
        fn monotone(seed in 0u64..1_000_000, bump in 0.0f64..2.0) {
            let i = win(seed, "i", 100, 2.0);
            let w = win(seed, "w", 100, 1.0);
            let e = win(seed, "e", 100, 3.0);
            let big = SeqWindow::new(1, i.values.iter().map(|v| v + bump).collect());
            for rep in check_monotonicity(&i, &big, &w, &e).unwrap() {
                prop_assert!(rep.holds(0.0), "{:?}", rep);
            }
        }

        #[test]
        fn composite_identities_with_empty_start(seed in 0u64..1_000_000, n in 2usize..5, len in 1usize..150) {
            let lines = (0..n).map(|j| win(seed, &format!("I{j}"), len, 1.5 + j as f64)).collect();
            let inputs = MultiConfig::new(lines, None).unwrap();
            let w = win(seed, "w", len, 1.0);
            for rep in check_multiqueue_identities(&inputs, &w, &ChainPolicy::BurnIn { fraction: 0.0 }).unwrap() {
                prop_assert!(rep.holds(1e-9), "{:?}", rep);
            }
        }

        #[test]
        fn departures_scale(seed in 0u64..1_000_000, c in 0.1f64..10.0) {
            let i = win(seed, "i", 50, 2.0);
            let w = win(seed, "w", 50, 1.0);
            let sc = |v: &SeqWindow| SeqWindow::new(v.offset, v.values.iter().map(|x| x * c).collect());
            let a = queue_d(&i, &w, &BoundaryPolicy::GivenJ(0.7)).unwrap();
            let b = queue_d(&sc(&i), &sc(&w), &BoundaryPolicy::GivenJ(0.7 * c)).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x * c - y).abs() <= 1e-9 * c.max(1.0));
            }
        }
    }
}
