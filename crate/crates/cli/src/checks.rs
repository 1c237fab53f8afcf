//! Parametrized verification checks. Each returns one or more
//! [`TestReport`]s; the acceptance criteria and the suites call these with
//! their own sizes.

use cgm_core::busemann::{
    busemann_geodesic, coalescence_point, competition_interface, direction_of_rho, estimate_busemann_sites,
    estimator_field, initial_run_statistics, initial_runs_from_lattice, rho_star_bracket, rho_star_exceeds,
    rho_star_lattice, run_starts, subtree_labels, wait_indicator_run,
};
use cgm_core::exact::{
    catalan_number, increment_law, initial_run_pmf2_vec, initial_run_pmf_vec, rho_star_cdf, sample_x_process,
    CatalanTriangle, PoissonCompetition,
};
use cgm_core::lpp::{brute_force_lpp, lpp_grid};
use cgm_core::multiclass::{coupled_step, multiline_step, sample_mu_rho, WindowSpec};
use cgm_core::queueing::{
    check_duality, check_multiqueue_identities, check_single_queue, check_strip_identities, check_t_identity,
    BoundaryPolicy, ChainPolicy, IdentityReport,
};
use cgm_core::rng::{sample_exp_field, sample_exp_window, sample_product_exp};
use cgm_core::stats::{
    binomial_test, chi_square_report, correlation_test, ks_one_sample, ks_statistic, ks_two_sample, mean_test,
    KsThreshold, TestReport, DEFAULT_ALPHA,
};
use cgm_core::{MultiConfig, Point, Result, RngSpec};
use num_bigint::BigUint;
use rayon::prelude::*;

/// Absolute tolerance for pathwise identities.
pub const IDENTITY_TOL: f64 = 1e-9;

fn exp_cdf(mean: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x / mean).exp() }
}

fn alpha() -> KsThreshold {
    KsThreshold::Alpha(DEFAULT_ALPHA)
}

/// Folds per-instance identity reports into one report per identity name.
fn merge_identities(name_prefix: &str, claim: &str, seed: u64, all: Vec<Vec<IdentityReport>>) -> Vec<TestReport> {
    let mut names: Vec<String> = Vec::new();
    let mut worst: Vec<(f64, u64)> = Vec::new();
    for reps in all {
        for r in reps {
            let i = match names.iter().position(|n| *n == r.name) {
                Some(i) => i,
                None => {
                    names.push(r.name.clone());
                    worst.push((0.0, 0));
                    names.len() - 1
                }
            };
            worst[i].0 = worst[i].0.max(r.max_abs_error);
            worst[i].1 += r.checked as u64;
        }
    }
    names
        .into_iter()
        .zip(worst)
        .map(|(n, (e, c))| TestReport::identity(format!("{name_prefix}: {n}"), claim, e, IDENTITY_TOL, c, seed))
        .collect()
}

/// Forward tables against path enumeration on random fields, all pairs.
pub fn lpp_oracle(fields: usize, size: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "lpp-oracle");
    let errs: Vec<(f64, u64)> = (0..fields as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, u64)> {
            let w = sample_exp_field(Point::new(0, 0), size, size, 1.0, &base.replica(r));
            let mut err: f64 = 0.0;
            let mut n = 0;
            for ux in 0..size as i64 {
                for uy in 0..size as i64 {
                    let u = Point::new(ux, uy);
                    let g = lpp_grid(&w, u)?;
                    for vx in ux..size as i64 {
                        for vy in uy..size as i64 {
                            let v = Point::new(vx, vy);
                            err = err.max((g.value(v) - brute_force_lpp(&w, u, v)?).abs());
                            n += 1;
                        }
                    }
                }
            }
            Ok((err, n))
        })
        .collect::<Result<_>>()?;
    let e = errs.iter().map(|x| x.0).fold(0.0, f64::max);
    let n = errs.iter().map(|x| x.1).sum();
    Ok(vec![TestReport::identity(
        format!("lpp_grid vs brute force, {fields} fields {size}x{size}"),
        "lpp-recursion",
        e,
        IDENTITY_TOL,
        n,
        seed,
    )])
}

struct QueueInstance {
    arrivals: cgm_core::SeqWindow,
    services: cgm_core::SeqWindow,
    j_left: f64,
    lines: MultiConfig,
}

fn queue_instance(rng: &RngSpec, window: usize) -> QueueInstance {
    let mut s = rng.derive("params").stream();
    let a = 1.2 + 2.8 * s.uniform();
    let arrivals = sample_exp_window(1, window, a, &rng.derive("I"));
    let services = sample_exp_window(1, window, 1.0, &rng.derive("w"));
    let j_left = s.exp(1.0 / (1.0 - 1.0 / a));
    let lines = sample_product_exp(&[a, a + 0.5, a + 1.5], 1, window, &rng.derive("lines"));
    QueueInstance {
        arrivals,
        services,
        j_left,
        lines,
    }
}

/// Conservation, duality, the T identity and multi-queue intertwining on
/// random stable queues.
pub fn queueing_identities(instances: usize, window: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "queueing");
    let all: Vec<Vec<IdentityReport>> = (0..instances as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<IdentityReport>> {
            let q = queue_instance(&base.replica(r), window);
            let mut reps = check_single_queue(q.j_left, &q.arrivals, &q.services)?;
            reps.push(check_duality(q.j_left, &q.arrivals, &q.services)?);
            reps.push(check_t_identity(q.j_left, &q.arrivals, &q.services)?);
            reps.extend(check_multiqueue_identities(
                &q.lines,
                &q.services,
                &ChainPolicy::GivenJ(0.0),
            )?);
            Ok(reps)
        })
        .collect::<Result<_>>()?;
    Ok(merge_identities("queue", "queue-identities", seed, all))
}

/// Closed forms of the two-level strip.
pub fn strip_identities(instances: usize, window: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "strip");
    let all: Vec<Vec<IdentityReport>> = (0..instances as u64)
        .into_par_iter()
        .map(|r| {
            let q = queue_instance(&base.replica(r), window);
            check_strip_identities(q.j_left, &q.arrivals, &q.services)
        })
        .collect::<Result<_>>()?;
    Ok(merge_identities("strip", "strip-lpp", seed, all))
}

/// One multiline step from the product measure: each output line against
/// its exponential law, and cross-line correlations at a common index.
pub fn multiline_invariance(rates: &[f64], samples: usize, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "multiline");
    // queues start independently of each other, so drop a prefix
    let len = samples + samples.div_ceil(9);
    let config = sample_product_exp(rates, 0, len, &rng.derive("I"));
    let omega = sample_exp_window(0, len, 1.0, &rng.derive("w"));
    let policy = ChainPolicy::Stationary {
        rng: rng.derive("starts"),
        driving_mean: 1.0,
        burn_in: 0.1,
    };
    let out = multiline_step(&config, &omega, &policy)?;
    let mut reps = Vec::new();
    for (i, line) in out.lines.iter().enumerate() {
        reps.push(ks_one_sample(
            &format!("multiline line {} vs Exp mean {}", i + 1, rates[i]),
            "multiline-invariance",
            &line.values,
            exp_cdf(rates[i]),
            alpha(),
            seed,
        )?);
    }
    for i in 0..out.lines.len() {
        for j in 0..i {
            reps.push(correlation_test(
                &format!("multiline lines {} and {} uncorrelated", j + 1, i + 1),
                "multiline-invariance",
                &out.lines[j].values,
                &out.lines[i].values,
                seed,
            )?);
        }
    }
    Ok(reps)
}

/// Lines and successive differences of a configuration, read every `gap`
/// indices.
fn thin(config: &MultiConfig, gap: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = config.n_lines();
    let mut lines = vec![Vec::new(); n];
    let mut diffs = vec![Vec::new(); n.saturating_sub(1)];
    for k in (0..config.len()).step_by(gap) {
        for i in 0..n {
            lines[i].push(config.lines[i].values[k]);
        }
        for i in 1..n {
            diffs[i - 1].push(config.lines[i].values[k] - config.lines[i - 1].values[k]);
        }
    }
    (lines, diffs)
}

fn concat(parts: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut it = parts.into_iter();
    let Some(mut acc) = it.next() else {
        return (Vec::new(), Vec::new());
    };
    for (l, d) in it {
        for (a, b) in acc.0.iter_mut().zip(l) {
            a.extend(b);
        }
        for (a, b) in acc.1.iter_mut().zip(d) {
            a.extend(b);
        }
    }
    acc
}

/// Window and replica count giving `samples` thinned values.
fn replica_plan(samples: usize, per_replica: usize) -> usize {
    samples.div_ceil(per_replica)
}

/// `mu^rho` against one coupled step applied to an independent
/// `mu^rho` sample: two-sample KS per line and per difference.
pub fn coupled_invariance(
    rates: &[f64],
    samples: usize,
    window: usize,
    gap: usize,
    burn_in: f64,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let kept = window - (window as f64 * burn_in) as usize;
    let per = kept.div_ceil(gap);
    let replicas = replica_plan(samples, per);
    let rng = RngSpec::new(seed, "coupled");
    let before = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mu = sample_mu_rho(rates, &WindowSpec::new(0, kept), &rng.derive("before").replica(r))?;
            Ok(thin(&mu, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let after = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let rr = rng.derive("after").replica(r);
            let mu = sample_mu_rho(rates, &WindowSpec::new(0, window), &rr)?;
            let omega = sample_exp_window(0, window, 1.0, &rr.derive("w"));
            let stepped = coupled_step(&mu, &omega, &ChainPolicy::BurnIn { fraction: burn_in })?;
            Ok(thin(&stepped, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let (bl, bd) = concat(before);
    let (al, ad) = concat(after);
    let mut reps = Vec::new();
    for i in 0..bl.len() {
        reps.push(ks_two_sample(
            &format!("coupled step preserves line {} (mean {})", i + 1, rates[i]),
            "coupled-invariance",
            &bl[i],
            &al[i],
            alpha(),
            seed,
        )?);
    }
    for i in 0..bd.len() {
        reps.push(ks_two_sample(
            &format!("coupled step preserves difference of lines {} and {}", i + 2, i + 1),
            "coupled-invariance",
            &bd[i],
            &ad[i],
            alpha(),
            seed,
        )?);
    }
    Ok(reps)
}

/// Projection of `mu^(r1,r2,r3)` onto lines 1 and 3 against `mu^(r1,r3)`.
pub fn mu_consistency(
    rates: &[f64; 3],
    samples: usize,
    window: usize,
    gap: usize,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let per = window.div_ceil(gap);
    let replicas = replica_plan(samples, per);
    let rng = RngSpec::new(seed, "consistency");
    let three = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mu = sample_mu_rho(rates, &WindowSpec::new(0, window), &rng.derive("three").replica(r))?;
            Ok((0..window)
                .step_by(gap)
                .map(|k| mu.lines[2].values[k] - mu.lines[0].values[k])
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let two = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mu = sample_mu_rho(
                &[rates[0], rates[2]],
                &WindowSpec::new(0, window),
                &rng.derive("two").replica(r),
            )?;
            Ok((0..window)
                .step_by(gap)
                .map(|k| mu.lines[1].values[k] - mu.lines[0].values[k])
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(vec![ks_two_sample(
        &format!(
            "projection of mu{rates:?} onto lines 1,3 matches mu[{}, {}]",
            rates[0], rates[2]
        ),
        "mu-consistency",
        &three,
        &two,
        alpha(),
        seed,
    )?])
}

/// Increments `eta^2 - eta^1` of `mu^(lambda, rho)`: atom at zero with mass
/// `lambda/rho`, exponential tail of mean `rho`.
pub fn increment_atom(lambda: f64, rho: f64, samples: usize, gap: usize, seed: u64) -> Result<Vec<TestReport>> {
    let window = 64_000usize;
    let per = window.div_ceil(gap);
    let replicas = replica_plan(samples, per);
    let rng = RngSpec::new(seed, "increment");
    let mut d: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mu = sample_mu_rho(&[lambda, rho], &WindowSpec::new(0, window), &rng.replica(r))?;
            Ok((0..window)
                .step_by(gap)
                .map(|k| mu.lines[1].values[k] - mu.lines[0].values[k])
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    d.truncate(samples);
    let law = increment_law(lambda, rho)?;
    let zeros = d.iter().filter(|x| **x == 0.0).count() as u64;
    let tail: Vec<f64> = d.iter().copied().filter(|x| *x > 0.0).collect();
    Ok(vec![
        binomial_test(
            &format!("atom of eta2-eta1 at zero equals {lambda}/{rho}"),
            "increment-law",
            zeros,
            d.len() as u64,
            law.atom(),
            seed,
        )?,
        ks_one_sample(
            &format!("positive part of eta2-eta1 vs Exp mean {rho}"),
            "increment-law",
            &tail,
            exp_cdf(rho),
            alpha(),
            seed,
        )?,
    ])
}

/// Sites of one Busemann replica: `edges` horizontal edges east of the
/// corner and `edges` vertical edges north of it. Together they form a
/// down-right path, so all increments are independent in the limit.
fn l_sites(edges: usize) -> Vec<Point> {
    let mut s: Vec<Point> = (1..=edges as i64).map(|k| Point::new(k, 0)).collect();
    s.extend((1..=edges as i64).map(|j| Point::new(0, j)));
    s
}

/// Horizontal and vertical estimates at two lattice sizes on shared fields.
pub struct BusemannSample {
    pub rhos: Vec<f64>,
    /// `[size][rho]`, sizes `N` and `2N`
    pub horizontal: Vec<Vec<Vec<f64>>>,
    pub vertical: Vec<Vec<Vec<f64>>>,
    /// per replica: horizontal estimates at `N`, `[replica][rho][edge]`
    pub per_replica_h: Vec<Vec<Vec<f64>>>,
    /// edges per arm of the L in each replica
    pub edges: usize,
}

impl BusemannSample {
    /// The first `m` edges of each arm in every replica, `[size][rho]`.
    pub fn nearest(&self, m: usize) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
        let cut = |all: &Vec<Vec<Vec<f64>>>| {
            all.iter()
                .map(|by_rho| {
                    by_rho
                        .iter()
                        .map(|v| {
                            v.chunks(self.edges)
                                .flat_map(|c| c[..m.min(c.len())].iter().copied())
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        (cut(&self.horizontal), cut(&self.vertical))
    }
}

/// Samples `replicas` lattices sized for `2N` and reads the estimator at
/// `N` and `2N` on each (the `N` lattice is nested in the `2N` one).
pub fn busemann_sample(rhos: &[f64], n: usize, replicas: usize, edges: usize, seed: u64) -> Result<BusemannSample> {
    let sites = l_sites(edges);
    let center = Point::new(0, 0);
    let rng = RngSpec::new(seed, "busemann");
    let reps = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let (origin, rows, cols) = estimator_field(&sites, center, rhos, 2 * n)?;
            let w = sample_exp_field(origin, rows, cols, 1.0, &rng.replica(r));
            let a = estimate_busemann_sites(&w, &sites, center, rhos, n)?;
            let b = estimate_busemann_sites(&w, &sites, center, rhos, 2 * n)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut horizontal = vec![vec![Vec::new(); rhos.len()]; 2];
    let mut vertical = vec![vec![Vec::new(); rhos.len()]; 2];
    let mut per_replica_h = Vec::new();
    for (a, b) in &reps {
        for (s, e) in [a, b].into_iter().enumerate() {
            for r in 0..rhos.len() {
                horizontal[s][r].extend_from_slice(&e.horizontal[r][..edges]);
                vertical[s][r].extend_from_slice(&e.vertical[r][edges..]);
            }
        }
        per_replica_h.push(a.horizontal.iter().map(|h| h[..edges].to_vec()).collect());
    }
    Ok(BusemannSample {
        rhos: rhos.to_vec(),
        horizontal,
        vertical,
        per_replica_h,
        edges,
    })
}

/// Marginal laws of the increments on the `marginal_edges` nearest edges
/// of each arm at `N`, and the doubling probe on all edges: the summed KS
/// distance over all `rho` and both orientations must not grow from `N` to
/// `2N`.
pub fn busemann_marginals(
    sample: &BusemannSample,
    n: usize,
    marginal_edges: usize,
    max_distance: f64,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let (near_h, near_v) = sample.nearest(marginal_edges);
    let mut reps = Vec::new();
    let mut total = [0.0f64; 2];
    for (r, &rho) in sample.rhos.iter().enumerate() {
        let vm = rho / (rho - 1.0);
        for s in 0..2 {
            total[s] += ks_statistic(&sample.horizontal[s][r], exp_cdf(rho));
            total[s] += ks_statistic(&sample.vertical[s][r], exp_cdf(vm));
        }
        reps.push(ks_one_sample(
            &format!("horizontal increments at rho {rho}, N {n}, vs Exp mean {rho}"),
            "busemann-marginals",
            &near_h[0][r],
            exp_cdf(rho),
            KsThreshold::Distance(max_distance),
            seed,
        )?);
        reps.push(ks_one_sample(
            &format!("vertical increments at rho {rho}, N {n}, vs Exp mean {vm:.4}"),
            "busemann-marginals",
            &near_v[0][r],
            exp_cdf(vm),
            KsThreshold::Distance(max_distance),
            seed,
        )?);
    }
    let count = sample.horizontal[0].iter().map(|h| h.len() as u64).sum::<u64>() * 2;
    reps.push(TestReport::new(
        format!("doubling probe: summed KS distance at N {} vs N {n}", 2 * n),
        "busemann-convergence",
        total[1],
        total[0],
        count,
        seed,
        total[1] <= total[0],
    ));
    Ok(reps)
}

/// Adjacent horizontal increments on a level are uncorrelated, and
/// so are the horizontal and vertical increments at the corner of the L.
pub fn busemann_independence(sample: &BusemannSample, seed: u64) -> Result<Vec<TestReport>> {
    let mut reps = Vec::new();
    for (r, rho) in sample.rhos.iter().enumerate() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for rep in &sample.per_replica_h {
            let h = &rep[r];
            for k in (0..h.len() - 1).step_by(2) {
                a.push(h[k]);
                b.push(h[k + 1]);
            }
        }
        reps.push(correlation_test(
            &format!("adjacent horizontal increments uncorrelated at rho {rho}"),
            "busemann-independence",
            &a,
            &b,
            seed,
        )?);
        let edges = sample.per_replica_h[0][r].len();
        let h0: Vec<f64> = sample.horizontal[0][r].iter().step_by(edges).copied().collect();
        let v0: Vec<f64> = sample.vertical[0][r].iter().step_by(edges).copied().collect();
        reps.push(correlation_test(
            &format!("horizontal and vertical increments at the path corner uncorrelated at rho {rho}"),
            "busemann-independence",
            &h0,
            &v0,
            seed,
        )?);
    }
    Ok(reps)
}

/// Vertical increments at `rho` against horizontal ones at `rho/(rho-1)`.
pub fn busemann_flip(rho: f64, n: usize, replicas: usize, edges: usize, seed: u64) -> Result<Vec<TestReport>> {
    let dual = rho / (rho - 1.0);
    let s = busemann_sample(&[rho, dual], n / 2, replicas, edges, seed)?;
    Ok(vec![ks_two_sample(
        &format!("vertical law at rho {rho} equals horizontal law at rho {dual:.4}"),
        "busemann-flip",
        &s.vertical[1][0],
        &s.horizontal[1][1],
        alpha(),
        seed,
    )?])
}

/// Reversibility of the difference process `eta^2 - eta^1` under
/// `mu^(lambda, rho)` (the law of `B^rho - B^lambda` along a level), and
/// the lack of it for the pair process.
pub fn difference_reversibility(
    lambda: f64,
    rho: f64,
    samples: usize,
    gap: usize,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let window = 64_000usize;
    let per = window.div_ceil(gap);
    let replicas = replica_plan(samples, per);
    let rng = RngSpec::new(seed, "reversibility");
    // (forward projection, backward projection, eta1_k, eta2_{k+1}, eta1_{k+1}, eta2_k)
    let rows = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<[f64; 6]>> {
            let mu = sample_mu_rho(&[lambda, rho], &WindowSpec::new(0, window), &rng.replica(r))?;
            let (e1, e2) = (&mu.lines[0].values, &mu.lines[1].values);
            Ok((0..window - 1)
                .step_by(gap)
                .map(|k| {
                    let d0 = e2[k] - e1[k];
                    let d1 = e2[k + 1] - e1[k + 1];
                    [d0 - 2.0 * d1, d1 - 2.0 * d0, e1[k], e2[k + 1], e1[k + 1], e2[k]]
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let half = rows.len() / 2;
    let fwd: Vec<f64> = rows[..half].iter().map(|x| x[0]).collect();
    let bwd: Vec<f64> = rows[half..].iter().map(|x| x[1]).collect();
    let mut reps = vec![ks_two_sample(
        &format!("differences reversible: (D_k, D_k+1) vs (D_k+1, D_k) at ({lambda}, {rho})"),
        "difference-reversibility",
        &fwd,
        &bwd,
        alpha(),
        seed,
    )?];
    let col = |i: usize| rows.iter().map(|x| x[i]).collect::<Vec<f64>>();
    let r_fwd = cgm_core::multiclass::pearson(&col(2), &col(3));
    let r_bwd = cgm_core::multiclass::pearson(&col(4), &col(5));
    let t = 4.0 * 2f64.sqrt() / (rows.len() as f64).sqrt();
    let stat = (r_fwd - r_bwd).abs();
    reps.push(TestReport::new(
        format!("pair process not reversible: lag-one cross correlations differ at ({lambda}, {rho})"),
        "pair-irreversibility",
        stat,
        t,
        rows.len() as u64,
        seed,
        stat > t,
    ));
    Ok(reps)
}

/// Exact pmf with a tail bin for `n > max_n`.
fn pmf_with_tail(mut p: Vec<f64>) -> Vec<f64> {
    let tail = (1.0 - p.iter().sum::<f64>()).max(0.0);
    p.push(tail);
    p
}

/// Sum of `pmf(0..)` until a term drops below `1e-15`.
pub fn pmf_total(lambda: f64, rho: f64) -> Result<f64> {
    let mut max_n = 64;
    loop {
        let p = initial_run_pmf2_vec(lambda, rho, max_n)?;
        let last = *p.last().unwrap_or(&0.0);
        if (last < 1e-15 && max_n > 8) || max_n >= 1 << 14 {
            return Ok(p.iter().sum());
        }
        max_n *= 2;
    }
}

/// Initial runs of Busemann geodesics on sampled lattices against the
/// exact pmf, bins `0..=max_n` plus a merged tail.
pub fn geodesic_runs(
    rho: f64,
    n: usize,
    lattices: usize,
    starts: usize,
    spacing: usize,
    max_n: usize,
    seed: u64,
) -> Result<(Vec<TestReport>, Vec<u64>, Vec<f64>)> {
    let rng = RngSpec::new(seed, "geodesic-runs");
    let runs: Vec<usize> = (0..lattices as u64)
        .into_par_iter()
        .map(|r| initial_runs_from_lattice(rho, n, starts, spacing, &rng.replica(r)))
        .collect::<Result<Vec<_>>>()?
        .concat()
        .into_iter()
        .map(|r| r.unwrap_or(usize::MAX))
        .collect();
    let h = initial_run_statistics(&runs, max_n);
    let probs = pmf_with_tail(initial_run_pmf_vec(rho, max_n)?);
    let total = pmf_total(1.0, rho)?;
    let reps = vec![
        chi_square_report(
            &format!("initial -e1 runs at rho {rho}, N {n} vs exact pmf"),
            "initial-run-pmf",
            &h.counts,
            &probs,
            5.0,
            DEFAULT_ALPHA,
            seed,
        )?,
        TestReport::identity(
            format!("exact run pmf at rho {rho} sums to one"),
            "initial-run-pmf",
            (total - 1.0).abs(),
            1e-10,
            0,
            seed,
        ),
    ];
    Ok((reps, h.counts, probs))
}

/// Runs of waiting customers in a stationary queue with service mean
/// `lambda` and inter-arrival mean `rho`, one run per independent window.
pub fn wait_runs(lambda: f64, rho: f64, samples: usize, max_n: usize, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, format!("wait-runs/{lambda}/{rho}"));
    let len = 400usize;
    let runs: Vec<usize> = (0..samples as u64)
        .into_par_iter()
        .map(|r| -> Result<usize> {
            let rr = rng.replica(r);
            let i = sample_exp_window(0, len, rho, &rr.derive("I"));
            let w = sample_exp_window(0, len, lambda, &rr.derive("w"));
            let policy = BoundaryPolicy::StationaryExp {
                arrival_mean: rho,
                service_mean: lambda,
                rng: rr.derive("J"),
            };
            let ind = wait_indicator_run(&i, &w, &policy)?;
            Ok(ind.run_left(len as i64 - 1).unwrap_or(usize::MAX))
        })
        .collect::<Result<_>>()?;
    let h = initial_run_statistics(&runs, max_n);
    let probs = pmf_with_tail(initial_run_pmf2_vec(lambda, rho, max_n)?);
    Ok(vec![chi_square_report(
        &format!("waiting runs, service mean {lambda}, arrival mean {rho}, vs exact pmf"),
        "wait-indicator-runs",
        &h.counts,
        &probs,
        5.0,
        DEFAULT_ALPHA,
        seed,
    )?])
}

/// Empirical CDF of `rho*(x)` at each `lambda`, one site per lattice.
pub fn rho_star_law(n: usize, sites: usize, lambdas: &[f64], max_dev: f64, seed: u64) -> Result<Vec<TestReport>> {
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rng = RngSpec::new(seed, "rho-star");
    let below: Vec<Vec<bool>> = (0..sites as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<bool>> {
            let (origin, rows, cols, pts) = rho_star_lattice(n, 1, 1, lo, hi)?;
            let w = sample_exp_field(origin, rows, cols, 1.0, &rng.replica(r));
            let lab = subtree_labels(&w, pts[0])?;
            lambdas.iter().map(|l| Ok(!rho_star_exceeds(&lab, *l, n)?)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let f = below.iter().filter(|b| b[i]).count() as f64 / sites as f64;
            let dev = (f - rho_star_cdf(*l)).abs();
            TestReport::new(
                format!("empirical P(rho* <= {l}) = {f:.4} vs {:.4}", rho_star_cdf(*l)),
                "rho-star-law",
                dev,
                max_dev,
                sites as u64,
                seed,
                dev < max_dev,
            )
        })
        .collect())
}

/// Monte Carlo estimates of `P(A_n)` and `P(B_n)` for two Poisson streams,
/// and the truncated sum of `P(B_n)`.
pub fn poisson_competition(pairs: &[(f64, f64)], replicas: usize, max_n: usize, seed: u64) -> Result<Vec<TestReport>> {
    let mut reps = Vec::new();
    for &(a, b) in pairs {
        let pc = PoissonCompetition::new(a, b)?;
        let rng = RngSpec::new(seed, format!("poisson/{a}/{b}"));
        let chunks = 100usize;
        let per = replicas.div_ceil(chunks);
        let counts: Vec<(Vec<u64>, Vec<u64>)> = (0..chunks as u64)
            .into_par_iter()
            .map(|c| {
                let mut s = rng.replica(c).stream();
                let mut ca = vec![0u64; max_n + 1];
                let mut cb = vec![0u64; max_n + 1];
                for _ in 0..per {
                    let (mut sig, mut tau) = (0.0, 0.0);
                    for n in 1..=max_n {
                        sig += s.exp(1.0 / a);
                        tau += s.exp(1.0 / b);
                        if sig < tau {
                            ca[n] += 1;
                        } else {
                            cb[n] += 1;
                            break;
                        }
                    }
                }
                (ca, cb)
            })
            .collect();
        let total = (per * chunks) as u64;
        for n in 1..=max_n {
            let ha: u64 = counts.iter().map(|c| c.0[n]).sum();
            let hb: u64 = counts.iter().map(|c| c.1[n]).sum();
            reps.push(binomial_test(
                &format!("P(A_{n}) at alpha {a}, beta {b}"),
                "poisson-competition",
                ha,
                total,
                pc.a_prob(n),
                seed,
            )?);
            reps.push(binomial_test(
                &format!("P(B_{n}) at alpha {a}, beta {b}"),
                "poisson-competition",
                hb,
                total,
                pc.b_prob(n)?,
                seed,
            )?);
        }
        let want = (b / a).min(1.0);
        let terms = 100_000;
        let sum: f64 = pc.b_probs(terms).iter().sum();
        reps.push(TestReport::identity(
            format!("truncated sum of P(B_n) at alpha {a}, beta {b} equals {want}"),
            "poisson-competition",
            (sum - want).abs(),
            1e-6,
            terms as u64,
            seed,
        ));
    }
    Ok(reps)
}

/// `X(1)`, the increments over `[1,2]` and `[2,4]`, and the point count on
/// `(1, e]`.
pub fn x_process(samples: usize, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "x-process");
    let vals: Vec<[f64; 4]> = (0..samples as u64)
        .into_par_iter()
        .map(|r| -> Result<[f64; 4]> {
            let x = sample_x_process(4.0, &rng.derive("x").replica(r))?;
            let (x1, x2, x4) = (x.eval(1.0), x.eval(2.0), x.eval(4.0));
            Ok([x1, x2 - x1, x4 - x2, x.count(1.0, std::f64::consts::E) as f64])
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| vals.iter().map(|v| v[i]).collect::<Vec<f64>>();
    let l12 = increment_law(1.0, 2.0)?.sample(samples, &rng.derive("law12"));
    let l24 = increment_law(2.0, 4.0)?.sample(samples, &rng.derive("law24"));
    Ok(vec![
        ks_one_sample("X(1) vs Exp mean 1", "x-process", &col(0), exp_cdf(1.0), alpha(), seed)?,
        ks_two_sample(
            "X(2)-X(1) vs increment law (1,2)",
            "x-process",
            &col(1),
            &l12,
            alpha(),
            seed,
        )?,
        ks_two_sample(
            "X(4)-X(2) vs increment law (2,4)",
            "x-process",
            &col(2),
            &l24,
            alpha(),
            seed,
        )?,
        mean_test(
            "mean point count on (1,e] equals 1",
            "x-process",
            &col(3),
            1.0,
            1.0,
            seed,
        )?,
    ])
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |a, b| a * BigUint::from(b))
}

/// Row partial sums, row sums and the factorial formula of the Catalan
/// triangle, in exact integers.
pub fn catalan_identities(max_sum_n: usize, max_formula_n: usize) -> Vec<TestReport> {
    let tri = CatalanTriangle::new(max_sum_n + 1);
    let mut partial = 0u64;
    let mut rows = 0u64;
    let mut checked = 0u64;
    for n in 0..=max_sum_n {
        let mut acc = BigUint::from(0u32);
        for i in 0..=n {
            acc += tri.get(n, i);
            checked += 1;
            if acc != tri.get(n + 1, i) {
                partial += 1;
            }
        }
        if acc != catalan_number(n + 1) {
            rows += 1;
        }
    }
    let mut formula = 0u64;
    let mut fchecked = 0u64;
    for n in 0..=max_formula_n {
        for k in 0..=n {
            let f = factorial(n + k) * BigUint::from(n - k + 1) / (factorial(k) * factorial(n + 1));
            fchecked += 1;
            if f != tri.get(n, k) {
                formula += 1;
            }
        }
    }
    vec![
        TestReport::new(
            format!("row partial sums equal the next row, n <= {max_sum_n}"),
            "catalan-identities",
            partial as f64,
            0.0,
            checked,
            0,
            partial == 0,
        ),
        TestReport::new(
            format!("row sums equal C_(n+1), n <= {max_sum_n}"),
            "catalan-identities",
            rows as f64,
            0.0,
            max_sum_n as u64 + 1,
            0,
            rows == 0,
        ),
        TestReport::new(
            format!("recurrence equals factorial formula, n <= {max_formula_n}"),
            "catalan-identities",
            formula as f64,
            0.0,
            fchecked,
            0,
            formula == 0,
        ),
    ]
}

/// `G_{(-N,-N),0} / N` per seed; above `hi` fails, below `lo` only warns.
pub fn shape_trend(n: usize, seeds: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "shape");
    let vals: Vec<f64> = (0..seeds as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let o = Point::new(-(n as i64), -(n as i64));
            let w = sample_exp_field(o, n + 1, n + 1, 1.0, &rng.replica(r));
            let g = lpp_grid(&w, o)?;
            Ok(g.value(Point::new(0, 0)) / n as f64)
        })
        .collect::<Result<_>>()?;
    Ok(vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if *v < lo {
                log::warn!("G/N = {v:.4} below the expected band [{lo}, {hi}] for replica {i}");
            }
            TestReport::new(
                format!("G/N at N {n}, replica {i}: {v:.4} (empirical budget)"),
                "shape-function",
                *v,
                hi,
                1,
                seed,
                *v <= hi,
            )
        })
        .collect())
}

/// `D` monotone in its arrivals and in the number of stages.
pub fn queue_monotonicity(instances: usize, window: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "monotonicity");
    let all: Vec<Vec<IdentityReport>> = (0..instances as u64)
        .into_par_iter()
        .map(|r| {
            let rr = base.replica(r);
            let q = queue_instance(&rr, window);
            let bump = sample_exp_window(1, window, 0.5, &rr.derive("bump"));
            let bigger = cgm_core::SeqWindow::new(
                1,
                q.arrivals.values.iter().zip(&bump.values).map(|(a, b)| a + b).collect(),
            );
            let extra = sample_exp_window(1, window, 5.0, &rr.derive("extra"));
            cgm_core::queueing::check_monotonicity(&q.arrivals, &bigger, &q.services, &extra)
        })
        .collect::<Result<_>>()?;
    Ok(merge_identities("queue", "queue-monotonicity", seed, all))
}

/// Coupled step after the coupled map against the coupled map after the
/// multiline step, from empty queues.
pub fn intertwining(rates: &[f64], instances: usize, window: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "intertwining");
    let all: Vec<Vec<IdentityReport>> = (0..instances as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<IdentityReport>> {
            let rr = base.replica(r);
            let config = sample_product_exp(rates, 0, window, &rr.derive("I"));
            let omega = sample_exp_window(0, window, 1.0, &rr.derive("w"));
            Ok(vec![cgm_core::multiclass::check_intertwining_dynamics(
                &config,
                &omega,
                &ChainPolicy::BurnIn { fraction: 0.2 },
            )?])
        })
        .collect::<Result<_>>()?;
    Ok(merge_identities("multiclass", "intertwining", seed, all))
}

/// Correlations among the variables of the triangular arrays that are
/// independent under the product measure, read at the last index.
pub fn triangular_independence(rates: &[f64], replicas: usize, window: usize, seed: u64) -> Result<Vec<TestReport>> {
    let base = RngSpec::new(seed, "triangular");
    let policy = ChainPolicy::BurnIn { fraction: 0.5 };
    let arrays = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let config = sample_product_exp(rates, 0, window, &base.replica(r));
            cgm_core::multiclass::build_triangular_arrays(&config, &policy)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = arrays[0].eta[0][0].end() - 1;
    let c = cgm_core::multiclass::check_independence_structure(&arrays, k)?;
    Ok(vec![TestReport::new(
        format!("triangular array variables uncorrelated ({} variables)", c.names.len()),
        "triangular-independence",
        c.max_abs,
        c.threshold,
        c.samples as u64,
        seed,
        c.pass,
    )])
}

/// Busemann geodesics from `x` and `x + gap e1` meet within `n/2` steps.
pub fn coalescence(rho: f64, n: usize, gap: usize, replicas: usize, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "coalescence");
    let hits = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let x = run_starts(rho, n, 1, 0)?[0];
            let y = Point::new(x.x + gap as i64, x.y);
            let w = sample_exp_field(
                Point::new(0, 0),
                (y.y + 1) as usize,
                (y.x + 1) as usize,
                1.0,
                &rng.replica(r),
            );
            let g = lpp_grid(&w, Point::new(0, 0))?;
            let a = busemann_geodesic(&g, x, n / 2)?;
            let b = busemann_geodesic(&g, y, n / 2 + gap)?;
            Ok(coalescence_point(&a, &b).is_some())
        })
        .collect::<Result<Vec<_>>>()?;
    let f = hits.iter().filter(|h| **h).count() as f64 / replicas as f64;
    Ok(vec![TestReport::new(
        format!(
            "geodesics {gap} apart at rho {rho} coalesce within {} steps in {f:.3} of cases (empirical budget)",
            n / 2
        ),
        "coalescence",
        f,
        0.9,
        replicas as u64,
        seed,
        f >= 0.9,
    )])
}

/// Mean normalized displacement of the first `n/2` Busemann geodesic steps
/// against `-u(rho)` in l1 norm.
pub fn directedness(rho: f64, n: usize, replicas: usize, tol: f64, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "directedness");
    let d = direction_of_rho(rho)?;
    let disp = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let x = run_starts(rho, 2 * n, 1, 0)?[0];
            let w = sample_exp_field(
                Point::new(0, 0),
                (x.y + 1) as usize,
                (x.x + 1) as usize,
                1.0,
                &rng.replica(r),
            );
            let g = lpp_grid(&w, Point::new(0, 0))?;
            let p = busemann_geodesic(&g, x, n / 2)?;
            let e = p.end();
            let steps = p.steps.len() as f64;
            Ok(((x.x - e.x) as f64 / steps, (x.y - e.y) as f64 / steps))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = replicas as f64;
    let mx = disp.iter().map(|v| v.0).sum::<f64>() / m;
    let my = disp.iter().map(|v| v.1).sum::<f64>() / m;
    let err = (mx + d.u.0).abs() + (my + d.u.1).abs();
    Ok(vec![TestReport::new(
        format!(
            "geodesic direction at rho {rho}: ({mx:.4}, {my:.4}) vs ({:.4}, {:.4}) (empirical budget)",
            -d.u.0, -d.u.1
        ),
        "geodesic-direction",
        err,
        tol,
        replicas as u64,
        seed,
        err < tol,
    )])
}

/// The vertical share of the competition interface's displacement grows
/// with `rho*`: positive correlation beyond `4/sqrt(N)`.
pub fn interface_direction(n: usize, sites: usize, seed: u64) -> Result<Vec<TestReport>> {
    let rng = RngSpec::new(seed, "interface");
    let grid: Vec<f64> = (1..=40).map(|i| 1.0 + 0.1 * i as f64).collect();
    let pairs = (0..sites as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let (origin, rows, cols, pts) = rho_star_lattice(n, 1, 1, grid[0], grid[grid.len() - 1])?;
            let w = sample_exp_field(origin, rows, cols, 1.0, &rng.replica(r));
            let lab = subtree_labels(&w, pts[0])?;
            let est = rho_star_bracket(&lab, &grid, n)?.estimate();
            let path = competition_interface(&lab, n / 2);
            let e = path.end();
            let (dx, dy) = ((lab.target.x - e.x) as f64, (lab.target.y - e.y) as f64);
            Ok((est, dy / (dx + dy).max(1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let r = cgm_core::multiclass::pearson(&a, &b);
    let t = 4.0 / (sites as f64).sqrt();
    Ok(vec![TestReport::new(
        format!("interface direction follows rho*: correlation {r:.3}"),
        "competition-interface",
        r,
        t,
        sites as u64,
        seed,
        r > t,
    )])
}

/// Exact run pmf sums to one for several parameter pairs.
pub fn pmf_sums(pairs: &[(f64, f64)]) -> Result<Vec<TestReport>> {
    pairs
        .iter()
        .map(|&(l, r)| {
            let mut max_n = 64;
            let total = loop {
                let p = initial_run_pmf2_vec(l, r, max_n)?;
                if *p.last().unwrap_or(&0.0) < 1e-15 || max_n >= 1 << 14 {
                    break p.iter().sum::<f64>();
                }
                max_n *= 2;
            };
            Ok(TestReport::identity(
                format!("run pmf at ({l}, {r}) sums to one"),
                "initial-run-pmf",
                (total - 1.0).abs(),
                1e-10,
                max_n as u64,
                0,
            ))
        })
        .collect()
}

/// Laplace transform of the increment law against Simpson quadrature of
/// its density plus the atom.
pub fn laplace_quadrature(cases: &[(f64, f64, f64)]) -> Result<Vec<TestReport>> {
    cases
        .iter()
        .map(|&(l, r, t)| {
            let law = increment_law(l, r)?;
            let dens = |s: f64| (-t * s).exp() * (1.0 - law.atom()) / r * (-s / r).exp();
            let (b, m) = (60.0 * r, 20_000usize);
            let h = b / m as f64;
            let mut acc = dens(0.0) + dens(b);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * dens(i as f64 * h);
            }
            let numeric = law.atom() + acc * h / 3.0;
            Ok(TestReport::identity(
                format!("Laplace transform at ({l}, {r}), t = {t}"),
                "increment-law",
                (numeric - law.laplace(t)).abs(),
                1e-9,
                m as u64,
                0,
            ))
        })
        .collect()
}
