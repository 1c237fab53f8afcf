//! Moderate-size statistical checks of stationarity, at significance 0.001
//! with fixed seeds.

use cgm_core::busemann::{initial_run_statistics, wait_indicator_run};
use cgm_core::exact::initial_run_pmf2_vec;
use cgm_core::lpp::stationary_halfplane_lpp;
use cgm_core::multiclass::{sample_mu_rho, WindowSpec};
use cgm_core::queueing::{run_queue, BoundaryPolicy};
use cgm_core::rng::{sample_exp_field, sample_exp_window};
use cgm_core::stats::{chi_square_pmf, ks_one_sample, KsThreshold};
use cgm_core::{Point, RngSpec};

fn exp_cdf(mean: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x / mean).exp() }
}

#[test]
fn stationary_queue_departures_are_exponential() {
    let rng = RngSpec::new(17, "burke");
    let n = 20_000;
    let i = sample_exp_window(0, n, 2.5, &rng.derive("I"));
    let w = sample_exp_window(0, n, 1.0, &rng.derive("w"));
    let policy = BoundaryPolicy::StationaryExp {
        arrival_mean: 2.5,
        service_mean: 1.0,
        rng: rng.derive("J"),
    };
    let out = run_queue(&i, &w, &policy).unwrap();
    let thin: Vec<f64> = out.departures.values.iter().step_by(4).copied().collect();
    let r = ks_one_sample(
        "departures",
        "burke",
        &thin,
        exp_cdf(2.5),
        KsThreshold::Alpha(0.001),
        17,
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    let thin: Vec<f64> = out.dual_service.values.iter().step_by(4).copied().collect();
    let r = ks_one_sample(
        "dual services",
        "burke",
        &thin,
        exp_cdf(1.0),
        KsThreshold::Alpha(0.001),
        17,
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn mu_rho_is_stationary_under_halfplane_growth() {
    let (len, levels) = (4000usize, 50usize);
    let rates = [1.5, 3.0];
    let mut by_line = vec![Vec::new(); 2];
    for rep in 0..10u64 {
        let rng = RngSpec::new(23, "mu-growth").replica(rep);
        let init = sample_mu_rho(&rates, &WindowSpec::new(0, len), &rng.derive("mu")).unwrap();
        let w = sample_exp_field(Point::new(-1, 1), levels, len + 1, 1.0, &rng.derive("w"));
        let last = stationary_halfplane_lpp(&init, &w).unwrap().pop().unwrap();
        for (i, l) in last.lines.iter().enumerate() {
            // the left boundary column is not stationary; skip its influence
            by_line[i].extend(l.values[len / 2..].iter().step_by(10));
        }
    }
    for (i, v) in by_line.iter().enumerate() {
        let r = ks_one_sample(
            "line",
            "stationarity",
            v,
            exp_cdf(rates[i]),
            KsThreshold::Alpha(0.001),
            23,
        )
        .unwrap();
        assert!(r.pass, "line {i}: {r:?}");
    }
}

#[test]
fn waiting_runs_follow_the_exact_pmf() {
    let (lambda, rho, max_n) = (1.0, 3.0, 6);
    let rng = RngSpec::new(31, "wait");
    let runs: Vec<usize> = (0..5000u64)
        .map(|r| {
            let rr = rng.replica(r);
            let i = sample_exp_window(0, 200, rho, &rr.derive("I"));
            let w = sample_exp_window(0, 200, lambda, &rr.derive("w"));
            let p = BoundaryPolicy::StationaryExp {
                arrival_mean: rho,
                service_mean: lambda,
                rng: rr.derive("J"),
            };
            wait_indicator_run(&i, &w, &p)
                .unwrap()
                .run_left(199)
                .unwrap_or(usize::MAX)
        })
        .collect();
    let h = initial_run_statistics(&runs, max_n);
    let mut p = initial_run_pmf2_vec(lambda, rho, max_n).unwrap();
    p.push(1.0 - p.iter().sum::<f64>());
    let c = chi_square_pmf(&h.counts, &p, 5.0).unwrap();
    assert!(c.p_value > 0.001, "{c:?}");
}
