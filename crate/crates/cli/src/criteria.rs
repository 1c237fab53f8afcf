//! The thirteen acceptance criteria at their reference sizes.

use crate::checks;
use crate::policy::{run_with_policy, Outcome};
use cgm_core::stats::TestReport;
use cgm_core::Result;
use std::time::{Duration, Instant};

pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    /// Wall-clock budget on the reference machine.
    pub budget: Duration,
    /// Seeded and statistical, so the retry policy applies.
    pub statistical: bool,
    pub run: fn(u64) -> Result<Vec<TestReport>>,
}

pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub outcome: Outcome,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        self.outcome.pass
    }

    /// One summary line, `PASS` or `FAIL` first.
    pub fn line(&self) -> String {
        let best = self.outcome.best();
        let failed: Vec<&str> = best
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.name.as_str())
            .collect();
        let mut s = format!(
            "{} criterion {:>2} {:<28} {:>3}/{:<3} tests, {} run(s), seed {}, {:.1}s (budget {}s)",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            best.reports.iter().filter(|r| r.pass).count(),
            best.reports.len(),
            self.outcome.attempts.len(),
            best.seed,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
        );
        if !failed.is_empty() {
            s.push_str(&format!("; failing: {}", failed.join("; ")));
        }
        s
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const RATES: [f64; 3] = [1.5, 2.0, 4.0];

fn c1(seed: u64) -> Result<Vec<TestReport>> {
    checks::lpp_oracle(100, 6, seed)
}

fn c2(seed: u64) -> Result<Vec<TestReport>> {
    checks::queueing_identities(200, 1000, seed)
}

fn c3(seed: u64) -> Result<Vec<TestReport>> {
    checks::strip_identities(100, 1000, seed)
}

fn c4(seed: u64) -> Result<Vec<TestReport>> {
    checks::multiline_invariance(&RATES, 100_000, seed)
}

fn c5(seed: u64) -> Result<Vec<TestReport>> {
    checks::coupled_invariance(&RATES, 100_000, 20_000, 200, 0.2, seed)
}

fn c6(seed: u64) -> Result<Vec<TestReport>> {
    let s = checks::busemann_sample(&RATES, 1500, 40, 250, seed)?;
    checks::busemann_marginals(&s, 1500, 50, 0.04, seed)
}

fn c7(seed: u64) -> Result<Vec<TestReport>> {
    checks::increment_atom(1.5, 3.0, 100_000, 64, seed)
}

fn c8(seed: u64) -> Result<Vec<TestReport>> {
    Ok(checks::geodesic_runs(2.0, 800, 500, 20, 40, 8, seed)?.0)
}

fn c9(seed: u64) -> Result<Vec<TestReport>> {
    checks::rho_star_law(1000, 2000, &[1.25, 2.0, 4.0], 0.03, seed)
}

fn c10(seed: u64) -> Result<Vec<TestReport>> {
    checks::poisson_competition(&[(1.0, 2.0), (2.0, 1.0)], 1_000_000, 3, seed)
}

fn c11(seed: u64) -> Result<Vec<TestReport>> {
    checks::x_process(100_000, seed)
}

fn c12(_seed: u64) -> Result<Vec<TestReport>> {
    Ok(checks::catalan_identities(30, 25))
}

fn c13(seed: u64) -> Result<Vec<TestReport>> {
    checks::shape_trend(1500, 20, 3.8, 4.05, seed)
}

pub fn all() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "LPP oracle",
            budget: secs(5),
            statistical: false,
            run: c1,
        },
        Criterion {
            id: 2,
            title: "queueing identities",
            budget: secs(10),
            statistical: false,
            run: c2,
        },
        Criterion {
            id: 3,
            title: "strip formulas",
            budget: secs(5),
            statistical: false,
            run: c3,
        },
        Criterion {
            id: 4,
            title: "multiline invariance",
            budget: secs(30),
            statistical: true,
            run: c4,
        },
        Criterion {
            id: 5,
            title: "coupled invariance",
            budget: secs(60),
            statistical: true,
            run: c5,
        },
        Criterion {
            id: 6,
            title: "Busemann marginals",
            budget: secs(180),
            statistical: true,
            run: c6,
        },
        Criterion {
            id: 7,
            title: "increment atom",
            budget: secs(30),
            statistical: true,
            run: c7,
        },
        Criterion {
            id: 8,
            title: "geodesic run length",
            budget: secs(180),
            statistical: true,
            run: c8,
        },
        Criterion {
            id: 9,
            title: "rho* law",
            budget: secs(120),
            statistical: true,
            run: c9,
        },
        Criterion {
            id: 10,
            title: "Poisson competition",
            budget: secs(30),
            statistical: true,
            run: c10,
        },
        Criterion {
            id: 11,
            title: "X-process",
            budget: secs(30),
            statistical: true,
            run: c11,
        },
        Criterion {
            id: 12,
            title: "Catalan identities",
            budget: secs(1),
            statistical: false,
            run: c12,
        },
        Criterion {
            id: 13,
            title: "shape trend",
            budget: secs(120),
            statistical: true,
            run: c13,
        },
    ]
}

pub fn run_criterion(c: &Criterion, seed: u64) -> Result<CriterionResult> {
    let t = Instant::now();
    let outcome = run_with_policy(seed, c.statistical, c.run)?;
    Ok(CriterionResult {
        id: c.id,
        title: c.title,
        outcome,
        elapsed: t.elapsed(),
        budget: c.budget,
    })
}
