//! Subcommand bodies: verification suites and data dumps.

use crate::checks;
use crate::config::{ConfigError, ExperimentConfig};
use crate::criteria;
use crate::output::{OutDir, OutputError};
use crate::policy::{run_with_policy, Outcome};
use cgm_core::busemann::{competition_interface, sample_busemann_level, subtree_labels};
use cgm_core::lpp::{backtrack_geodesic, lpp_grid};
use cgm_core::multiclass::{sample_mu_rho, WindowSpec};
use cgm_core::rng::sample_exp_field;
use cgm_core::stats::TestReport;
use cgm_core::{Point, RngSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Core(#[from] cgm_core::Error),
}

impl RunError {
    /// Exit status: 2 for usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(OutputError::Exists(_)) => 2,
            _ => 1,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VerifyQueueing,
    VerifyMultiline,
    VerifyCoupled,
    VerifyBusemann,
    VerifyGeodesics,
    VerifyExact,
    SimulateLpp,
    SampleMu,
    Acceptance,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::VerifyQueueing,
        Experiment::VerifyMultiline,
        Experiment::VerifyCoupled,
        Experiment::VerifyBusemann,
        Experiment::VerifyGeodesics,
        Experiment::VerifyExact,
        Experiment::SimulateLpp,
        Experiment::SampleMu,
        Experiment::Acceptance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyQueueing => "verify-queueing",
            Experiment::VerifyMultiline => "verify-multiline",
            Experiment::VerifyCoupled => "verify-coupled",
            Experiment::VerifyBusemann => "verify-busemann",
            Experiment::VerifyGeodesics => "verify-geodesics",
            Experiment::VerifyExact => "verify-exact",
            Experiment::SimulateLpp => "simulate-lpp",
            Experiment::SampleMu => "sample-mu",
            Experiment::Acceptance => "acceptance",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

const RATES: [f64; 3] = [1.5, 2.0, 4.0];

/// Configuration with every suite default filled in.
#[derive(Debug, Clone)]
pub struct Params {
    pub seed: u64,
    pub rates: Vec<f64>,
    pub n: usize,
    pub window: usize,
    pub burn_in: f64,
    pub replicas: usize,
    pub instances: usize,
    pub samples: usize,
}

fn invalid(m: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid(m.into()))
}

impl Params {
    /// Fills defaults for `e` and checks constraints specific to it.
    pub fn resolve(e: Experiment, c: &ExperimentConfig, seed: u64) -> RunResult<Self> {
        c.validate()?;
        use Experiment::*;
        let (n, window, replicas, instances, samples) = match e {
            VerifyQueueing => (0, 1000, 0, 200, 0),
            VerifyMultiline => (0, 0, 0, 0, 100_000),
            VerifyCoupled => (0, 20_000, 2000, 50, 100_000),
            VerifyBusemann => (1500, 0, 40, 0, 100_000),
            VerifyGeodesics => (800, 0, 500, 0, 2000),
            VerifyExact => (0, 0, 1_000_000, 0, 100_000),
            SimulateLpp => (100, 0, 0, 0, 0),
            SampleMu => (0, 1000, 0, 0, 0),
            Acceptance => (0, 0, 0, 0, 0),
        };
        let rates = match e {
            VerifyGeodesics => vec![2.0],
            _ => RATES.to_vec(),
        };
        let p = Params {
            seed,
            rates: c.rates.clone().unwrap_or(rates),
            n: c.n.unwrap_or(n),
            window: c.window.unwrap_or(window),
            burn_in: c.burn_in.unwrap_or(0.2),
            replicas: c.replicas.unwrap_or(replicas),
            instances: c.instances.unwrap_or(instances),
            samples: c.samples.unwrap_or(samples),
        };
        match e {
            VerifyQueueing if p.window < 10 => return Err(invalid("window must be at least 10")),
            VerifyMultiline if p.samples < 100 => return Err(invalid("samples must be at least 100")),
            VerifyCoupled if p.window < 1000 => return Err(invalid("window must be at least 1000")),
            VerifyCoupled if p.samples < 1000 => return Err(invalid("samples must be at least 1000")),
            VerifyBusemann if p.n < 200 => return Err(invalid("n must be at least 200")),
            VerifyBusemann if p.samples < 1000 => return Err(invalid("samples must be at least 1000")),
            VerifyGeodesics if p.n < 100 => return Err(invalid("n must be at least 100")),
            VerifyGeodesics if p.samples < 10 => return Err(invalid("samples must be at least 10")),
            VerifyExact if p.samples < 100 || p.replicas < 100 => {
                return Err(invalid("samples and replicas must be at least 100"))
            }
            SimulateLpp if p.n < 2 => return Err(invalid("n must be at least 2")),
            _ => {}
        }
        Ok(p)
    }
}

pub fn verify_queueing(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    let mut r = checks::queueing_identities(p.instances, p.window, seed)?;
    r.extend(checks::strip_identities(p.instances, p.window, seed)?);
    r.extend(checks::queue_monotonicity(p.instances, p.window, seed)?);
    Ok(r)
}

pub fn verify_multiline(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    checks::multiline_invariance(&p.rates, p.samples, seed)
}

pub fn verify_coupled(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    let mut r = checks::coupled_invariance(&p.rates, p.samples, p.window, 200, p.burn_in, seed)?;
    if p.rates.len() >= 3 {
        let three = [p.rates[0], p.rates[p.rates.len() / 2], p.rates[p.rates.len() - 1]];
        r.extend(checks::mu_consistency(&three, p.samples, p.window, 200, seed)?);
    }
    if p.rates.len() >= 2 {
        r.extend(checks::intertwining(&p.rates, p.instances, 2000, seed)?);
        r.extend(checks::triangular_independence(&p.rates, p.replicas, 2000, seed)?);
    }
    Ok(r)
}

/// Two distinct rates in increasing order, falling back to `(1.5, 3)`.
fn rate_pair(rates: &[f64]) -> (f64, f64) {
    let mut r = rates.to_vec();
    r.sort_by(f64::total_cmp);
    r.dedup();
    match r.as_slice() {
        [a, .., b] => (*a, *b),
        _ => (1.5, 3.0),
    }
}

pub fn verify_busemann(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    let s = checks::busemann_sample(&p.rates, p.n, p.replicas, 250, seed)?;
    let mut r = checks::busemann_marginals(&s, p.n, 50, 0.04, seed)?;
    r.extend(checks::busemann_independence(&s, seed)?);
    r.extend(checks::busemann_flip(p.rates[0], p.n, p.replicas, 50, seed)?);
    let (l, h) = rate_pair(&p.rates);
    r.extend(checks::difference_reversibility(l, h, p.samples, 64, seed)?);
    Ok(r)
}

pub fn verify_geodesics(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    let rho = p.rates[0];
    let mut r = checks::lpp_oracle(100, 6, seed)?;
    r.extend(checks::geodesic_runs(rho, p.n, p.replicas, 20, 40, 8, seed)?.0);
    r.extend(checks::rho_star_law(
        p.n + p.n / 4,
        p.samples,
        &[1.25, 2.0, 4.0],
        0.03,
        seed,
    )?);
    r.extend(checks::wait_runs(1.0, 2.0, 20_000, 8, seed)?);
    r.extend(checks::wait_runs(1.5, 2.5, 20_000, 8, seed)?);
    r.extend(checks::coalescence(rho, p.n, 10, 200, seed)?);
    r.extend(checks::directedness(rho, p.n, 100, 0.05, seed)?);
    r.extend(checks::interface_direction(200, 400, seed)?);
    r.extend(checks::shape_trend(1500, 20, 3.8, 4.05, seed)?);
    Ok(r)
}

pub fn verify_exact(p: &Params, seed: u64) -> cgm_core::Result<Vec<TestReport>> {
    let mut r = checks::catalan_identities(30, 25);
    r.extend(checks::poisson_competition(
        &[(1.0, 2.0), (2.0, 1.0)],
        p.replicas,
        3,
        seed,
    )?);
    r.extend(checks::x_process(p.samples, seed)?);
    r.extend(checks::pmf_sums(&[
        (1.0, 1.5),
        (1.0, 2.0),
        (1.0, 4.0),
        (1.5, 3.0),
        (2.0, 2.5),
    ])?);
    r.extend(checks::laplace_quadrature(&[
        (1.0, 2.0, 0.5),
        (1.5, 3.0, 1.0),
        (2.0, 4.0, 0.1),
    ])?);
    Ok(r)
}

/// Runs a verification suite under the seed policy and writes the reports
/// of every attempt to `reports.jsonl` when an output directory is given.
pub fn run_suite(e: Experiment, p: &Params, out: Option<&OutDir>) -> RunResult<Outcome> {
    if let Some(o) = out {
        let mut names = vec!["reports.jsonl".to_string()];
        match e {
            Experiment::VerifyBusemann => names.push("edges.csv".into()),
            Experiment::VerifyGeodesics => names.push("runs_pmf.csv".into()),
            _ => {}
        }
        o.claim(&names)?;
    }
    let f = match e {
        Experiment::VerifyQueueing => verify_queueing,
        Experiment::VerifyMultiline => verify_multiline,
        Experiment::VerifyCoupled => verify_coupled,
        Experiment::VerifyBusemann => verify_busemann,
        Experiment::VerifyGeodesics => verify_geodesics,
        Experiment::VerifyExact => verify_exact,
        _ => unreachable!("not a verification suite"),
    };
    let statistical = e != Experiment::VerifyQueueing;
    let outcome = run_with_policy(p.seed, statistical, |s| f(p, s))?;
    if let Some(o) = out {
        let all: Vec<TestReport> = outcome.all_reports().cloned().collect();
        o.reports("reports.jsonl", &all)?;
        match e {
            Experiment::VerifyBusemann => dump_edges(p, o)?,
            Experiment::VerifyGeodesics => {
                let (_, counts, exact) = checks::geodesic_runs(p.rates[0], p.n, p.replicas.min(50), 20, 40, 8, p.seed)?;
                let total = counts.iter().sum::<u64>().max(1) as f64;
                let emp: Vec<f64> = counts.iter().map(|c| *c as f64 / total).collect();
                o.pmf("runs_pmf.csv", &emp, &exact)?;
            }
            _ => {}
        }
    }
    Ok(outcome)
}

fn dump_edges(p: &Params, o: &OutDir) -> RunResult<()> {
    let (_, est) = sample_busemann_level(0, 0, 99, &p.rates, p.n, &RngSpec::new(p.seed, "edges"))?;
    let mut rows = Vec::new();
    for (r, rho) in est.rhos.iter().enumerate() {
        for (i, s) in est.sites.iter().enumerate() {
            rows.push((s.x, s.y, *rho, est.horizontal[r][i], est.vertical[r][i]));
        }
    }
    o.edges("edges.csv", &rows)?;
    Ok(())
}

/// Number of geodesics written by [`simulate_lpp`].
pub const GEODESICS: usize = 8;

fn lpp_names() -> Vec<String> {
    let mut v = vec!["gtable.csv".to_string(), "interface.csv".into(), "weights.meta".into()];
    v.extend((0..GEODESICS).map(|i| format!("geodesic_{i}.csv")));
    v
}

/// An `n x n` Exp(1) field from the origin: its G table, geodesics to the
/// origin from points spread along the top row and right column, and the
/// competition interface of the top-right corner.
pub fn simulate_lpp(p: &Params, o: &OutDir) -> RunResult<Vec<std::path::PathBuf>> {
    o.claim(&lpp_names())?;
    let n = p.n;
    let w = sample_exp_field(Point::new(0, 0), n, n, 1.0, &RngSpec::new(p.seed, "simulate-lpp"));
    let g = lpp_grid(&w, Point::new(0, 0))?;
    let top = (n - 1) as i64;
    let mut files = vec![o.gtable("gtable.csv", &g)?];
    for i in 0..GEODESICS {
        // half on the top row, half on the right column
        let h = GEODESICS / 2;
        let start = if i < h {
            Point::new(top * (i as i64 + 1) / h as i64, top)
        } else {
            Point::new(top, top * (i - h) as i64 / h as i64)
        };
        files.push(o.path_csv(&format!("geodesic_{i}.csv"), &backtrack_geodesic(&g, start)?)?);
    }
    let labels = subtree_labels(&w, Point::new(top, top))?;
    files.push(o.path_csv("interface.csv", &competition_interface(&labels, usize::MAX))?);
    files.push(o.meta(
        "weights.meta",
        &[
            ("seed", p.seed.to_string()),
            ("n", n.to_string()),
            ("origin", "0,0".into()),
            ("weight_mean", "1".into()),
            ("interface_encoding", "point p stands for p-(1/2,1/2)".into()),
        ],
    )?);
    Ok(files)
}

/// A `mu^rho` sample on `window` indices.
pub fn sample_mu(p: &Params, o: &OutDir) -> RunResult<Vec<std::path::PathBuf>> {
    o.claim(&["mu.csv".to_string(), "mu.csv.meta".to_string()])?;
    let spec = WindowSpec {
        offset: 0,
        length: p.window,
        burn_in: p.burn_in,
    };
    let mu = sample_mu_rho(&p.rates, &spec, &RngSpec::new(p.seed, "sample-mu"))?;
    let f = o.multiconfig(
        "mu.csv",
        &mu,
        &[("seed", p.seed.to_string()), ("burn_in", p.burn_in.to_string())],
    )?;
    Ok(vec![f])
}

/// Every acceptance criterion in order, one result line each.
pub fn acceptance(
    seed: u64,
    out: Option<&OutDir>,
    mut on_line: impl FnMut(&str),
) -> RunResult<Vec<criteria::CriterionResult>> {
    if let Some(o) = out {
        o.claim(&["acceptance.jsonl".to_string()])?;
    }
    let mut results = Vec::new();
    for c in criteria::all() {
        let r = criteria::run_criterion(&c, seed)?;
        on_line(&r.line());
        results.push(r);
    }
    if let Some(o) = out {
        let all: Vec<TestReport> = results.iter().flat_map(|r| r.outcome.all_reports().cloned()).collect();
        o.reports("acceptance.jsonl", &all)?;
    }
    Ok(results)
}
