use cgm_cli::config::{parse_rates, ExperimentConfig};
use cgm_cli::output::OutDir;
use cgm_cli::suites::{self, Experiment, Params, RunError};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Master seed when neither `--seed`, `CGM_SEED` nor the config sets one.
const DEFAULT_SEED: u64 = 20_190_923;

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ncrate: ",
    env!("CARGO_PKG_NAME"),
    "\nprofile: ",
    env!("CGM_BUILD_PROFILE"),
    "\ntarget: ",
    env!("CGM_BUILD_TARGET"),
);

#[derive(Parser)]
#[command(name = "cgm", version, long_version = LONG_VERSION)]
#[command(about = "Corner growth, multiclass queues and Busemann functions: simulations and verification suites")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed
    #[arg(long, global = true, env = "CGM_SEED")]
    seed: Option<u64>,
    /// Flat `key = value` configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing output files
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Lattice size N
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Window length
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    instances: Option<usize>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Comma-separated rates (means), each above 1
    #[arg(long, global = true)]
    rates: Option<String>,
    /// Burn-in fraction in [0, 1)
    #[arg(long = "burn-in", global = true)]
    burn_in: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Queue identities: conservation, duality, T identity, intertwining, strip formulas
    VerifyQueueing,
    /// Invariance of the product measure under the multiline step
    VerifyMultiline,
    /// Invariance and consistency of mu^rho under the coupled step
    VerifyCoupled,
    /// Busemann marginals, independence, flip and reversibility
    VerifyBusemann,
    /// Geodesic directedness, coalescence, rho* law and run lengths
    VerifyGeodesics,
    /// Closed-form cross checks
    VerifyExact,
    /// Dump a G table, geodesics and a competition interface
    SimulateLpp,
    /// Dump a mu^rho sample
    SampleMu,
    /// All acceptance criteria, one PASS/FAIL line each
    Acceptance,
    /// The experiment named by the `experiment` key of the config
    Run,
}

impl Command {
    fn experiment(self) -> Option<Experiment> {
        Some(match self {
            Command::VerifyQueueing => Experiment::VerifyQueueing,
            Command::VerifyMultiline => Experiment::VerifyMultiline,
            Command::VerifyCoupled => Experiment::VerifyCoupled,
            Command::VerifyBusemann => Experiment::VerifyBusemann,
            Command::VerifyGeodesics => Experiment::VerifyGeodesics,
            Command::VerifyExact => Experiment::VerifyExact,
            Command::SimulateLpp => Experiment::SimulateLpp,
            Command::SampleMu => Experiment::SampleMu,
            Command::Acceptance => Experiment::Acceptance,
            Command::Run => return None,
        })
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = cli.global;

    let file = match &g.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => return usage(e),
        },
        None => ExperimentConfig::default(),
    };
    let rates = match g.rates.as_deref().map(parse_rates).transpose() {
        Ok(r) => r,
        Err(e) => return usage(format!("--rates: {e}")),
    };
    let flags = ExperimentConfig {
        experiment: None,
        seed: g.seed,
        rates,
        n: g.n,
        window: g.window,
        burn_in: g.burn_in,
        replicas: g.replicas,
        instances: g.instances,
        samples: g.samples,
        out: g.out,
        threads: g.threads,
    };
    let cfg = file.merge(flags);

    let experiment = match (cli.command.experiment(), &cfg.experiment) {
        (Some(e), None) => e,
        (Some(e), Some(name)) if name == e.name() => e,
        (Some(e), Some(name)) => {
            return usage(format!(
                "config names experiment {name:?} but the subcommand is {}",
                e.name()
            ))
        }
        (None, Some(name)) => match Experiment::from_name(name) {
            Some(e) => e,
            None => return usage(format!("unknown experiment {name:?}")),
        },
        (None, None) => return usage("`run` needs an `experiment` key in the config"),
    };
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let params = match Params::resolve(experiment, &cfg, seed) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return usage(e);
        }
    }
    match run(experiment, &params, &cfg, g.force) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(e: Experiment, p: &Params, cfg: &ExperimentConfig, force: bool) -> Result<bool, RunError> {
    let out = |default: &str| -> Result<OutDir, RunError> {
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(default));
        Ok(OutDir::new(&dir, force)?)
    };
    match e {
        Experiment::SimulateLpp | Experiment::SampleMu => {
            let dir = out("cgm-out")?;
            let files = if e == Experiment::SimulateLpp {
                suites::simulate_lpp(p, &dir)?
            } else {
                suites::sample_mu(p, &dir)?
            };
            for f in files {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Experiment::Acceptance => {
            let dir = match &cfg.out {
                Some(_) => Some(out("")?),
                None => None,
            };
            let results = suites::acceptance(p.seed, dir.as_ref(), |l| println!("{l}"))?;
            let passed = results.iter().filter(|r| r.pass()).count();
            println!("{passed}/{} criteria passed", results.len());
            Ok(passed == results.len())
        }
        _ => {
            let dir = match &cfg.out {
                Some(_) => Some(out("")?),
                None => None,
            };
            let outcome = suites::run_suite(e, p, dir.as_ref())?;
            for r in &outcome.best().reports {
                println!("{}", r.to_json_line());
            }
            let best = outcome.best();
            eprintln!(
                "{} {}: {}/{} tests at seed {} after {} run(s)",
                if outcome.pass { "PASS" } else { "FAIL" },
                e.name(),
                best.reports.iter().filter(|r| r.pass).count(),
                best.reports.len(),
                best.seed,
                outcome.attempts.len()
            );
            Ok(outcome.pass)
        }
    }
}
