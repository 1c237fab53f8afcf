//! Experiment configuration: a flat `key = value` file plus flag overrides.
//!
//! ```text
//! # comments and blank lines are ignored
//! experiment = verify-coupled
//! seed = 7
//! rates = 1.5, 2, 4
//! window = 20000
//! ```

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub const KEYS: [&str; 11] = [
    "experiment",
    "seed",
    "rates",
    "n",
    "window",
    "burn_in",
    "replicas",
    "instances",
    "samples",
    "out",
    "threads",
];

/// Every field is optional; suites fill the gaps with their own defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub rates: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub window: Option<usize>,
    pub burn_in: Option<f64>,
    pub replicas: Option<usize>,
    pub instances: Option<usize>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn parse_rates(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad rate {x:?}: {e}")))
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{key}: {v:?}: {e}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let mut c = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| ConfigError::Parse {
                path: path.to_string(),
                line: i + 1,
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(format!("expected key = value, got {line:?}")));
            };
            let (k, v) = (k.trim(), v.trim());
            if v.is_empty() {
                return Err(err(format!("{k}: empty value")));
            }
            if seen.iter().any(|s| s == k) {
                return Err(err(format!("duplicate key {k}")));
            }
            seen.push(k.to_string());
            match k {
                "experiment" => c.experiment = Some(v.to_string()),
                "seed" => c.seed = Some(num(k, v).map_err(err)?),
                "rates" => c.rates = Some(parse_rates(v).map_err(err)?),
                "n" => c.n = Some(num(k, v).map_err(err)?),
                "window" => c.window = Some(num(k, v).map_err(err)?),
                "burn_in" => c.burn_in = Some(num(k, v).map_err(err)?),
                "replicas" => c.replicas = Some(num(k, v).map_err(err)?),
                "instances" => c.instances = Some(num(k, v).map_err(err)?),
                "samples" => c.samples = Some(num(k, v).map_err(err)?),
                "out" => c.out = Some(PathBuf::from(v)),
                "threads" => c.threads = Some(num(k, v).map_err(err)?),
                _ => return Err(err(format!("unknown key {k:?}; known keys: {}", KEYS.join(", ")))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ExperimentConfig) -> Self {
        ExperimentConfig {
            experiment: over.experiment.or(self.experiment),
            seed: over.seed.or(self.seed),
            rates: over.rates.or(self.rates),
            n: over.n.or(self.n),
            window: over.window.or(self.window),
            burn_in: over.burn_in.or(self.burn_in),
            replicas: over.replicas.or(self.replicas),
            instances: over.instances.or(self.instances),
            samples: over.samples.or(self.samples),
            out: over.out.or(self.out),
            threads: over.threads.or(self.threads),
        }
    }

    /// Checks that do not depend on the experiment.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(r) = &self.rates {
            if r.is_empty() {
                return bad("rates: empty list".into());
            }
            if let Some(x) = r.iter().find(|x| !(x.is_finite() && **x > 1.0)) {
                return bad(format!("rates must be finite and above 1, got {x}"));
            }
        }
        if let Some(b) = self.burn_in {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("burn_in must lie in [0, 1), got {b}"));
            }
        }
        for (k, v) in [
            ("n", self.n),
            ("window", self.window),
            ("replicas", self.replicas),
            ("instances", self.instances),
            ("samples", self.samples),
            ("threads", self.threads),
        ] {
            if v == Some(0) {
                return bad(format!("{k} must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let c = ExperimentConfig::parse("# x\nseed = 3\nrates = 1.5, 2 # inline\n\nn=40\n", "t").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.rates, Some(vec![1.5, 2.0]));
        let m = c.merge(ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(m.seed, Some(9));
        assert_eq!(m.n, Some(40));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "seed",
            "seed = x",
            "seed = 1\nseed = 2",
            "n = -3",
            "rates = 1.5,,2",
        ] {
            assert!(ExperimentConfig::parse(text, "t").is_err(), "{text}");
        }
        let c = ExperimentConfig::parse("rates = 0.5", "t").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse("burn_in = 1", "t").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse("window = 0", "t").unwrap();
        assert!(c.validate().is_err());
    }
}
