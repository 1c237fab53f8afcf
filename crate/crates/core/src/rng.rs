//! Reproducible random streams.
//!
//! Every stream is addressed by `(master_seed, label, replica)`. The label
//! and seed are hashed into a ChaCha8 key and the replica selects the ChaCha
//! stream, so streams never depend on the order in which they are created
//! or on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lattice::{MultiConfig, Point, SeqWindow, WeightField};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub label: String,
    pub replica: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        RngSpec {
            master_seed,
            label: label.into(),
            replica: 0,
        }
    }

    pub fn replica(&self, replica: u64) -> Self {
        RngSpec {
            replica,
            ..self.clone()
        }
    }

    /// Child stream with `/name` appended to the label.
    pub fn derive(&self, name: &str) -> Self {
        RngSpec {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, name),
            replica: self.replica,
        }
    }

    pub fn stream(&self) -> ExpStream {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        h.update(self.label.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replica);
        ExpStream { rng }
    }
}

/// Uniform and exponential draws by inverse transform.
pub struct ExpStream {
    rng: ChaCha8Rng,
}

impl ExpStream {
    /// Uniform on (0, 1].
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    /// Exponential with the given mean.
    pub fn exp(&mut self, mean: f64) -> f64 {
        -mean * self.uniform().ln()
    }

    pub fn exp_vec(&mut self, n: usize, mean: f64) -> Vec<f64> {
        (0..n).map(|_| self.exp(mean)).collect()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

/// I.i.d. exponential weights of the given mean on a rectangle.
pub fn sample_exp_field(origin: Point, rows: usize, cols: usize, mean: f64, rng: &RngSpec) -> WeightField {
    let values = rng.stream().exp_vec(rows * cols, mean);
    WeightField {
        origin,
        rows,
        cols,
        values,
    }
}

pub fn sample_exp_window(offset: i64, len: usize, mean: f64, rng: &RngSpec) -> SeqWindow {
    SeqWindow::new(offset, rng.stream().exp_vec(len, mean))
}

/// Independent i.i.d. exponential lines with means `rates[i]`. Line `i`
/// uses the child stream `line{i}`, so scaling the rates reuses the same
/// uniforms.
pub fn sample_product_exp(rates: &[f64], offset: i64, len: usize, rng: &RngSpec) -> MultiConfig {
    let lines = rates
        .iter()
        .enumerate()
        .map(|(i, &r)| sample_exp_window(offset, len, r, &rng.derive(&format!("line{i}"))))
        .collect();
    MultiConfig {
        lines,
        rates: Some(rates.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let a = RngSpec::new(7, "x").replica(3);
        let mut s1 = a.stream();
        let mut s2 = a.clone().stream();
        for _ in 0..100 {
            assert_eq!(s1.next_u64(), s2.next_u64());
        }
    }

    #[test]
    fn label_seed_and_replica_all_separate_streams() {
        let base = RngSpec::new(7, "x");
        let first = |s: &RngSpec| s.stream().next_u64();
        let v = [
            first(&base),
            first(&base.replica(1)),
            first(&RngSpec::new(8, "x")),
            first(&base.derive("y")),
        ];
        for i in 0..v.len() {
            for j in 0..i {
                assert_ne!(v[i], v[j]);
            }
        }
    }

    #[test]
    fn uniform_is_in_half_open_unit_interval() {
        let mut s = RngSpec::new(1, "u").stream();
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn exponential_mean_is_close() {
        let mut s = RngSpec::new(2, "e").stream();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| s.exp(2.5)).sum::<f64>() / n as f64;
        // sd of the mean is 2.5/sqrt(n) ~ 0.0056
        assert!((m - 2.5).abs() < 0.03, "{m}");
    }

    #[test]
    fn product_lines_scale_with_shared_uniforms() {
        let spec = RngSpec::new(3, "p");
        let a = sample_product_exp(&[1.0, 2.0], 0, 50, &spec);
        let b = sample_product_exp(&[3.0, 6.0], 0, 50, &spec);
        for (la, lb) in a.lines.iter().zip(&b.lines) {
            for (x, y) in la.values.iter().zip(&lb.values) {
                assert!((3.0 * x - y).abs() <= 1e-12 * y.max(1.0));
            }
        }
    }
}
