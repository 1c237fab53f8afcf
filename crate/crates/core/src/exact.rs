//! Closed-form laws: the Catalan triangle, Poisson competition
//! probabilities, initial-run distributions, the two-point increment law,
//! the X-process and the law of `rho*`.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::RngSpec;

/// Rows `0..=max_n` of the Catalan triangle, built with
/// `C(n,k) = C(n,k-1) + C(n-1,k)`, `C(n,0) = 1`, `C(n,k) = 0` for `k > n`.
#[derive(Debug, Clone)]
pub struct CatalanTriangle {
    rows: Vec<Vec<BigUint>>,
}

impl CatalanTriangle {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigUint::from(1u32)]);
        for n in 1..=max_n {
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::from(1u32));
            for k in 1..=n {
                let above = rows[n - 1].get(k).cloned().unwrap_or_else(BigUint::zero);
                let v = &row[k - 1] + above;
                row.push(v);
            }
            rows.push(row);
        }
        CatalanTriangle { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `C(n,k)`; zero for `k > n`. Panics when `n` exceeds the table.
    pub fn get(&self, n: usize, k: usize) -> BigUint {
        self.rows[n].get(k).cloned().unwrap_or_else(BigUint::zero)
    }

    pub fn row(&self, n: usize) -> &[BigUint] {
        &self.rows[n]
    }
}

pub fn catalan_triangle(n: usize, k: usize) -> BigUint {
    CatalanTriangle::new(n).get(n, k)
}

/// `C_n = C(n, n)`.
pub fn catalan_number(n: usize) -> BigUint {
    catalan_triangle(n, n)
}

fn check_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
        return invalid(format!("rates must be positive, got {alpha} and {beta}"));
    }
    Ok(())
}

/// Two Poisson processes with rates `alpha` (jumps `sigma_i`) and `beta`
/// (jumps `tau_i`); `A_n = {sigma_i < tau_i for all i <= n}` and
/// `B_n = A_{n-1} \ A_n`.
///
/// Probabilities are evaluated with the Catalan recurrence weighted by
/// `p^k q^m`, `p = beta/(alpha+beta)`, `q = alpha/(alpha+beta)`, so nothing
/// overflows for large `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCompetition {
    pub alpha: f64,
    pub beta: f64,
}

impl PoissonCompetition {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_rates(alpha, beta)?;
        Ok(PoissonCompetition { alpha, beta })
    }

    fn pq(&self) -> (f64, f64) {
        let s = self.alpha + self.beta;
        (self.beta / s, self.alpha / s)
    }

    /// `P(A_0), .., P(A_max_n)`.
    pub fn a_probs(&self, max_n: usize) -> Vec<f64> {
        let (p, q) = self.pq();
        let mut out = Vec::with_capacity(max_n + 1);
        out.push(1.0);
        // row[k] = C(m,k) p^k q^m for the current m
        let mut row: Vec<f64> = vec![1.0];
        for n in 1..=max_n {
            out.push(q * row.iter().sum::<f64>());
            let m = n;
            let mut next = Vec::with_capacity(m + 1);
            next.push(row[0] * q);
            for k in 1..=m {
                let above = row.get(k).copied().unwrap_or(0.0);
                next.push(p * next[k - 1] + q * above);
            }
            row = next;
        }
        out
    }

    pub fn a_prob(&self, n: usize) -> f64 {
        self.a_probs(n)[n]
    }

    /// `P(B_1), .., P(B_max_n)` as `C_{n-1} q^{n-1} p^n`.
    pub fn b_probs(&self, max_n: usize) -> Vec<f64> {
        let (p, q) = self.pq();
        let mut out = Vec::with_capacity(max_n);
        let mut b = p;
        for n in 1..=max_n {
            out.push(b);
            // C_n / C_{n-1} = 2(2n-1)/(n+1)
            b *= 2.0 * (2 * n - 1) as f64 / (n + 1) as f64 * p * q;
        }
        out
    }

    pub fn b_prob(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return invalid("B_n is defined for n >= 1");
        }
        Ok(self.b_probs(n)[n - 1])
    }

    /// `sum_n P(B_n) = min(1, beta/alpha)`.
    pub fn b_total(&self) -> f64 {
        (self.beta / self.alpha).min(1.0)
    }
}

/// `P(a = n)` for the run of `-e1` steps at the start of a Busemann
/// geodesic in direction `rho`, with mean-`lambda` weights
/// (`lambda = 1` is the standard lattice).
pub fn initial_run_pmf2(lambda: f64, rho: f64, n: usize) -> Result<f64> {
    Ok(initial_run_pmf2_vec(lambda, rho, n)?[n])
}

/// `P(a = 0), .., P(a = max_n)`.
pub fn initial_run_pmf2_vec(lambda: f64, rho: f64, max_n: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && rho > lambda && rho.is_finite()) {
        return invalid(format!("need 0 < lambda < rho, got {lambda} and {rho}"));
    }
    let head = (rho - lambda) / rho;
    let pc = PoissonCompetition::new(lambda, rho)?;
    Ok(pc.a_probs(max_n).into_iter().map(|a| head * a).collect())
}

pub fn initial_run_pmf(rho: f64, n: usize) -> Result<f64> {
    initial_run_pmf2(1.0, rho, n)
}

pub fn initial_run_pmf_vec(rho: f64, max_n: usize) -> Result<Vec<f64>> {
    initial_run_pmf2_vec(1.0, rho, max_n)
}

/// Law of `X(rho) - X(lambda)`: an atom `lambda/rho` at zero, otherwise
/// exponential with mean `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    pub lambda: f64,
    pub rho: f64,
}

pub fn increment_law(lambda: f64, rho: f64) -> Result<IncrementLaw> {
    if !(lambda > 0.0 && rho >= lambda && rho.is_finite()) {
        return invalid(format!("need 0 < lambda <= rho, got {lambda} and {rho}"));
    }
    Ok(IncrementLaw { lambda, rho })
}

impl IncrementLaw {
    pub fn atom(&self) -> f64 {
        self.lambda / self.rho
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        1.0 - self.survival(s)
    }

    /// `P(X > s)` for `s >= 0`.
    pub fn survival(&self, s: f64) -> f64 {
        (1.0 - self.atom()) * (-s / self.rho).exp()
    }

    /// `E exp(-t X) = (1 + lambda t) / (1 + rho t)`.
    pub fn laplace(&self, t: f64) -> f64 {
        (1.0 + self.lambda * t) / (1.0 + self.rho * t)
    }

    /// Inverse transform of a uniform `v` in (0, 1], read as a survival level.
    pub fn quantile_survival(&self, v: f64) -> f64 {
        let tail = 1.0 - self.atom();
        if v > tail {
            0.0
        } else {
            -self.rho * (v / tail).ln()
        }
    }

    pub fn sample(&self, n: usize, rng: &RngSpec) -> Vec<f64> {
        let mut s = rng.stream();
        (0..n).map(|_| self.quantile_survival(s.uniform())).collect()
    }
}

/// A realisation of the X-process on `[1, rho_max]`: a point at 1, Poisson
/// points of intensity `ds/s` on `(1, rho_max]`, and at each point `s` an
/// exponential mark of mean `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XProcess {
    pub rho_max: f64,
    pub points: Vec<f64>,
    pub marks: Vec<f64>,
}

impl XProcess {
    /// `X(rho)`, the sum of marks at points `<= rho`.
    pub fn eval(&self, rho: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.marks)
            .take_while(|(p, _)| **p <= rho)
            .map(|(_, m)| m)
            .sum()
    }

    /// Number of points in `(a, b]`.
    pub fn count(&self, a: f64, b: f64) -> usize {
        self.points.iter().filter(|p| **p > a && **p <= b).count()
    }
}

pub fn sample_x_process(rho_max: f64, rng: &RngSpec) -> Result<XProcess> {
    if !(rho_max >= 1.0 && rho_max.is_finite()) {
        return invalid(format!("rho_max must be >= 1, got {rho_max}"));
    }
    let mut s = rng.stream();
    let mut points = vec![1.0];
    // Under s = e^u the intensity ds/s becomes Lebesgue measure in u.
    let mut u = 0.0;
    loop {
        u += s.exp(1.0);
        let p = u.exp();
        if p > rho_max {
            break;
        }
        points.push(p);
    }
    let marks = points.iter().map(|p| s.exp(*p)).collect();
    Ok(XProcess { rho_max, points, marks })
}

/// `P(rho* <= lambda) = 1 - 1/lambda` for `lambda >= 1`.
pub fn rho_star_cdf(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        0.0
    } else {
        1.0 - 1.0 / lambda
    }
}

/// `C(n,k)` as an `f64`, saturating to infinity.
pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(n: u64) -> BigUint {
        (1..=n).fold(BigUint::from(1u32), |a, b| a * b)
    }

    fn binom(n: u64, k: u64) -> BigUint {
        factorial(n) / (factorial(k) * factorial(n - k))
    }

    /// `(n+k)! (n-k+1) / (k! (n+1)!)`
    fn triangle_closed(n: u64, k: u64) -> BigUint {
        factorial(n + k) * BigUint::from(n - k + 1) / (factorial(k) * factorial(n + 1))
    }

    #[test]
    fn small_catalan_numbers() {
        let expect = [1u32, 1, 2, 5, 14, 42, 132, 429, 1430, 4862];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(catalan_number(n), BigUint::from(*e));
        }
    }

    #[test]
    fn triangle_matches_closed_forms() {
        let t = CatalanTriangle::new(30);
        for n in 0..=30u64 {
            assert_eq!(t.get(n as usize, n as usize), binom(2 * n, n) / BigUint::from(n + 1));
            for k in 0..=n {
                let c = t.get(n as usize, k as usize);
                assert_eq!(c, triangle_closed(n, k));
                let diff = if k == 0 {
                    binom(n + k, k)
                } else {
                    binom(n + k, k) - binom(n + k, k - 1)
                };
                assert_eq!(c, diff);
            }
            assert!(t.get(n as usize, n as usize + 1).is_zero());
        }
    }

    #[test]
    fn triangle_partial_and_full_row_sums() {
        let t = CatalanTriangle::new(31);
        for n in 0..=30usize {
            let mut acc = BigUint::zero();
            for i in 0..=n {
                acc += t.get(n, i);
                assert_eq!(acc, t.get(n + 1, i));
            }
            assert_eq!(acc, catalan_number(n + 1));
        }
    }

    #[test]
    fn run_pmf_hand_values() {
        assert!((initial_run_pmf(2.0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((initial_run_pmf(2.0, 1).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // n = 2: 0.5 * (1/9 + 2/27)
        assert!((initial_run_pmf(2.0, 2).unwrap() - 0.5 * (1.0 / 9.0 + 2.0 / 27.0)).abs() < 1e-15);
        assert!(initial_run_pmf(1.0, 1).is_err());
    }

    /// `P(a=n)` directly from the Catalan triangle in exact integers.
    fn pmf_from_triangle(lambda: f64, rho: f64, n: usize, t: &CatalanTriangle) -> f64 {
        let head = (rho - lambda) / rho;
        if n == 0 {
            return head;
        }
        let s = lambda + rho;
        let sum: f64 = (0..n)
            .map(|k| to_f64(&t.get(n - 1, k)) * (rho / s).powi(k as i32) * (lambda / s).powi(n as i32))
            .sum();
        head * sum
    }

    /// Telescoped form: `P(A_n) = 1 - sum_{j<=n} P(B_j)`.
    fn pmf_telescoped(lambda: f64, rho: f64, n: usize) -> f64 {
        let pc = PoissonCompetition::new(lambda, rho).unwrap();
        let b: f64 = pc.b_probs(n).iter().sum();
        (rho - lambda) / rho * (1.0 - if n == 0 { 0.0 } else { b })
    }

    proptest! {
        #[test]
        fn pmf_three_routes_agree(lambda in 0.2f64..3.0, gap in 0.05f64..5.0, n in 0usize..13) {
            let rho = lambda + gap;
            let t = CatalanTriangle::new(13);
            let a = initial_run_pmf2(lambda, rho, n).unwrap();
            prop_assert!((a - pmf_from_triangle(lambda, rho, n, &t)).abs() < 1e-12);
            prop_assert!((a - pmf_telescoped(lambda, rho, n)).abs() < 1e-12);
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pmf_sums_to_one(lambda in 0.5f64..2.0, gap in 0.5f64..5.0) {
            let rho = lambda + gap;
            let v = initial_run_pmf2_vec(lambda, rho, 3000).unwrap();
            let s: f64 = v.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10, "{}", s);
        }

        #[test]
        fn competition_telescopes(alpha in 0.1f64..5.0, beta in 0.1f64..5.0) {
            let pc = PoissonCompetition::new(alpha, beta).unwrap();
            let a = pc.a_probs(40);
            let b = pc.b_probs(40);
            for n in 1..=40 {
                prop_assert!((a[n] - (a[n - 1] - b[n - 1])).abs() < 1e-12);
            }
        }

        #[test]
        fn increment_law_laplace_by_quadrature(lambda in 0.2f64..3.0, gap in 0.0f64..4.0, t in 0.0f64..5.0) {
            let law = increment_law(lambda, lambda + gap).unwrap();
            // atom plus Simpson's rule on the density of the tail after s = rho*y
            let rho = law.rho;
            let n = 20_000;
            let ymax = 40.0 / (1.0 + t * rho);
            let h = ymax / n as f64;
            let f = |y: f64| (-(t * rho * y)).exp() * (-y).exp();
            let mut acc = f(0.0) + f(ymax);
            for i in 1..n {
                acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let quad = law.atom() + (1.0 - law.atom()) * acc * h / 3.0;
            prop_assert!((quad - law.laplace(t)).abs() < 1e-10);
        }

        #[test]
        fn increment_quantile_inverts_cdf(v in 1e-9f64..1.0) {
            let law = increment_law(1.5, 3.0).unwrap();
            let s = law.quantile_survival(v);
            if s > 0.0 {
                prop_assert!((law.survival(s) - v).abs() < 1e-12);
            } else {
                prop_assert!(v > 1.0 - law.atom());
            }
        }
    }

    #[test]
    fn b_totals() {
        for (a, b) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
            let pc = PoissonCompetition::new(a, b).unwrap();
            let s: f64 = pc.b_probs(200).iter().sum();
            if a != b {
                assert!((s - pc.b_total()).abs() < 1e-6, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn x_process_is_increasing_and_reproducible() {
        let rng = RngSpec::new(11, "x");
        let x = sample_x_process(50.0, &rng).unwrap();
        assert_eq!(x.points[0], 1.0);
        assert!(x.points.windows(2).all(|w| w[0] < w[1]));
        assert!(*x.points.last().unwrap() <= 50.0);
        assert_eq!(x, sample_x_process(50.0, &rng).unwrap());
        assert!(x.eval(2.0) <= x.eval(4.0));
        assert_eq!(x.eval(1.0), x.marks[0]);
        assert!(sample_x_process(0.5, &rng).is_err());
    }

    #[test]
    fn rho_star_cdf_values() {
        assert_eq!(rho_star_cdf(0.5), 0.0);
        assert_eq!(rho_star_cdf(2.0), 0.5);
        assert!((rho_star_cdf(4.0) - 0.75).abs() < 1e-15);
    }
}
