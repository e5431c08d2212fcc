//! Exact binomial and Poisson masses and tails.

use super::special::{binom_mass, inc_beta, poisson_mass};
use crate::error::{check_probability, domain, Result};

/// Above this size binomial tails go through the incomplete beta function;
/// at or below it they are summed term by term.
pub const SUMMATION_LIMIT: u64 = 1000;

fn check_k_n(k: u64, n: u64) -> Result<()> {
    if k > n {
        return domain(format!("k = {k} exceeds n = {n}"));
    }
    Ok(())
}

/// C(n,k) p^k (1−p)^(n−k).
pub fn binom_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_k_n(k, n)?;
    Ok(binom_mass(k as f64, n as f64, p, 1.0 - p))
}

/// P(X ≥ k) for X ~ Binomial(n, p). `k = n + 1` yields 0.
pub fn binom_upper_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if k > n + 1 {
        return domain(format!("tail index k = {k} exceeds n + 1 = {}", n + 1));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    if n > SUMMATION_LIMIT {
        return Ok(inc_beta(k as f64, (n - k + 1) as f64, p));
    }
    Ok(upper_tail_sum(k, n, p))
}

/// P(X ≤ k) for X ~ Binomial(n, p).
pub fn binom_lower_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_k_n(k, n)?;
    if k == n {
        return Ok(1.0);
    }
    if n > SUMMATION_LIMIT {
        return Ok(inc_beta((n - k) as f64, (k + 1) as f64, 1.0 - p));
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let s: f64 = (0..=k).rev().map(|j| binom_mass(j as f64, nf, p, q)).sum();
    Ok(s.min(1.0))
}

/// Direct summation of the upper tail, smallest terms first.
pub(crate) fn upper_tail_sum(k: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    let nf = n as f64;
    let s: f64 = (k..=n).rev().map(|j| binom_mass(j as f64, nf, p, q)).sum();
    s.min(1.0)
}

/// e^(−mean) mean^k / k!.
pub fn poisson_pmf(k: u64, mean: f64) -> Result<f64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return domain(format!("Poisson mean must be finite and non-negative, got {mean}"));
    }
    Ok(poisson_mass(k as f64, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn brute_pmf(k: u64, n: u64, p: f64) -> f64 {
        choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(binom_pmf(0, 0, 0.5).unwrap(), 1.0);
        assert!((binom_pmf(1, 2, 0.2).unwrap() - 0.32).abs() < 1e-15);
        assert!((binom_pmf(6, 10, 0.5).unwrap() - 210.0 / 1024.0).abs() < 1e-15);
        assert!(binom_pmf(3, 2, 0.5).is_err());
        assert!(binom_pmf(1, 2, 1.2).is_err());
    }

    #[test]
    fn pmf_degenerate_p() {
        assert_eq!(binom_pmf(0, 7, 0.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(3, 7, 0.0).unwrap(), 0.0);
        assert_eq!(binom_pmf(7, 7, 1.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(6, 7, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pmf_matches_brute_force() {
        for n in 0..=40 {
            for k in 0..=n {
                for &p in &[0.01, 0.1, 0.2, 0.5, 0.73, 0.99] {
                    let want = brute_pmf(k, n, p);
                    let got = binom_pmf(k, n, p).unwrap();
                    assert!((got - want).abs() <= 1e-13 * want.max(1e-300) + 1e-300, "{k},{n},{p}");
                }
            }
        }
    }

    #[test]
    fn pmf_large_n_sums_to_one() {
        let n = 1_000_000;
        let p = 0.3;
        let mean = 300_000u64;
        let s: f64 = (mean - 5000..=mean + 5000).map(|k| binom_pmf(k, n, p).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn tail_examples() {
        assert_eq!(binom_upper_tail(0, 9, 0.3).unwrap(), 1.0);
        assert!((binom_upper_tail(1, 1, 0.2).unwrap() - 0.2).abs() < 1e-15);
        assert!((binom_upper_tail(2, 3, 0.2).unwrap() - 0.104).abs() < 1e-15);
        assert_eq!(binom_upper_tail(4, 3, 0.2).unwrap(), 0.0);
        assert!(binom_upper_tail(5, 3, 0.2).is_err());
    }

    #[test]
    fn tail_routes_agree_across_limit() {
        // summation and incomplete-beta routes on the same inputs
        for &n in &[50u64, 400, 1000] {
            for &p in &[0.05, 0.2, 0.5, 0.9] {
                for k in (1..=n).step_by(7) {
                    let sum = upper_tail_sum(k, n, p);
                    let beta = inc_beta(k as f64, (n - k + 1) as f64, p);
                    assert!((sum - beta).abs() < 1e-12, "{k},{n},{p}: {sum} vs {beta}");
                }
            }
        }
    }

    #[test]
    fn lower_and_upper_tails_partition() {
        for n in [0u64, 1, 5, 20, 1500] {
            for k in 0..=n {
                let lo = binom_lower_tail(k, n, 0.3).unwrap();
                let hi = binom_upper_tail(k + 1, n, 0.3).unwrap();
                assert!((lo + hi - 1.0).abs() < 1e-12, "{k},{n}");
            }
        }
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_pmf(0, 0.0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(4, 0.0).unwrap(), 0.0);
        assert!((poisson_pmf(0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        let want = 8.0 * (-2.0f64).exp() / 6.0;
        assert!((poisson_pmf(3, 2.0).unwrap() - want).abs() < 1e-15);
        assert!((poisson_pmf(3, 2.0).unwrap() - 0.180_447_0).abs() < 1e-7);
        assert!(poisson_pmf(1, -0.1).is_err());
    }

    #[test]
    fn poisson_mass_is_complete() {
        for &m in &[0.0, 0.3, 1.0, 5.0, 29.9, 100.0, 2500.0] {
            let upper = (m + 40.0 * (m + 1.0f64).sqrt()).ceil() as u64;
            let s: f64 = (0..=upper).map(|k| poisson_pmf(k, m).unwrap()).sum();
            assert!((s - 1.0).abs() <= 1e-10, "m={m}: {s}");
        }
    }
}
