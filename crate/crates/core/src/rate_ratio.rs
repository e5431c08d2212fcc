//! Exact conditional rate-ratio test for two Poisson counts with exposures.
//!
//! Given x events over exposure t₁ (reference) and y events over t₂ (target),
//! the target count conditional on n = x + y is Binomial(n, p₀) under
//! H₀: rate_target = ρ₀ · rate_reference, with
//!
//! ```text
//! p₀ = ρ₀ t₂ / (t₁ + ρ₀ t₂)
//! ```
//!
//! The one-sided p-value looks in the deterioration direction, P(Y ≥ y | n).

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, domain, Result};
use crate::probkit::{binom_lower_tail, binom_pmf, binom_upper_tail};

/// An event count over an operational exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountWindow {
    pub events: u64,
    pub exposure: f64,
    #[serde(default)]
    pub label: String,
}

impl CountWindow {
    pub fn new(events: u64, exposure: f64, label: impl Into<String>) -> Result<Self> {
        check_positive("exposure", exposure)?;
        Ok(Self {
            events,
            exposure,
            label: label.into(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("exposure", self.exposure)
    }

    pub fn rate(&self) -> f64 {
        self.events as f64 / self.exposure
    }
}

/// Two-sided p-value construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSidedMethod {
    /// min(1, 2 · min(lower tail, upper tail)).
    #[default]
    Central,
    /// Sum of all outcomes no more likely than the observed one.
    MinLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRatioResult {
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub two_sided_method: TwoSidedMethod,
    pub conditional_n: u64,
    pub p0: f64,
    pub null_ratio: f64,
}

/// Probability that a single event falls into the target window under H₀.
pub fn conditional_success_prob(reference_exposure: f64, target_exposure: f64, null_ratio: f64) -> Result<f64> {
    check_positive("reference exposure", reference_exposure)?;
    check_positive("target exposure", target_exposure)?;
    check_positive("null ratio", null_ratio)?;
    let scaled = null_ratio * target_exposure;
    Ok(scaled / (reference_exposure + scaled))
}

pub fn rate_ratio_test(reference: &CountWindow, target: &CountWindow, null_ratio: f64) -> Result<RateRatioResult> {
    rate_ratio_test_with(reference, target, null_ratio, TwoSidedMethod::default())
}

pub fn rate_ratio_test_with(
    reference: &CountWindow,
    target: &CountWindow,
    null_ratio: f64,
    method: TwoSidedMethod,
) -> Result<RateRatioResult> {
    reference.validate()?;
    target.validate()?;
    let p0 = conditional_success_prob(reference.exposure, target.exposure, null_ratio)?;
    let n = reference
        .events
        .checked_add(target.events)
        .ok_or_else(|| crate::Error::Domain("event total overflows".into()))?;
    let y = target.events;

    let (p_one_sided, p_two_sided) = if n == 0 {
        (1.0, 1.0)
    } else {
        let upper = binom_upper_tail(y, n, p0)?;
        let two = match method {
            TwoSidedMethod::Central => {
                let lower = binom_lower_tail(y, n, p0)?;
                (2.0 * lower.min(upper)).min(1.0)
            }
            TwoSidedMethod::MinLikelihood => min_likelihood_p(y, n, p0)?,
        };
        (upper, two)
    };

    Ok(RateRatioResult {
        p_one_sided,
        p_two_sided,
        two_sided_method: method,
        conditional_n: n,
        p0,
        null_ratio,
    })
}

fn min_likelihood_p(y: u64, n: u64, p0: f64) -> Result<f64> {
    // relative slack absorbs rounding between mathematically equal masses
    let observed = binom_pmf(y, n, p0)? * (1.0 + 1e-7);
    let mut total = 0.0;
    for k in 0..=n {
        let m = binom_pmf(k, n, p0)?;
        if m <= observed {
            total += m;
        }
    }
    Ok(total.min(1.0))
}

/// One-sided p-values for every (reference events, target events) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTable {
    pub reference_exposure: f64,
    pub target_exposure: f64,
    /// `values[i][j]`: reference has i events, target has j events.
    pub values: Vec<Vec<f64>>,
}

impl PTable {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values.get(row)?.get(col).copied()
    }
}

pub fn generate_p_table(
    max_ref: u64,
    max_target: u64,
    reference_exposure: f64,
    target_exposure: f64,
) -> Result<PTable> {
    let mut values = Vec::with_capacity(max_ref as usize + 1);
    for i in 0..=max_ref {
        let reference = CountWindow::new(i, reference_exposure, "")?;
        let row = (0..=max_target)
            .map(|j| {
                let target = CountWindow::new(j, target_exposure, "")?;
                Ok(rate_ratio_test(&reference, &target, 1.0)?.p_one_sided)
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(PTable {
        reference_exposure,
        target_exposure,
        values,
    })
}

/// Rounds half away from zero at `decimals` places. The scaled value is
/// snapped first so that decimal ties like 0.0285 are not lost to binary
/// representation.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    let snapped = (scaled * 1e9).round() / 1e9;
    let r = if snapped.fract().abs() == 0.5 {
        snapped.trunc() + snapped.signum()
    } else {
        scaled.round()
    };
    r / scale
}

/// Growth-adjusted exposures: a reference window of `years` periods with
/// volume growing by `growth` per period, followed by one target period.
pub fn growth_exposures(years: u32, growth: f64) -> Result<(f64, f64)> {
    if years == 0 || !(growth > -1.0) {
        return domain("growth exposures need at least one period and growth > -1");
    }
    let factor = 1.0 + growth;
    let reference = (0..years).map(|k| factor.powi(k as i32)).sum();
    Ok((reference, factor.powi(years as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn win(events: u64, exposure: f64) -> CountWindow {
        CountWindow::new(events, exposure, "").unwrap()
    }

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Exhaustive enumeration of the conditional binomial.
    fn brute_upper(y: u64, n: u64, p: f64) -> f64 {
        (y..=n)
            .map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
            .sum()
    }

    #[test]
    fn success_prob_examples() {
        assert!((conditional_success_prob(4.0, 1.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(conditional_success_prob(3.7, 3.7, 1.0).unwrap(), 0.5);
        assert!((conditional_success_prob(1.0, 0.7, 1.0).unwrap() - 0.7 / 1.7).abs() < 1e-15);
        assert!(conditional_success_prob(0.0, 1.0, 1.0).is_err());
        assert!(conditional_success_prob(1.0, -1.0, 1.0).is_err());
        assert!(conditional_success_prob(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn worked_examples() {
        let r = rate_ratio_test(&win(4, 1.0), &win(6, 1.0), 1.0).unwrap();
        assert!((r.p_one_sided - 386.0 / 1024.0).abs() < 1e-14);
        assert_eq!(r.conditional_n, 10);

        let (t1, t2) = growth_exposures(4, 0.05).unwrap();
        assert!((t1 - 4.310_125).abs() < 1e-12 && (t2 - 1.215_506_25).abs() < 1e-12);
        let r = rate_ratio_test(&win(0, t1), &win(1, t2), 1.0).unwrap();
        assert!((r.p_one_sided - t2 / (t1 + t2)).abs() < 1e-15);
        assert!((r.p_one_sided - 0.2200).abs() < 5e-5);

        let r = rate_ratio_test(&win(17, 1.0), &win(20, 0.7), 1.0).unwrap();
        let want = brute_upper(20, 37, 0.7 / 1.7);
        assert!((r.p_one_sided - want).abs() < 1e-13);
        assert_eq!(round_half_up(r.p_one_sided, 2), 0.08);

        let r = rate_ratio_test(&win(3, 1.0), &win(11, 1.0), 1.0).unwrap();
        assert!((r.p_one_sided - 470.0 / 16384.0).abs() < 1e-14);

        let r = rate_ratio_test(&win(0, t1), &win(2, t2), 1.0).unwrap();
        assert!((r.p_one_sided - 0.0484).abs() < 5e-5);
    }

    #[test]
    fn zero_counts_give_unit_p() {
        let r = rate_ratio_test(&win(0, 2.0), &win(0, 9.0), 1.0).unwrap();
        assert_eq!((r.p_one_sided, r.p_two_sided), (1.0, 1.0));
        let r = rate_ratio_test_with(&win(0, 2.0), &win(0, 9.0), 1.0, TwoSidedMethod::MinLikelihood).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn invalid_windows_rejected() {
        assert!(CountWindow::new(1, 0.0, "").is_err());
        let bad = CountWindow {
            events: 1,
            exposure: -2.0,
            label: String::new(),
        };
        assert!(rate_ratio_test(&bad, &win(1, 1.0), 1.0).is_err());
        assert!(rate_ratio_test(&win(1, 1.0), &win(1, 1.0), -1.0).is_err());
    }

    #[test]
    fn table_examples() {
        let t = generate_p_table(5, 7, 4.0, 1.0).unwrap();
        assert_eq!((t.rows(), t.cols()), (6, 8));
        assert!((t.values[1][3] - 0.0272).abs() < 5e-5);
        assert_eq!(round_half_up(t.values[1][3], 3), 0.027);
        assert_eq!(round_half_up(t.values[5][2], 3), 0.423);
        for k in 0..6 {
            assert_eq!(t.values[k][0], 1.0);
        }
        let single = generate_p_table(0, 0, 4.0, 1.0).unwrap();
        assert_eq!(single.values, vec![vec![1.0]]);
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(round_half_up(0.0285, 3), 0.029);
        assert_eq!(round_half_up(0.0284999, 3), 0.028);
        assert_eq!(round_half_up(0.1035, 3), 0.104);
        assert_eq!(round_half_up(0.0856, 2), 0.09);
        assert_eq!(round_half_up(1.0, 3), 1.0);
    }

    #[test]
    fn central_two_sided_bound() {
        for n in 1..=20u64 {
            for y in 0..=n {
                let r = rate_ratio_test(&win(n - y, 4.0), &win(y, 1.0), 1.0).unwrap();
                let lower = binom_lower_tail(y, n, 0.2).unwrap();
                let bound = (2.0 * lower.min(r.p_one_sided)).min(1.0);
                assert!(r.p_two_sided <= bound + 1e-15);
                assert!((0.0..=1.0).contains(&r.p_two_sided));
            }
        }
    }

    #[test]
    fn min_likelihood_symmetric_case() {
        // n = 10, p = 1/2, y = 8: outcomes {0,1,2,8,9,10}
        let r = rate_ratio_test_with(&win(2, 1.0), &win(8, 1.0), 1.0, TwoSidedMethod::MinLikelihood).unwrap();
        assert!((r.p_two_sided - 112.0 / 1024.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_equivalence_small_n() {
        for &p0 in &[0.1, 0.2, 0.5] {
            let t_ref = 1.0;
            let t_target = p0 / (1.0 - p0);
            for n in 0..=20u64 {
                for y in 0..=n {
                    let r = rate_ratio_test(&win(n - y, t_ref), &win(y, t_target), 1.0).unwrap();
                    let want = if n == 0 { 1.0 } else { brute_upper(y, n, r.p0) };
                    assert!((r.p_one_sided - want).abs() < 1e-12, "p0={p0} n={n} y={y}");
                }
            }
        }
    }

    #[test]
    fn complementary_tail_identity() {
        for &p in &[0.1, 0.2, 0.5] {
            for n in 1..=20u64 {
                for y in 0..=n {
                    let upper = binom_upper_tail(y, n, p).unwrap();
                    let lower = binom_lower_tail(y, n, p).unwrap();
                    let pmf = binom_pmf(y, n, p).unwrap();
                    assert!((upper + lower - pmf - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_counts(x in 0u64..40, y in 0u64..40, t1 in 0.1f64..10.0, t2 in 0.1f64..10.0) {
            let base = rate_ratio_test(&win(x, t1), &win(y, t2), 1.0).unwrap().p_one_sided;
            let more_target = rate_ratio_test(&win(x, t1), &win(y + 1, t2), 1.0).unwrap().p_one_sided;
            let more_ref = rate_ratio_test(&win(x + 1, t1), &win(y, t2), 1.0).unwrap().p_one_sided;
            prop_assert!(more_target <= base + 1e-12);
            prop_assert!(more_ref >= base - 1e-12);
        }

        #[test]
        fn scale_invariant(x in 0u64..60, y in 0u64..60, t1 in 0.1f64..10.0, t2 in 0.1f64..10.0, c in 1e-3f64..1e3) {
            let a = rate_ratio_test(&win(x, t1), &win(y, t2), 1.0).unwrap();
            let b = rate_ratio_test(&win(x, c * t1), &win(y, c * t2), 1.0).unwrap();
            prop_assert!((a.p_one_sided - b.p_one_sided).abs() < 1e-12);
            prop_assert!((a.p_two_sided - b.p_two_sided).abs() < 1e-12);
        }
    }
}
