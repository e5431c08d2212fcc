//! Beta-Binomial comparator for two count windows.
//!
//! Conditional on the total, the target share of events is binomial with
//! success probability p. A Beta(α, β) prior on p yields the posterior
//! Beta(α + y, β + x), and deterioration means p exceeds the share p₀
//! implied by the exposures alone.
//!
//! The prior used by the Swiss authority for the published decision table is
//! not public. That table is therefore embedded verbatim
//! ([`andrasik_lookup`]) and [`calibrate_prior`] only offers a best-effort
//! reconstruction.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::probkit::binom_pmf;
use crate::probkit::special::inc_beta;
use crate::rate_ratio::{conditional_success_prob, CountWindow};
use crate::reference::andrasik_levels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn uniform() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_positive("beta", self.beta)
    }

    /// Conjugate update with `successes` target events and `failures`
    /// reference events.
    pub fn update(&self, successes: u64, failures: u64) -> BetaPrior {
        BetaPrior {
            alpha: self.alpha + successes as f64,
            beta: self.beta + failures as f64,
        }
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self::uniform()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesResult {
    pub posterior_deterioration: f64,
    pub posterior_alpha: f64,
    pub posterior_beta: f64,
    pub p0: f64,
}

/// P(p > p₀ | Beta(α, β)) = 1 − I_{p₀}(α, β), evaluated on the complementary
/// side to keep small tails accurate.
fn beta_exceedance(alpha: f64, beta: f64, p0: f64) -> f64 {
    inc_beta(beta, alpha, 1.0 - p0)
}

pub fn posterior_deterioration_prob(prior: &BetaPrior, reference: &CountWindow, target: &CountWindow) -> Result<BayesResult> {
    prior.validate()?;
    reference.validate()?;
    target.validate()?;
    let p0 = conditional_success_prob(reference.exposure, target.exposure, 1.0)?;
    let post = prior.update(target.events, reference.events);
    Ok(BayesResult {
        posterior_deterioration: beta_exceedance(post.alpha, post.beta, p0),
        posterior_alpha: post.alpha,
        posterior_beta: post.beta,
        p0,
    })
}

/// Published level for `n_ref` reference events (4-year window) and
/// `n_target` target events (1-year window).
pub fn andrasik_lookup(n_ref: usize, n_target: usize) -> Result<f64> {
    let table = andrasik_levels();
    table
        .get(n_ref, n_target)
        .map(|c| c.value)
        .ok_or(Error::OutOfRange {
            row: n_ref,
            col: n_target,
            rows: table.rows(),
            cols: table.cols(),
        })
}

pub const CALIBRATION_REFERENCE_EXPOSURE: f64 = 4.0;
pub const CALIBRATION_TARGET_EXPOSURE: f64 = 1.0;
/// log10 bounds and step count of the calibration grid.
pub const CALIBRATION_LOG10_RANGE: (f64, f64) = (-3.0, 3.0);
pub const CALIBRATION_GRID_STEPS: usize = 61;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResidual {
    pub n_ref: usize,
    pub n_target: usize,
    pub published: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub prior: BetaPrior,
    pub objective: f64,
    pub uniform_objective: f64,
    pub residuals: Vec<CellResidual>,
}

/// Sum of squared differences between fitted posteriors and the embedded table.
pub fn calibration_objective(prior: &BetaPrior) -> f64 {
    let table = andrasik_levels();
    let p0 = CALIBRATION_TARGET_EXPOSURE / (CALIBRATION_REFERENCE_EXPOSURE + CALIBRATION_TARGET_EXPOSURE);
    let mut sse = 0.0;
    for (i, row) in table.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if let Some(cell) = cell {
                let fit = beta_exceedance(prior.alpha + j as f64, prior.beta + i as f64, p0);
                sse += (fit - cell.value).powi(2);
            }
        }
    }
    sse
}

/// Fits a Beta prior to the embedded table: exhaustive search over a
/// 61 × 61 log-spaced grid on [1e-3, 1e3]², then Nelder-Mead in log space
/// from the best grid point, clamped to the grid bounds.
pub fn calibrate_prior() -> CalibrationReport {
    let (lo, hi) = CALIBRATION_LOG10_RANGE;
    let step = (hi - lo) / (CALIBRATION_GRID_STEPS - 1) as f64;
    let objective = |la: f64, lb: f64| {
        calibration_objective(&BetaPrior {
            alpha: 10f64.powf(la.clamp(lo, hi)),
            beta: 10f64.powf(lb.clamp(lo, hi)),
        })
    };

    let mut best = (0.0, 0.0, f64::INFINITY);
    for ia in 0..CALIBRATION_GRID_STEPS {
        for ib in 0..CALIBRATION_GRID_STEPS {
            let (la, lb) = (lo + ia as f64 * step, lo + ib as f64 * step);
            let f = objective(la, lb);
            if f < best.2 {
                best = (la, lb, f);
            }
        }
    }

    let (la, lb) = nelder_mead(|v| objective(v[0], v[1]), [best.0, best.1], step, 400);
    let (la, lb) = (la.clamp(lo, hi), lb.clamp(lo, hi));
    let mut prior = BetaPrior {
        alpha: 10f64.powf(la),
        beta: 10f64.powf(lb),
    };
    let mut sse = calibration_objective(&prior);
    if sse > best.2 {
        prior = BetaPrior {
            alpha: 10f64.powf(best.0),
            beta: 10f64.powf(best.1),
        };
        sse = best.2;
    }

    let p0 = CALIBRATION_TARGET_EXPOSURE / (CALIBRATION_REFERENCE_EXPOSURE + CALIBRATION_TARGET_EXPOSURE);
    let table = andrasik_levels();
    let residuals = table
        .cells
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter().enumerate().filter_map(move |(j, cell)| {
                cell.as_ref().map(|c| {
                    let fitted = beta_exceedance(prior.alpha + j as f64, prior.beta + i as f64, p0);
                    CellResidual {
                        n_ref: i,
                        n_target: j,
                        published: c.value,
                        fitted,
                        residual: fitted - c.value,
                    }
                })
            })
        })
        .collect();

    CalibrationReport {
        prior,
        objective: sse,
        uniform_objective: calibration_objective(&BetaPrior::uniform()),
        residuals,
    }
}

/// Two-dimensional Nelder-Mead with standard coefficients.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], scale: f64, max_iter: usize) -> (f64, f64) {
    let mut simplex = [
        start,
        [start[0] + scale, start[1]],
        [start[0], start[1] + scale],
    ];
    let mut values = simplex.map(&f);
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() < 1e-14 {
            break;
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best][0], simplex[best][1])
}

/// Fatal (f) and serious (s) injury counts in the reference and target periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeverityCounts {
    pub fatal_ref: u64,
    pub fatal_target: u64,
    pub serious_ref: u64,
    pub serious_target: u64,
}

/// Product of the two independent binomial likelihoods for fatalities and
/// serious injuries, target counts as successes.
pub fn severity_product_likelihood(counts: &SeverityCounts, p_f: f64, p_s: f64) -> Result<f64> {
    check_probability("p_f", p_f)?;
    check_probability("p_s", p_s)?;
    let fatal = binom_pmf(counts.fatal_target, counts.fatal_target + counts.fatal_ref, p_f)?;
    let serious = binom_pmf(counts.serious_target, counts.serious_target + counts.serious_ref, p_s)?;
    Ok((fatal.ln() + serious.ln()).exp())
}

/// Separate posterior deterioration probabilities for fatalities and serious
/// injuries under the independence assumption. They are deliberately not
/// combined into one figure.
pub fn severity_posteriors(
    prior_f: &BetaPrior,
    prior_s: &BetaPrior,
    counts: &SeverityCounts,
    reference_exposure: f64,
    target_exposure: f64,
) -> Result<(f64, f64)> {
    prior_f.validate()?;
    prior_s.validate()?;
    let p0 = conditional_success_prob(reference_exposure, target_exposure, 1.0)?;
    let f = prior_f.update(counts.fatal_target, counts.fatal_ref);
    let s = prior_s.update(counts.serious_target, counts.serious_ref);
    Ok((beta_exceedance(f.alpha, f.beta, p0), beta_exceedance(s.alpha, s.beta, p0)))
}

/// Sign of (1 − posterior) − p_one_sided for one cell of the comparator study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorCell {
    pub n_ref: u64,
    pub n_target: u64,
    pub bayes_p: f64,
    pub exact_p: f64,
    pub difference: f64,
}

/// Compares 1 − posterior (uniform prior) with the exact one-sided p-value
/// for every split with x + y ≤ `max_total` at the given exposures.
pub fn comparator_study(max_total: u64, reference_exposure: f64, target_exposure: f64) -> Result<Vec<ComparatorCell>> {
    let prior = BetaPrior::uniform();
    let mut out = Vec::new();
    for total in 0..=max_total {
        for y in 0..=total {
            let reference = CountWindow::new(total - y, reference_exposure, "")?;
            let target = CountWindow::new(y, target_exposure, "")?;
            let bayes_p = 1.0 - posterior_deterioration_prob(&prior, &reference, &target)?.posterior_deterioration;
            let exact_p = crate::rate_ratio::rate_ratio_test(&reference, &target, 1.0)?.p_one_sided;
            out.push(ComparatorCell {
                n_ref: total - y,
                n_target: y,
                bayes_p,
                exact_p,
                difference: bayes_p - exact_p,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn win(events: u64, exposure: f64) -> CountWindow {
        CountWindow::new(events, exposure, "").unwrap()
    }

    #[test]
    fn posterior_examples() {
        let u = BetaPrior::uniform();
        let r = posterior_deterioration_prob(&u, &win(0, 4.0), &win(0, 1.0)).unwrap();
        assert!((r.posterior_deterioration - 0.8).abs() < 1e-12);
        let r = posterior_deterioration_prob(&u, &win(1, 4.0), &win(1, 1.0)).unwrap();
        assert!((r.posterior_deterioration - 0.896).abs() < 1e-12);
        assert_eq!((r.posterior_alpha, r.posterior_beta), (2.0, 2.0));
        let r = posterior_deterioration_prob(&u, &win(0, 2.5), &win(0, 2.5)).unwrap();
        assert!((r.posterior_deterioration - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_prior_rejected() {
        assert!(BetaPrior::new(0.0, 1.0).is_err());
        let bad = BetaPrior { alpha: -1.0, beta: 1.0 };
        assert!(posterior_deterioration_prob(&bad, &win(0, 1.0), &win(0, 1.0)).is_err());
    }

    #[test]
    fn lookup_examples() {
        assert_eq!(andrasik_lookup(0, 0).unwrap(), 0.50);
        assert_eq!(andrasik_lookup(0, 2).unwrap(), 0.88);
        assert_eq!(andrasik_lookup(5, 4).unwrap(), 0.89);
        assert!(matches!(andrasik_lookup(6, 0), Err(Error::OutOfRange { .. })));
        assert!(andrasik_lookup(0, 8).is_err());
    }

    #[test]
    fn conjugate_updates_are_additive() {
        let p = BetaPrior::new(0.7, 2.3).unwrap();
        assert_eq!(p.update(2, 3).update(4, 1), p.update(6, 4));
    }

    #[test]
    fn likelihood_examples() {
        let zero = SeverityCounts::default();
        assert_eq!(severity_product_likelihood(&zero, 0.3, 0.8).unwrap(), 1.0);
        let c = SeverityCounts {
            fatal_target: 1,
            fatal_ref: 1,
            ..Default::default()
        };
        assert!((severity_product_likelihood(&c, 0.5, 0.123).unwrap() - 0.5).abs() < 1e-15);
        let c = SeverityCounts {
            fatal_ref: 1,
            fatal_target: 1,
            serious_ref: 1,
            serious_target: 1,
        };
        assert!((severity_product_likelihood(&c, 0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(severity_product_likelihood(&c, 1.5, 0.5).is_err());
    }

    #[test]
    fn severity_posterior_examples() {
        let u = BetaPrior::uniform();
        let (f, s) = severity_posteriors(&u, &u, &SeverityCounts::default(), 3.0, 3.0).unwrap();
        assert!((f - 0.5).abs() < 1e-12 && (s - 0.5).abs() < 1e-12);
        let c = SeverityCounts {
            fatal_target: 1,
            fatal_ref: 1,
            ..Default::default()
        };
        let (f, s) = severity_posteriors(&u, &u, &c, 1.0, 1.0).unwrap();
        assert!((f - 0.5).abs() < 1e-12 && (s - 0.5).abs() < 1e-12);
        let c = SeverityCounts {
            fatal_target: 2,
            ..Default::default()
        };
        let (f, s) = severity_posteriors(&u, &u, &c, 4.0, 1.0).unwrap();
        assert!((f - 0.992).abs() < 1e-12, "{f}");
        assert!((s - 0.8).abs() < 1e-12, "{s}");
        assert!(severity_posteriors(&u, &u, &c, 0.0, 1.0).is_err());
    }

    #[test]
    fn vague_prior_converges_to_data_tail() {
        // Beta(y, x) tail at p0 = 0.2, both counts positive
        for &(x, y) in &[(1u64, 1u64), (3, 2), (2, 5), (6, 1)] {
            let limit = inc_beta(x as f64, y as f64, 0.8);
            let mut last = f64::INFINITY;
            for k in 1..=6 {
                let e = 10f64.powi(-k);
                let prior = BetaPrior::new(e, e).unwrap();
                let r = posterior_deterioration_prob(&prior, &win(x, 4.0), &win(y, 1.0)).unwrap();
                let gap = (r.posterior_deterioration - limit).abs();
                assert!(gap < last, "({x},{y}) k={k}: {gap} !< {last}");
                last = gap;
            }
            assert!(last < 1e-5);
        }
    }

    #[test]
    fn calibration_beats_uniform() {
        let report = calibrate_prior();
        assert!(report.objective <= report.uniform_objective);
        assert_eq!(report.residuals.len(), 48);
        assert!((1e-3..=1e3).contains(&report.prior.alpha));
        assert!((1e-3..=1e3).contains(&report.prior.beta));
        let first = &report.residuals[0];
        assert_eq!((first.n_ref, first.n_target, first.published), (0, 0, 0.50));
    }

    #[test]
    fn comparator_study_covers_all_splits() {
        let cells = comparator_study(10, 4.0, 1.0).unwrap();
        assert_eq!(cells.len(), 66);
        assert!(cells.iter().all(|c| (0.0..=1.0).contains(&c.bayes_p)));
    }

    proptest! {
        #[test]
        fn posterior_strictly_monotone(x in 0u64..30, y in 0u64..30, a in 0.1f64..5.0, b in 0.1f64..5.0) {
            let prior = BetaPrior::new(a, b).unwrap();
            let base = posterior_deterioration_prob(&prior, &win(x, 4.0), &win(y, 1.0)).unwrap().posterior_deterioration;
            let up = posterior_deterioration_prob(&prior, &win(x, 4.0), &win(y + 1, 1.0)).unwrap().posterior_deterioration;
            let down = posterior_deterioration_prob(&prior, &win(x + 1, 4.0), &win(y, 1.0)).unwrap().posterior_deterioration;
            // strict where the values are distinguishable in double precision
            prop_assert!(up > base || (!(1e-12..=1.0 - 1e-12).contains(&base) && up >= base));
            prop_assert!(down < base || (!(1e-12..=1.0 - 1e-12).contains(&base) && down <= base));
        }
    }
}
