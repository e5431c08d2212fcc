//! Monte-Carlo type-I / type-II error rates of the decision procedures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{p_category, posterior_category, Category, PThresholds, PosteriorThresholds};
use crate::error::{check_positive, domain, Result};
use crate::probkit::{sample_poisson, RandomStream};
use crate::rate_ratio::{rate_ratio_test, CountWindow};
use crate::reference::andrasik_levels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Procedure {
    /// One-sided rate-ratio p-value against p thresholds.
    RateRatioP(PThresholds),
    /// Lookup in the embedded posterior table (4-year vs 1-year windows);
    /// counts beyond the table are clipped to its last row or column.
    AndrasikTable(PosteriorThresholds),
}

impl Procedure {
    pub fn id(&self) -> String {
        match self {
            Procedure::RateRatioP(t) => format!("rate_ratio_p({},{})", t.probable, t.potential),
            Procedure::AndrasikTable(t) => format!("andrasik_table({},{})", t.alert, t.warning),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Procedure::RateRatioP(t) => t.validate(),
            Procedure::AndrasikTable(t) => t.validate(),
        }
    }

    /// Decision for one pair of counts, plus whether the counts were clipped.
    fn decide(&self, x: u64, y: u64, exposure_ref: f64, exposure_target: f64) -> Result<(Category, bool)> {
        match self {
            Procedure::RateRatioP(t) => {
                let r = rate_ratio_test(
                    &CountWindow::new(x, exposure_ref, "")?,
                    &CountWindow::new(y, exposure_target, "")?,
                    1.0,
                )?;
                Ok((p_category(r.p_one_sided, t), false))
            }
            Procedure::AndrasikTable(t) => {
                let table = andrasik_levels();
                let max_row = table.rows() as u64 - 1;
                let max_col = table.cols() as u64 - 1;
                let clipped = x > max_row || y > max_col;
                let value = table
                    .get(x.min(max_row) as usize, y.min(max_col) as usize)
                    .map(|c| c.value)
                    .unwrap_or(0.0);
                Ok((posterior_category(value, t), clipped))
            }
        }
    }
}

/// Which decisions count as a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionCounted {
    #[default]
    ProbableOrWorse,
    PotentialOrWorse,
}

impl DecisionCounted {
    pub fn counts(self, c: Category) -> bool {
        match self {
            DecisionCounted::ProbableOrWorse => c >= Category::ProbableDeterioration,
            DecisionCounted::PotentialOrWorse => c >= Category::PotentialDeterioration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateStudy {
    pub procedure: Procedure,
    pub rate_ref: f64,
    pub rate_target_null: f64,
    pub rate_target_alt: f64,
    pub exposure_ref: f64,
    pub exposure_target: f64,
    #[serde(default)]
    pub decision_counted: DecisionCounted,
    pub replications: u64,
}

impl ErrorRateStudy {
    pub fn validate(&self) -> Result<()> {
        self.procedure.validate()?;
        for (name, r) in [
            ("rate_ref", self.rate_ref),
            ("rate_target_null", self.rate_target_null),
            ("rate_target_alt", self.rate_target_alt),
        ] {
            if !(r >= 0.0) || !r.is_finite() {
                return domain(format!("{name} must be finite and non-negative, got {r}"));
            }
        }
        check_positive("exposure_ref", self.exposure_ref)?;
        check_positive("exposure_target", self.exposure_target)?;
        if self.replications == 0 {
            return domain("replications must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateReport {
    pub procedure_id: String,
    pub decision_counted: DecisionCounted,
    pub rate_ref: f64,
    pub rate_target_null: f64,
    pub rate_target_alt: f64,
    pub exposure_ref: f64,
    pub exposure_target: f64,
    /// Estimated type-I error (detections under the null regime).
    pub alpha_hat: f64,
    /// Estimated power, 1 − type-II error (detections under the alternative).
    pub power_hat: f64,
    pub replications: u64,
    pub mc_stderr_alpha: f64,
    pub mc_stderr_power: f64,
    /// Fraction of replications whose counts fell outside the lookup table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clipped_fraction_null: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clipped_fraction_alt: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    hits_null: u64,
    hits_alt: u64,
    clipped_null: u64,
    clipped_alt: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            hits_null: self.hits_null + o.hits_null,
            hits_alt: self.hits_alt + o.hits_alt,
            clipped_null: self.clipped_null + o.clipped_null,
            clipped_alt: self.clipped_alt + o.clipped_alt,
        }
    }
}

fn one_regime(study: &ErrorRateStudy, rate_target: f64, stream: &mut RandomStream) -> Result<(bool, bool)> {
    let x = sample_poisson(study.rate_ref * study.exposure_ref, stream)?;
    let y = sample_poisson(rate_target * study.exposure_target, stream)?;
    let (category, clipped) = study
        .procedure
        .decide(x, y, study.exposure_ref, study.exposure_target)?;
    Ok((study.decision_counted.counts(category), clipped))
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is 0.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::Domain(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Replication r draws the null regime from substream 2r and the alternative
/// from substream 2r + 1 of `stream`, so the report depends only on the
/// stream key, never on the worker count.
pub fn estimate_error_rates(study: &ErrorRateStudy, stream: &RandomStream, workers: usize) -> Result<ErrorRateReport> {
    study.validate()?;
    let tally = with_workers(workers, || {
        (0..study.replications)
            .into_par_iter()
            .map(|r| -> Result<Tally> {
                let (hit_null, clip_null) = one_regime(study, study.rate_target_null, &mut stream.substream(2 * r))?;
                let (hit_alt, clip_alt) = one_regime(study, study.rate_target_alt, &mut stream.substream(2 * r + 1))?;
                Ok(Tally {
                    hits_null: hit_null as u64,
                    hits_alt: hit_alt as u64,
                    clipped_null: clip_null as u64,
                    clipped_alt: clip_alt as u64,
                })
            })
            .try_reduce(Tally::default, |a, b| Ok(a + b))
    })??;

    let reps = study.replications as f64;
    let alpha_hat = tally.hits_null as f64 / reps;
    let power_hat = tally.hits_alt as f64 / reps;
    let stderr = |p: f64| (p * (1.0 - p) / reps).sqrt();

    let mut warnings = Vec::new();
    let (clipped_fraction_null, clipped_fraction_alt) = match study.procedure {
        Procedure::AndrasikTable(_) => {
            let ratio = study.exposure_ref / study.exposure_target;
            if (ratio - 4.0).abs() > 1e-9 {
                warnings.push(format!(
                    "lookup table assumes a 4:1 exposure ratio, study uses {ratio}"
                ));
            }
            let (cn, ca) = (tally.clipped_null as f64 / reps, tally.clipped_alt as f64 / reps);
            if tally.clipped_null + tally.clipped_alt > 0 {
                warnings.push(format!(
                    "counts clipped to the lookup table in {:.4} (null) and {:.4} (alternative) of replications",
                    cn, ca
                ));
            }
            (Some(cn), Some(ca))
        }
        Procedure::RateRatioP(_) => (None, None),
    };

    Ok(ErrorRateReport {
        procedure_id: study.procedure.id(),
        decision_counted: study.decision_counted,
        rate_ref: study.rate_ref,
        rate_target_null: study.rate_target_null,
        rate_target_alt: study.rate_target_alt,
        exposure_ref: study.exposure_ref,
        exposure_target: study.exposure_target,
        alpha_hat,
        power_hat,
        replications: study.replications,
        mc_stderr_alpha: stderr(alpha_hat),
        mc_stderr_power: stderr(power_hat),
        clipped_fraction_null,
        clipped_fraction_alt,
        warnings,
    })
}

/// Error rates for each alternative target rate, all from the same stream.
/// Alternatives whose power stays near alpha are ones the procedure cannot
/// tell apart from the null.
pub fn sweep_alternatives(
    study: &ErrorRateStudy,
    alternatives: &[f64],
    stream: &RandomStream,
    workers: usize,
) -> Result<Vec<ErrorRateReport>> {
    alternatives
        .iter()
        .map(|&alt| {
            let s = ErrorRateStudy {
                rate_target_alt: alt,
                ..study.clone()
            };
            estimate_error_rates(&s, stream, workers)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::poisson_pmf;

    fn study(alt: f64, reps: u64) -> ErrorRateStudy {
        ErrorRateStudy {
            procedure: Procedure::RateRatioP(PThresholds::default()),
            rate_ref: 1.0,
            rate_target_null: 1.0,
            rate_target_alt: alt,
            exposure_ref: 4.0,
            exposure_target: 1.0,
            decision_counted: DecisionCounted::ProbableOrWorse,
            replications: reps,
        }
    }

    /// Σ over (x, y) of the joint Poisson mass where the procedure detects,
    /// truncated far into both tails.
    fn exact_detection(s: &ErrorRateStudy, rate_target: f64) -> f64 {
        let m_ref = s.rate_ref * s.exposure_ref;
        let m_target = rate_target * s.exposure_target;
        let cap = |m: f64| (m + 12.0 * m.sqrt() + 12.0).ceil() as u64;
        let mut total = 0.0;
        for x in 0..=cap(m_ref) {
            let px = poisson_pmf(x, m_ref).unwrap();
            for y in 0..=cap(m_target) {
                let (c, _) = s.procedure.decide(x, y, s.exposure_ref, s.exposure_target).unwrap();
                if s.decision_counted.counts(c) {
                    total += px * poisson_pmf(y, m_target).unwrap();
                }
            }
        }
        total
    }

    #[test]
    fn identical_regimes_agree() {
        let s = study(1.0, 20_000);
        let r = estimate_error_rates(&s, &RandomStream::new(5, 0), 0).unwrap();
        let combined = (r.mc_stderr_alpha.powi(2) + r.mc_stderr_power.powi(2)).sqrt();
        assert!((r.alpha_hat - r.power_hat).abs() <= 4.0 * combined);
    }

    #[test]
    fn matches_exact_oracle() {
        let s = study(5.0, 20_000);
        let r = estimate_error_rates(&s, &RandomStream::new(8, 1), 0).unwrap();
        let alpha = exact_detection(&s, 1.0);
        let power = exact_detection(&s, 5.0);
        assert!((r.alpha_hat - alpha).abs() <= 4.0 * r.mc_stderr_alpha, "{} vs {alpha}", r.alpha_hat);
        assert!((r.power_hat - power).abs() <= 4.0 * r.mc_stderr_power, "{} vs {power}", r.power_hat);
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let s = study(3.0, 5_000);
        let stream = RandomStream::new(77, 2);
        let one = estimate_error_rates(&s, &stream, 1).unwrap();
        let four = estimate_error_rates(&s, &stream, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn andrasik_procedure_reports_clipping() {
        let s = ErrorRateStudy {
            procedure: Procedure::AndrasikTable(PosteriorThresholds::default()),
            rate_target_alt: 8.0,
            ..study(8.0, 4_000)
        };
        let r = estimate_error_rates(&s, &RandomStream::new(1, 1), 0).unwrap();
        assert!(r.clipped_fraction_alt.unwrap() > 0.1);
        assert!(r.warnings.iter().any(|w| w.contains("clipped")));
        let alpha = exact_detection(&s, 1.0);
        assert!((r.alpha_hat - alpha).abs() <= 4.0 * r.mc_stderr_alpha);

        let skewed = ErrorRateStudy { exposure_ref: 2.0, ..s };
        let r = estimate_error_rates(&skewed, &RandomStream::new(1, 1), 0).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("4:1")));
    }

    #[test]
    fn invalid_studies_rejected() {
        let stream = RandomStream::new(0, 0);
        assert!(estimate_error_rates(&study(1.0, 0), &stream, 0).is_err());
        assert!(estimate_error_rates(&study(-1.0, 10), &stream, 0).is_err());
        let s = ErrorRateStudy { exposure_target: 0.0, ..study(1.0, 10) };
        assert!(estimate_error_rates(&s, &stream, 0).is_err());
    }

    #[test]
    fn sweep_power_grows_with_alternative() {
        let s = study(1.0, 4_000);
        let reports = sweep_alternatives(&s, &[1.0, 3.0, 6.0], &RandomStream::new(3, 3), 0).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports[0].power_hat < reports[1].power_hat && reports[1].power_hat < reports[2].power_hat);
    }

    #[test]
    fn potential_or_worse_counts_more() {
        let probable = estimate_error_rates(&study(2.0, 5_000), &RandomStream::new(4, 0), 0).unwrap();
        let s = ErrorRateStudy {
            decision_counted: DecisionCounted::PotentialOrWorse,
            ..study(2.0, 5_000)
        };
        let potential = estimate_error_rates(&s, &RandomStream::new(4, 0), 0).unwrap();
        assert!(potential.alpha_hat >= probable.alpha_hat);
        assert!(potential.power_hat >= probable.power_hat);
    }
}
