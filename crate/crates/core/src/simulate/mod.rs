//! Compound Poisson accident processes.
//!
//! Accidents arrive as a homogeneous Poisson process with rate λ per unit of
//! exposure; each carries an i.i.d. severity S. Over exposure t the count is
//! N_t ~ Poisson(λt) and the cumulative severity is X_t = S₁ + … + S_{N_t},
//! with E X_t = λt·E S and Var X_t = λt·E S².

mod config;
mod diagnostics;
mod error_rates;

pub use config::{ConfigError, SimulationConfig, StudyConfig, DEFAULT_REPLICATIONS};
pub use diagnostics::{
    ks_uniform, moment_check, moment_check_with_loss_classes, poisson_gof, GofResult, KsResult, MomentCheckReport,
};
pub use error_rates::{
    estimate_error_rates, sweep_alternatives, DecisionCounted, ErrorRateReport, ErrorRateStudy, Procedure,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, domain, Error, Result};
use crate::probkit::special::ln_gamma;
use crate::probkit::{sample_poisson, RandomStream};

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeverityKind {
    Constant { value: f64 },
    /// Support [scale, ∞), tail index `shape`.
    Pareto { scale: f64, shape: f64 },
    Weibull { shape: f64, scale: f64 },
    EmpiricalPmf { values: Vec<f64>, probabilities: Vec<f64> },
}

impl SeverityKind {
    fn validate(&self) -> Result<()> {
        match self {
            SeverityKind::Constant { value } => check_positive("constant severity", *value),
            SeverityKind::Pareto { scale, shape } => {
                check_positive("pareto scale", *scale)?;
                check_positive("pareto shape", *shape)
            }
            SeverityKind::Weibull { shape, scale } => {
                check_positive("weibull shape", *shape)?;
                check_positive("weibull scale", *scale)
            }
            SeverityKind::EmpiricalPmf { values, probabilities } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return domain("empirical pmf needs equally long, non-empty values and probabilities");
                }
                for &v in values {
                    check_positive("empirical severity value", v)?;
                }
                if probabilities.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return domain("empirical probabilities must lie in [0, 1]");
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return domain(format!("empirical probabilities sum to {total}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// (E S, E S²).
    fn moments(&self) -> Result<(f64, f64)> {
        Ok(match self {
            SeverityKind::Constant { value } => (*value, value * value),
            SeverityKind::Pareto { scale, shape } => {
                if *shape <= 2.0 {
                    let which = if *shape <= 1.0 { "mean and variance" } else { "variance" };
                    return Err(Error::InfiniteMoment(format!(
                        "pareto shape {shape} has infinite {which}; need shape > 2"
                    )));
                }
                (shape * scale / (shape - 1.0), shape * scale * scale / (shape - 2.0))
            }
            SeverityKind::Weibull { shape, scale } => (
                scale * ln_gamma(1.0 + 1.0 / shape).exp(),
                scale * scale * ln_gamma(1.0 + 2.0 / shape).exp(),
            ),
            SeverityKind::EmpiricalPmf { values, probabilities } => values.iter().zip(probabilities).fold(
                (0.0, 0.0),
                |(m1, m2), (&v, &p)| (m1 + p * v, m2 + p * v * v),
            ),
        })
    }

    fn sample(&self, stream: &mut RandomStream) -> f64 {
        match self {
            SeverityKind::Constant { value } => *value,
            SeverityKind::Pareto { scale, shape } => scale * (1.0 - stream.uniform()).powf(-1.0 / shape),
            SeverityKind::Weibull { shape, scale } => scale * (-(1.0 - stream.uniform()).ln()).powf(1.0 / shape),
            SeverityKind::EmpiricalPmf { values, probabilities } => values[pick(probabilities, stream.uniform())],
        }
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the last cumulative weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub kind: SeverityKind,
}

/// Discrete mixture of severity distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityModel {
    pub components: Vec<SeverityComponent>,
}

impl SeverityModel {
    pub fn single(kind: SeverityKind) -> Self {
        Self {
            components: vec![SeverityComponent { weight: 1.0, kind }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return domain("severity model needs at least one component");
        }
        for c in &self.components {
            if !(0.0..=1.0).contains(&c.weight) {
                return domain(format!("component weight {} outside [0, 1]", c.weight));
            }
            c.kind.validate()?;
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return domain(format!("component weights sum to {total}, not 1"));
        }
        Ok(())
    }

    /// (E S, E S²) of the mixture.
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            let (a, b) = c.kind.moments()?;
            m1 += c.weight * a;
            m2 += c.weight * b;
        }
        Ok((m1, m2))
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        let kind = if self.components.len() == 1 {
            &self.components[0].kind
        } else {
            let weights: Vec<f64> = self.components.iter().map(|c| c.weight).collect();
            &self.components[pick(&weights, stream.uniform())].kind
        };
        kind.sample(stream)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    /// Events per unit of exposure.
    pub rate: f64,
    pub exposure: f64,
    pub severity: SeverityModel,
}

impl CompoundPoissonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return domain(format!("rate must be finite and non-negative, got {}", self.rate));
        }
        check_positive("exposure", self.exposure)?;
        self.severity.validate()
    }
}

/// One simulated accident history over [0, exposure].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRealization {
    pub event_positions: Vec<f64>,
    pub severities: Vec<f64>,
    pub n_events: u64,
    pub total_severity: f64,
}

pub fn simulate_process(spec: &CompoundPoissonSpec, stream: &mut RandomStream) -> Result<ProcessRealization> {
    spec.validate()?;
    let n = sample_poisson(spec.rate * spec.exposure, stream)?;
    let mut event_positions: Vec<f64> = (0..n).map(|_| stream.uniform() * spec.exposure).collect();
    event_positions.sort_by(f64::total_cmp);
    let severities: Vec<f64> = (0..n).map(|_| spec.severity.sample(stream)).collect();
    let total_severity = severities.iter().sum();
    Ok(ProcessRealization {
        event_positions,
        severities,
        n_events: n,
        total_severity,
    })
}

/// (E X_t, Var X_t) = (λt·E S, λt·E S²).
pub fn theoretical_moments(spec: &CompoundPoissonSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let (m1, m2) = spec.severity.moments()?;
    let lt = spec.rate * spec.exposure;
    Ok((lt * m1, lt * m2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalCoefficients {
    pub v_n: f64,
    pub v_s: f64,
    pub v_sn: f64,
}

/// Coefficients of variation of N, S and of the product S·N for independent
/// S and N, from Var(SN) = Var S·Var N + Var S·(E N)² + Var N·(E S)²,
/// i.e. v_SN² = v_S² v_N² + v_S² + v_N².
pub fn variational_coefficients(n_mean: f64, n_var: f64, s_mean: f64, s_var: f64) -> Result<VariationalCoefficients> {
    check_positive("count mean", n_mean)?;
    check_positive("severity mean", s_mean)?;
    if !(n_var >= 0.0) || !(s_var >= 0.0) || !n_var.is_finite() || !s_var.is_finite() {
        return domain("variances must be finite and non-negative");
    }
    let v_n = n_var.sqrt() / n_mean;
    let v_s = s_var.sqrt() / s_mean;
    let v2 = v_s * v_s;
    let w2 = v_n * v_n;
    let v_sn = (v2 * w2 + v2 + w2).sqrt();
    Ok(VariationalCoefficients { v_n, v_s, v_sn })
}

pub const LOSS_CLASS_LABELS: [char; 7] = ['A', 'B', 'C', 'D', 'E', 'F', 'G'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossClassHistogram {
    /// Counts for classes A (smallest losses) through G (largest).
    pub counts: [u64; 7],
}

impl LossClassHistogram {
    pub fn labeled(&self) -> impl Iterator<Item = (char, u64)> + '_ {
        LOSS_CLASS_LABELS.iter().copied().zip(self.counts.iter().copied())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Buckets severities into (−∞, b₁], (b₁, b₂], …, (b₆, ∞).
pub fn loss_class_histogram(severities: &[f64], boundaries: &[f64; 6]) -> Result<LossClassHistogram> {
    for &b in boundaries {
        check_positive("loss class boundary", b)?;
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return domain(format!("loss class boundaries must be strictly ascending, got {boundaries:?}"));
    }
    let mut counts = [0u64; 7];
    for &s in severities {
        let class = boundaries.partition_point(|&b| b < s);
        counts[class] += 1;
    }
    Ok(LossClassHistogram { counts })
}
