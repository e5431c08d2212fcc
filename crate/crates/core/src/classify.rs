//! Three-tier deterioration decisions and decision-table comparison.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, domain, Error, Result};

/// Decision tiers, ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    NoDeterioration,
    PotentialDeterioration,
    ProbableDeterioration,
}

impl Category {
    /// Table marker: "" for no deterioration, "*" potential, "+" probable.
    pub fn marker(self) -> &'static str {
        match self {
            Category::NoDeterioration => "",
            Category::PotentialDeterioration => "*",
            Category::ProbableDeterioration => "+",
        }
    }

    pub fn from_marker(marker: &str) -> Result<Self> {
        match marker {
            "" => Ok(Category::NoDeterioration),
            "*" => Ok(Category::PotentialDeterioration),
            "+" => Ok(Category::ProbableDeterioration),
            other => domain(format!("unknown decision marker {other:?}")),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::NoDeterioration => "No deterioration",
            Category::PotentialDeterioration => "Potential deterioration",
            Category::ProbableDeterioration => "Probable deterioration",
        }
    }

    /// Gate exit code: 0, 3 or 4.
    pub fn exit_code(self) -> i32 {
        match self {
            Category::NoDeterioration => 0,
            Category::PotentialDeterioration => 3,
            Category::ProbableDeterioration => 4,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub category: Category,
    pub marker: String,
    pub source: String,
}

impl Decision {
    pub fn new(category: Category, source: impl Into<String>) -> Self {
        Self {
            category,
            marker: category.marker().to_string(),
            source: source.into(),
        }
    }
}

/// How a value sitting exactly on a threshold is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Ties fall into the more severe tier (matches the published table markers).
    #[default]
    TowardSevere,
    /// Ties fall into the less severe tier.
    Strict,
}

/// Upper p-value limits for the probable and potential tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PThresholds {
    pub probable: f64,
    pub potential: f64,
    #[serde(default)]
    pub ties: TieRule,
}

impl PThresholds {
    pub fn new(probable: f64, potential: f64) -> Result<Self> {
        let t = Self {
            probable,
            potential,
            ties: TieRule::default(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_ties(mut self, ties: TieRule) -> Self {
        self.ties = ties;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.probable && self.probable < self.potential && self.potential < 1.0 {
            Ok(())
        } else {
            domain(format!(
                "p thresholds must satisfy 0 < probable < potential < 1, got {} and {}",
                self.probable, self.potential
            ))
        }
    }
}

impl Default for PThresholds {
    fn default() -> Self {
        Self {
            probable: 0.1,
            potential: 0.25,
            ties: TieRule::TowardSevere,
        }
    }
}

/// Lower posterior-probability limits for the alert and warning tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorThresholds {
    pub alert: f64,
    pub warning: f64,
    #[serde(default)]
    pub ties: TieRule,
}

impl PosteriorThresholds {
    pub fn new(alert: f64, warning: f64) -> Result<Self> {
        let t = Self {
            alert,
            warning,
            ties: TieRule::default(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_ties(mut self, ties: TieRule) -> Self {
        self.ties = ties;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.warning && self.warning < self.alert && self.alert < 1.0 {
            Ok(())
        } else {
            domain(format!(
                "posterior thresholds must satisfy 0 < warning < alert < 1, got {} and {}",
                self.warning, self.alert
            ))
        }
    }
}

impl Default for PosteriorThresholds {
    fn default() -> Self {
        Self {
            alert: 0.9,
            warning: 0.75,
            ties: TieRule::TowardSevere,
        }
    }
}

pub(crate) fn p_category(p: f64, t: &PThresholds) -> Category {
    let below = |limit: f64| match t.ties {
        TieRule::TowardSevere => p <= limit,
        TieRule::Strict => p < limit,
    };
    if below(t.probable) {
        Category::ProbableDeterioration
    } else if below(t.potential) {
        Category::PotentialDeterioration
    } else {
        Category::NoDeterioration
    }
}

pub(crate) fn posterior_category(prob: f64, t: &PosteriorThresholds) -> Category {
    let above = |limit: f64| match t.ties {
        TieRule::TowardSevere => prob >= limit,
        TieRule::Strict => prob > limit,
    };
    if above(t.alert) {
        Category::ProbableDeterioration
    } else if above(t.warning) {
        Category::PotentialDeterioration
    } else {
        Category::NoDeterioration
    }
}

/// Classifies a p-value: small p means stronger evidence of deterioration.
pub fn classify_p(p: f64, thresholds: &PThresholds) -> Result<Decision> {
    check_probability("p", p)?;
    thresholds.validate()?;
    Ok(Decision::new(p_category(p, thresholds), "rate_ratio"))
}

/// Classifies a posterior deterioration probability.
pub fn classify_posterior(prob: f64, thresholds: &PosteriorThresholds) -> Result<Decision> {
    check_probability("posterior probability", prob)?;
    thresholds.validate()?;
    Ok(Decision::new(posterior_category(prob, thresholds), "bayes"))
}

/// Row-major grid of decisions indexed by (reference events, target events).
pub type DecisionMatrix = Vec<Vec<Category>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDisagreement {
    pub row: usize,
    pub col: usize,
    pub a: Category,
    pub b: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub cells: usize,
    pub agreements: usize,
    pub disagreements: Vec<CellDisagreement>,
}

impl DisagreementReport {
    pub fn disagrees_at(&self, row: usize, col: usize) -> bool {
        self.disagreements.iter().any(|d| d.row == row && d.col == col)
    }
}

pub fn compare_decision_tables(a: &DecisionMatrix, b: &DecisionMatrix) -> Result<DisagreementReport> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} rows",
            a.len(),
            b.len()
        )));
    }
    let mut report = DisagreementReport {
        cells: 0,
        agreements: 0,
        disagreements: Vec::new(),
    };
    for (row, (ra, rb)) in a.iter().zip(b).enumerate() {
        if ra.len() != rb.len() {
            return Err(Error::DimensionMismatch(format!(
                "row {row}: {} columns vs {} columns",
                ra.len(),
                rb.len()
            )));
        }
        for (col, (&ca, &cb)) in ra.iter().zip(rb).enumerate() {
            report.cells += 1;
            if ca == cb {
                report.agreements += 1;
            } else {
                report.disagreements.push(CellDisagreement { row, col, a: ca, b: cb });
            }
        }
    }
    Ok(report)
}
