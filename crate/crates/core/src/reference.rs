//! Published reference data shipped with the crate.
//!
//! Both decision tables are stored as CSV assets under `data/` and compiled
//! into the binary, so they are identical across builds. Cells keep their
//! printed precision and markers; empty cells were not published.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::classify::Category;

/// Posterior deterioration levels of the Bayesian procedure, 4-year
/// reference window vs 1-year target window.
pub const ANDRASIK_LEVELS_CSV: &str = include_str!("../data/andrasik_levels.csv");

/// One-sided rate-ratio p-levels for the same 4:1 setting, as published.
pub const RATE_RATIO_LEVELS_CSV: &str = include_str!("../data/rate_ratio_p_levels.csv");

/// Version tag of the embedded assets.
pub const REFERENCE_DATA_VERSION: u32 = 1;

/// Correlation coefficients between fatalities and serious injuries over
/// 3152 accidents. Display only; the underlying records are not shipped.
pub const FATALITY_INJURY_CORRELATIONS: [(&str, f64); 4] = [
    ("total fatalities", 0.634_000_74),
    ("passenger fatalities", 0.633_497_83),
    ("level-crossing user fatalities", 0.964_740_93),
    ("other fatalities", 0.953_311_97),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedCell {
    pub category: Category,
    pub value: f64,
    /// Number of decimals printed.
    pub decimals: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub cells: Vec<Vec<Option<PublishedCell>>>,
}

impl ReferenceTable {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&PublishedCell> {
        self.cells.get(row)?.get(col)?.as_ref()
    }

    pub fn published_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }
}

fn parse_cell(text: &str) -> Option<PublishedCell> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (marker, number) = match text.chars().next() {
        Some(c @ ('*' | '+')) => (&text[..c.len_utf8()], &text[c.len_utf8()..]),
        _ => ("", text),
    };
    let value: f64 = number.parse().expect("embedded table cell must be numeric");
    let decimals = number.split_once('.').map_or(0, |(_, frac)| frac.len() as u32);
    let category = Category::from_marker(marker).expect("embedded table marker");
    Some(PublishedCell {
        category,
        value,
        decimals,
    })
}

fn parse_table(csv_text: &str, skip_cols: usize) -> ReferenceTable {
    let cells = csv_text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| line.split(',').skip(skip_cols).map(parse_cell).collect())
        .collect();
    ReferenceTable { cells }
}

/// The Bayesian procedure's published (1−p) levels, rows n_ref = 0..5,
/// columns n_target = 0..7.
pub fn andrasik_levels() -> &'static ReferenceTable {
    static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(ANDRASIK_LEVELS_CSV, 2))
}

/// Published rate-ratio p-levels, rows n_ref = 0..5, columns n_target = 0..7.
pub fn rate_ratio_levels() -> &'static ReferenceTable {
    static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(RATE_RATIO_LEVELS_CSV, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn andrasik_shape_and_cells() {
        let t = andrasik_levels();
        assert_eq!((t.rows(), t.cols()), (6, 8));
        assert_eq!(t.published_count(), 48);
        let c = t.get(0, 2).unwrap();
        assert_eq!((c.value, c.category, c.decimals), (0.88, Category::PotentialDeterioration, 2));
        let c = t.get(0, 6).unwrap();
        assert_eq!((c.value, c.category), (1.0, Category::ProbableDeterioration));
        assert_eq!(t.get(4, 1).unwrap().category, Category::NoDeterioration);
    }

    #[test]
    fn rate_ratio_shape_and_cells() {
        let t = rate_ratio_levels();
        assert_eq!((t.rows(), t.cols()), (6, 8));
        assert_eq!(t.published_count(), 37);
        assert!(t.get(0, 4).is_none());
        let c = t.get(5, 4).unwrap();
        assert_eq!((c.value, c.decimals, c.category), (0.09, 2, Category::ProbableDeterioration));
        let c = t.get(3, 3).unwrap();
        assert_eq!((c.value, c.decimals), (0.099, 3));
    }
}
