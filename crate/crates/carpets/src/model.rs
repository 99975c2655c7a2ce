//! Carpet ensembles: patterns, weights, validation, and weighted averages.
//!
//! A pattern is a selection of cells from an `m` by `n` grid with `n > m
//! >= 2`, so every cell is a tall rectangle. An ensemble is a finite list
//! of patterns together with a probability weight for each; a random
//! carpet picks one pattern per subdivision level, independently with
//! these weights, and applies it to every rectangle of that level at once.
//!
//! Grid sides are arbitrary-precision integers because the extreme
//! ensembles built in `formulas` use heights far beyond `u64`. Cell
//! coordinates stay `u64`: cells are listed explicitly, so any pattern a
//! user can write down has far fewer than 2^64 of them per side.
//!
//! The JSON form is `{"patterns": [{"m": .., "n": .., "cells":
//! [[col,row], ..]}, ..], "weights": [..]}` with unknown keys rejected and
//! grid sides written as plain integers of any size.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bigmath::ln_big;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------
// Pattern and ensemble
// ---------------------------------------------------------------------

/// One subdivision pattern on an `m` by `n` grid.
///
/// `cells` holds `(column, row)` pairs with columns counted from the left
/// and rows from the bottom, both zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    /// Number of grid columns (horizontal subdivision factor).
    #[serde(with = "big_side")]
    pub m: BigUint,
    /// Number of grid rows (vertical subdivision factor), always larger
    /// than `m`.
    #[serde(with = "big_side")]
    pub n: BigUint,
    /// Selected cells as `(column, row)` pairs.
    pub cells: Vec<(u64, u64)>,
}

impl Pattern {
    /// Builds a pattern from any integer-like grid sides.
    pub fn new(m: impl Into<BigUint>, n: impl Into<BigUint>, cells: Vec<(u64, u64)>) -> Self {
        Pattern {
            m: m.into(),
            n: n.into(),
            cells,
        }
    }

    /// Counts cells, occupied columns, and the fullest column.
    pub fn stats(&self) -> PatternStats {
        let mut per_column: BTreeMap<u64, u64> = BTreeMap::new();
        for &(col, _) in &self.cells {
            *per_column.entry(col).or_insert(0) += 1;
        }
        let stats = PatternStats {
            cell_count: self.cells.len() as u64,
            column_count: per_column.len() as u64,
            max_column: per_column.values().copied().max().unwrap_or(0),
        };
        debug_assert!(
            stats.cell_count <= stats.column_count * stats.max_column,
            "each occupied column holds at most max_column cells"
        );
        stats
    }
}

/// Weighted family of patterns defining one random carpet model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub patterns: Vec<Pattern>,
    /// Probability of each pattern; strictly positive, summing to 1.
    pub weights: Vec<f64>,
}

impl Ensemble {
    /// Parses the JSON form, reporting syntax and schema problems as
    /// validation errors.
    pub fn from_json_str(text: &str) -> Result<Ensemble> {
        serde_json::from_str(text).map_err(|err| Error::Validation(format!("bad ensemble JSON: {err}")))
    }

    /// Serializes to pretty-printed JSON.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serialization cannot fail")
    }

    /// Runs every structural check and returns the full report.
    pub fn validate(&self) -> ValidationReport {
        validate_ensemble(self)
    }

    /// Errors with the first failing check, for callers that only need a
    /// yes or no.
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.checks.iter().find(|c| !c.ok) {
            None => Ok(()),
            Some(check) => Err(Error::Validation(format!("{}: {}", check.name, check.detail))),
        }
    }

    /// Rescales the weights to sum to exactly 1. Never applied silently;
    /// callers invoke this only on an explicit user request.
    pub fn renormalize_weights(&mut self) {
        let sum: f64 = self.weights.iter().sum();
        if sum > 0.0 {
            for w in &mut self.weights {
                *w /= sum;
            }
        }
    }

    /// Weighted geometric averages of the per-pattern quantities, in log
    /// domain. Call on a validated ensemble.
    pub fn averages(&self) -> Averages {
        let mut avg = Averages::default();
        for (pattern, &weight) in self.patterns.iter().zip(&self.weights) {
            let stats = pattern.stats();
            avg.log_m += weight * ln_big(&pattern.m);
            avg.log_n += weight * ln_big(&pattern.n);
            avg.log_cell_count += weight * (stats.cell_count as f64).ln();
            avg.log_column_count += weight * (stats.column_count as f64).ln();
            avg.log_max_column += weight * (stats.max_column as f64).ln();
        }
        avg
    }
}

// ---------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------

/// Combinatorial summary of one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatternStats {
    /// Total number of selected cells.
    pub cell_count: u64,
    /// Number of grid columns containing at least one cell.
    pub column_count: u64,
    /// Largest number of cells in any single column.
    pub max_column: u64,
}

/// Weighted geometric means across the ensemble, stored as natural logs.
///
/// The log form is canonical: it cannot overflow for huge grids and it is
/// what every formula consumes. The exponentiated means are views.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Averages {
    /// Mean log horizontal subdivision factor.
    pub log_m: f64,
    /// Mean log vertical subdivision factor.
    pub log_n: f64,
    /// Mean log cell count.
    pub log_cell_count: f64,
    /// Mean log occupied-column count.
    pub log_column_count: f64,
    /// Mean log fullest-column size.
    pub log_max_column: f64,
}

impl Averages {
    /// Geometric mean of the horizontal subdivision factors.
    pub fn geo_m(&self) -> f64 {
        self.log_m.exp()
    }

    /// Geometric mean of the vertical subdivision factors.
    pub fn geo_n(&self) -> f64 {
        self.log_n.exp()
    }

    /// Geometric mean of the cell counts.
    pub fn geo_cell_count(&self) -> f64 {
        self.log_cell_count.exp()
    }

    /// Geometric mean of the occupied-column counts.
    pub fn geo_column_count(&self) -> f64 {
        self.log_column_count.exp()
    }

    /// Geometric mean of the fullest-column sizes.
    pub fn geo_max_column(&self) -> f64 {
        self.log_max_column.exp()
    }
}

// ---------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------

/// Outcome of one named structural check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub ok: bool,
    /// Human-readable summary, naming the first offender on failure.
    pub detail: String,
}

/// Results of all structural checks on an ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// True when every check passed.
    pub ok: bool,
}

/// Tolerance for the weight sum; weights are read from JSON text, so an
/// exactly representable sum cannot be demanded.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

fn check(name: &'static str, ok: bool, detail: String) -> CheckResult {
    CheckResult { name, ok, detail }
}

/// Runs the structural checks in a fixed order and reports each one.
pub fn validate_ensemble(ensemble: &Ensemble) -> ValidationReport {
    let mut checks = Vec::new();

    let pattern_count = ensemble.patterns.len();
    checks.push(check(
        "patterns_nonempty",
        pattern_count > 0,
        if pattern_count > 0 {
            format!("{pattern_count} pattern(s)")
        } else {
            "ensemble has no patterns".to_string()
        },
    ));

    let weight_count = ensemble.weights.len();
    checks.push(check(
        "weights_length",
        weight_count == pattern_count,
        if weight_count == pattern_count {
            format!("{weight_count} weight(s)")
        } else {
            format!("{weight_count} weight(s) for {pattern_count} pattern(s)")
        },
    ));

    // A single pattern is the deterministic model and its weight must be
    // exactly 1; several patterns each need weight strictly inside (0, 1).
    let bad_weight = if weight_count == 1 {
        if ensemble.weights[0] == 1.0 {
            None
        } else {
            Some(0)
        }
    } else {
        ensemble
            .weights
            .iter()
            .position(|w| !(w.is_finite() && *w > 0.0 && *w < 1.0))
    };
    checks.push(check(
        "weights_in_range",
        bad_weight.is_none(),
        match bad_weight {
            None if weight_count == 1 => "single weight is exactly 1".to_string(),
            None => "all weights strictly inside (0, 1)".to_string(),
            Some(i) if weight_count == 1 => format!(
                "single weight must be exactly 1, got {}",
                ensemble.weights[i]
            ),
            Some(i) => format!("weight {i} is {}", ensemble.weights[i]),
        },
    ));

    let sum: f64 = ensemble.weights.iter().sum();
    let sum_ok = (sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE;
    checks.push(check("weights_sum", sum_ok, format!("weights sum to {sum}")));

    let two = BigUint::from(2u32);
    let mut sides_ok = true;
    let mut sides_detail = "every grid satisfies n > m >= 2".to_string();
    let mut cells_nonempty_ok = true;
    let mut cells_nonempty_detail = "every pattern has at least one cell".to_string();
    let mut in_range_ok = true;
    let mut in_range_detail = "all cells inside their grid".to_string();
    let mut distinct_ok = true;
    let mut distinct_detail = "no duplicate cells".to_string();

    for (i, pattern) in ensemble.patterns.iter().enumerate() {
        if sides_ok && !(pattern.m >= two && pattern.n > pattern.m) {
            sides_ok = false;
            sides_detail = format!(
                "pattern {i} has m={}, n={}, requires n > m >= 2",
                pattern.m, pattern.n
            );
        }
        if cells_nonempty_ok && pattern.cells.is_empty() {
            cells_nonempty_ok = false;
            cells_nonempty_detail = format!("pattern {i} has no cells");
        }
        if in_range_ok {
            if let Some(&(col, row)) = pattern
                .cells
                .iter()
                .find(|&&(col, row)| BigUint::from(col) >= pattern.m || BigUint::from(row) >= pattern.n)
            {
                in_range_ok = false;
                in_range_detail = format!(
                    "pattern {i} cell ({col}, {row}) outside {} by {} grid",
                    pattern.m, pattern.n
                );
            }
        }
        if distinct_ok {
            let mut seen = std::collections::BTreeSet::new();
            if let Some(&(col, row)) = pattern.cells.iter().find(|&&cell| !seen.insert(cell)) {
                distinct_ok = false;
                distinct_detail = format!("pattern {i} repeats cell ({col}, {row})");
            }
        }
    }

    checks.push(check("grid_sides", sides_ok, sides_detail));
    checks.push(check("cells_nonempty", cells_nonempty_ok, cells_nonempty_detail));
    checks.push(check("cells_in_range", in_range_ok, in_range_detail));
    checks.push(check("cells_distinct", distinct_ok, distinct_detail));

    let ok = checks.iter().all(|c| c.ok);
    ValidationReport { checks, ok }
}

// ---------------------------------------------------------------------
// JSON integer encoding for grid sides
// ---------------------------------------------------------------------

/// Serializes a `BigUint` as a bare JSON integer of any size and parses
/// one back, rejecting signs, fractions, and exponents.
mod big_side {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    /// Largest integer every double-precision JSON reader keeps exact.
    /// Sides above it are written as decimal strings so no consumer can
    /// silently round them; sides at or below it stay plain numbers.
    const EXACT_IN_F64: u64 = (1 << 53) - 1;

    pub fn serialize<S: Serializer>(value: &BigUint, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match u64::try_from(value) {
            Ok(small) if small <= EXACT_IN_F64 => serializer.serialize_u64(small),
            _ => serializer.serialize_str(&value.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<BigUint, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        let text = match &raw {
            serde_json::Value::Number(number) => number.to_string(),
            serde_json::Value::String(text) => text.trim().to_string(),
            other => format!("{other}"),
        };
        BigUint::from_str(&text).map_err(|_| {
            de::Error::custom(format!(
                "grid side must be a nonnegative integer (number or decimal string), got {text}"
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_four() -> Pattern {
        Pattern::new(2u32, 4u32, vec![(0, 0), (1, 1), (1, 2)])
    }

    fn small_ensemble() -> Ensemble {
        Ensemble {
            patterns: vec![two_by_four()],
            weights: vec![1.0],
        }
    }

    #[test]
    fn stats_count_cells_columns_and_peaks() {
        let stats = two_by_four().stats();
        assert_eq!(stats.cell_count, 3);
        assert_eq!(stats.column_count, 2);
        assert_eq!(stats.max_column, 2);

        // Tall first column, then pairs, then singletons.
        let mut cells: Vec<(u64, u64)> = (0..8).map(|r| (0, r)).collect();
        for col in 1..=3 {
            cells.push((col, 0));
            cells.push((col, 1));
        }
        for col in 4..=9 {
            cells.push((col, 0));
        }
        let stats = Pattern::new(19u32, 21u32, cells).stats();
        assert_eq!(stats.cell_count, 20);
        assert_eq!(stats.column_count, 10);
        assert_eq!(stats.max_column, 8);
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let ensemble = Ensemble {
            patterns: vec![two_by_four(), Pattern::new(3u32, 5u32, vec![(2, 4)])],
            weights: vec![0.25, 0.75],
        };
        let text = ensemble.to_json_pretty();
        let back = Ensemble::from_json_str(&text).unwrap();
        assert_eq!(back, ensemble);
    }

    #[test]
    fn huge_grid_sides_become_decimal_strings_and_round_trip() {
        let big_n = BigUint::from(10u32).pow(40);
        let ensemble = Ensemble {
            patterns: vec![Pattern {
                m: BigUint::from(2u32),
                n: big_n.clone(),
                cells: vec![(0, 0), (1, 0)],
            }],
            weights: vec![1.0],
        };
        let text = serde_json::to_string(&ensemble).unwrap();
        let digits = big_n.to_string();
        // The small side stays a plain number; the giant one is quoted
        // so double-precision JSON readers cannot silently round it.
        assert!(text.contains("\"m\":2"), "width must stay numeric: {text}");
        assert!(
            text.contains(&format!("\"n\":\"{digits}\"")),
            "height must be a decimal string: {text}"
        );
        let back = Ensemble::from_json_str(&text).unwrap();
        assert_eq!(back, ensemble);
        // Huge sides written as bare integers still parse.
        let bare = text.replace(&format!("\"n\":\"{digits}\""), &format!("\"n\":{digits}"));
        assert_eq!(Ensemble::from_json_str(&bare).unwrap(), ensemble);
    }

    #[test]
    fn non_integer_grid_sides_are_rejected() {
        for bad in ["2.5", "-3", "2e3"] {
            let text = format!(
                "{{\"patterns\":[{{\"m\":{bad},\"n\":4,\"cells\":[[0,0]]}}],\"weights\":[1.0]}}"
            );
            assert!(
                Ensemble::from_json_str(&text).is_err(),
                "m={bad} should not parse"
            );
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with_extra_top =
            "{\"patterns\":[{\"m\":2,\"n\":4,\"cells\":[[0,0]]}],\"weights\":[1.0],\"note\":1}";
        assert!(Ensemble::from_json_str(with_extra_top).is_err());
        let with_extra_pattern =
            "{\"patterns\":[{\"m\":2,\"n\":4,\"cells\":[[0,0]],\"label\":\"x\"}],\"weights\":[1.0]}";
        assert!(Ensemble::from_json_str(with_extra_pattern).is_err());
    }

    #[test]
    fn validation_accepts_a_good_ensemble() {
        let report = small_ensemble().validate();
        assert!(report.ok, "{report:?}");
        assert!(small_ensemble().require_valid().is_ok());
    }

    #[test]
    fn validation_names_each_failure() {
        let mut e = small_ensemble();
        e.patterns[0].cells.push((0, 0));
        assert_failing_check(&e, "cells_distinct");

        let mut e = small_ensemble();
        e.patterns[0].cells.push((5, 0));
        assert_failing_check(&e, "cells_in_range");

        let mut e = small_ensemble();
        e.patterns[0].cells.clear();
        assert_failing_check(&e, "cells_nonempty");

        let mut e = small_ensemble();
        e.patterns[0].m = BigUint::from(1u32);
        assert_failing_check(&e, "grid_sides");

        let mut e = small_ensemble();
        e.patterns[0].n = BigUint::from(2u32);
        assert_failing_check(&e, "grid_sides");

        let mut e = small_ensemble();
        e.weights = vec![0.5, 0.5];
        assert_failing_check(&e, "weights_length");

        // The lone weight of a deterministic model must be exactly 1.
        let mut e = small_ensemble();
        e.weights = vec![0.9999999999999];
        assert_failing_check(&e, "weights_in_range");

        // With several patterns, boundary weights 0 and 1 are excluded.
        let mut e = small_ensemble();
        e.patterns.push(two_by_four());
        e.weights = vec![1.0, 0.0];
        assert_failing_check(&e, "weights_in_range");

        let mut e = small_ensemble();
        e.patterns.push(two_by_four());
        e.weights = vec![0.6, 0.5];
        assert_failing_check(&e, "weights_sum");
        let report = e.validate();
        let sum_check = report.checks.iter().find(|c| c.name == "weights_sum").unwrap();
        assert_eq!(sum_check.detail, "weights sum to 1.1");

        let e = Ensemble {
            patterns: vec![],
            weights: vec![],
        };
        assert_failing_check(&e, "patterns_nonempty");
    }

    fn assert_failing_check(ensemble: &Ensemble, name: &str) {
        let report = ensemble.validate();
        assert!(!report.ok, "expected {name} to fail");
        let failed = report.checks.iter().find(|c| !c.ok).unwrap();
        assert_eq!(failed.name, name, "wrong first failure: {report:?}");
        let err = ensemble.require_valid().unwrap_err();
        assert!(err.to_string().contains(name), "error should cite {name}: {err}");
    }

    #[test]
    fn averages_weight_the_logs() {
        // Two patterns with weights 1/3 and 2/3; expected values are the
        // weighted sums of the individual logs.
        let tall = Pattern::new(19u32, 21u32, {
            let mut cells: Vec<(u64, u64)> = (0..8).map(|r| (0, r)).collect();
            for col in 1..=3 {
                cells.push((col, 0));
                cells.push((col, 1));
            }
            for col in 4..=9 {
                cells.push((col, 0));
            }
            cells
        });
        let narrow = Pattern::new(2u32, 15u32, vec![(0, 0), (0, 1), (0, 2), (0, 3), (1, 0)]);
        let ensemble = Ensemble {
            patterns: vec![tall, narrow],
            weights: vec![1.0 / 3.0, 2.0 / 3.0],
        };
        let avg = ensemble.averages();
        let w = [1.0 / 3.0, 2.0 / 3.0];
        assert_eq!(avg.log_m, w[0] * (19f64).ln() + w[1] * (2f64).ln());
        assert_eq!(avg.log_n, w[0] * (21f64).ln() + w[1] * (15f64).ln());
        assert_eq!(avg.log_cell_count, w[0] * (20f64).ln() + w[1] * (5f64).ln());
        assert_eq!(avg.log_column_count, w[0] * (10f64).ln() + w[1] * (2f64).ln());
        assert_eq!(avg.log_max_column, w[0] * (8f64).ln() + w[1] * (4f64).ln());
    }

    #[test]
    fn geometric_views_exponentiate_the_logs() {
        // Equal weights on cell counts 4 and 9 give geometric mean 6.
        let ensemble = Ensemble {
            patterns: vec![
                Pattern::new(3u32, 5u32, vec![(0, 0), (0, 1), (1, 0), (1, 1)]),
                Pattern::new(4u32, 6u32, (0..9).map(|i| (i % 3, i / 3)).collect()),
            ],
            weights: vec![0.5, 0.5],
        };
        let avg = ensemble.averages();
        assert!((avg.geo_cell_count() - 6.0).abs() < 1e-12);
        assert!((avg.geo_m() - 12f64.sqrt()).abs() < 1e-12);
        assert!((avg.geo_n() - 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_pattern_averages_equal_its_stats() {
        let ensemble = Ensemble {
            patterns: vec![two_by_four()],
            weights: vec![1.0],
        };
        let avg = ensemble.averages();
        assert_eq!(avg.log_m, (2f64).ln());
        assert_eq!(avg.log_n, (4f64).ln());
        assert_eq!(avg.log_cell_count, (3f64).ln());
        assert_eq!(avg.log_column_count, (2f64).ln());
        assert_eq!(avg.log_max_column, (2f64).ln());
    }

    #[test]
    fn renormalization_is_explicit_and_exact() {
        let mut e = Ensemble {
            patterns: vec![two_by_four(), two_by_four()],
            weights: vec![0.6, 0.5],
        };
        assert!(!e.validate().ok);
        e.renormalize_weights();
        assert!(e.validate().ok, "{:?}", e.weights);
    }
}
