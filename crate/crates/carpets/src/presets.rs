//! Ready-made ensembles used across tests, docs, and examples.
//!
//! The mixed ensemble pairs a wide 19 by 21 pattern with a narrow 2 by 15
//! pattern under equal weights; its dimension values are frozen in the
//! `formulas` tests. The published counts fix N, B, and C for each
//! pattern but not the cell positions, so the layouts below are one
//! concrete choice realizing those counts: a tall first column plus
//! progressively emptier ones.

use crate::model::{Ensemble, Pattern};

/// Wide pattern on a 19 by 21 grid: 20 cells in 10 columns, the fullest
/// column holding 8.
pub fn tall_pattern() -> Pattern {
    let mut cells: Vec<(u64, u64)> = (0..8).map(|row| (0, row)).collect();
    for col in 1..=3 {
        cells.push((col, 0));
        cells.push((col, 1));
    }
    for col in 4..=9 {
        cells.push((col, 0));
    }
    Pattern::new(19u32, 21u32, cells)
}

/// Narrow pattern on a 2 by 15 grid: 5 cells in 2 columns, the fullest
/// column holding 4.
pub fn narrow_pattern() -> Pattern {
    Pattern::new(2u32, 15u32, vec![(0, 0), (0, 1), (0, 2), (0, 3), (1, 0)])
}

/// The two patterns above under a fair coin flip.
pub fn mixed() -> Ensemble {
    Ensemble {
        patterns: vec![tall_pattern(), narrow_pattern()],
        weights: vec![0.5, 0.5],
    }
}

/// Deterministic model using only the wide pattern.
pub fn tall_only() -> Ensemble {
    Ensemble {
        patterns: vec![tall_pattern()],
        weights: vec![1.0],
    }
}

/// Deterministic model using only the narrow pattern.
pub fn narrow_only() -> Ensemble {
    Ensemble {
        patterns: vec![narrow_pattern()],
        weights: vec![1.0],
    }
}

/// Smallest interesting deterministic model: 3 cells on a 2 by 4 grid.
/// Its spectrum has a phase transition at exactly 1/2.
pub fn two_by_four() -> Ensemble {
    Ensemble {
        patterns: vec![Pattern::new(2u32, 4u32, vec![(0, 0), (1, 1), (1, 2)])],
        weights: vec![1.0],
    }
}

/// Every cell of an `m` by `n` grid occupied; all dimensions equal 2.
pub fn full_grid(m: u64, n: u64) -> Ensemble {
    let cells = (0..m)
        .flat_map(|col| (0..n).map(move |row| (col, row)))
        .collect();
    Ensemble {
        patterns: vec![Pattern::new(m, n, cells)],
        weights: vec![1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_published_counts() {
        let tall = tall_pattern().stats();
        assert_eq!(
            (tall.cell_count, tall.column_count, tall.max_column),
            (20, 10, 8)
        );
        let narrow = narrow_pattern().stats();
        assert_eq!(
            (narrow.cell_count, narrow.column_count, narrow.max_column),
            (5, 2, 4)
        );
        let tiny = two_by_four().patterns[0].stats();
        assert_eq!((tiny.cell_count, tiny.column_count, tiny.max_column), (3, 2, 2));
    }

    #[test]
    fn fixtures_validate() {
        for e in [mixed(), tall_only(), narrow_only(), two_by_four(), full_grid(3, 5)] {
            assert!(e.validate().ok, "{:?}", e.validate());
        }
    }

    #[test]
    fn full_grid_saturates_every_count() {
        let stats = full_grid(3, 5).patterns[0].stats();
        assert_eq!((stats.cell_count, stats.column_count, stats.max_column), (15, 3, 5));
    }
}
