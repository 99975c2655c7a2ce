//! Rasterization of carpet realizations and CSV export of spectrum
//! curves.
//!
//! A realization prefix of length `depth` describes a union of level
//! `depth` cylinders: push the unit square through one chosen cell per
//! level and collect the resulting rectangles. `render_carpet` marks
//! every pixel that such a rectangle intersects. Corner coordinates are
//! kept as exact integer fractions and rounded outward, so a cylinder
//! thinner than a pixel still leaves ink; the raster is never emptier
//! than the set it depicts.
//!
//! The pixel grid covers the unit square one to one, so the raster is
//! square and the vertical axis points up: row zero of the bitmap is
//! the bottom of the carpet. `write_pgm` flips rows on the way out
//! because image formats put the top row first.
//!
//! `emit_spectrum_csv` writes several spectrum curves over one shared
//! theta grid side by side, one value column per curve, for plotting.

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactscale::symbols_to_patterns;
use crate::model::{Ensemble, Pattern};
use crate::formulas::SpectrumCurve;
use crate::sampler::Omega;

/// Hard ceiling on the number of depth-level cylinders a render walks.
pub const CYLINDER_BUDGET: u64 = 100_000_000;

// ---------------------------------------------------------------------
// Raster
// ---------------------------------------------------------------------

/// Square binary image of a rendered realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    /// Pixels per row.
    pub width: u32,
    /// Pixel rows; equals `width` because the unit square is rendered
    /// at 1:1 aspect.
    pub height: u32,
    /// Occupancy bits packed 64 per word, row-major with row zero at
    /// the bottom: pixel `(x, y)` lives at bit `y * width + x`.
    pub bitmap: Vec<u64>,
    /// True when the first-level column grid is finer than the pixel
    /// grid (`width` below the product of the `m` values), so distinct
    /// columns can land on shared pixels. The image stays correct, just
    /// coarser than the set.
    pub underresolved: bool,
}

impl Raster {
    fn blank(width: u32) -> Raster {
        let bits = width as usize * width as usize;
        Raster {
            width,
            height: width,
            bitmap: vec![0; bits.div_ceil(64)],
            underresolved: false,
        }
    }

    /// Whether the pixel at column `x`, row `y` (bottom-up) is marked.
    pub fn occupied(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "pixel out of range");
        let bit = y as usize * self.width as usize + x as usize;
        self.bitmap[bit / 64] >> (bit % 64) & 1 == 1
    }

    /// Number of marked pixels.
    pub fn occupied_count(&self) -> u64 {
        self.bitmap.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Whether every marked pixel of `self` is also marked in `other`.
    pub fn subset_of(&self, other: &Raster) -> bool {
        self.width == other.width
            && self
                .bitmap
                .iter()
                .zip(&other.bitmap)
                .all(|(a, b)| a & !b == 0)
    }
}

// ---------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------

/// Renders the union of level-`depth` cylinders of the realization onto
/// a `width` by `width` pixel grid.
pub fn render_carpet(
    omega: &Omega,
    ensemble: &Ensemble,
    depth: usize,
    width: u32,
) -> Result<Raster> {
    ensemble.require_valid()?;
    if depth == 0 {
        return Err(Error::Domain("render depth must be at least 1".to_string()));
    }
    if width == 0 {
        return Err(Error::Domain("render width must be at least 1".to_string()));
    }
    if omega.symbols.len() < depth {
        return Err(Error::InsufficientDepth {
            have: omega.symbols.len(),
            needed_hint: depth,
        });
    }
    let patterns = symbols_to_patterns(ensemble, &omega.symbols[..depth])?;

    // Exact cylinder count with a budget gate before any work happens.
    let mut cylinders: u64 = 1;
    for pattern in &patterns {
        cylinders = cylinders.saturating_mul(pattern.cells.len() as u64);
        if cylinders > CYLINDER_BUDGET {
            return Err(Error::Budget {
                log_estimate: patterns
                    .iter()
                    .map(|p| (p.cells.len() as f64).ln())
                    .sum(),
                budget: CYLINDER_BUDGET,
            });
        }
    }

    let mut column_denominator = BigUint::one();
    let mut row_denominator = BigUint::one();
    for pattern in &patterns {
        column_denominator *= &pattern.m;
        row_denominator *= &pattern.n;
    }

    let frame = Frame {
        patterns: &patterns,
        depth,
        width,
        column_denominator,
        row_denominator,
    };

    // One shard per first-level cylinder; marking is a union of bits,
    // so merging shards in any order gives the same raster.
    let shards: Vec<Raster> = frame.patterns[0]
        .cells
        .par_iter()
        .map(|&(column, row)| {
            let mut shard = Raster::blank(width);
            frame.descend(&mut shard, 1, BigUint::from(column), BigUint::from(row));
            shard
        })
        .collect();

    let mut raster = Raster::blank(width);
    for shard in shards {
        for (word, extra) in raster.bitmap.iter_mut().zip(&shard.bitmap) {
            *word |= extra;
        }
    }
    raster.underresolved = frame.column_denominator > BigUint::from(width);
    Ok(raster)
}

struct Frame<'a> {
    patterns: &'a [&'a Pattern],
    depth: usize,
    width: u32,
    column_denominator: BigUint,
    row_denominator: BigUint,
}

impl Frame<'_> {
    fn descend(&self, shard: &mut Raster, level: usize, column: BigUint, row: BigUint) {
        if level == self.depth {
            self.mark(shard, &column, &row);
            return;
        }
        let pattern = self.patterns[level];
        for &(cell_column, cell_row) in &pattern.cells {
            self.descend(
                shard,
                level + 1,
                &column * &pattern.m + cell_column,
                &row * &pattern.n + cell_row,
            );
        }
    }

    /// Marks every pixel meeting the half-open rectangle
    /// `[column, column + 1) / column_denominator` by
    /// `[row, row + 1) / row_denominator`.
    fn mark(&self, shard: &mut Raster, column: &BigUint, row: &BigUint) {
        let x_span = pixel_span(column, &self.column_denominator, self.width);
        let y_span = pixel_span(row, &self.row_denominator, self.width);
        for y in y_span.0..=y_span.1 {
            let base = y as usize * self.width as usize;
            for x in x_span.0..=x_span.1 {
                let bit = base + x as usize;
                shard.bitmap[bit / 64] |= 1 << (bit % 64);
            }
        }
    }
}

/// Pixels intersecting `[index, index + 1) / denominator` on a grid of
/// `pixels` half-open cells: floor at the left edge, one short of the
/// ceiling at the right. Always at least one pixel wide.
fn pixel_span(index: &BigUint, denominator: &BigUint, pixels: u32) -> (u32, u32) {
    let scaled_lo = index * pixels;
    let lo = u64::try_from(scaled_lo / denominator).expect("pixel index fits");
    let scaled_hi = (index + BigUint::one()) * pixels + (denominator - BigUint::one());
    let hi = u64::try_from(scaled_hi / denominator).expect("pixel index fits") - 1;
    (lo as u32, (hi as u32).min(pixels - 1))
}

// ---------------------------------------------------------------------
// PGM output
// ---------------------------------------------------------------------

/// Writes the raster as a binary PGM (P5, maxval 255) with ink at 0 and
/// background at 255. Each entry of `comments` becomes one header
/// comment line. Rows are emitted top first, flipping the bottom-up
/// bitmap.
pub fn write_pgm(
    raster: &Raster,
    out: &mut dyn std::io::Write,
    comments: &[String],
) -> Result<()> {
    let mut header = String::from("P5\n");
    for comment in comments {
        header.push_str("# ");
        header.push_str(comment);
        header.push('\n');
    }
    header.push_str(&format!("{} {}\n255\n", raster.width, raster.height));
    out.write_all(header.as_bytes()).map_err(Error::Io)?;
    let mut row = vec![0u8; raster.width as usize];
    for y in (0..raster.height).rev() {
        for (x, byte) in row.iter_mut().enumerate() {
            *byte = if raster.occupied(x as u32, y) { 0 } else { 255 };
        }
        out.write_all(&row).map_err(Error::Io)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Spectrum CSV output
// ---------------------------------------------------------------------

/// Renders a float with twelve significant digits, the precision used
/// by every CSV this crate emits.
pub fn sig12(value: f64) -> String {
    format!("{value:.11e}")
}

/// Writes curves sharing one theta grid as CSV: a `theta` column, then
/// one `value_i` column per curve in input order. No curves at all
/// yield a header-only file.
pub fn emit_spectrum_csv(curves: &[SpectrumCurve], out: &mut dyn std::io::Write) -> Result<()> {
    for (i, curve) in curves.iter().enumerate().skip(1) {
        if curve.thetas != curves[0].thetas {
            return Err(Error::GridMismatch(format!(
                "curve {} has a different theta grid than curve 1",
                i + 1
            )));
        }
    }
    let mut text = String::from("theta");
    for i in 1..=curves.len() {
        text.push_str(&format!(",value_{i}"));
    }
    text.push('\n');
    if let Some(first) = curves.first() {
        for (row, theta) in first.thetas.iter().enumerate() {
            text.push_str(&sig12(*theta));
            for curve in curves {
                text.push(',');
                text.push_str(&sig12(curve.values[row]));
            }
            text.push('\n');
        }
    }
    out.write_all(text.as_bytes()).map_err(Error::Io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas;
    use crate::presets;

    fn single_cell() -> Ensemble {
        Ensemble {
            patterns: vec![Pattern::new(2u32, 3u32, vec![(1, 2)])],
            weights: vec![1.0],
        }
    }

    #[test]
    fn single_cell_renders_one_outward_rounded_rectangle() {
        // Depth 3 composes the cell (1, 2) three times: the column index
        // is 7 of 8 and the row index 26 of 27. On 64 pixels that is an
        // 8 by 3 block in the top right corner.
        let e = single_cell();
        let omega = Omega::explicit(vec![1, 1, 1]);
        let raster = render_carpet(&omega, &e, 3, 64).unwrap();
        assert_eq!(raster.occupied_count(), 8 * 3);
        for x in 0..64 {
            for y in 0..64 {
                let inside = x >= 56 && y >= 61;
                assert_eq!(raster.occupied(x, y), inside, "pixel ({x}, {y})");
            }
        }
        assert!(!raster.underresolved);
    }

    #[test]
    fn thin_cylinders_never_vanish() {
        let e = Ensemble {
            patterns: vec![Pattern::new(12u32, 20u32, vec![(5, 11)])],
            weights: vec![1.0],
        };
        let omega = Omega::explicit(vec![1; 8]);
        let raster = render_carpet(&omega, &e, 8, 16).unwrap();
        assert!(raster.occupied_count() >= 1);
        assert!(raster.underresolved);
    }

    #[test]
    fn full_grid_fills_the_raster() {
        let e = presets::full_grid(2, 4);
        let omega = Omega::explicit(vec![1, 1]);
        let raster = render_carpet(&omega, &e, 2, 32).unwrap();
        assert_eq!(raster.occupied_count(), 32 * 32);
    }

    #[test]
    fn deeper_rasters_nest_inside_shallower_ones() {
        let e = presets::mixed();
        let omega = Omega::explicit(vec![2, 1, 1, 2, 1]);
        let deep = render_carpet(&omega, &e, 5, 256).unwrap();
        let shallow = render_carpet(&omega, &e, 4, 256).unwrap();
        assert!(deep.subset_of(&shallow));
        assert!(!shallow.subset_of(&deep), "depth must remove pixels here");
    }

    #[test]
    fn mixed_realization_renders_between_empty_and_full() {
        let e = presets::mixed();
        let omega = Omega::explicit(vec![2, 1, 1, 2, 1]);
        let raster = render_carpet(&omega, &e, 5, 1024).unwrap();
        let total = 1024 * 1024;
        let count = raster.occupied_count();
        assert!(count > 0 && count < total, "count {count}");
        // The first-level column grid has 2*19*19*2*19 bands, far finer
        // than 1024 pixels.
        assert!(raster.underresolved);
    }

    #[test]
    fn column_band_count_matches_the_product_of_column_counts() {
        // Occupied columns 0 and 2 of a 4-wide grid stay separated under
        // composition, so depth 2 shows exactly B * B = 4 bands.
        let e = Ensemble {
            patterns: vec![Pattern::new(4u32, 5u32, vec![(0, 0), (2, 1)])],
            weights: vec![1.0],
        };
        let omega = Omega::explicit(vec![1, 1]);
        let raster = render_carpet(&omega, &e, 2, 64).unwrap();
        let occupied_column: Vec<bool> = (0..64)
            .map(|x| (0..64).any(|y| raster.occupied(x, y)))
            .collect();
        let mut bands = 0;
        for x in 0..64 {
            if occupied_column[x] && (x == 0 || !occupied_column[x - 1]) {
                bands += 1;
            }
        }
        assert_eq!(bands, 4);
    }

    #[test]
    fn cylinder_budget_refuses_oversized_renders() {
        let e = presets::full_grid(2, 4);
        let omega = Omega::explicit(vec![1; 9]);
        // 8^9 cylinders exceed the hundred-million budget.
        match render_carpet(&omega, &e, 9, 64) {
            Err(Error::Budget { budget, .. }) => assert_eq!(budget, CYLINDER_BUDGET),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn bad_render_parameters_are_rejected() {
        let e = presets::mixed();
        let omega = Omega::explicit(vec![1, 2]);
        assert!(matches!(
            render_carpet(&omega, &e, 0, 64),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            render_carpet(&omega, &e, 1, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            render_carpet(&omega, &e, 3, 64),
            Err(Error::InsufficientDepth { have: 2, .. })
        ));
        let bad_symbol = Omega::explicit(vec![3]);
        assert!(render_carpet(&bad_symbol, &e, 1, 64).is_err());
    }

    #[test]
    fn rendering_is_identical_across_thread_counts() {
        let e = presets::mixed();
        let omega = Omega::explicit(vec![1, 2, 1]);
        let ambient = render_carpet(&omega, &e, 3, 128).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| render_carpet(&omega, &e, 3, 128).unwrap());
        assert_eq!(ambient, single);
    }

    #[test]
    fn pgm_bytes_are_exactly_as_specified() {
        // Depth 1 of the single-cell pattern inks the top right quarter
        // of a 4 by 4 image: columns 2..=3 of rows 2..=3 bottom-up, so
        // the first two emitted rows carry the ink.
        let e = single_cell();
        let omega = Omega::explicit(vec![1]);
        let raster = render_carpet(&omega, &e, 1, 4).unwrap();
        let mut bytes = Vec::new();
        write_pgm(&raster, &mut bytes, &[]).unwrap();
        let mut expected = b"P5\n4 4\n255\n".to_vec();
        expected.extend_from_slice(&[255, 255, 0, 0]);
        expected.extend_from_slice(&[255, 255, 0, 0]);
        expected.extend_from_slice(&[255, 255, 255, 255]);
        expected.extend_from_slice(&[255, 255, 255, 255]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn pgm_comments_land_in_the_header() {
        let e = single_cell();
        let omega = Omega::explicit(vec![1]);
        let raster = render_carpet(&omega, &e, 1, 2).unwrap();
        let mut bytes = Vec::new();
        write_pgm(&raster, &mut bytes, &["first".to_string(), "second".to_string()]).unwrap();
        let text = String::from_utf8_lossy(&bytes[..bytes.len() - 4]);
        assert!(text.starts_with("P5\n# first\n# second\n2 2\n255\n"));
    }

    #[test]
    fn spectrum_csv_lays_curves_side_by_side() {
        let e = presets::mixed();
        let grid = vec![0.25, 0.5];
        let a = formulas::spectrum_curve(&e, &grid).unwrap();
        let b = formulas::spectrum_curve(&presets::tall_only(), &grid).unwrap();
        let mut bytes = Vec::new();
        emit_spectrum_csv(&[a.clone(), b], &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "theta,value_1,value_2");
        assert!(lines[1].starts_with("2.50000000000e-1,"));
        assert_eq!(lines[1].split(',').count(), 3);
        // The first value column reproduces the mixed spectrum.
        let cell: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((cell - a.values[0]).abs() < 1e-10);
    }

    #[test]
    fn empty_curve_list_writes_only_the_header() {
        let mut bytes = Vec::new();
        emit_spectrum_csv(&[], &mut bytes).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "theta\n");
    }

    #[test]
    fn mismatched_theta_grids_are_a_grid_mismatch_error() {
        let e = presets::mixed();
        let a = formulas::spectrum_curve(&e, &[0.25, 0.5]).unwrap();
        let b = formulas::spectrum_curve(&e, &[0.25, 0.75]).unwrap();
        let mut bytes = Vec::new();
        match emit_spectrum_csv(&[a, b], &mut bytes) {
            Err(Error::GridMismatch(_)) => {}
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }

    #[test]
    fn twelve_significant_digits_everywhere() {
        assert_eq!(sig12(0.25), "2.50000000000e-1");
        assert_eq!(sig12(1.5), "1.50000000000e0");
        assert_eq!(sig12(1.0 / 3.0), "3.33333333333e-1");
    }
}
