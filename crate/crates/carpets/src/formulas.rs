//! Closed-form almost-sure dimensions and the Assouad spectrum curve.
//!
//! For a valid ensemble the box, quasi-Assouad, and Assouad dimensions of
//! the random carpet, together with the full Assouad spectrum, are given
//! by closed formulas in the weighted geometric averages of the pattern
//! statistics. The spectrum has exactly one phase transition, at
//! `theta* = log m / log n` of the averages: below it the spectrum rises
//! from the box dimension along a branch affine in `theta / (1 - theta)`,
//! and from `theta*` on it is constant at the quasi-Assouad dimension.
//!
//! Two independent evaluation routes are provided on purpose. The
//! piecewise form follows the two-branch statement directly; the min
//! form rewrites the rising branch through box and quasi-Assouad values
//! and takes a minimum. They agree to rounding error, and the tests and
//! the `verify` pipeline hold them against each other.
//!
//! The Assouad dimension is not a function of the averages: it takes the
//! worst single pattern in each direction, so it can exceed the
//! quasi-Assouad dimension strictly. `build_extreme_ensemble` constructs
//! the standard witness: a two-pattern ensemble whose quasi-Assouad
//! dimension is below any requested epsilon while the Assouad dimension
//! stays 2.

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::bigmath::{ceil_nth_root, ln_big};
use crate::error::{Error, Result};
use crate::exactscale::UnitFraction;
use crate::model::{Averages, Ensemble, Pattern};

// ---------------------------------------------------------------------
// Summary types
// ---------------------------------------------------------------------

/// The three almost-sure dimensions and the spectrum's phase transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionSummary {
    /// Box dimension; the spectrum's limit as theta drops to 0.
    #[serde(rename = "box")]
    pub box_dim: f64,
    /// Quasi-Assouad dimension; the spectrum's value from the phase
    /// transition onward.
    pub quasi_assouad: f64,
    /// Assouad dimension; at least the quasi-Assouad value and possibly
    /// strictly larger.
    pub assouad: f64,
    /// Location of the spectrum's phase transition in (0, 1).
    #[serde(rename = "phase_transition_theta")]
    pub phase_transition: f64,
}

/// A sampled spectrum curve over an ascending theta grid.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub summary: DimensionSummary,
}

fn require_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "theta must lie strictly between 0 and 1, got {theta}"
        )))
    }
}

// ---------------------------------------------------------------------
// Formulas on averages
// ---------------------------------------------------------------------

/// Box dimension from the averages:
/// `log B / log m + log(N/B) / log n`.
pub fn box_from_averages(avg: &Averages) -> f64 {
    avg.log_column_count / avg.log_m
        + (avg.log_cell_count - avg.log_column_count) / avg.log_n
}

/// Quasi-Assouad dimension from the averages:
/// `log B / log m + log C / log n`.
pub fn quasi_assouad_from_averages(avg: &Averages) -> f64 {
    avg.log_column_count / avg.log_m + avg.log_max_column / avg.log_n
}

/// Phase transition `log m / log n`, always in (0, 1).
pub fn phase_transition_from_averages(avg: &Averages) -> f64 {
    avg.log_m / avg.log_n
}

/// Spectrum value at `theta` by the two-branch statement: the rising
/// branch up to the phase transition, the quasi-Assouad constant after.
pub fn spectrum_from_averages(avg: &Averages, theta: f64) -> Result<f64> {
    require_theta(theta)?;
    if theta <= phase_transition_from_averages(avg) {
        let horizontal =
            (avg.log_column_count + theta * (avg.log_max_column - avg.log_cell_count))
                / avg.log_m;
        let vertical =
            (avg.log_cell_count - avg.log_column_count - theta * avg.log_max_column)
                / avg.log_n;
        Ok((horizontal + vertical) / (1.0 - theta))
    } else {
        Ok(quasi_assouad_from_averages(avg))
    }
}

/// Spectrum value at `theta` by the independent min form: the rising
/// branch expressed through box and quasi-Assouad values, capped at the
/// quasi-Assouad dimension.
pub fn min_form_from_averages(avg: &Averages, theta: f64) -> Result<f64> {
    require_theta(theta)?;
    let box_dim = box_from_averages(avg);
    let qa = quasi_assouad_from_averages(avg);
    let slope = qa - (qa - box_dim) * avg.log_n / avg.log_m;
    Ok(((box_dim - theta * slope) / (1.0 - theta)).min(qa))
}

// ---------------------------------------------------------------------
// Formulas on ensembles
// ---------------------------------------------------------------------

/// Box dimension of a valid ensemble.
pub fn box_dimension(ensemble: &Ensemble) -> Result<f64> {
    ensemble.require_valid()?;
    Ok(box_from_averages(&ensemble.averages()))
}

/// Quasi-Assouad dimension of a valid ensemble.
pub fn quasi_assouad(ensemble: &Ensemble) -> Result<f64> {
    ensemble.require_valid()?;
    Ok(quasi_assouad_from_averages(&ensemble.averages()))
}

/// Assouad dimension: worst pattern horizontally plus worst pattern
/// vertically. The two maxima may come from different patterns, which is
/// what lets this exceed the quasi-Assouad dimension.
pub fn assouad_dimension(ensemble: &Ensemble) -> Result<f64> {
    ensemble.require_valid()?;
    Ok(assouad_from_patterns(&ensemble.patterns))
}

fn assouad_from_patterns(patterns: &[Pattern]) -> f64 {
    let mut horizontal: f64 = 0.0;
    let mut vertical: f64 = 0.0;
    for pattern in patterns {
        let stats = pattern.stats();
        horizontal = horizontal.max((stats.column_count as f64).ln() / ln_big(&pattern.m));
        vertical = vertical.max((stats.max_column as f64).ln() / ln_big(&pattern.n));
    }
    horizontal + vertical
}

/// Phase transition of a valid ensemble.
pub fn phase_transition(ensemble: &Ensemble) -> Result<f64> {
    ensemble.require_valid()?;
    Ok(phase_transition_from_averages(&ensemble.averages()))
}

/// Spectrum value at `theta` for a valid ensemble.
pub fn assouad_spectrum(ensemble: &Ensemble, theta: f64) -> Result<f64> {
    ensemble.require_valid()?;
    spectrum_from_averages(&ensemble.averages(), theta)
}

/// Min-form spectrum value at `theta` for a valid ensemble.
pub fn spectrum_min_form(ensemble: &Ensemble, theta: f64) -> Result<f64> {
    ensemble.require_valid()?;
    min_form_from_averages(&ensemble.averages(), theta)
}

/// All four summary values of a valid ensemble in one pass.
pub fn dimension_summary(ensemble: &Ensemble) -> Result<DimensionSummary> {
    ensemble.require_valid()?;
    let avg = ensemble.averages();
    Ok(DimensionSummary {
        box_dim: box_from_averages(&avg),
        quasi_assouad: quasi_assouad_from_averages(&avg),
        assouad: assouad_from_patterns(&ensemble.patterns),
        phase_transition: phase_transition_from_averages(&avg),
    })
}

/// Evaluates the spectrum over a strictly ascending grid inside (0, 1).
pub fn spectrum_curve(ensemble: &Ensemble, grid: &[f64]) -> Result<SpectrumCurve> {
    ensemble.require_valid()?;
    if grid.is_empty() {
        return Err(Error::Domain("theta grid is empty".to_string()));
    }
    for pair in grid.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::Domain(format!(
                "theta grid must be strictly ascending, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let avg = ensemble.averages();
    let values = grid
        .iter()
        .map(|&theta| spectrum_from_averages(&avg, theta))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectrumCurve {
        thetas: grid.to_vec(),
        values,
        summary: DimensionSummary {
            box_dim: box_from_averages(&avg),
            quasi_assouad: quasi_assouad_from_averages(&avg),
            assouad: assouad_from_patterns(&ensemble.patterns),
            phase_transition: phase_transition_from_averages(&avg),
        },
    })
}

// ---------------------------------------------------------------------
// Extreme ensembles
// ---------------------------------------------------------------------

/// Largest grid exponent allowed in the extreme construction; the full
/// column pattern has `2^k + 1` cells, so this caps memory at a couple
/// million cells and epsilon at 1/11 and above.
const MAX_EXTREME_EXPONENT: u64 = 21;

/// Builds the two-pattern witness separating quasi-Assouad from Assouad:
/// a full row of a 2 by n grid and a full column of an m by (m+1) grid,
/// mixed fifty-fifty. Each pattern alone is a line segment with every
/// dimension 1, yet the mix has Assouad dimension exactly 2 while the
/// quasi-Assouad dimension stays at or below `epsilon`.
///
/// `epsilon` is floored to a multiple of 1/1000 before the exact integer
/// construction; flooring only tightens the target, so the guarantee
/// `quasi_assouad <= epsilon` survives. Values below 1/11 are rejected
/// because the column pattern would need more than 2^21 cells.
pub fn build_extreme_ensemble(epsilon: f64) -> Result<Ensemble> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    // Exact floor of 1000 * epsilon: scaling by 1000 in floating point
    // could round the wrong way on a boundary, so compare dyadically.
    let mut scaled = (epsilon * 1000.0).floor() as u32;
    if rational_exceeds(scaled, 1000, epsilon) {
        scaled -= 1;
    }
    if scaled == 0 {
        return Err(Error::Domain(format!(
            "epsilon {epsilon} is too small; the construction supports 1/11 and above"
        )));
    }
    let snapped = UnitFraction::new(scaled, 1000)?;
    build_extreme_ensemble_exact(snapped)
}

/// Exact comparison `num/den > x` for positive `x` below 1, using the
/// dyadic expansion of `x`.
fn rational_exceeds(num: u32, den: u32, x: f64) -> bool {
    let (mant, exp) = dyadic_parts(x);
    // num/den > mant/2^exp  <=>  num * 2^exp > mant * den.
    (BigUint::from(num) << exp) > mant * BigUint::from(den)
}

/// Writes `x` in (0, 1) as `mant / 2^exp` exactly.
fn dyadic_parts(x: f64) -> (BigUint, u64) {
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7FF) as i64;
    let raw_mant = bits & ((1u64 << 52) - 1);
    let (mant, twos) = if raw_exp == 0 {
        (raw_mant, 1074)
    } else {
        (raw_mant | (1u64 << 52), 1075 - raw_exp)
    };
    debug_assert!(twos > 0, "only values below 1 are decomposed");
    (BigUint::from(mant), twos as u64)
}

/// Exact-rational form of the extreme construction: `epsilon = p/q` with
/// `0 < p < q <= 10000`.
pub fn build_extreme_ensemble_exact(epsilon: UnitFraction) -> Result<Ensemble> {
    let p = epsilon.num() as u64;
    let q = epsilon.den() as u64;
    if q > 10_000 {
        return Err(Error::Domain(format!(
            "epsilon denominator {q} is too fine; use at most 10000"
        )));
    }

    // Smallest m = 2^k with log 2 / log(2m) <= epsilon / 2, equivalent to
    // (2m)^p >= 2^(2q): k = ceil(2q / p) - 1.
    let k = (2 * q + p - 1) / p - 1;
    if k > MAX_EXTREME_EXPONENT {
        return Err(Error::Domain(format!(
            "epsilon {epsilon} needs a column pattern with 2^{k}+1 cells; \
             supported down to 1/11"
        )));
    }
    let m = BigUint::one() << k;
    let m_plus_1 = &m + 1u32;

    // Smallest n with log(m+1) / log(n(m+1)) <= epsilon / 2, equivalent
    // to n^p >= (m+1)^(2q-p).
    let target = m_plus_1.pow((2 * q - p) as u32);
    let n = ceil_nth_root(&target, p as u32);

    let row = Pattern {
        m: BigUint::from(2u32),
        n,
        cells: vec![(0, 0), (1, 0)],
    };
    let column_height = 1u64 << k;
    let column = Pattern {
        m,
        n: m_plus_1,
        cells: (0..=column_height).map(|row| (0, row)).collect(),
    };
    Ok(Ensemble {
        patterns: vec![row, column],
        weights: vec![0.5, 0.5],
    })
}
