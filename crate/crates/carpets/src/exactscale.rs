//! Exact scale arithmetic: rational scales, stopping levels, and powers.
//!
//! Covering counts jump by integer factors between subdivision levels, so
//! every scale comparison here is an exact integer comparison. A scale is
//! a rational number in (0, 1); the level at which cylinder widths or
//! heights first drop to a scale is found by multiplying grid sides in
//! big-integer arithmetic, never by accumulating floating-point logs.
//!
//! The one genuinely irrational quantity is `R^(1/theta)` for rational
//! `R` and `theta`. When it happens to be rational it is returned exactly;
//! otherwise it is bracketed between two nearby rationals and the lower
//! endpoint is used as the canonical stand-in. Both endpoints land within
//! one subdivision level of the true value, which perturbs covering
//! exponents by an amount that vanishes as `R` shrinks.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::bigmath::{exact_nth_root, floor_nth_root, ln_ratio};
use crate::error::{Error, Result};
use crate::model::Ensemble;

// ---------------------------------------------------------------------
// Scale
// ---------------------------------------------------------------------

/// A rational scale strictly between 0 and 1, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scale(Ratio<BigUint>);

impl Scale {
    /// Builds a scale from numerator and denominator, requiring
    /// `0 < num < den`.
    pub fn new(num: BigUint, den: BigUint) -> Result<Scale> {
        if num.is_zero() {
            return Err(Error::Domain("scale must be positive".to_string()));
        }
        if num >= den {
            return Err(Error::Domain(format!(
                "scale {num}/{den} is not below 1"
            )));
        }
        Ok(Scale(Ratio::new(num, den)))
    }

    /// Convenience constructor for small test scales.
    pub fn from_u64(num: u64, den: u64) -> Result<Scale> {
        Scale::new(BigUint::from(num), BigUint::from(den))
    }

    pub fn numer(&self) -> &BigUint {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn ratio(&self) -> &Ratio<BigUint> {
        &self.0
    }

    /// Natural log of the scale; always negative.
    pub fn ln(&self) -> f64 {
        ln_ratio(self.numer(), self.denom())
    }

    /// Approximate value for display purposes.
    pub fn to_f64(&self) -> f64 {
        self.ln().exp()
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Scale {
    type Err = Error;

    /// Parses `"p/q"` with decimal integer parts. Decimal-point inputs
    /// are rejected with the equivalent fraction suggested.
    fn from_str(text: &str) -> Result<Scale> {
        let text = text.trim();
        if let Some(fraction) = decimal_as_fraction(text) {
            return Err(Error::Domain(format!(
                "scale must be a ratio of integers like {fraction}, not the decimal {text}"
            )));
        }
        let (num_text, den_text) = text.split_once('/').ok_or_else(|| {
            Error::Domain(format!("scale must look like p/q, got {text:?}"))
        })?;
        let num = BigUint::from_str(num_text.trim())
            .map_err(|_| Error::Domain(format!("bad scale numerator {num_text:?}")))?;
        let den = BigUint::from_str(den_text.trim())
            .map_err(|_| Error::Domain(format!("bad scale denominator {den_text:?}")))?;
        Scale::new(num, den)
    }
}

/// Rewrites a decimal like `0.1` as the reduced fraction `1/10`, if the
/// input is a decimal at all.
fn decimal_as_fraction(text: &str) -> Option<String> {
    let (int_part, frac_part) = text.split_once('.')?;
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || frac_part.is_empty()
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigUint::from_str(&digits).ok()?;
    let den = BigUint::from(10u32).pow(frac_part.len() as u32);
    if num.is_zero() {
        return None;
    }
    let reduced = Ratio::new(num, den);
    Some(format!("{}/{}", reduced.numer(), reduced.denom()))
}

// ---------------------------------------------------------------------
// Unit fractions
// ---------------------------------------------------------------------

/// A rational in (0, 1) with small terms, used for exponents like the
/// spectrum parameter theta. Kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitFraction {
    num: u32,
    den: u32,
}

impl UnitFraction {
    pub fn new(num: u32, den: u32) -> Result<UnitFraction> {
        if num == 0 || num >= den {
            return Err(Error::Domain(format!(
                "fraction {num}/{den} is not strictly between 0 and 1"
            )));
        }
        let g = gcd_u32(num, den);
        Ok(UnitFraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd_u32(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl fmt::Display for UnitFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for UnitFraction {
    type Err = Error;

    fn from_str(text: &str) -> Result<UnitFraction> {
        let text = text.trim();
        if let Some(fraction) = decimal_as_fraction(text) {
            return Err(Error::Domain(format!(
                "write it as a ratio of integers like {fraction}, not the decimal {text}"
            )));
        }
        let (num_text, den_text) = text
            .split_once('/')
            .ok_or_else(|| Error::Domain(format!("fraction must look like p/q, got {text:?}")))?;
        let num: u32 = num_text
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad fraction numerator {num_text:?}")))?;
        let den: u32 = den_text
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad fraction denominator {den_text:?}")))?;
        UnitFraction::new(num, den)
    }
}

// ---------------------------------------------------------------------
// Stopping levels
// ---------------------------------------------------------------------

/// First levels at which cylinder sides drop to a given scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopTimes {
    /// Smallest `k >= 1` with the product of the first `k` horizontal
    /// factors at least `1/R`; cylinder widths are `<= R` from here on.
    pub width_level: usize,
    /// Same for vertical factors. Heights shrink at least as fast as
    /// widths, so `height_level <= width_level`.
    pub height_level: usize,
}

/// Smallest `k >= 1` whose running product of subdivision factors reaches
/// `1/scale`, by exact comparison `num * product >= den`.
pub fn stop_level<'a>(
    factors: impl IntoIterator<Item = &'a BigUint>,
    scale: &Scale,
) -> Result<usize> {
    let mut acc = scale.numer().clone();
    let mut seen = 0usize;
    for factor in factors {
        acc *= factor;
        seen += 1;
        if acc >= *scale.denom() {
            return Ok(seen);
        }
    }
    Err(Error::InsufficientDepth {
        have: seen,
        needed_hint: depth_hint(scale),
    })
}

/// Prefix length that reaches `scale` under any ensemble: every grid side
/// is at least 2, so `ceil(log2(den/num))` levels always suffice.
pub fn depth_hint(scale: &Scale) -> usize {
    let c = (scale.denom() + scale.numer() - 1u32) / scale.numer();
    (c - 1u32).bits() as usize
}

/// Width and height stopping levels along a realization prefix.
///
/// `symbols` are 1-based pattern indices, as produced by the sampler.
pub fn stop_times(ensemble: &Ensemble, symbols: &[u32], scale: &Scale) -> Result<StopTimes> {
    let patterns = symbols_to_patterns(ensemble, symbols)?;
    let width_level = stop_level(patterns.iter().map(|p| &p.m), scale)?;
    let height_level = stop_level(patterns.iter().map(|p| &p.n), scale)?;
    debug_assert!(height_level <= width_level);
    Ok(StopTimes {
        width_level,
        height_level,
    })
}

/// Resolves 1-based symbols to pattern references, rejecting out-of-range
/// indices.
pub fn symbols_to_patterns<'a>(
    ensemble: &'a Ensemble,
    symbols: &[u32],
) -> Result<Vec<&'a crate::model::Pattern>> {
    symbols
        .iter()
        .map(|&s| {
            let idx = s as usize;
            if idx == 0 || idx > ensemble.patterns.len() {
                Err(Error::Validation(format!(
                    "symbol {s} outside 1..={}",
                    ensemble.patterns.len()
                )))
            } else {
                Ok(&ensemble.patterns[idx - 1])
            }
        })
        .collect()
}

// ---------------------------------------------------------------------
// Stopping-time ratios
// ---------------------------------------------------------------------

/// Stopping times at a base scale `R` and at `R^(1/theta)`, with the four
/// ratios whose almost-sure limits drive the spectrum formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    /// Stopping times at `R`.
    pub base: StopTimes,
    /// Stopping times at the canonical representative of `R^(1/theta)`.
    pub fine: StopTimes,
    /// `k1(R) / k2(R^(1/theta))`; tends to `theta * log n / log m` in the
    /// weighted-average logs.
    pub width_over_fine_height: f64,
    /// `k1(R) / k2(R)`; tends to `log n / log m`.
    pub width_over_height: f64,
    /// `k1(R) / k1(R^(1/theta))`; tends to `theta`.
    pub width_over_fine_width: f64,
    /// `k2(R) / k2(R^(1/theta))`; tends to `theta`.
    pub height_over_fine_height: f64,
}

/// Computes stopping times at `R` and `R^(1/theta)` along one realization
/// and the four convergence ratios between them.
pub fn ratio_stats(
    ensemble: &Ensemble,
    symbols: &[u32],
    scale: &Scale,
    theta: UnitFraction,
) -> Result<RatioStats> {
    let base = stop_times(ensemble, symbols, scale)?;
    let fine_scale = power_scale(scale, theta);
    let fine = stop_times(ensemble, symbols, fine_scale.canonical())?;
    Ok(RatioStats {
        base,
        fine,
        width_over_fine_height: base.width_level as f64 / fine.height_level as f64,
        width_over_height: base.width_level as f64 / base.height_level as f64,
        width_over_fine_width: base.width_level as f64 / fine.width_level as f64,
        height_over_fine_height: base.height_level as f64 / fine.height_level as f64,
    })
}

// ---------------------------------------------------------------------
// Rational powers
// ---------------------------------------------------------------------

/// `R^(1/theta)`, exactly when rational and bracketed otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalePower {
    Exact(Scale),
    /// `lo < R^(1/theta) < hi`, both strict.
    Bracket { lo: Scale, hi: Scale },
}

impl ScalePower {
    /// The scale downstream computations use: the exact value when there
    /// is one, otherwise the lower bracket endpoint. Stopping levels at
    /// the two endpoints differ by at most one.
    pub fn canonical(&self) -> &Scale {
        match self {
            ScalePower::Exact(scale) => scale,
            ScalePower::Bracket { lo, .. } => lo,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScalePower::Exact(_))
    }
}

impl fmt::Display for ScalePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalePower::Exact(scale) => write!(f, "{scale}"),
            ScalePower::Bracket { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// Bit length of the denominator used when the reciprocal-integer bracket
/// is too coarse to be useful.
const REFINED_DENOM_BITS: u32 = 20;

/// Computes `R^(1/theta) = (R^q)^(1/p)` for `theta = p/q`.
///
/// The result is rational exactly when numerator and denominator of `R^q`
/// are both perfect `p`-th powers (with `R` reduced, one forces the
/// other). Otherwise the value is irrational and gets bracketed between
/// consecutive reciprocals `1/(r+1) < R^(1/theta) < 1/r`; when that
/// bracket degenerates to `r = 1` it is refined to consecutive multiples
/// of `2^-20`. The upper endpoint is clamped to `R` itself, which is
/// always a strict upper bound since `1/theta > 1`.
pub fn power_scale(scale: &Scale, theta: UnitFraction) -> ScalePower {
    let p = theta.num();
    let q = theta.den();
    let num_q = scale.numer().pow(q);
    let den_q = scale.denom().pow(q);

    if p == 1 {
        return ScalePower::Exact(Scale(Ratio::new(num_q, den_q)));
    }
    if let (Some(num_root), Some(den_root)) =
        (exact_nth_root(&num_q, p), exact_nth_root(&den_q, p))
    {
        return ScalePower::Exact(Scale(Ratio::new(num_root, den_root)));
    }

    // Irrational case: bracket the reciprocal first.
    let reciprocal_floor = floor_nth_root(&(&den_q / &num_q), p);
    let (lo, hi_unclamped) = if reciprocal_floor.is_one() {
        // The value is above 1/2; consecutive reciprocals are useless, so
        // bracket between consecutive multiples of a fixed dyadic step.
        let d = BigUint::one() << REFINED_DENOM_BITS;
        let d_p = (&d).pow(p);
        let s = floor_nth_root(&(&num_q * d_p / &den_q), p);
        (
            Ratio::new(s.clone(), d.clone()),
            Ratio::new(s + 1u32, d),
        )
    } else {
        (
            Ratio::new(BigUint::one(), &reciprocal_floor + 1u32),
            Ratio::new(BigUint::one(), reciprocal_floor),
        )
    };
    let scale_ratio = scale.ratio();
    let hi = if &hi_unclamped < scale_ratio {
        hi_unclamped
    } else {
        scale_ratio.clone()
    };
    ScalePower::Bracket {
        lo: Scale(lo),
        hi: Scale(hi),
    }
}
