//! Dimension theory of random self-affine carpets.
//!
//! A carpet here is the attractor of a random iterated construction on the
//! unit square: at every level one pattern is drawn from a weighted finite
//! family, each pattern an m x n grid (taller than wide, so the maps are
//! genuinely affine) with a chosen subset of cells, and the construction
//! recurses into the chosen cells with the whole sequence sharing one draw
//! per level. The library computes the almost-sure dimensions of that
//! attractor in closed form and can also measure them empirically, so the
//! two routes check each other.
//!
//! The closed forms need only three counts per pattern: cells, occupied
//! columns, and the maximum number of cells in one column, combined as
//! weight-geometric averages in the log domain. From those, [`formulas`]
//! produces the box dimension, the quasi Assouad dimension, the Assouad
//! dimension, and the whole Assouad spectrum, a curve in the window
//! parameter theta that rises from the box dimension and flattens at a
//! phase transition.
//!
//! The empirical route works with exact arithmetic end to end. [`model`]
//! holds patterns and weighted ensembles with validation; [`exactscale`]
//! represents scales as exact rationals and finds the construction levels
//! bracketing a scale by integer comparison; [`sampler`] draws reproducible
//! pattern sequences; [`covering`] counts the squares of side R needed to
//! cover the attractor inside a ball, by window products, by a witness
//! lower bound, and (within a node budget) by exhaustive enumeration;
//! [`montecarlo`] runs seeded trial suites that compare those counts
//! against the formulas and against concentration bounds; [`render`]
//! rasterizes construction prefixes for inspection. [`presets`] carries the
//! small ensembles used throughout the tests and docs, and [`bigmath`]
//! supplies the handful of big-integer log helpers everything shares.
//!
//! Reproducibility is a contract: every randomized routine takes an
//! explicit seed, per-trial streams are derived from it independently of
//! scheduling, and reports serialize identically at any thread count.

pub mod bigmath;
pub mod covering;
pub mod error;
pub mod exactscale;
pub mod formulas;
pub mod model;
pub mod montecarlo;
pub mod presets;
pub mod render;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{Averages, Ensemble, Pattern, PatternStats, ValidationReport};
