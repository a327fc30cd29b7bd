//! Computational dynamics of birational maps of complex projective space.
//!
//! The crate is organised bottom-up:
//!
//! * [`projalg`] exact homogeneous polynomials over the rationals, lifts and
//!   projective points;
//! * [`ratmap`] rational self-maps, composition with gcd stripping, degree
//!   sequences, birationality and pointwise evaluation;
//! * [`indeterminacy`] indeterminacy loci and sampled regularity checks;
//! * [`green`] Green functions of algebraically stable maps;
//! * [`currents`] the discrete mixed `dd^c` wedge on a chart grid (k = 2);
//! * [`dynamics`] Monte-Carlo pullback masses, dynamical degrees, invariance
//!   and mixing diagnostics;
//! * [`zoo`] the built-in families of maps and their bundled region configs.

// `!(x > 0.0)` guards reject NaN on purpose, and polynomials spell
// `is_empty` as `is_zero`
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::len_without_is_empty)]

pub mod currents;
pub mod dynamics;
pub mod error;
pub mod green;
pub mod indeterminacy;
pub mod output;
pub mod projalg;
pub mod ratmap;
pub mod sampling;
pub mod zoo;

pub use error::{Error, Result};
pub use num::complex::Complex64;
