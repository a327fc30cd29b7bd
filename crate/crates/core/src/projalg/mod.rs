//! Exact arithmetic for homogeneous polynomials over the rationals, plus
//! floating-point evaluation of them on lifts of projective points.

mod gcd;
mod lift;
mod monomial;
mod poly;
mod sparse;

pub use gcd::{certify_coprime, gcd_many};
pub use lift::{fs_distance, Lift, ProjPoint};
pub use monomial::Monomial;
pub use poly::{parse_rational, HomoPoly, TermJson, WORK_PER_TERM};
pub use sparse::Sparse;

pub use num::{BigInt, BigRational};
