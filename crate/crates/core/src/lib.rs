//! Computational toolkit for permutation stability experiments.
//!
//! The crate is organised bottom-up:
//!
//! * [`words`]: reduced words in free groups and ball enumeration.
//! * [`perms`]: finite permutations, the normalized Hamming metric and the
//!   almost-solution / separation checkers.
//! * [`marked`]: marked groups (alternating markings, the alternating
//!   enrichment `A(Z)`, diagonal products) and the metric `2^-nu`.
//! * [`irs`]: invariant random subgroups observed through radius-`r`
//!   stabilizer fingerprints.
//! * [`challenges`]: stability challenges and the `d_gen` distance between
//!   finite actions.
//! * [`subshift`]: substitution subshifts, clopen algebra, frequencies and
//!   Kakutani-Rokhlin partitions.
//! * [`fullgroup`]: topological full group elements, atom actions and the
//!   stabilizer IRS of finite partitions.

pub mod challenges;
pub mod error;
pub mod fullgroup;
pub mod irs;
pub mod marked;
pub mod perms;
pub mod subshift;
pub mod words;

pub use error::{Error, Result};

/// Exact rational numbers used for every distance and mass that admits one.
pub type Rational = num_rational::BigRational;

pub(crate) fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(num.into(), den.into())
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}
