//! Exact p-adic cell integration and exponential-sum analysis.
//!
//! All p-adic quantities are carried by exact rationals, which are dense in
//! `Q_p`. The crate is `no_std` (with `alloc`); the default `std` feature only
//! switches residue enumeration onto a rayon pool. Every reduction is
//! performed over fixed-size chunks in a fixed order, so results never depend
//! on the worker count.
//!
//! Modules, bottom-up:
//!
//! - [`padic`]: valuations, norms, residues and `n`-th power cosets.
//! - [`dsl`]: polynomials over `Q`, simple q-exponential expressions, their
//!   parser, printer and evaluator.
//! - [`cells`]: cell towers, membership, fiber measures and certificate checks.
//! - [`qexp`]: closed-form integration of cell-adapted terms.
//! - [`oracle`]: brute-force residue sums and point counts.
//! - [`expsums`]: exponential sums, singular series and decay fits.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod cells;
pub mod dsl;
mod error;
pub mod expsums;
pub mod oracle;
pub mod padic;
mod par;
pub mod qexp;

pub use error::{Error, Result};
pub use padic::{PadicScalar, PrimeContext, Valuation};
pub use qexp::RootScaledValue;

/// Exact rational numbers used throughout the crate.
pub type Rational = num_rational::BigRational;
