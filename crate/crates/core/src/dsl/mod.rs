//! Polynomials over `Q` and simple q-exponential expressions.
//!
//! Expressions are built from `norm(f)` (`|f|`), `val(f)` (`v(f)`) and
//! `norm(f)^{a/n}` (`|f|^(a/n)`) with rational constants, sums, products and
//! nonnegative integer powers. Variables are `x1 < x2 < ...`; that order is
//! shared by every module.

mod expr;
mod parse;
mod poly;
mod schwartz;

pub use expr::QExpExpr;
pub use parse::{format_expr, parse_expr, parse_poly};
pub(crate) use poly::{lift_point, CarrierValuation, ResiduePoly};
pub use poly::{Monomial, PolyExpr};
pub use schwartz::{SchwartzBruhatSpec, SchwartzPiece};
