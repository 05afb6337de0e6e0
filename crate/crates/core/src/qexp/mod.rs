//! Closed-form integration of simple q-exponential terms over cells.
//!
//! On a fiber `t - c in lambda P_n`, the shell `v(t - c) = k` has measure
//! `eps * p^(-k)` for the density `eps` of one `P_n` coset among units, and a
//! cell-adapted term is constant on it. Integrals therefore reduce to sums
//! `sum_k k^l y^k` over arithmetic progressions, evaluated exactly.

mod krange;
mod power_sum;
mod root_value;
mod shell;
#[cfg(test)]
mod tests;
mod tower;

pub use krange::{KRange, Progression};
pub use power_sum::{eulerian_numerator, power_sum, MAX_POWER};
pub use root_value::RootScaledValue;
pub use shell::{decide_integrability, shell_sum, TermOnCell};
pub use tower::{integrate_explicit_tower, mixed_integrate, mixed_sum, LatticeTerm, LevelFactor, TowerTerm};
