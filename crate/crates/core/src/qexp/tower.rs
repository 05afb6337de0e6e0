use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use super::krange::KRange;
use super::shell::{shell_sum, TermOnCell};
use super::RootScaledValue;
use crate::cells::{CellTower, DecompositionCertificate};
use crate::padic::PrimeContext;
use crate::{Error, Rational, Result};

/// The exponents `a` and `l` of one level's factor
/// `|(t - c)^a lambda^(-a)|^(1/n) v(t - c)^l`; `n`, `c` and `lambda` come
/// from the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelFactor {
    pub a: i64,
    pub l: u32,
}

impl LevelFactor {
    pub fn new(a: i64, l: u32) -> Self {
        Self { a, l }
    }

    /// The factor `1`.
    pub fn one() -> Self {
        Self { a: 0, l: 0 }
    }
}

/// `coefficient * prod_i factor_i` restricted to one cell of a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerTerm {
    pub cell: usize,
    pub coefficient: RootScaledValue,
    pub factors: Vec<LevelFactor>,
}

impl TowerTerm {
    pub fn new(cell: usize, coefficient: RootScaledValue, factors: Vec<LevelFactor>) -> Self {
        Self { cell, coefficient, factors }
    }
}

/// Integral of the product term over an explicit tower: the innermost level
/// is summed first, its value becoming the coefficient of the next level out.
fn integrate_cell(
    cell: &CellTower,
    coefficient: &RootScaledValue,
    factors: &[LevelFactor],
    ctx: &PrimeContext,
) -> Result<(RootScaledValue, bool)> {
    let mut value = coefficient.clone();
    let mut integrable = true;
    for (level, factor) in cell.levels().iter().zip(factors).rev() {
        let term = TermOnCell::new(value, factor.a, level.coset.n, factor.l, level.coset.lambda.clone())?;
        let range = if level.is_point() { KRange::empty() } else { level.fiber_valuation_range(&[], ctx)? };
        let (v, ok) = shell_sum(&term, &range, ctx)?;
        value = v;
        integrable &= ok;
    }
    Ok((value, integrable))
}

/// Integrates a sum of cell-adapted terms over the cells of an explicit
/// certificate. Terms with the same cell and factors are merged first and
/// zero terms dropped. A divergent contribution makes the result `(0, false)`.
pub fn integrate_explicit_tower(
    terms: &[TowerTerm],
    cert: &DecompositionCertificate,
    ctx: &PrimeContext,
) -> Result<(RootScaledValue, bool)> {
    let prime = ctx.p();
    let mut grouped: BTreeMap<(usize, Vec<LevelFactor>), RootScaledValue> = BTreeMap::new();
    for t in terms {
        let Some(cell) = cert.cells.get(t.cell) else {
            return Err(Error::CertificateMismatch(format!("term refers to missing cell {}", t.cell)));
        };
        if t.factors.len() != cell.arity() {
            return Err(Error::CertificateMismatch(format!(
                "term on cell {} has {} factors for {} levels",
                t.cell,
                t.factors.len(),
                cell.arity()
            )));
        }
        if !cell.is_explicit() {
            return Err(Error::NonConstantCell);
        }
        let slot = grouped.entry((t.cell, t.factors.clone())).or_insert_with(|| RootScaledValue::zero(prime));
        *slot = &*slot + &t.coefficient;
    }
    let mut total = RootScaledValue::zero(prime);
    for ((cell, factors), coefficient) in grouped {
        if coefficient.is_zero() {
            continue;
        }
        let (v, ok) = integrate_cell(&cert.cells[cell], &coefficient, &factors, ctx)?;
        if !ok {
            return Ok((RootScaledValue::zero(prime), false));
        }
        total = &total + &v;
    }
    Ok((total, true))
}

/// A lattice summand `coefficient * prod_i z_i^powers_i p^(p_exponents_i z_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeTerm {
    pub coefficient: Rational,
    pub p_exponents: Vec<i64>,
    pub powers: Vec<u32>,
}

impl LatticeTerm {
    pub fn new(coefficient: Rational, p_exponents: Vec<i64>, powers: Vec<u32>) -> Self {
        Self { coefficient, p_exponents, powers }
    }
}

fn lattice_value(term: &LatticeTerm, ranges: &[KRange], ctx: &PrimeContext) -> Result<Option<Rational>> {
    if term.p_exponents.len() != ranges.len() || term.powers.len() != ranges.len() {
        return Err(Error::InvalidTerm(format!("lattice term must have {} exponents and powers", ranges.len())));
    }
    let mut acc = term.coefficient.clone();
    for ((c, l), range) in term.p_exponents.iter().zip(&term.powers).zip(ranges) {
        let Some(prog) = range.progression() else {
            return Ok(Some(Rational::zero()));
        };
        // z = start + step j, so p^(c z) = p^(c start) (p^(c step))^j
        let y = ctx.pow(c * prog.step as i64);
        match super::shell::progression_sum(&prog, *l, &y) {
            Ok(s) => acc *= ctx.pow(c * prog.start) * s,
            Err(Error::Divergent) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(acc))
}

/// Exact sum of lattice terms over `z in prod_i ranges_i`. Divergence gives
/// `(0, false)`.
pub fn mixed_sum(terms: &[LatticeTerm], ranges: &[KRange], ctx: &PrimeContext) -> Result<(Rational, bool)> {
    let mut total = Rational::zero();
    for t in terms {
        if t.coefficient.is_zero() {
            continue;
        }
        match lattice_value(t, ranges, ctx)? {
            Some(v) => total += v,
            None => return Ok((Rational::zero(), false)),
        }
    }
    Ok((total, true))
}

/// Sum over lattice points and integral over the cells of a certificate of
/// products `lattice_term(z) * tower_term(x)`.
pub fn mixed_integrate(
    terms: &[(LatticeTerm, TowerTerm)],
    ranges: &[KRange],
    cert: &DecompositionCertificate,
    ctx: &PrimeContext,
) -> Result<(RootScaledValue, bool)> {
    let prime = ctx.p();
    let mut total = RootScaledValue::zero(prime);
    for (lattice, tower) in terms {
        let (lv, lok) = mixed_sum(core::slice::from_ref(lattice), ranges, ctx)?;
        let (tv, tok) = integrate_explicit_tower(core::slice::from_ref(tower), cert, ctx)?;
        if !(lok && tok) {
            return Ok((RootScaledValue::zero(prime), false));
        }
        total = &total + &tv.scale(&lv);
    }
    Ok((total, true))
}
