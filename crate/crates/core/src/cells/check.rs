use alloc::vec::Vec;

use super::{DecompositionCertificate, NormDescription, Test};
use crate::dsl::PolyExpr;
use crate::padic::{PadicScalar, PrimeContext, Valuation};
use crate::par::map_reduce;
use crate::qexp::RootScaledValue;
use crate::{Error, Result};

/// Violations and mismatches kept in a report; the counts are always exact.
pub const MAX_REPORTED: usize = 256;

/// A lifted residue point covered by the wrong number of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub point: Vec<u64>,
    pub in_domain: bool,
    /// Indices of the cells containing the point.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartitionReport {
    pub level: u32,
    pub checked: u64,
    /// Relevant points whose residue class is not decided at this level.
    pub ambiguous: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    pub ok: bool,
}

/// A point where `|f|` differs from its claimed description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub cell: usize,
    pub point: Vec<u64>,
    pub lhs: RootScaledValue,
    pub rhs: RootScaledValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormReport {
    pub level: u32,
    pub checked: u64,
    pub ambiguous: u64,
    pub mismatch_count: u64,
    pub mismatches: Vec<Mismatch>,
    /// Cells without any description of the function.
    pub missing_cells: Vec<usize>,
    pub ok: bool,
}

/// A vanishing bound makes the cell undefined at that lift, which is only
/// decidable at a finer level.
fn probe(test: Result<Test>) -> Result<Test> {
    match test {
        Err(Error::BoundVanished { .. }) => Ok(Test { inside: false, ambiguous: true }),
        other => other,
    }
}

fn decode(mut idx: u64, q: u64, arity: usize) -> Vec<u64> {
    (0..arity)
        .map(|_| {
            let d = idx % q;
            idx /= q;
            d
        })
        .collect()
}

fn lift(residues: &[u64]) -> Vec<PadicScalar> {
    residues.iter().map(|r| PadicScalar::from(*r)).collect()
}

fn push_capped<T>(list: &mut Vec<T>, item: T) {
    if list.len() < MAX_REPORTED {
        list.push(item);
    }
}

fn merge_partition(a: Result<PartitionReport>, b: Result<PartitionReport>) -> Result<PartitionReport> {
    let (mut a, b) = (a?, b?);
    a.checked += b.checked;
    a.ambiguous += b.ambiguous;
    a.violation_count += b.violation_count;
    for v in b.violations {
        push_capped(&mut a.violations, v);
    }
    Ok(a)
}

fn residue_space(arity: usize, level: u32, ctx: &PrimeContext) -> Result<(u64, u64)> {
    if level == 0 {
        return Err(Error::ZeroLevel);
    }
    let total = ctx.check_budget(level, arity)? as u64;
    let q = ctx.modulus_u64(level).expect("within budget");
    Ok((total, q))
}

/// Checks that every least nonnegative lift of a residue vector modulo `p^m`
/// lies in exactly one cell if it lies in the domain, and in none otherwise.
///
/// Points outside the domain and all cells are skipped; ambiguity is counted
/// only for the remaining points.
pub fn check_partition(cert: &DecompositionCertificate, level: u32, ctx: &PrimeContext) -> Result<PartitionReport> {
    let arity = cert.arity();
    let (total, q) = residue_space(arity, level, ctx)?;
    let chunk = |start: u64, end: u64| -> Result<PartitionReport> {
        let mut rep = PartitionReport::default();
        for idx in start..end {
            let residues = decode(idx, q, arity);
            let point = lift(&residues);
            let dom = probe(cert.domain.test(&point, Some(level), ctx))?;
            let mut cells = Vec::new();
            let mut ambiguous = dom.ambiguous;
            for (i, cell) in cert.cells.iter().enumerate() {
                let t = probe(cell.test(&point, Some(level), ctx))?;
                ambiguous |= t.ambiguous;
                if t.inside {
                    cells.push(i);
                }
            }
            if !dom.inside && cells.is_empty() {
                continue;
            }
            rep.checked += 1;
            if ambiguous {
                rep.ambiguous += 1;
            }
            let bad = if dom.inside { cells.len() != 1 } else { !cells.is_empty() };
            if bad {
                rep.violation_count += 1;
                push_capped(&mut rep.violations, Violation { point: residues, in_domain: dom.inside, cells });
            }
        }
        Ok(rep)
    };
    let mut rep = map_reduce(total, Ok(PartitionReport::default()), chunk, merge_partition)?;
    rep.level = level;
    rep.ok = rep.violation_count == 0;
    Ok(rep)
}

/// `|f|` as an element of `p^(Z/n)`, or zero.
fn norm_value(v: Valuation, prime: u64) -> RootScaledValue {
    match v {
        Valuation::Infinite => RootScaledValue::zero(prime),
        Valuation::Finite(v) => RootScaledValue::p_power(prime, -v, 1),
    }
}

fn described_norm(
    cert: &DecompositionCertificate,
    d: &NormDescription,
    point: &[PadicScalar],
    ctx: &PrimeContext,
) -> Result<RootScaledValue> {
    let p = ctx.p();
    let level = &cert.cells[d.cell].levels()[d.level];
    let base = &point[..d.level];
    let vd = ctx.valuation(&d.delta.evaluate(base)?);
    let Valuation::Finite(vd) = vd else {
        return Ok(RootScaledValue::zero(p));
    };
    if d.a == 0 {
        return Ok(RootScaledValue::p_power(p, -vd, 1));
    }
    let c = level.center.evaluate(base)?;
    let u = PadicScalar::new(point[d.level].value() - c.value());
    let n = level.coset.n as i64;
    let w = ctx.valuation(&level.coset.lambda).finite().ok_or(Error::ZeroCoset)?;
    match ctx.valuation(&u) {
        Valuation::Infinite if d.a > 0 => Ok(RootScaledValue::zero(p)),
        Valuation::Infinite => Err(Error::ZeroToNegativePower),
        Valuation::Finite(vu) => Ok(RootScaledValue::p_power(p, -(n * vd + d.a * (vu - w)), n as u32)),
    }
}

fn merge_norm(a: Result<NormReport>, b: Result<NormReport>) -> Result<NormReport> {
    let (mut a, b) = (a?, b?);
    a.checked += b.checked;
    a.ambiguous += b.ambiguous;
    a.mismatch_count += b.mismatch_count;
    for m in b.mismatches {
        push_capped(&mut a.mismatches, m);
    }
    Ok(a)
}

/// Checks `|f(x)| = |delta| |(t - c)^a lambda^(-a)|^(1/n)` exactly at every
/// lifted residue point modulo `p^m` of every cell, for each description of
/// `f` in the certificate.
pub fn check_norm_description(
    f: &PolyExpr,
    cert: &DecompositionCertificate,
    level: u32,
    ctx: &PrimeContext,
) -> Result<NormReport> {
    let arity = cert.arity();
    let (total, q) = residue_space(arity, level, ctx)?;
    let mut per_cell: Vec<Vec<&NormDescription>> = alloc::vec![Vec::new(); cert.cells.len()];
    for d in &cert.descriptions {
        if cert.functions[d.function] == *f {
            per_cell[d.cell].push(d);
        }
    }
    let missing_cells: Vec<usize> = (0..cert.cells.len()).filter(|i| per_cell[*i].is_empty()).collect();
    let p = ctx.p();
    let chunk = |start: u64, end: u64| -> Result<NormReport> {
        let mut rep = NormReport::default();
        for idx in start..end {
            let residues = decode(idx, q, arity);
            let point = lift(&residues);
            let mut lhs = None;
            for (i, cell) in cert.cells.iter().enumerate() {
                let t = probe(cell.test(&point, Some(level), ctx))?;
                if !t.inside {
                    continue;
                }
                if t.ambiguous {
                    rep.ambiguous += 1;
                }
                let lhs = match &lhs {
                    Some(v) => v,
                    None => lhs.insert(norm_value(ctx.valuation(&f.evaluate(&point)?), p)),
                };
                for d in &per_cell[i] {
                    rep.checked += 1;
                    let rhs = described_norm(cert, d, &point, ctx)?;
                    if rhs != *lhs {
                        rep.mismatch_count += 1;
                        push_capped(
                            &mut rep.mismatches,
                            Mismatch { cell: i, point: residues.clone(), lhs: lhs.clone(), rhs },
                        );
                    }
                }
            }
        }
        Ok(rep)
    };
    let mut rep = map_reduce(total, Ok(NormReport::default()), chunk, merge_norm)?;
    rep.level = level;
    rep.ok = rep.mismatch_count == 0 && missing_cells.is_empty();
    rep.missing_cells = missing_cells;
    Ok(rep)
}
