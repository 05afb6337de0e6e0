//! Exponential sums `E(y) = int_{Z_p^n} psi(<y, f(x)>) |dx|`, normalized
//! Kloosterman sums, local singular series by counting, and decay fits.
//!
//! Once `m >= -v(y_i)` for every `i` the integrand is constant on residue
//! classes modulo `p^m`, so `E(y)` is a finite sum of roots of unity. Sums are
//! taken in complex doubles over fixed chunks in a fixed order.

mod decay;

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::dsl::{PolyExpr, ResiduePoly, SchwartzBruhatSpec};
use crate::oracle::{count_solutions, fiber_counts};
use crate::padic::{arith, PadicScalar, PrimeContext};
use crate::par::{map_reduce, pairwise_sum, CHUNK};
use crate::{Error, Rational, Result};

pub use decay::{
    bound_check, decay_fit, decay_sweep, looks_dominant, DecayFit, DecaySample, SweepResult, VANISHING_THRESHOLD,
};

/// A complex number; character values have modulus one.
pub type CharacterValue = Complex64;

/// The representative `{x}_p in [0, 1)` with `p`-power denominator and
/// `x - {x}_p in Z_(p)`.
pub fn fractional_part(x: &Rational, ctx: &PrimeContext) -> Rational {
    let p = BigInt::from(ctx.p());
    let mut k = 0u32;
    let mut rest = x.denom().clone();
    while rest.is_multiple_of(&p) {
        rest /= &p;
        k += 1;
    }
    if k == 0 {
        return Rational::zero();
    }
    let pk = num_traits::pow(p, k as usize);
    // x = a / (p^k d), so {x} = (a d^-1 mod p^k) / p^k
    let inv = arith::mod_inverse_big(&rest, &pk).expect("coprime to p");
    let r = (x.numer() * inv).mod_floor(&pk);
    Rational::new(r, pk)
}

fn unit_root(numer: f64, denom: f64) -> CharacterValue {
    let theta = core::f64::consts::TAU * (numer / denom);
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// `psi(x) = exp(2 pi i {x}_p)`.
pub fn additive_character(x: &PadicScalar, ctx: &PrimeContext) -> CharacterValue {
    let f = fractional_part(x.value(), ctx);
    match (f.numer().to_u64(), f.denom().to_u64()) {
        (Some(a), Some(b)) => unit_root(a as f64, b as f64),
        _ => unit_root(f.to_f64().unwrap_or(0.0), 1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumResult {
    pub y: Vec<PadicScalar>,
    pub level: u32,
    pub value: Complex64,
    /// Number of variables.
    pub n: usize,
    /// Number of component functions.
    pub r: usize,
    pub p: u64,
}

/// `max(0, max_i -v(y_i))`: the level at which `psi(<y, f(x)>)` is constant
/// on residue classes.
pub fn required_level(y: &[PadicScalar], ctx: &PrimeContext) -> u32 {
    y.iter().filter_map(|c| ctx.valuation(c).finite()).map(|v| (-v).max(0) as u32).max().unwrap_or(0)
}

fn check_map(fs: &[PolyExpr], arity: usize, ctx: &PrimeContext) -> Result<()> {
    if fs.iter().any(|f| !f.is_p_integral(ctx)) {
        return Err(Error::NonIntegralCoefficients);
    }
    if let Some(f) = fs.iter().find(|f| f.arity() > arity) {
        return Err(Error::ArityMismatch { expected: f.arity(), got: arity });
    }
    Ok(())
}

/// Phase numerators: `<y, f(x)> = (sum_i c_i f_i(x) mod p^m) / p^m` modulo `Z_p`.
struct Phase {
    maps: Vec<ResiduePoly>,
    weights: Vec<u64>,
    q: u64,
    table: Option<Vec<Complex64>>,
}

const TABLE_LIMIT: u64 = 1 << 22;

impl Phase {
    fn new(fs: &[PolyExpr], y: &[PadicScalar], level: u32, ctx: &PrimeContext) -> Result<Self> {
        let q = ctx.modulus_u64(level).ok_or(Error::InvalidArgument("level too large".into()))?;
        let scale = ctx.pow(level as i64);
        let weights = y.iter().map(|c| ctx.residue_u64(&(c.value() * &scale), level)).collect::<Result<Vec<_>>>()?;
        let maps = fs.iter().map(|f| ResiduePoly::new(f, ctx, level)).collect::<Result<Vec<_>>>()?;
        let table = (q <= TABLE_LIMIT).then(|| (0..q).map(|k| unit_root(k as f64, q as f64)).collect());
        Ok(Self { maps, weights, q, table })
    }

    fn numerator(&self, point: &[u64], scratch: &mut Vec<Vec<u64>>) -> u64 {
        let mut acc = 0u64;
        for (f, w) in self.maps.iter().zip(&self.weights) {
            if *w != 0 {
                acc = (acc + arith::mul_mod(*w, f.eval(point, scratch), self.q)) % self.q;
            }
        }
        acc
    }

    fn root(&self, k: u64) -> Complex64 {
        match &self.table {
            Some(t) => t[k as usize],
            None => unit_root(k as f64, self.q as f64),
        }
    }
}

fn decode(mut idx: u64, q: u64, arity: usize, out: &mut Vec<u64>) {
    out.clear();
    for _ in 0..arity {
        out.push(idx % q);
        idx /= q;
    }
}

/// `sum_x weight(x) psi(<y, f(x)>)` over `(Z/p^level)^arity`, unnormalized.
fn residue_sum<W>(phase: &Phase, arity: usize, level: u32, ctx: &PrimeContext, weight: W) -> Result<Complex64>
where
    W: Fn(&[u64]) -> f64 + Sync + Send,
{
    let total = ctx.check_budget(level, arity)? as u64;
    let q = phase.q;
    let map = |start: u64, end: u64| {
        let mut point = Vec::with_capacity(arity);
        let mut scratch = Vec::new();
        let mut re = Vec::with_capacity(CHUNK as usize);
        let mut im = Vec::with_capacity(CHUNK as usize);
        for idx in start..end {
            decode(idx, q, arity, &mut point);
            let w = weight(&point);
            if w == 0.0 {
                continue;
            }
            let z = phase.root(phase.numerator(&point, &mut scratch)) * w;
            re.push(z.re);
            im.push(z.im);
        }
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    };
    Ok(map_reduce(total, Complex64::zero(), map, |a, b| a + b))
}

/// `E(y)` evaluated at an explicit level `level >= required_level(y)`.
pub fn exp_sum_at_level(
    fs: &[PolyExpr],
    arity: usize,
    y: &[PadicScalar],
    level: u32,
    ctx: &PrimeContext,
) -> Result<ExpSumResult> {
    check_map(fs, arity, ctx)?;
    if y.len() != fs.len() {
        return Err(Error::ArityMismatch { expected: fs.len(), got: y.len() });
    }
    if level < required_level(y, ctx) {
        return Err(Error::InvalidArgument("level below -v(y)".into()));
    }
    ctx.check_budget(level, arity)?;
    let phase = Phase::new(fs, y, level, ctx)?;
    let sum = residue_sum(&phase, arity, level, ctx, |_| 1.0)?;
    let norm = libm::pow(ctx.p() as f64, -((level as usize * arity) as f64));
    Ok(ExpSumResult { y: y.to_vec(), level, value: sum * norm, n: arity, r: fs.len(), p: ctx.p() })
}

/// `E(y) = p^(-n m) sum_{x mod p^m} psi(<y, f(x)>)` with `m = required_level(y)`.
pub fn exp_sum(fs: &[PolyExpr], arity: usize, y: &[PadicScalar], ctx: &PrimeContext) -> Result<ExpSumResult> {
    exp_sum_at_level(fs, arity, y, required_level(y, ctx), ctx)
}

/// `int phi(x) psi(<y, f(x)>) |dx|` for a Schwartz-Bruhat weight `phi`
/// supported in `Z_p^n`.
pub fn weighted_exp_sum(
    fs: &[PolyExpr],
    y: &[PadicScalar],
    phi: &SchwartzBruhatSpec,
    ctx: &PrimeContext,
) -> Result<ExpSumResult> {
    let arity = phi.dim();
    check_map(fs, arity, ctx)?;
    if y.len() != fs.len() {
        return Err(Error::ArityMismatch { expected: fs.len(), got: y.len() });
    }
    let level = required_level(y, ctx).max(phi.max_level());
    ctx.check_budget(level, arity)?;
    let phase = Phase::new(fs, y, level, ctx)?;
    let pieces: Vec<(u64, &[u64], f64)> = phi
        .pieces()
        .iter()
        .map(|piece| {
            let m = ctx.modulus_u64(piece.level).expect("validated");
            (m, piece.residues.as_slice(), piece.weight.to_f64().unwrap_or(0.0))
        })
        .collect();
    let weight = |x: &[u64]| -> f64 {
        pieces.iter().filter(|(m, r, _)| r.iter().zip(x).all(|(r, x)| x % m == *r)).map(|(_, _, w)| w).sum()
    };
    let sum = residue_sum(&phase, arity, level, ctx, weight)?;
    let norm = libm::pow(ctx.p() as f64, -((level as usize * arity) as f64));
    Ok(ExpSumResult { y: y.to_vec(), level, value: sum * norm, n: arity, r: fs.len(), p: ctx.p() })
}

/// `E(a, m)`: the exponential sum at `y_i = a_i p^(-m_i)`.
pub fn normalized_kloosterman(
    fs: &[PolyExpr],
    arity: usize,
    a: &[i64],
    m: &[u32],
    ctx: &PrimeContext,
) -> Result<Complex64> {
    if a.len() != fs.len() || m.len() != fs.len() {
        return Err(Error::ArityMismatch { expected: fs.len(), got: a.len().min(m.len()) });
    }
    if let Some(bad) = a.iter().find(|x| x.rem_euclid(ctx.p() as i64) == 0) {
        return Err(Error::NotCoprime(*bad));
    }
    let y: Vec<PadicScalar> = a
        .iter()
        .zip(m)
        .map(|(a, m)| PadicScalar::new(Rational::from_integer((*a).into()) * ctx.pow(-(*m as i64))))
        .collect();
    Ok(exp_sum(fs, arity, &y, ctx)?.value)
}

/// `F_m(z) = p^(-m(n - r)) N_m(z)`.
pub fn singular_series(
    fs: &[PolyExpr],
    arity: usize,
    z: &[PadicScalar],
    level: u32,
    ctx: &PrimeContext,
) -> Result<Rational> {
    let count = count_solutions(fs, arity, z, level, ctx)?;
    let excess = arity as i64 - fs.len() as i64;
    Ok(Rational::from_integer(count.into()) * ctx.pow(-(level as i64) * excess))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularSeriesReport {
    pub values: Vec<(u32, Rational)>,
    /// All values agree; otherwise `z` is flagged as irregular.
    pub stable: bool,
}

/// [`singular_series`] at each level of `levels`.
pub fn singular_series_levels(
    fs: &[PolyExpr],
    arity: usize,
    z: &[PadicScalar],
    levels: core::ops::RangeInclusive<u32>,
    ctx: &PrimeContext,
) -> Result<SingularSeriesReport> {
    let values = levels.map(|m| singular_series(fs, arity, z, m, ctx).map(|v| (m, v))).collect::<Result<Vec<_>>>()?;
    let stable = values.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(SingularSeriesReport { values, stable })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
}

/// Compares `E(y)` with `sum_z F_m(z) p^(-r m) psi(<y, z>)` over the values
/// `z` of `f` modulo `p^m`.
pub fn fourier_check(fs: &[PolyExpr], arity: usize, y: &[PadicScalar], ctx: &PrimeContext) -> Result<FourierCheck> {
    let lhs = exp_sum(fs, arity, y, ctx)?.value;
    let level = required_level(y, ctx);
    let counts = fiber_counts(fs, arity, level, ctx)?;
    let r = fs.len() as i64;
    let n = arity as i64;
    let mut re = Vec::with_capacity(counts.len());
    let mut im = Vec::with_capacity(counts.len());
    for (z, count) in &counts {
        let density = Rational::from_integer((*count).into()) * ctx.pow(-(level as i64) * (n - r));
        let weight = (density * ctx.pow(-(level as i64) * r)).to_f64().unwrap_or(0.0);
        let pairing =
            y.iter().zip(z).fold(Rational::zero(), |acc, (c, z)| acc + c.value() * Rational::from_integer((*z).into()));
        let psi = additive_character(&PadicScalar::new(pairing), ctx) * weight;
        re.push(psi.re);
        im.push(psi.im);
    }
    let rhs = Complex64::new(pairwise_sum(&re), pairwise_sum(&im));
    Ok(FourierCheck { lhs, rhs, abs_diff: (lhs - rhs).norm() })
}

#[cfg(test)]
mod tests;
