use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::padic::{arith, PadicScalar, PrimeContext, Valuation};
use crate::{Error, Rational, Result};

/// Exponent vector over `x1, x2, ...`, with trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(mut exponents: Vec<u32>) -> Self {
        while exponents.last() == Some(&0) {
            exponents.pop();
        }
        Self(exponents)
    }

    pub fn one() -> Self {
        Self(Vec::new())
    }

    /// `x_index` (1-based).
    pub fn var(index: usize) -> Self {
        assert!(index >= 1, "variables are 1-based");
        let mut e = vec![0; index];
        e[index - 1] = 1;
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        let e = (0..len).map(|i| self.0.get(i).copied().unwrap_or(0) + other.0.get(i).copied().unwrap_or(0)).collect();
        Self::new(e)
    }
}

/// A polynomial over `Q` in `x1, ..., xN`, kept in canonical form: no zero
/// coefficients, exponent vectors trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PolyExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl PolyExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn integer(c: i64) -> Self {
        Self::constant(Rational::from_integer(c.into()))
    }

    /// The variable `x_index` (1-based).
    pub fn var(index: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(index), Rational::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of variables in scope: the largest index that occurs.
    pub fn arity(&self) -> usize {
        self.terms.keys().map(|m| m.0.len()).max().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn constant_value(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k * c)))
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Self::integer(1);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Partial derivative with respect to `x_index` (1-based).
    pub fn derivative(&self, index: usize) -> Self {
        let i = index - 1;
        Self::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let e = *m.0.get(i)?;
            if e == 0 {
                return None;
            }
            let mut exps = m.0.clone();
            exps[i] -= 1;
            Some((Monomial::new(exps), c * Rational::from_integer(e.into())))
        }))
    }

    pub fn evaluate_rational(&self, point: &[Rational]) -> Result<Rational> {
        let arity = self.arity();
        if point.len() < arity {
            return Err(Error::ArityMismatch { expected: arity, got: point.len() });
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    t *= num_traits::pow(point[i].clone(), *e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, point: &[PadicScalar]) -> Result<PadicScalar> {
        let arity = self.arity();
        if point.len() < arity {
            return Err(Error::ArityMismatch { expected: arity, got: point.len() });
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    t *= num_traits::pow(point[i].value().clone(), *e as usize);
                }
            }
            acc += t;
        }
        Ok(PadicScalar::new(acc))
    }

    /// Whether every coefficient lies in `Z_(p)`.
    pub fn is_p_integral(&self, ctx: &PrimeContext) -> bool {
        self.terms.values().all(|c| !c.denom().is_multiple_of(&BigInt::from(ctx.p())))
    }

    fn format_term(f: &mut fmt::Formatter<'_>, m: &Monomial, mag: &Rational) -> fmt::Result {
        let mut wrote = false;
        if m.0.is_empty() || !mag.is_one() {
            write!(f, "{mag}")?;
            wrote = true;
        }
        for (i, e) in m.0.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if wrote {
                f.write_str("*")?;
            }
            write!(f, "x{}", i + 1)?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
            wrote = true;
        }
        Ok(())
    }
}

impl fmt::Display for PolyExpr {
    /// Terms in descending monomial order, e.g. `x1^2*x2 - 3/2*x1 + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            Self::format_term(f, m, &c.abs())?;
        }
        Ok(())
    }
}

impl Add for &PolyExpr {
    type Output = PolyExpr;

    fn add(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &PolyExpr {
    type Output = PolyExpr;

    fn sub(self, rhs: &PolyExpr) -> PolyExpr {
        self + &(-rhs)
    }
}

impl Neg for &PolyExpr {
    type Output = PolyExpr;

    fn neg(self) -> PolyExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul for &PolyExpr {
    type Output = PolyExpr;

    fn mul(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

/// A p-integral polynomial reduced modulo `p^k`, evaluated at integer points
/// in machine arithmetic.
#[derive(Debug, Clone)]
pub(crate) struct ResiduePoly {
    modulus: u64,
    terms: Vec<(u64, Vec<u32>)>,
    max_exp: Vec<u32>,
}

impl ResiduePoly {
    pub(crate) fn new(poly: &PolyExpr, ctx: &PrimeContext, level: u32) -> Result<Self> {
        let modulus = ctx
            .modulus_u64(level)
            .filter(|m| *m < (1u64 << 63))
            .ok_or(Error::InvalidArgument("residue modulus exceeds 63 bits".into()))?;
        let mut terms = Vec::new();
        let mut max_exp: Vec<u32> = Vec::new();
        for (m, c) in &poly.terms {
            let r = ctx.residue_u64(c, level).map_err(|_| Error::NonIntegralCoefficients)?;
            if r == 0 && level > 0 {
                continue;
            }
            if max_exp.len() < m.0.len() {
                max_exp.resize(m.0.len(), 0);
            }
            for (i, e) in m.0.iter().enumerate() {
                max_exp[i] = max_exp[i].max(*e);
            }
            terms.push((r, m.0.clone()));
        }
        Ok(Self { modulus, terms, max_exp })
    }

    /// Value at `point` modulo `p^k`; `scratch` caches coordinate powers.
    pub(crate) fn eval(&self, point: &[u64], scratch: &mut Vec<Vec<u64>>) -> u64 {
        let m = self.modulus;
        if m == 1 {
            return 0;
        }
        scratch.resize(self.max_exp.len(), Vec::new());
        for (i, &top) in self.max_exp.iter().enumerate() {
            let row = &mut scratch[i];
            row.clear();
            let x = point[i] % m;
            let mut acc = 1 % m;
            row.push(acc);
            for _ in 0..top {
                acc = arith::mul_mod(acc, x, m);
                row.push(acc);
            }
        }
        let mut total = 0u64;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for (i, e) in exps.iter().enumerate() {
                if *e > 0 {
                    t = arith::mul_mod(t, scratch[i][*e as usize], m);
                }
            }
            total = (total + t) % m;
        }
        total
    }
}

/// Valuation of a rational polynomial at nonnegative integer points.
///
/// Uses machine residues modulo a large power of `p` and falls back to exact
/// arithmetic only when that residue is zero.
#[derive(Debug, Clone)]
pub(crate) struct CarrierValuation {
    exact: PolyExpr,
    cleared: ResiduePoly,
    denominator_valuation: i64,
    prime: u64,
}

impl CarrierValuation {
    pub(crate) fn new(poly: &PolyExpr, ctx: &PrimeContext) -> Result<Self> {
        let lcm = poly.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let cleared = poly.scale(&Rational::from_integer(lcm.clone()));
        let bits = 62.0 / libm::log2(ctx.p() as f64);
        let level = (bits as u32).max(1);
        Ok(Self {
            exact: poly.clone(),
            cleared: ResiduePoly::new(&cleared, ctx, level)?,
            denominator_valuation: arith::v_p_big(&lcm, ctx.p()),
            prime: ctx.p(),
        })
    }

    pub(crate) fn valuation(&self, point: &[u64], scratch: &mut Vec<Vec<u64>>) -> Valuation {
        if self.exact.is_zero() {
            return Valuation::Infinite;
        }
        let r = self.cleared.eval(point, scratch);
        if r != 0 {
            return Valuation::Finite(arith::v_p_u64(r, self.prime) as i64 - self.denominator_valuation);
        }
        let pt: Vec<Rational> = point.iter().map(|x| Rational::from_integer((*x).into())).collect();
        let value = self.exact.evaluate_rational(&pt).expect("arity checked by caller");
        if value.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(arith::v_p_big(value.numer(), self.prime) - arith::v_p_big(value.denom(), self.prime))
        }
    }
}

/// Converts small nonnegative integers to rationals.
pub(crate) fn lift_point(point: &[u64]) -> Vec<PadicScalar> {
    point.iter().map(|x| PadicScalar::from(*x)).collect()
}
