//! Exact arithmetic in `Q_p` over rational carriers.
//!
//! A [`PadicScalar`] is an exact rational read as an element of `Q_p`.
//! Valuations and residues of rationals are exact, which is all the cell
//! machinery needs. `n`-th power tests reduce to a residue test modulo
//! `p^M`, where `M` is the Hensel level returned by
//! [`PrimeContext::hensel_level`].

pub(crate) mod arith;

use alloc::vec::Vec;
use core::fmt;
use core::ops::Add;
use core::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::{Error, Rational, Result};

/// Default cap on the number of residue points any enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// The prime `p` (and `q = p`, `pi_0 = p`) together with a working level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeContext {
    p: u64,
    default_level: u32,
    budget: u64,
}

impl PrimeContext {
    pub fn new(p: u64, default_level: u32) -> Result<Self> {
        if !arith::is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        if default_level == 0 {
            return Err(Error::ZeroLevel);
        }
        Ok(Self { p, default_level, budget: DEFAULT_BUDGET })
    }

    /// Replaces the enumeration budget. A zero budget is clamped to one.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Cardinality of the residue field; always `p` here.
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn default_level(&self) -> u32 {
        self.default_level
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub(crate) fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    /// `p^e` as an exact rational, for any integer `e`.
    pub fn pow(&self, e: i64) -> Rational {
        let base = BigInt::from(self.p).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            Rational::from_integer(base)
        } else {
            Rational::new(BigInt::one(), base)
        }
    }

    pub(crate) fn modulus(&self, level: u32) -> BigInt {
        BigInt::from(self.p).pow(level)
    }

    /// `p^level` as a machine word, if it fits.
    pub(crate) fn modulus_u64(&self, level: u32) -> Option<u64> {
        arith::checked_pow(self.p, level)
    }

    /// Fails with [`Error::BudgetExceeded`] unless `p^(level*dim)` points fit
    /// within the budget.
    pub(crate) fn check_budget(&self, level: u32, dim: usize) -> Result<u128> {
        let mut total: u128 = 1;
        for _ in 0..(level as usize).saturating_mul(dim) {
            total = total.saturating_mul(self.p as u128);
        }
        if total > self.budget as u128 {
            return Err(Error::BudgetExceeded { required: total, budget: self.budget });
        }
        Ok(total)
    }

    pub fn valuation(&self, x: &PadicScalar) -> Valuation {
        if x.0.is_zero() {
            return Valuation::Infinite;
        }
        Valuation::Finite(arith::v_p_big(x.0.numer(), self.p) - arith::v_p_big(x.0.denom(), self.p))
    }

    /// `|x| = p^(-v(x))`, and `0` for `x = 0`.
    pub fn norm(&self, x: &PadicScalar) -> Rational {
        match self.valuation(x) {
            Valuation::Infinite => Rational::zero(),
            Valuation::Finite(v) => self.pow(-v),
        }
    }

    /// `x * p^(-v(x))`, a p-adic unit. `None` for zero.
    pub fn unit_part(&self, x: &PadicScalar) -> Option<Rational> {
        let v = self.valuation(x).finite()?;
        Some(&x.0 * self.pow(-v))
    }

    /// The representative of `x` modulo `p^m` in `[0, p^m)`.
    pub fn residue(&self, x: &PadicScalar, m: u32) -> Result<BigUint> {
        if m == 0 {
            return Err(Error::ZeroLevel);
        }
        self.residue_rational(&x.0, m)
    }

    pub(crate) fn residue_rational(&self, x: &Rational, m: u32) -> Result<BigUint> {
        if x.denom().is_multiple_of(&self.p_big()) {
            return Err(Error::NotPIntegral);
        }
        let modulus = self.modulus(m);
        let inv = arith::mod_inverse_big(x.denom(), &modulus).ok_or(Error::NotPIntegral)?;
        let r = (x.numer() * inv).mod_floor(&modulus);
        Ok(arith::to_biguint_nonneg(&r))
    }

    pub(crate) fn residue_u64(&self, x: &Rational, m: u32) -> Result<u64> {
        if m == 0 {
            return Ok(0);
        }
        let r = self.residue_rational(x, m)?;
        r.to_u64().ok_or(Error::InvalidArgument("modulus exceeds 64 bits".into()))
    }

    /// Residue precision `M` at which a unit's class modulo `p^M` decides
    /// membership in `P_n`: `2 v_p(n) + 1` for odd `p`, `2 v_2(n) + 3` for `p = 2`.
    pub fn hensel_level(&self, n: u32) -> u32 {
        let v = arith::v_p_u64(n.max(1) as u64, self.p);
        if self.p == 2 {
            2 * v + 3
        } else {
            2 * v + 1
        }
    }

    /// Number of `n`-th powers in `(Z/p^level)^x`.
    pub fn nth_power_subgroup_size(&self, n: u32, level: u32) -> BigUint {
        let p = BigUint::from(self.p);
        if level == 0 {
            return BigUint::one();
        }
        if self.p == 2 {
            // (Z/2^L)^x = {+-1} x <5>; 2^s-th powers are the classes 1 mod 2^(s+2)
            let s = arith::v_p_u64(n as u64, 2);
            if s == 0 {
                return p.pow(level - 1);
            }
            return p.pow(level.saturating_sub(s + 2));
        }
        let phi = p.pow(level - 1) * BigUint::from(self.p - 1);
        let g = phi.gcd(&BigUint::from(n));
        phi / g
    }

    /// Whether the unit residue `u` is an `n`-th power modulo `p^level`.
    fn unit_residue_is_nth_power(&self, u: &BigUint, n: u32, level: u32) -> bool {
        let modulus = BigUint::from(self.p).pow(level);
        if self.p == 2 {
            let s = arith::v_p_u64(n as u64, 2);
            if s == 0 {
                return true;
            }
            let k = (s + 2).min(level);
            let m = BigUint::from(2u32).pow(k);
            return (u % &m).is_one();
        }
        let phi = BigUint::from(self.p).pow(level - 1) * BigUint::from(self.p - 1);
        let g = phi.gcd(&BigUint::from(n));
        u.modpow(&(phi / g), &modulus).is_one()
    }

    /// Membership of `x` in `P_n`, the `n`-th powers of `Q_p^x`.
    pub fn is_nth_power(&self, x: &PadicScalar, n: u32) -> Result<bool> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let v = self.valuation(x).finite().ok_or(Error::ZeroInput)?;
        if v.rem_euclid(n as i64) != 0 {
            return Ok(false);
        }
        if n == 1 {
            return Ok(true);
        }
        let unit = self.unit_part(x).expect("nonzero");
        let level = self.hensel_level(n);
        let u = self.residue_rational(&unit, level)?;
        Ok(self.unit_residue_is_nth_power(&u, n, level))
    }

    /// `x in lambda * P_n`, with `0 * P_n = {0}`.
    pub fn coset_membership(&self, x: &PadicScalar, lambda: &PadicScalar, n: u32) -> bool {
        if lambda.is_zero() {
            return x.is_zero();
        }
        if x.is_zero() {
            return false;
        }
        let ratio = PadicScalar(&x.0 / &lambda.0);
        self.is_nth_power(&ratio, n.max(1)).unwrap_or(false)
    }

    /// Haar measure of one coset `mu * P_n` inside the unit shell `Z_p^x`,
    /// obtained by counting `n`-th power residues modulo `p^level`.
    pub fn unit_coset_density(&self, n: u32, level: u32) -> Rational {
        let count = BigInt::from(self.nth_power_subgroup_size(n, level));
        Rational::new(count, self.modulus(level))
    }

    /// Measure of `{u in Q_p : v(u) = k, u in lambda P_n}`.
    pub fn shell_coset_measure(&self, lambda: &PadicScalar, n: u32, k: i64) -> Result<Rational> {
        self.shell_coset_measure_at_level(lambda, n, k, self.hensel_level(n))
    }

    /// As [`shell_coset_measure`](Self::shell_coset_measure), counting unit
    /// residues at an explicit level instead of the Hensel level.
    pub fn shell_coset_measure_at_level(&self, lambda: &PadicScalar, n: u32, k: i64, level: u32) -> Result<Rational> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let w = self.valuation(lambda).finite().ok_or(Error::ZeroCoset)?;
        if (k - w).rem_euclid(n as i64) != 0 {
            return Ok(Rational::zero());
        }
        Ok(self.unit_coset_density(n, level) * self.pow(-k))
    }

    /// Representatives `p^j * w` (`0 <= j < n`, `w` a least positive unit)
    /// of the cosets of `P_n` in `Q_p^x`, ordered by `(j, w)`.
    pub fn nth_power_coset_representatives(&self, n: u32) -> Vec<PadicScalar> {
        let n = n.max(1);
        let level = self.hensel_level(n);
        let modulus = BigUint::from(self.p).pow(level);
        let phi = BigUint::from(self.p).pow(level - 1) * BigUint::from(self.p - 1);
        let classes = phi / self.nth_power_subgroup_size(n, level);
        let mut units: Vec<BigUint> = Vec::new();
        let mut w = BigUint::one();
        while BigUint::from(units.len()) < classes && w < modulus {
            if !(&w % self.p).is_zero() {
                let fresh = units.iter().all(|rep| {
                    let inv = arith::mod_inverse_big(&BigInt::from(rep.clone()), &BigInt::from(modulus.clone()))
                        .expect("unit");
                    let ratio = (BigInt::from(w.clone()) * inv).mod_floor(&BigInt::from(modulus.clone()));
                    !self.unit_residue_is_nth_power(&arith::to_biguint_nonneg(&ratio), n, level)
                });
                if fresh {
                    units.push(w.clone());
                }
            }
            w += 1u32;
        }
        let mut reps = Vec::with_capacity(units.len() * n as usize);
        for j in 0..n {
            let scale = BigInt::from(self.p).pow(j);
            for u in &units {
                reps.push(PadicScalar::from(BigInt::from(u.clone()) * &scale));
            }
        }
        reps
    }
}

/// An exact rational read as an element of `Q_p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PadicScalar(pub(crate) Rational);

impl PadicScalar {
    pub fn new(value: Rational) -> Self {
        Self(value)
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self(Rational::new(numer.into(), denom.into())))
    }

    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn one() -> Self {
        Self(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }
}

impl From<i64> for PadicScalar {
    fn from(v: i64) -> Self {
        Self(Rational::from_integer(v.into()))
    }
}

impl From<u64> for PadicScalar {
    fn from(v: u64) -> Self {
        Self(Rational::from_integer(v.into()))
    }
}

impl From<BigInt> for PadicScalar {
    fn from(v: BigInt) -> Self {
        Self(Rational::from_integer(v))
    }
}

impl From<Rational> for PadicScalar {
    fn from(v: Rational) -> Self {
        Self(v)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for PadicScalar {
    type Err = Error;

    /// Parses `a` or `a/b` with optional sign.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(alloc::format!("not a rational: `{s}`"));
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if den.is_negative() {
            return Ok(Self(Rational::new(-num, -den)));
        }
        Ok(Self(Rational::new(num, den)))
    }
}

/// `v(x)`: an integer, or `+infinity` for `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl Add for Valuation {
    type Output = Valuation;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}
