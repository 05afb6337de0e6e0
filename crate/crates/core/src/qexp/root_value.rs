use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt::{self, Write};
use core::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// An exact element of `Q[p^(1/N), p^(-1/N)]`, stored as `sum c_e * p^(-e/N)`.
///
/// Since `p^(-N/N) = 1/p` is rational, exponents are kept in `0 <= e < N` and
/// `N` is reduced as far as the nonzero exponents allow; with these rules the
/// representation is unique (`x^N - 1/p` is irreducible over `Q`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootScaledValue {
    prime: u64,
    root_order: u32,
    coefficients: BTreeMap<u32, Rational>,
}

impl RootScaledValue {
    pub fn zero(prime: u64) -> Self {
        Self { prime, root_order: 1, coefficients: BTreeMap::new() }
    }

    pub fn from_rational(prime: u64, value: Rational) -> Self {
        Self::monomial(prime, value, 0, 1)
    }

    pub fn one(prime: u64) -> Self {
        Self::from_rational(prime, Rational::one())
    }

    /// `coefficient * p^(-exponent/root_order)` for any integer exponent.
    pub fn monomial(prime: u64, coefficient: Rational, exponent: i64, root_order: u32) -> Self {
        assert!(root_order > 0, "root order must be positive");
        let mut out = Self { prime, root_order, coefficients: BTreeMap::new() };
        out.accumulate(exponent, coefficient);
        out.normalize();
        out
    }

    /// `p^(numer/denom)`.
    pub fn p_power(prime: u64, numer: i64, denom: u32) -> Self {
        Self::monomial(prime, Rational::one(), -numer, denom)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    /// Pairs `(e, c_e)` with `0 <= e < N`, in increasing `e`.
    pub fn coefficients(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.coefficients.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// The value as a rational, when it has no irrational part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.coefficients.len() {
            0 => Some(Rational::zero()),
            1 => self.coefficients.get(&0).cloned(),
            _ => None,
        }
    }

    pub fn real_value(&self) -> f64 {
        let p = self.prime as f64;
        let n = self.root_order as f64;
        self.coefficients.iter().map(|(e, c)| rational_to_f64(c) * libm::pow(p, -(*e as f64) / n)).sum()
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero(self.prime);
        }
        let mut out = self.clone();
        for c in out.coefficients.values_mut() {
            *c *= factor;
        }
        out
    }

    fn p_pow(&self, e: i64) -> Rational {
        let base = Rational::from_integer(self.prime.into());
        if e >= 0 {
            num_traits::pow(base, e as usize)
        } else {
            num_traits::pow(base.recip(), e.unsigned_abs() as usize)
        }
    }

    /// Adds `c * s^e` (with `s = p^(-1/N)`) before normalization.
    fn accumulate(&mut self, e: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let n = self.root_order as i64;
        let (q, r) = e.div_mod_floor(&n);
        let c = c * self.p_pow(-q);
        let slot = self.coefficients.entry(r as u32).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coefficients.remove(&(r as u32));
        }
    }

    fn normalize(&mut self) {
        let mut g = self.root_order;
        for e in self.coefficients.keys() {
            g = g.gcd(e);
        }
        if g > 1 {
            self.root_order /= g;
            self.coefficients = core::mem::take(&mut self.coefficients).into_iter().map(|(e, c)| (e / g, c)).collect();
        }
        if self.coefficients.is_empty() {
            self.root_order = 1;
        }
    }

    fn rescaled(&self, order: u32) -> BTreeMap<u32, Rational> {
        let f = order / self.root_order;
        self.coefficients.iter().map(|(e, c)| (e * f, c.clone())).collect()
    }

    fn check_prime(&self, other: &Self) {
        assert_eq!(self.prime, other.prime, "values over different primes");
    }
}

fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back to a scaled division for huge numerators/denominators
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl Add for &RootScaledValue {
    type Output = RootScaledValue;

    fn add(self, rhs: &RootScaledValue) -> RootScaledValue {
        self.check_prime(rhs);
        let order = self.root_order.lcm(&rhs.root_order);
        let mut out = RootScaledValue { prime: self.prime, root_order: order, coefficients: self.rescaled(order) };
        for (e, c) in rhs.rescaled(order) {
            out.accumulate(e as i64, c);
        }
        out.normalize();
        out
    }
}

impl Add for RootScaledValue {
    type Output = RootScaledValue;

    fn add(self, rhs: RootScaledValue) -> RootScaledValue {
        &self + &rhs
    }
}

impl Neg for &RootScaledValue {
    type Output = RootScaledValue;

    fn neg(self) -> RootScaledValue {
        self.scale(&-Rational::one())
    }
}

impl Sub for &RootScaledValue {
    type Output = RootScaledValue;

    fn sub(self, rhs: &RootScaledValue) -> RootScaledValue {
        self + &(-rhs)
    }
}

impl Mul for &RootScaledValue {
    type Output = RootScaledValue;

    fn mul(self, rhs: &RootScaledValue) -> RootScaledValue {
        self.check_prime(rhs);
        let order = self.root_order.lcm(&rhs.root_order);
        let a = self.rescaled(order);
        let b = rhs.rescaled(order);
        let mut out = RootScaledValue::zero(self.prime);
        out.root_order = order;
        for (ea, ca) in &a {
            for (eb, cb) in &b {
                out.accumulate(*ea as i64 + *eb as i64, ca * cb);
            }
        }
        out.normalize();
        out
    }
}

impl Mul for RootScaledValue {
    type Output = RootScaledValue;

    fn mul(self, rhs: RootScaledValue) -> RootScaledValue {
        &self * &rhs
    }
}

impl fmt::Display for RootScaledValue {
    /// Rational part first, then `c*p^(-e/N)` terms with reduced exponents,
    /// e.g. `2/5 + 3*5^(-1/2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficients.is_empty() {
            return f.write_str("0");
        }
        let mut out = String::new();
        for (i, (e, c)) in self.coefficients.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            if *e == 0 {
                write!(out, "{mag}")?;
                continue;
            }
            let g = e.gcd(&self.root_order);
            let (num, den) = (e / g, self.root_order / g);
            if !mag.is_one() {
                write!(out, "{mag}*")?;
            }
            if den == 1 {
                write!(out, "{}^(-{num})", self.prime)?;
            } else {
                write!(out, "{}^(-{num}/{den})", self.prime)?;
            }
        }
        f.write_str(&out)
    }
}
