use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::{Error, Rational, Result};

/// Largest `l` accepted by [`power_sum`].
pub const MAX_POWER: u32 = 16;

const ROWS: usize = MAX_POWER as usize + 1;

/// Eulerian numbers `A(l, k)`, `0 <= k < l` (and `A(0, 0) = 1`).
const EULERIAN: [[u64; ROWS]; ROWS] = eulerian_table();

const fn eulerian_table() -> [[u64; ROWS]; ROWS] {
    let mut t = [[0u64; ROWS]; ROWS];
    t[0][0] = 1;
    let mut n = 1;
    while n < ROWS {
        let mut k = 0;
        while k < n {
            let mut v = (k as u64 + 1) * t[n - 1][k];
            if k > 0 {
                v += (n - k) as u64 * t[n - 1][k - 1];
            }
            t[n][k] = v;
            k += 1;
        }
        n += 1;
    }
    t
}

/// Coefficients of the numerator `P_l` in `sum_{j>=0} j^l y^j = P_l(y) / (1-y)^(l+1)`,
/// lowest degree first.
pub fn eulerian_numerator(l: u32) -> Result<alloc::vec::Vec<u64>> {
    if l > MAX_POWER {
        return Err(Error::ExponentTooLarge(l));
    }
    let l = l as usize;
    if l == 0 {
        return Ok(alloc::vec![1]);
    }
    let mut out = alloc::vec![0; l + 1];
    out[1..=l].copy_from_slice(&EULERIAN[l][..l]);
    Ok(out)
}

fn rpow(y: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num_traits::pow(y.clone(), e as usize)
    } else {
        num_traits::pow(y.recip(), e.unsigned_abs() as usize)
    }
}

fn ipow(j: i64, l: u32) -> Rational {
    Rational::from_integer(num_traits::pow(BigInt::from(j), l as usize))
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `sum_{j>=0} j^t y^j` for `|y| < 1`.
fn series_from_zero(y: &Rational, t: u32) -> Rational {
    let numer = eulerian_numerator(t).expect("checked by caller");
    let mut p = Rational::zero();
    let mut yk = Rational::one();
    for c in numer {
        p += &yk * Rational::from_integer(c.into());
        yk *= y;
    }
    let one_minus = Rational::one() - y;
    p / num_traits::pow(one_minus, t as usize + 1)
}

/// `sum_{j>=start} j^l y^j` for `|y| < 1`.
fn tail(y: &Rational, l: u32, start: i64) -> Rational {
    if y.is_zero() {
        return if start <= 0 { ipow(0, l) } else { Rational::zero() };
    }
    let mut acc = Rational::zero();
    let s = BigInt::from(start);
    for t in 0..=l {
        let weight = binomial(l, t) * num_traits::pow(s.clone(), (l - t) as usize);
        if weight.is_zero() {
            continue;
        }
        acc += Rational::from_integer(weight) * series_from_zero(y, t);
    }
    acc * rpow(y, start)
}

fn direct(y: &Rational, l: u32, lo: i64, hi: i64) -> Result<Rational> {
    if y.is_zero() && lo < 0 {
        return Err(Error::InvalidArgument("negative power of zero".into()));
    }
    let mut acc = Rational::zero();
    for j in lo..=hi {
        acc += ipow(j, l) * rpow(y, j);
    }
    Ok(acc)
}

/// Exact `sum j^l y^j` over the integers `j` with `lower <= j <= upper`
/// (`None` meaning unbounded), with `0^0 = 1`.
///
/// Infinite ranges use the Eulerian closed form; a range unbounded below is
/// reflected onto `1/y`. Fails with [`Error::Divergent`] when the series does
/// not converge.
pub fn power_sum(y: &Rational, l: u32, lower: Option<i64>, upper: Option<i64>) -> Result<Rational> {
    if l > MAX_POWER {
        return Err(Error::ExponentTooLarge(l));
    }
    let empty = matches!((lower, upper), (Some(lo), Some(hi)) if lo > hi);
    if y.is_zero() && !empty && lower.is_none_or(|lo| lo < 0) {
        return Err(Error::InvalidArgument("negative power of zero".into()));
    }
    let small = y.abs() < Rational::one();
    let large = !y.is_zero() && y.abs() > Rational::one();
    match (lower, upper) {
        (Some(lo), Some(hi)) if lo > hi => Ok(Rational::zero()),
        (Some(lo), Some(hi)) if hi - lo < 64 || !(small || large) => {
            if hi.saturating_sub(lo) > 10_000_000 {
                return Err(Error::InvalidArgument("finite range too long for |y| = 1".into()));
            }
            direct(y, l, lo, hi)
        }
        (Some(lo), Some(hi)) if small => Ok(tail(y, l, lo) - tail(y, l, hi + 1)),
        (Some(lo), Some(hi)) => reflect(y, l, -hi, Some(-lo)),
        (Some(lo), None) if small => Ok(tail(y, l, lo)),
        (None, Some(hi)) if large => reflect(y, l, -hi, None),
        _ => Err(Error::Divergent),
    }
}

/// `sum_{j in [-upper', -lower']} j^l y^j` rewritten as
/// `(-1)^l sum_{i >= start} i^l (1/y)^i`, optionally capped at `stop`.
fn reflect(y: &Rational, l: u32, start: i64, stop: Option<i64>) -> Result<Rational> {
    let inv = y.recip();
    let sign = if l.is_multiple_of(2) { Rational::one() } else { -Rational::one() };
    let s = match stop {
        Some(stop) => tail(&inv, l, start) - tail(&inv, l, stop + 1),
        None => tail(&inv, l, start),
    };
    Ok(sign * s)
}
