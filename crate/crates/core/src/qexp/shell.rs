use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::krange::{KRange, Progression};
use super::power_sum::{power_sum, MAX_POWER};
use super::RootScaledValue;
use crate::padic::{PadicScalar, PrimeContext};
use crate::{Error, Rational, Result};

/// One cell-adapted term `coefficient * |(t-c)^a lambda^(-a)|^(1/n) * v(t-c)^l`
/// on the fiber `t - c in lambda P_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermOnCell {
    pub coefficient: RootScaledValue,
    pub a: i64,
    pub n: u32,
    pub l: u32,
    pub lambda: PadicScalar,
}

impl TermOnCell {
    pub fn new(coefficient: RootScaledValue, a: i64, n: u32, l: u32, lambda: PadicScalar) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTerm("n must be positive".into()));
        }
        if lambda.is_zero() && a != 0 {
            return Err(Error::InvalidTerm("a must be 0 on a point fiber".into()));
        }
        if l > MAX_POWER {
            return Err(Error::ExponentTooLarge(l));
        }
        Ok(Self { coefficient, a, n, l, lambda })
    }

    /// The term with unit coefficient.
    pub fn unit(prime: u64, a: i64, n: u32, l: u32, lambda: PadicScalar) -> Result<Self> {
        Self::new(RootScaledValue::one(prime), a, n, l, lambda)
    }
}

/// Shell indices `k = v(t - c)` actually met by the fiber: `krange` cut down
/// to `k = v(lambda) mod n`.
fn admissible(term: &TermOnCell, krange: &KRange, ctx: &PrimeContext) -> Option<KRange> {
    let w = ctx.valuation(&term.lambda).finite()?;
    let out = krange.intersect(&KRange::congruent(w, term.n));
    (!out.is_empty()).then_some(out)
}

/// Whether the shell series converges: unbounded above needs `n + a > 0`,
/// unbounded below needs `n + a < 0`. Point fibers and empty ranges are
/// trivially integrable.
pub fn decide_integrability(term: &TermOnCell, krange: &KRange, ctx: &PrimeContext) -> bool {
    let Some(range) = admissible(term, krange, ctx) else {
        return true;
    };
    let weight = term.n as i64 + term.a;
    (range.bounded_above() || weight > 0) && (range.bounded_below() || weight < 0)
}

/// `sum_j (start + step j)^l y^j` over the progression's `j`-interval.
pub(crate) fn progression_sum(prog: &Progression, l: u32, y: &Rational) -> Result<Rational> {
    let start = BigInt::from(prog.start);
    let step = BigInt::from(prog.step);
    let mut acc = Rational::zero();
    let mut binom = BigInt::one();
    for t in 0..=l {
        if t > 0 {
            binom = binom * BigInt::from(l - t + 1) / BigInt::from(t);
        }
        let weight =
            &binom * num_traits::pow(start.clone(), (l - t) as usize) * num_traits::pow(step.clone(), t as usize);
        if weight.is_zero() {
            continue;
        }
        acc += Rational::from_integer(weight) * power_sum(y, t, prog.j_lower, prog.j_upper)?;
    }
    Ok(acc)
}

/// The integral of `term` over the shells `k in krange` of its fiber:
/// `eps * sum_k p^(-k) p^(-a (k - v(lambda)) / n) k^l` times the coefficient,
/// where `eps` is the unit density of a `P_n` coset.
///
/// Divergent sums give `(0, false)`.
pub fn shell_sum(term: &TermOnCell, krange: &KRange, ctx: &PrimeContext) -> Result<(RootScaledValue, bool)> {
    let prime = ctx.p();
    if term.l > MAX_POWER {
        return Err(Error::ExponentTooLarge(term.l));
    }
    if !decide_integrability(term, krange, ctx) {
        return Ok((RootScaledValue::zero(prime), false));
    }
    let Some(range) = admissible(term, krange, ctx) else {
        return Ok((RootScaledValue::zero(prime), true));
    };
    let prog = range.progression().expect("nonempty");
    let n = term.n as i64;
    let w = ctx.valuation(&term.lambda).finite().expect("admissible");
    // k = start + step j with step a multiple of n, so every exponent is integral
    let head = -prog.start - term.a * (prog.start - w) / n;
    let y = ctx.pow(-(prog.step as i64 / n) * (n + term.a));
    let series = progression_sum(&prog, term.l, &y)?;
    let eps = ctx.unit_coset_density(term.n, ctx.hensel_level(term.n));
    let total = eps * ctx.pow(head) * series;
    Ok((term.coefficient.scale(&total), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn unit(p: u64, a: i64, n: u32, l: u32, lambda: i64) -> TermOnCell {
        TermOnCell::unit(p, a, n, l, PadicScalar::from(lambda)).unwrap()
    }

    fn value(p: u64, term: &TermOnCell, range: &KRange) -> (Option<Rational>, bool) {
        let ctx = PrimeContext::new(p, 6).unwrap();
        let (v, ok) = shell_sum(term, range, &ctx).unwrap();
        (v.as_rational(), ok)
    }

    #[test]
    fn examples() {
        let zp = KRange::all().at_least(0);
        assert_eq!(value(5, &unit(5, 1, 1, 0, 1), &zp), (Some(rat(5, 6)), true));
        assert_eq!(value(5, &unit(5, 0, 1, 0, 1), &zp), (Some(rat(1, 1)), true));
        assert_eq!(value(5, &unit(5, -1, 1, 0, 1), &zp), (Some(rat(0, 1)), false));
        assert_eq!(value(5, &unit(5, 1, 2, 0, 1), &zp), (Some(rat(25, 62)), true));
        assert_eq!(value(5, &unit(5, 0, 1, 1, 1), &zp), (Some(rat(1, 4)), true));
        assert_eq!(value(3, &unit(3, 0, 1, 1, 1), &zp), (Some(rat(1, 2)), true));
        assert_eq!(value(5, &unit(5, 0, 2, 0, 1), &zp), (Some(rat(5, 12)), true));
    }

    #[test]
    fn integrability_directions() {
        let ctx = PrimeContext::new(5, 4).unwrap();
        let up = KRange::all().at_least(0);
        let down = KRange::all().at_most(0);
        assert!(decide_integrability(&unit(5, 1, 1, 0, 1), &up, &ctx));
        assert!(!decide_integrability(&unit(5, -1, 1, 0, 1), &up, &ctx));
        assert!(decide_integrability(&unit(5, -3, 2, 0, 1), &down, &ctx));
        assert!(!decide_integrability(&unit(5, 0, 1, 0, 1), &KRange::all(), &ctx));
        assert!(decide_integrability(&unit(5, 0, 1, 0, 0), &KRange::all(), &ctx));
        let (v, ok) = shell_sum(&unit(5, -3, 2, 0, 1), &down, &ctx).unwrap();
        assert!(ok);
        // (2/5) sum_{j<=0} 5^(-2j) 5^(3j) = (2/5) / (1 - 1/5)
        assert_eq!(v.as_rational(), Some(rat(1, 2)));
    }

    #[test]
    fn irrational_coefficients_are_carried() {
        let ctx = PrimeContext::new(5, 4).unwrap();
        let c = RootScaledValue::p_power(5, -1, 2);
        let term = TermOnCell::new(c.clone(), 1, 1, 0, PadicScalar::one()).unwrap();
        let (v, ok) = shell_sum(&term, &KRange::all().at_least(0), &ctx).unwrap();
        assert!(ok);
        assert_eq!(v, c.scale(&rat(5, 6)));
    }

    #[test]
    fn point_fiber_and_bad_terms() {
        let ctx = PrimeContext::new(5, 4).unwrap();
        let (v, ok) = shell_sum(&unit(5, 0, 1, 0, 0), &KRange::all(), &ctx).unwrap();
        assert!(v.is_zero() && ok);
        assert!(TermOnCell::unit(5, 1, 1, 0, PadicScalar::zero()).is_err());
        assert!(TermOnCell::unit(5, 0, 0, 0, PadicScalar::one()).is_err());
        assert_eq!(TermOnCell::unit(5, 0, 1, 17, PadicScalar::one()), Err(Error::ExponentTooLarge(17)));
    }

    proptest! {
        #[test]
        fn range_splitting(a in -3i64..4, n in 1u32..4, l in 0u32..4, lam in 1i64..60, lo in -6i64..3,
                           cut in -8i64..12, num in -9i64..10, pi in 0usize..3) {
            let p = [2u64, 3, 5][pi];
            let ctx = PrimeContext::new(p, 4).unwrap();
            let coeff = RootScaledValue::monomial(p, rat(num, 7), 1, 3);
            let term = TermOnCell::new(coeff, a, n, l, PadicScalar::from(lam)).unwrap();
            let range = KRange::all().at_least(lo);
            let (whole, ok) = shell_sum(&term, &range, &ctx).unwrap();
            let (left, right) = range.split_at(cut);
            let (x, okx) = shell_sum(&term, &left, &ctx).unwrap();
            let (y, oky) = shell_sum(&term, &right, &ctx).unwrap();
            prop_assert_eq!(ok, okx && oky);
            if ok {
                prop_assert_eq!(whole, &x + &y);
            }
        }

        #[test]
        fn integrability_ignores_coefficient(a in -4i64..4, n in 1u32..4, num in -20i64..20,
                                             lower in proptest::option::of(-5i64..5),
                                             upper in proptest::option::of(-5i64..5)) {
            let ctx = PrimeContext::new(3, 4).unwrap();
            let mut range = KRange::all();
            if let Some(l) = lower { range = range.at_least(l); }
            if let Some(u) = upper { range = range.at_most(u); }
            let base = TermOnCell::unit(3, a, n, 0, PadicScalar::one()).unwrap();
            let scaled = TermOnCell::new(RootScaledValue::from_rational(3, rat(num, 3)), a, n, 0, PadicScalar::one()).unwrap();
            let flag = decide_integrability(&base, &range, &ctx);
            prop_assert_eq!(flag, decide_integrability(&scaled, &range, &ctx));
            prop_assert_eq!(flag, shell_sum(&scaled, &range, &ctx).unwrap().1);
        }

        #[test]
        fn scaling_covariance(a in -1i64..4, n in 1u32..4, lam in 1i64..30, lo in -3i64..3) {
            // lambda -> p^n lambda with the range shifted by n scales the
            // lambda-normalized integral by p^(-n), hence |t|^(a/n) by p^(-(n+a))
            prop_assume!(n as i64 + a > 0);
            let p = 3u64;
            let ctx = PrimeContext::new(p, 4).unwrap();
            let range = KRange::all().at_least(lo);
            let lam = PadicScalar::from(lam);
            let lam2 = PadicScalar::new(lam.value() * ctx.pow(n as i64));
            let t1 = TermOnCell::unit(p, a, n, 0, lam.clone()).unwrap();
            let t2 = TermOnCell::unit(p, a, n, 0, lam2.clone()).unwrap();
            let (v1, ok1) = shell_sum(&t1, &range, &ctx).unwrap();
            let (v2, ok2) = shell_sum(&t2, &range.shifted(n as i64), &ctx).unwrap();
            prop_assert!(ok1 && ok2);
            prop_assert_eq!(&v2, &v1.scale(&ctx.pow(-(n as i64))));
            let raw = |v: &RootScaledValue, l: &PadicScalar| {
                let w = ctx.valuation(l).finite().unwrap();
                v * &RootScaledValue::p_power(p, -w * a, n)
            };
            prop_assert_eq!(raw(&v2, &lam2), raw(&v1, &lam).scale(&ctx.pow(-(n as i64 + a))));
        }
    }
}
