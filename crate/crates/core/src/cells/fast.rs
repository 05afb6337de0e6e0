//! Membership of nonnegative integer points in machine arithmetic.
//!
//! Mirrors [`CellTower::test`](super::CellTower) for towers whose centers are
//! `p`-integral. Returns `None` whenever a residue lacks the precision to
//! decide, in which case callers use the exact test.

use alloc::vec::Vec;

use num_traits::One;

use super::{CellTower, Test};
use crate::dsl::{CarrierValuation, PolyExpr, ResiduePoly};
use crate::padic::{arith, PadicScalar, PrimeContext, Valuation};
use crate::Rational;

struct Bound {
    carrier: CarrierValuation,
    lower: bool,
    strict: bool,
    constant: bool,
}

struct Level {
    /// `x_(i+1) - c(x_1..x_i)` modulo `p^digits`.
    shift: ResiduePoly,
    point: bool,
    n: u32,
    w: i64,
    hensel: u32,
    /// `unit(lambda)^(-1)` modulo `p^hensel`.
    lambda_inv: u64,
    bounds: Vec<Bound>,
}

pub(crate) struct ResidueTower {
    levels: Vec<Level>,
    digits: u32,
    p: u64,
}

impl ResidueTower {
    pub(crate) fn new(tower: &CellTower, ctx: &PrimeContext) -> Option<Self> {
        let p = ctx.p();
        let digits = ((62.0 / libm::log2(p as f64)) as u32).max(1);
        let mut levels = Vec::with_capacity(tower.levels().len());
        for (i, lvl) in tower.levels().iter().enumerate() {
            let shift = ResiduePoly::new(&(&PolyExpr::var(i + 1) - &lvl.center), ctx, digits).ok()?;
            let n = lvl.coset.n;
            let hensel = ctx.hensel_level(n);
            let (w, lambda_inv) = match ctx.unit_part(&lvl.coset.lambda) {
                Some(unit) => {
                    let w = ctx.valuation(&lvl.coset.lambda).finite()?;
                    let inv = PadicScalar::new(Rational::one() / unit);
                    (w, ctx.residue_u64(inv.value(), hensel).ok()?)
                }
                None => (0, 0),
            };
            let mut bounds = Vec::new();
            for (b, lower) in [(&lvl.lower, true), (&lvl.upper, false)] {
                if let Some(b) = b {
                    bounds.push(Bound {
                        carrier: CarrierValuation::new(&b.expr, ctx).ok()?,
                        lower,
                        strict: b.strict,
                        constant: b.expr.is_constant(),
                    });
                }
            }
            if hensel >= digits {
                return None;
            }
            levels.push(Level { shift, point: lvl.is_point(), n, w, hensel, lambda_inv, bounds });
        }
        Some(Self { levels, digits, p })
    }

    fn is_nth_power(&self, u: u64, n: u32, level: u32) -> bool {
        let p = self.p;
        if p == 2 {
            let s = arith::v_p_u64(n as u64, 2);
            if s == 0 {
                return true;
            }
            let m = 1u64 << (s + 2).min(level);
            return u % m == 1;
        }
        let modulus = p.pow(level);
        let phi = p.pow(level - 1) * (p - 1);
        let g = num_integer::gcd(phi, n as u64);
        arith::pow_mod(u, phi / g, modulus) == 1
    }

    /// Membership of the integer point with ambiguity at residue level `m`.
    pub(crate) fn test(&self, point: &[u64], m: u32, scratch: &mut Vec<Vec<u64>>) -> Option<Test> {
        let coarse = |v: i64, need: u32| v + need as i64 > m as i64;
        let mut ambiguous = false;
        for lvl in &self.levels {
            let r = lvl.shift.eval(point, scratch);
            if r == 0 {
                return None;
            }
            let k = arith::v_p_u64(r, self.p) as i64;
            ambiguous |= coarse(k, 1);
            let inside = if lvl.point {
                false
            } else {
                if lvl.n > 1 {
                    ambiguous |= coarse(k, lvl.hensel);
                }
                let mut ok = (k - lvl.w).rem_euclid(lvl.n as i64) == 0;
                if ok && lvl.n > 1 {
                    if k as u32 + lvl.hensel > self.digits {
                        return None;
                    }
                    let modulus = self.p.pow(lvl.hensel);
                    let unit = (r / self.p.pow(k as u32)) % modulus;
                    ok = self.is_nth_power(arith::mul_mod(unit, lvl.lambda_inv, modulus), lvl.n, lvl.hensel);
                }
                for b in &lvl.bounds {
                    let vb = match b.carrier.valuation(point, scratch) {
                        Valuation::Finite(v) => v,
                        Valuation::Infinite => return None,
                    };
                    if !b.constant {
                        ambiguous |= coarse(vb, 1);
                    }
                    ok &= match (b.lower, b.strict) {
                        (true, true) => k < vb,
                        (true, false) => k <= vb,
                        (false, true) => k > vb,
                        (false, false) => k >= vb,
                    };
                }
                ok
            };
            if !inside {
                return Some(Test { inside: false, ambiguous });
            }
        }
        Some(Test { inside: true, ambiguous })
    }
}
