//! Brute-force ground truth: residue-sum Riemann approximations, Monte-Carlo
//! estimates and point counts modulo `p^m`.
//!
//! Every residue class is represented by its least nonnegative integer lift.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cells::{Domain, ResidueTower};
use crate::dsl::{lift_point, CarrierValuation, PolyExpr, QExpExpr, ResiduePoly};
use crate::padic::{PadicScalar, PrimeContext, Valuation};
use crate::par::map_reduce;
use crate::qexp::RootScaledValue;
use crate::{Error, Rational, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub value: RootScaledValue,
    pub level: u32,
    /// Points where a carrier vanished modulo `p^m`, or whose domain
    /// membership is not decided at this level.
    pub ambiguous_count: u64,
    /// Lifts lying in the domain.
    pub points: u64,
}

fn decode(mut idx: u64, q: u64, arity: usize, out: &mut Vec<u64>) {
    out.clear();
    for _ in 0..arity {
        out.push(idx % q);
        idx /= q;
    }
}

const DECIDED: usize = 0;
const AMBIGUOUS: usize = 1;
const OUTSIDE_AMBIGUOUS: usize = 2;

/// Point counts by carrier valuations, split into lifts inside the domain
/// (decided or ambiguous) and ambiguous lifts outside it.
type Tally = BTreeMap<Vec<Valuation>, [u64; 3]>;

fn bump(tally: &mut Tally, key: &[Valuation], slot: usize) {
    match tally.get_mut(key) {
        Some(c) => c[slot] += 1,
        None => {
            let mut c = [0; 3];
            c[slot] = 1;
            tally.insert(key.to_vec(), c);
        }
    }
}

fn merge(a: Result<Tally>, b: Result<Tally>) -> Result<Tally> {
    let (mut a, b) = (a?, b?);
    for (k, c) in b {
        let slot = a.entry(k).or_insert([0; 3]);
        for i in 0..3 {
            slot[i] += c[i];
        }
    }
    Ok(a)
}

fn tally(
    carriers: &[CarrierValuation],
    arity: usize,
    level: u32,
    domain: Option<&Domain>,
    ctx: &PrimeContext,
) -> Result<Tally> {
    let total = ctx.check_budget(level, arity)? as u64;
    let q = ctx.modulus_u64(level).expect("within budget");
    let fast = match domain {
        Some(Domain::Tower(t)) => ResidueTower::new(t, ctx),
        _ => None,
    };
    let map = |start: u64, end: u64| -> Result<Tally> {
        let mut out = Tally::new();
        let mut point = Vec::with_capacity(arity);
        let mut scratch = Vec::new();
        let mut vals = Vec::with_capacity(carriers.len());
        for idx in start..end {
            decode(idx, q, arity, &mut point);
            let quick = fast.as_ref().and_then(|f| f.test(&point, level, &mut scratch));
            let (inside, ambiguous) = match (domain, quick) {
                (_, Some(t)) => (t.inside, t.ambiguous),
                (None, None) => (true, false),
                (Some(d), None) => match d.test(&lift_point(&point), Some(level), ctx) {
                    Ok(t) => (t.inside, t.ambiguous),
                    Err(Error::BoundVanished { .. }) => (false, true),
                    Err(e) => return Err(e),
                },
            };
            if !inside {
                if ambiguous {
                    bump(&mut out, &[], OUTSIDE_AMBIGUOUS);
                }
                continue;
            }
            vals.clear();
            vals.extend(carriers.iter().map(|c| c.valuation(&point, &mut scratch)));
            bump(&mut out, &vals, if ambiguous { AMBIGUOUS } else { DECIDED });
        }
        Ok(out)
    };
    map_reduce(total, Ok(Tally::new()), map, merge)
}

fn riemann(
    e: &QExpExpr,
    arity: usize,
    level: u32,
    domain: Option<&Domain>,
    ctx: &PrimeContext,
) -> Result<OracleResult> {
    if level == 0 {
        return Err(Error::ZeroLevel);
    }
    if arity < e.arity() {
        return Err(Error::ArityMismatch { expected: e.arity(), got: arity });
    }
    let polys = e.carriers();
    let carriers = polys.iter().map(|f| CarrierValuation::new(f, ctx)).collect::<Result<Vec<_>>>()?;
    let counts = tally(&carriers, arity, level, domain, ctx)?;
    let prime = ctx.p();
    let m = level as i64;
    let mut sum = RootScaledValue::zero(prime);
    let mut ambiguous_count = 0;
    let mut points = 0;
    for (vals, slots) in &counts {
        let vanished = vals.iter().any(|v| v.finite().is_none_or(|v| v >= m));
        ambiguous_count += slots[AMBIGUOUS] + slots[OUTSIDE_AMBIGUOUS];
        if vanished {
            ambiguous_count += slots[DECIDED];
        }
        let count = slots[DECIDED] + slots[AMBIGUOUS];
        if count == 0 {
            continue;
        }
        points += count;
        let lookup = |f: &PolyExpr| vals[polys.binary_search(f).expect("carrier collected")];
        let value = match e.evaluate_with(prime, &lookup) {
            Ok(v) => v,
            Err(Error::ValOfZero | Error::ZeroToNegativePower) if vanished => continue,
            Err(err) => return Err(err),
        };
        sum = &sum + &value.scale(&Rational::from_integer(count.into()));
    }
    let value = sum.scale(&ctx.pow(-(arity as i64) * m));
    Ok(OracleResult { value, level, ambiguous_count, points })
}

/// `p^(-n m)` times the sum of `e` over the lifts of all residue vectors
/// modulo `p^m`. At ambiguous points the lift's own value is used; where that
/// is undefined (`v(0)`, `|0|^(-s)`) the point contributes `0`.
pub fn riemann_integrate(e: &QExpExpr, arity: usize, level: u32, ctx: &PrimeContext) -> Result<OracleResult> {
    riemann(e, arity, level, None, ctx)
}

/// As [`riemann_integrate`], restricted to lifts lying in `domain`.
pub fn riemann_integrate_on(e: &QExpExpr, domain: &Domain, level: u32, ctx: &PrimeContext) -> Result<OracleResult> {
    match domain {
        Domain::Box { arity } => riemann(e, *arity, level, None, ctx),
        Domain::Tower(t) => riemann(e, t.arity(), level, Some(domain), ctx),
    }
}

/// Mean and standard error of `e` at `samples` uniform points of
/// `(Z/p^L)^n`, `L` the context's default level. Deterministic for a seed.
/// Undefined values count as `0`.
pub fn monte_carlo_integrate(
    e: &QExpExpr,
    arity: usize,
    samples: u64,
    seed: u64,
    ctx: &PrimeContext,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    if arity < e.arity() {
        return Err(Error::ArityMismatch { expected: e.arity(), got: arity });
    }
    let q = ctx.modulus_u64(ctx.default_level()).ok_or(Error::InvalidArgument("sampling level too large".into()))?;
    let polys = e.carriers();
    let carriers = polys.iter().map(|f| CarrierValuation::new(f, ctx)).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = alloc::vec![0u64; arity];
    let mut scratch = Vec::new();
    let mut cache: BTreeMap<Vec<Valuation>, f64> = BTreeMap::new();
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        point.iter_mut().for_each(|x| *x = rng.random_range(0..q));
        let vals: Vec<Valuation> = carriers.iter().map(|c| c.valuation(&point, &mut scratch)).collect();
        let x = match cache.get(&vals) {
            Some(x) => *x,
            None => {
                let lookup = |f: &PolyExpr| vals[polys.binary_search(f).expect("carrier collected")];
                let x = match e.evaluate_with(ctx.p(), &lookup) {
                    Ok(v) => v.real_value(),
                    Err(Error::ValOfZero | Error::ZeroToNegativePower) => 0.0,
                    Err(err) => return Err(err),
                };
                cache.insert(vals, x);
                x
            }
        };
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (samples - 1) as f64;
    Ok((mean, libm::sqrt(variance / samples as f64)))
}

fn residue_maps(fs: &[PolyExpr], arity: usize, level: u32, ctx: &PrimeContext) -> Result<Vec<ResiduePoly>> {
    if let Some(f) = fs.iter().find(|f| f.arity() > arity) {
        return Err(Error::ArityMismatch { expected: f.arity(), got: arity });
    }
    fs.iter().map(|f| ResiduePoly::new(f, ctx, level)).collect()
}

/// `N_m(z)` for every value `z` attained by `f` modulo `p^m`.
pub fn fiber_counts(fs: &[PolyExpr], arity: usize, level: u32, ctx: &PrimeContext) -> Result<BTreeMap<Vec<u64>, u64>> {
    let maps = residue_maps(fs, arity, level, ctx)?;
    let total = ctx.check_budget(level, arity)? as u64;
    let q = ctx.modulus_u64(level).expect("within budget");
    let map = |start: u64, end: u64| {
        let mut out: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        let mut point = Vec::with_capacity(arity);
        let mut scratch = Vec::new();
        for idx in start..end {
            decode(idx, q, arity, &mut point);
            let z: Vec<u64> = maps.iter().map(|f| f.eval(&point, &mut scratch)).collect();
            *out.entry(z).or_insert(0) += 1;
        }
        out
    };
    let merge = |mut a: BTreeMap<Vec<u64>, u64>, b: BTreeMap<Vec<u64>, u64>| {
        for (k, c) in b {
            *a.entry(k).or_insert(0) += c;
        }
        a
    };
    Ok(map_reduce(total, BTreeMap::new(), map, merge))
}

/// `#{x in (Z/p^m)^n : f(x) = z mod p^m}`.
pub fn count_solutions(
    fs: &[PolyExpr],
    arity: usize,
    z: &[PadicScalar],
    level: u32,
    ctx: &PrimeContext,
) -> Result<u64> {
    if z.len() != fs.len() {
        return Err(Error::ArityMismatch { expected: fs.len(), got: z.len() });
    }
    let target = z.iter().map(|c| ctx.residue_u64(c.value(), level)).collect::<Result<Vec<_>>>()?;
    let maps = residue_maps(fs, arity, level, ctx)?;
    let total = ctx.check_budget(level, arity)? as u64;
    let q = ctx.modulus_u64(level).expect("within budget");
    let map = |start: u64, end: u64| {
        let mut point = Vec::with_capacity(arity);
        let mut scratch = Vec::new();
        let mut hits = 0u64;
        for idx in start..end {
            decode(idx, q, arity, &mut point);
            if maps.iter().zip(&target).all(|(f, t)| f.eval(&point, &mut scratch) == *t) {
                hits += 1;
            }
        }
        hits
    };
    Ok(map_reduce(total, 0, map, |a, b| a + b))
}

/// Whether `|v(m+1) - v(m)| <= C p^(-m)` for all consecutive levels. `C` is
/// fitted as the largest `|v(m+1) - v(m)| p^m` over the first half of the
/// differences and then doubled.
pub fn stabilization_check(values: &[(u32, f64)], p: u64) -> Result<bool> {
    if values.len() < 3 {
        return Err(Error::TooFewLevels(3));
    }
    let scaled: Vec<f64> =
        values.windows(2).map(|w| libm::fabs(w[1].1 - w[0].1) * libm::pow(p as f64, w[0].0 as f64)).collect();
    let fit = scaled.len().div_ceil(2);
    let c = scaled[..fit].iter().fold(0.0f64, |a, b| a.max(*b));
    let tol = 2.0 * c + 1e-12;
    Ok(scaled.iter().all(|s| *s <= tol))
}

/// Levels `m_start..=m_end` of [`riemann_integrate`] as `(m, value)` pairs.
pub fn riemann_levels(
    e: &QExpExpr,
    arity: usize,
    m_start: u32,
    m_end: u32,
    ctx: &PrimeContext,
) -> Result<Vec<(u32, f64)>> {
    (m_start..=m_end).map(|m| riemann_integrate(e, arity, m, ctx).map(|r| (m, r.value.real_value()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{CellLevel, CellTower, CosetSpec};
    use crate::dsl::{parse_expr, parse_poly};
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn ctx(p: u64) -> PrimeContext {
        PrimeContext::new(p, 6).unwrap()
    }

    fn exact(e: &str, arity: usize, m: u32, p: u64) -> (Rational, u64) {
        let r = riemann_integrate(&parse_expr(e).unwrap(), arity, m, &ctx(p)).unwrap();
        (r.value.as_rational().unwrap(), r.ambiguous_count)
    }

    #[test]
    fn riemann_examples() {
        assert_eq!(exact("1", 1, 3, 5), (rat(1, 1), 0));
        assert_eq!(exact("1", 2, 2, 3), (rat(1, 1), 0));
        // sum_{k<6} (4/5) 5^(-2k), missing only the class of 0
        let (v, amb) = exact("norm(x1)", 1, 6, 5);
        assert_eq!(amb, 1);
        let target = rat(5, 6);
        assert_eq!(&target - &v, rat(5, 6) * rat(1, 5i64.pow(12)));
        let (v, amb) = exact("val(x1)", 1, 8, 5);
        assert_eq!(amb, 1);
        assert!(libm::fabs(to_f64(&v) - 0.25) < 1e-4);
    }

    fn to_f64(r: &Rational) -> f64 {
        RootScaledValue::from_rational(2, r.clone()).real_value()
    }

    #[test]
    fn refinement_consistency() {
        // |x^2 + 5| is 1 on units and 1/5 on 5Z_5: constant on level-1 classes
        assert_eq!(exact("norm(x1^2 + 5)", 1, 1, 5), (rat(21, 25), 1));
        for m in 2..6 {
            assert_eq!(exact("norm(x1^2 + 5)", 1, m, 5), (rat(21, 25), 0));
        }
    }

    #[test]
    fn budget_guard() {
        let c = ctx(5).with_budget(1000);
        let e = parse_expr("norm(x1)").unwrap();
        assert_eq!(riemann_integrate(&e, 2, 3, &c), Err(Error::BudgetExceeded { required: 15625, budget: 1000 }));
        assert_eq!(riemann_integrate(&e, 1, 0, &c), Err(Error::ZeroLevel));
    }

    #[test]
    fn restricted_to_squares() {
        let c = ctx(5);
        let squares = CellTower::new(alloc::vec![CellLevel::ball(
            PolyExpr::zero(),
            PolyExpr::integer(1),
            CosetSpec::new(PadicScalar::one(), 2),
        )])
        .unwrap();
        let e = parse_expr("norm(x1)^{1/2}").unwrap();
        let r = riemann_integrate_on(&e, &Domain::Tower(squares), 8, &c).unwrap();
        assert!(libm::fabs(r.value.real_value() - 25.0 / 62.0) < 1e-6);
        assert_eq!(r.ambiguous_count, 1);
        let all = riemann_integrate_on(&parse_expr("1").unwrap(), &Domain::Box { arity: 1 }, 2, &c).unwrap();
        assert_eq!(all.points, 25);
    }

    #[test]
    fn monte_carlo() {
        let c = ctx(5);
        let one = parse_expr("1").unwrap();
        assert_eq!(monte_carlo_integrate(&one, 1, 100, 7, &c).unwrap(), (1.0, 0.0));
        let e = parse_expr("norm(x1)").unwrap();
        let (est, se) = monte_carlo_integrate(&e, 1, 100_000, 42, &c).unwrap();
        assert!(libm::fabs(est - 5.0 / 6.0) <= 4.0 * se);
        assert_eq!(monte_carlo_integrate(&e, 1, 100_000, 42, &c).unwrap(), (est, se));
        let riemann = riemann_integrate(&e, 1, 6, &c).unwrap().value.real_value();
        assert!(libm::fabs(est - riemann) <= 5.0 * se);
        assert!(monte_carlo_integrate(&e, 1, 1, 0, &c).is_err());
    }

    #[test]
    fn counting_examples() {
        let c = ctx(5);
        let x = [parse_poly("x1").unwrap()];
        let sq = [parse_poly("x1^2").unwrap()];
        assert_eq!(count_solutions(&x, 1, &[PadicScalar::from(3i64)], 2, &c).unwrap(), 1);
        assert_eq!(count_solutions(&sq, 1, &[PadicScalar::from(1i64)], 2, &c).unwrap(), 2);
        assert_eq!(count_solutions(&sq, 1, &[PadicScalar::from(2i64)], 1, &c).unwrap(), 0);
        let half = [parse_poly("1/5*x1").unwrap()];
        assert_eq!(count_solutions(&half, 1, &[PadicScalar::zero()], 1, &c), Err(Error::NonIntegralCoefficients));
        let counts = fiber_counts(&sq, 1, 1, &c).unwrap();
        assert_eq!(counts.values().sum::<u64>(), 5);
        assert_eq!(counts.get(&alloc::vec![4]), Some(&2));
    }

    #[test]
    fn stabilization_examples() {
        assert!(stabilization_check(&[(1, 0.5), (2, 0.5), (3, 0.5)], 5).unwrap());
        let e = parse_expr("norm(x1)").unwrap();
        let levels = riemann_levels(&e, 1, 3, 7, &ctx(5)).unwrap();
        assert!(stabilization_check(&levels, 5).unwrap());
        let growing: Vec<(u32, f64)> = (4..=8).map(|m| (m, 0.8 * m as f64)).collect();
        assert!(!stabilization_check(&growing, 5).unwrap());
        assert_eq!(stabilization_check(&levels[..2], 5), Err(Error::TooFewLevels(3)));
    }

    proptest! {
        #[test]
        fn counts_multiply_on_product_maps(a in -3i64..4, b in -3i64..4, c2 in 0i64..3, z1 in 0u64..49, z2 in 0u64..49) {
            let c = PrimeContext::new(7, 2).unwrap();
            let g = parse_poly(&alloc::format!("x1^2 + {a}*x1")).unwrap();
            let h = parse_poly(&alloc::format!("x2^3 + {b}*x2 + {c2}")).unwrap();
            let h1 = parse_poly(&alloc::format!("x1^3 + {b}*x1 + {c2}")).unwrap();
            let (z1, z2) = (PadicScalar::from(z1), PadicScalar::from(z2));
            let joint = count_solutions(&[g.clone(), h], 2, &[z1.clone(), z2.clone()], 2, &c).unwrap();
            let left = count_solutions(&[g], 1, &[z1], 2, &c).unwrap();
            let right = count_solutions(&[h1], 1, &[z2], 2, &c).unwrap();
            prop_assert_eq!(joint, left * right);
        }
    }
}
