use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::dsl::{parse_poly, SchwartzPiece};

fn ctx(p: u64) -> PrimeContext {
    PrimeContext::new(p, 6).unwrap()
}

fn polys(src: &[&str]) -> Vec<PolyExpr> {
    src.iter().map(|s| parse_poly(s).unwrap()).collect()
}

fn scalar(n: i64, d: i64) -> PadicScalar {
    PadicScalar::from_ratio(n, d).unwrap()
}

/// Direct evaluation with exact rational phases at every lift.
fn brute_force(fs: &[PolyExpr], arity: usize, y: &[PadicScalar], m: u32, c: &PrimeContext) -> Complex64 {
    let q = c.modulus_u64(m).unwrap();
    let total = q.pow(arity as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for idx in 0..total {
        let mut rest = idx;
        let point: Vec<PadicScalar> = (0..arity)
            .map(|_| {
                let d = rest % q;
                rest /= q;
                PadicScalar::from(d)
            })
            .collect();
        let mut pairing = Rational::zero();
        for (f, yi) in fs.iter().zip(y) {
            pairing += f.evaluate(&point).unwrap().value() * yi.value();
        }
        acc += additive_character(&PadicScalar::new(pairing), c);
    }
    acc / total as f64
}

#[test]
fn character_examples() {
    let c = ctx(5);
    assert_eq!(additive_character(&PadicScalar::zero(), &c), Complex64::new(1.0, 0.0));
    assert_eq!(additive_character(&PadicScalar::from(17i64), &c), Complex64::new(1.0, 0.0));
    let z = additive_character(&scalar(1, 5), &c);
    let tau = core::f64::consts::TAU / 5.0;
    assert!((z - Complex64::new(libm::cos(tau), libm::sin(tau))).norm() < 1e-15);
    // 1/15 = 2/5 - 1/3 with -1/3 in Z_(5)
    assert_eq!(fractional_part(&Rational::new(1.into(), 15.into()), &c), Rational::new(2.into(), 5.into()));
    assert_eq!(fractional_part(&Rational::new((-1).into(), 25.into()), &c), Rational::new(24.into(), 25.into()));
}

#[test]
fn exp_sum_examples() {
    let c = ctx(5);
    let e = exp_sum(&polys(&["x1"]), 1, &[scalar(1, 25)], &c).unwrap();
    assert_eq!(e.level, 2);
    assert!(e.value.norm() < 1e-12);
    let e = exp_sum(&polys(&["x1"]), 1, &[PadicScalar::one()], &c).unwrap();
    assert_eq!((e.level, e.value), (0, Complex64::new(1.0, 0.0)));
    let e = exp_sum(&polys(&["x1^2"]), 1, &[scalar(1, 5)], &c).unwrap();
    assert!((e.value.norm() - libm::pow(5.0, -0.5)).abs() < 1e-9);
    assert_eq!((e.n, e.r, e.p), (1, 1, 5));
    assert_eq!(exp_sum(&polys(&["1/5*x1"]), 1, &[scalar(1, 5)], &c), Err(Error::NonIntegralCoefficients));
    assert!(matches!(
        exp_sum(&polys(&["x1"]), 1, &[scalar(1, 5)], &c.clone().with_budget(2)),
        Err(Error::BudgetExceeded { .. })
    ));
}

#[test]
fn matches_brute_force() {
    let c = ctx(5);
    let cases: [(&[&str], usize, Vec<PadicScalar>); 4] = [
        (&["x1^3 + x1"], 1, vec![scalar(1, 25)]),
        (&["x1^2 + x2^2"], 2, vec![scalar(2, 5)]),
        (&["x1", "x1^2"], 1, vec![scalar(1, 5), scalar(1, 5)]),
        (&["x1*x2 + 3*x2^3"], 2, vec![scalar(7, 25)]),
    ];
    for (src, arity, y) in cases {
        let fs = polys(src);
        let fast = exp_sum(&fs, arity, &y, &c).unwrap();
        let slow = brute_force(&fs, arity, &y, fast.level, &c);
        assert!((fast.value - slow).norm() < 1e-12, "{src:?}");
    }
}

#[test]
fn kloosterman_examples() {
    let c = ctx(5);
    assert!(normalized_kloosterman(&polys(&["x1"]), 1, &[1], &[1], &c).unwrap().norm() < 1e-12);
    let g = normalized_kloosterman(&polys(&["x1^2"]), 1, &[1], &[1], &c).unwrap();
    assert!((g.norm() - libm::pow(5.0, -0.5)).abs() < 1e-12);
    let both = normalized_kloosterman(&polys(&["x1", "x1^2"]), 1, &[1, 1], &[1, 1], &c).unwrap();
    let direct: Complex64 = (0..5)
        .map(|x| {
            let t = core::f64::consts::TAU * ((x + x * x) as f64) / 5.0;
            Complex64::new(libm::cos(t), libm::sin(t))
        })
        .sum::<Complex64>()
        / 5.0;
    assert!((both - direct).norm() < 1e-12);
    assert!((both.norm() - libm::pow(5.0, -0.5)).abs() < 1e-12);
    assert_eq!(normalized_kloosterman(&polys(&["x1"]), 1, &[10], &[1], &c), Err(Error::NotCoprime(10)));
}

#[test]
fn singular_series_examples() {
    let c = ctx(5);
    let rat = |n: i64| Rational::from_integer(n.into());
    for m in 1..=4 {
        assert_eq!(singular_series(&polys(&["x1"]), 1, &[scalar(3, 7)], m, &c).unwrap(), rat(1));
        assert_eq!(singular_series(&polys(&["x1^2"]), 1, &[PadicScalar::one()], m, &c).unwrap(), rat(2));
        assert_eq!(singular_series(&polys(&["x1^2"]), 1, &[PadicScalar::from(2i64)], m, &c).unwrap(), rat(0));
    }
    let report = singular_series_levels(&polys(&["x1^2"]), 1, &[PadicScalar::one()], 1..=4, &c).unwrap();
    assert!(report.stable);
    // 0 is a critical value of x^2: counts p^floor(m/2) solutions
    let report = singular_series_levels(&polys(&["x1^2"]), 1, &[PadicScalar::zero()], 1..=4, &c).unwrap();
    assert!(!report.stable);
    // x1^2 + x2^2 = 1 over Z_5: 1 - 1/5
    let circle = singular_series(&polys(&["x1^2 + x2^2"]), 2, &[PadicScalar::one()], 3, &c).unwrap();
    assert_eq!(circle, Rational::new(4.into(), 5.into()));
}

#[test]
fn fourier_examples() {
    let cases: [(&[&str], usize, PadicScalar, u64); 4] = [
        (&["x1^2"], 1, scalar(1, 5), 5),
        (&["x1^3 + x1"], 1, scalar(1, 25), 5),
        (&["x1^2 + x2^2"], 2, scalar(1, 5), 5),
        (&["x1^2"], 1, scalar(1, 3), 3),
    ];
    for (src, arity, y, p) in cases {
        let check = fourier_check(&polys(src), arity, &[y], &ctx(p)).unwrap();
        assert!(check.abs_diff < 1e-12, "{src:?}: {}", check.abs_diff);
    }
}

#[test]
fn weighted_sums() {
    let c = ctx(5);
    let fs = polys(&["x1^2"]);
    let y = [scalar(1, 5)];
    let plain = exp_sum(&fs, 1, &y, &c).unwrap().value;
    let boxed = weighted_exp_sum(&fs, &y, &SchwartzBruhatSpec::unit_box(1), &c).unwrap().value;
    assert!((plain - boxed).norm() < 1e-15);
    // indicator of 5Z_5: psi is trivial there, so the integral is its measure
    let ball = SchwartzBruhatSpec::new(
        1,
        vec![SchwartzPiece { residues: vec![0], level: 1, weight: Rational::from_integer(1.into()) }],
        &c,
    )
    .unwrap();
    let v = weighted_exp_sum(&fs, &y, &ball, &c).unwrap().value;
    assert!((v - Complex64::new(0.2, 0.0)).norm() < 1e-15);
}

#[test]
fn decay_examples() {
    let c5 = ctx(5);
    let unit = [PadicScalar::one()];
    assert_eq!(decay_fit(&polys(&["x1"]), 1, &unit, 1..=6, &c5), Err(Error::AllVanished));
    let fit = decay_fit(&polys(&["x1^2"]), 1, &unit, 1..=8, &c5).unwrap();
    assert!((-0.55..=-0.45).contains(&fit.alpha_hat), "{}", fit.alpha_hat);
    assert!(bound_check(&fit));
    assert!(fit.c_hat <= 1.0 + 1e-6);
    let forced = DecayFit::with_parameters(5, fit.samples.clone(), -0.5);
    assert!((forced.c_hat - 1.0).abs() < 1e-9 && bound_check(&forced));
    assert!(!bound_check(&fit.clone().with_constant(fit.c_hat * 0.9)));
    let cubic = decay_fit(&polys(&["x1^3"]), 1, &unit, 1..=6, &ctx(7)).unwrap();
    assert!((-0.45..=-0.22).contains(&cubic.alpha_hat), "{}", cubic.alpha_hat);
    assert!(bound_check(&cubic));
    assert!(decay_fit(&polys(&["x1^2"]), 1, &[PadicScalar::from(5i64)], 1..=3, &c5).is_err());
    assert!(decay_fit(&polys(&["x1^2"]), 1, &unit, 3..=3, &c5).is_err());
}

#[test]
fn sweep_reports_slowest_direction() {
    let c = ctx(5);
    let dirs = vec![vec![PadicScalar::one()], vec![PadicScalar::from(2i64)], vec![PadicScalar::from(3i64)]];
    let sweep = decay_sweep(&polys(&["x1^2"]), 1, &dirs, 1..=5, &c).unwrap();
    assert_eq!(sweep.fits.len(), 3);
    let worst = sweep.fits[sweep.worst].1.alpha_hat;
    assert!(sweep.fits.iter().all(|(_, f)| f.alpha_hat <= worst));
    let none = decay_sweep(&polys(&["x1"]), 1, &dirs[..1], 1..=3, &c);
    assert_eq!(none, Err(Error::AllVanished));
}

#[test]
fn trivial_and_refined_levels() {
    let c = ctx(3);
    let fs = polys(&["x1^3 + 2*x1*x2", "x2^2"]);
    let zero = [PadicScalar::zero(), PadicScalar::zero()];
    assert_eq!(exp_sum(&fs, 2, &zero, &c).unwrap().value, Complex64::new(1.0, 0.0));
    let y = [scalar(1, 9), scalar(2, 3)];
    let base = exp_sum(&fs, 2, &y, &c).unwrap();
    let finer = exp_sum_at_level(&fs, 2, &y, base.level + 1, &c).unwrap();
    assert!((base.value - finer.value).norm() < 1e-10);
    assert!(exp_sum_at_level(&fs, 2, &y, 1, &c).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn character_is_additive(a in -500i64..500, b in 1i64..200, c in -500i64..500, d in 1i64..200) {
        let cx = ctx(5);
        let x = scalar(a, b);
        let y = scalar(c, d);
        let sum = PadicScalar::new(x.value() + y.value());
        let lhs = additive_character(&sum, &cx);
        let rhs = additive_character(&x, &cx) * additive_character(&y, &cx);
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((lhs.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sums_are_normalized(c0 in -4i64..5, c1 in -4i64..5, c2 in -4i64..5, num in 1i64..30, k in 0u32..3, pi in 0usize..3) {
        let p = [2u64, 3, 5][pi];
        let cx = ctx(p);
        let f = parse_poly(&alloc::format!("{c2}*x1^3 + {c1}*x1*x2 + {c0}*x2^2")).unwrap();
        let y = PadicScalar::new(Rational::from_integer(num.into()) * cx.pow(-(k as i64)));
        let e = exp_sum(core::slice::from_ref(&f), 2, core::slice::from_ref(&y), &cx).unwrap();
        prop_assert!(e.value.norm() <= 1.0 + 1e-9);
        let finer = exp_sum_at_level(core::slice::from_ref(&f), 2, core::slice::from_ref(&y), e.level + 1, &cx).unwrap();
        prop_assert!((e.value - finer.value).norm() < 1e-10);
        let check = fourier_check(core::slice::from_ref(&f), 2, core::slice::from_ref(&y), &cx).unwrap();
        prop_assert!(check.abs_diff < 1e-9);
    }
}
