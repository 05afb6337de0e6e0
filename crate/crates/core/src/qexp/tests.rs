use alloc::vec;

use super::*;
use crate::cells::{BoundSpec, CellLevel, CellTower, CosetSpec, DecompositionCertificate, Domain};
use crate::dsl::PolyExpr;
use crate::padic::{PadicScalar, PrimeContext};
use crate::{Error, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn one(p: u64) -> RootScaledValue {
    RootScaledValue::one(p)
}

fn point_cell() -> CellTower {
    CellTower::new(vec![CellLevel::unbounded(PolyExpr::zero(), CosetSpec::point())]).unwrap()
}

fn zp_cert(arity: usize) -> DecompositionCertificate {
    DecompositionCertificate::partition(Domain::Box { arity }, vec![CellTower::unit_box(arity)]).unwrap()
}

fn integrate(terms: &[TowerTerm], cert: &DecompositionCertificate, p: u64) -> (Option<Rational>, bool) {
    let ctx = PrimeContext::new(p, 6).unwrap();
    let (v, ok) = integrate_explicit_tower(terms, cert, &ctx).unwrap();
    (v.as_rational(), ok)
}

#[test]
fn product_of_norms_on_the_square() {
    let t = TowerTerm::new(0, one(5), vec![LevelFactor::new(1, 0), LevelFactor::new(1, 0)]);
    assert_eq!(integrate(&[t], &zp_cert(2), 5), (Some(rat(25, 36)), true));
}

#[test]
fn valuation_integral_with_point_cell() {
    let cert =
        DecompositionCertificate::partition(Domain::Box { arity: 1 }, vec![point_cell(), CellTower::unit_box(1)])
            .unwrap();
    let t = TowerTerm::new(1, one(5), vec![LevelFactor::new(0, 1)]);
    assert_eq!(integrate(std::slice::from_ref(&t), &cert, 5), (Some(rat(1, 4)), true));
    let t7 = TowerTerm::new(1, one(7), vec![LevelFactor::new(0, 1)]);
    assert_eq!(integrate(&[t7], &cert, 7), (Some(rat(1, 6)), true));
}

#[test]
fn zero_and_cancelling_integrands() {
    let cert = zp_cert(1);
    assert_eq!(integrate(&[], &cert, 5), (Some(rat(0, 1)), true));
    let f = vec![LevelFactor::new(-1, 0)];
    let plus = TowerTerm::new(0, one(5), f.clone());
    let minus = TowerTerm::new(0, RootScaledValue::from_rational(5, rat(-1, 1)), f);
    // |t|^-1 alone diverges; merged with its negative it is the zero integrand
    assert_eq!(integrate(std::slice::from_ref(&plus), &cert, 5), (Some(rat(0, 1)), false));
    assert_eq!(integrate(&[plus, minus], &cert, 5), (Some(rat(0, 1)), true));
}

#[test]
fn half_power_on_squares() {
    let cell = CellTower::new(vec![CellLevel::ball(
        PolyExpr::zero(),
        PolyExpr::integer(1),
        CosetSpec::new(PadicScalar::one(), 2),
    )])
    .unwrap();
    let cert = DecompositionCertificate::partition(Domain::Box { arity: 1 }, vec![cell]).unwrap();
    let t = TowerTerm::new(0, one(5), vec![LevelFactor::new(1, 0)]);
    assert_eq!(integrate(&[t], &cert, 5), (Some(rat(25, 62)), true));
}

#[test]
fn outer_region_sums_downward() {
    // |t| > 1: sum_{k <= -1} (4/5) 5^(-k) 5^(3k) = 1/30
    let cell = CellTower::new(vec![CellLevel::new(
        PolyExpr::zero(),
        Some(BoundSpec::strict(PolyExpr::integer(1))),
        None,
        CosetSpec::units(),
    )])
    .unwrap();
    let cert = DecompositionCertificate::new(Domain::Tower(cell.clone()), vec![cell], vec![], vec![]).unwrap();
    let t = TowerTerm::new(0, one(5), vec![LevelFactor::new(-3, 0)]);
    assert_eq!(integrate(&[t], &cert, 5), (Some(rat(1, 30)), true));
}

#[test]
fn nested_coset_level() {
    let t = TowerTerm::new(0, one(5), vec![LevelFactor::new(0, 0), LevelFactor::new(1, 0)]);
    let cell = CellTower::new(vec![
        CellLevel::ball(PolyExpr::zero(), PolyExpr::integer(1), CosetSpec::units()),
        CellLevel::ball(PolyExpr::zero(), PolyExpr::integer(1), CosetSpec::new(PadicScalar::from(5i64), 2)),
    ])
    .unwrap();
    let cert = DecompositionCertificate::partition(Domain::Box { arity: 2 }, vec![cell]).unwrap();
    let ctx = PrimeContext::new(5, 4).unwrap();
    let (v, ok) = integrate_explicit_tower(&[t], &cert, &ctx).unwrap();
    assert!(ok);
    // (2/5) sum_{k odd >= 1} 5^(-k) 5^(-(k-1)/2) = (2/25) / (1 - 5^-3)
    assert_eq!(v.as_rational(), Some(rat(10, 124)));
}

#[test]
fn mismatched_terms_rejected() {
    let ctx = PrimeContext::new(5, 4).unwrap();
    let cert = zp_cert(1);
    let stray = TowerTerm::new(3, one(5), vec![LevelFactor::one()]);
    assert!(matches!(integrate_explicit_tower(&[stray], &cert, &ctx), Err(Error::CertificateMismatch(_))));
    let short = TowerTerm::new(0, one(5), vec![]);
    assert!(matches!(integrate_explicit_tower(&[short], &cert, &ctx), Err(Error::CertificateMismatch(_))));
    let curved = CellTower::new(vec![
        CellLevel::ball(PolyExpr::zero(), PolyExpr::integer(1), CosetSpec::units()),
        CellLevel::ball(PolyExpr::var(1), PolyExpr::integer(1), CosetSpec::units()),
    ])
    .unwrap();
    let cert = DecompositionCertificate::partition(Domain::Box { arity: 2 }, vec![curved]).unwrap();
    let t = TowerTerm::new(0, one(5), vec![LevelFactor::one(), LevelFactor::one()]);
    assert_eq!(integrate_explicit_tower(&[t], &cert, &ctx), Err(Error::NonConstantCell));
}

#[test]
fn lattice_sums() {
    let ctx = PrimeContext::new(5, 4).unwrap();
    let nonneg = KRange::all().at_least(0);
    let t = LatticeTerm::new(rat(1, 1), vec![-1], vec![0]);
    assert_eq!(mixed_sum(&[t], &[nonneg], &ctx).unwrap(), (rat(5, 4), true));
    let t = LatticeTerm::new(rat(1, 1), vec![-1, -1], vec![0, 0]);
    assert_eq!(mixed_sum(&[t], &[nonneg, nonneg], &ctx).unwrap(), (rat(25, 16), true));
    let t = LatticeTerm::new(rat(1, 1), vec![-2], vec![1]);
    assert_eq!(mixed_sum(&[t], &[KRange::all().at_least(1)], &ctx).unwrap(), (rat(25, 576), true));
    let t = LatticeTerm::new(rat(1, 1), vec![1], vec![0]);
    assert_eq!(mixed_sum(std::slice::from_ref(&t), &[nonneg], &ctx).unwrap(), (rat(0, 1), false));
    assert_eq!(mixed_sum(&[t], &[KRange::all().at_most(0)], &ctx).unwrap(), (rat(5, 4), true));
    // even z >= 0 only: 1 / (1 - 1/25)
    let t = LatticeTerm::new(rat(1, 1), vec![-1], vec![0]);
    assert_eq!(mixed_sum(&[t], &[KRange::congruent(0, 2).at_least(0)], &ctx).unwrap(), (rat(25, 24), true));
}

#[test]
fn lattice_times_cell() {
    let ctx = PrimeContext::new(5, 4).unwrap();
    let lattice = LatticeTerm::new(rat(1, 1), vec![-1], vec![0]);
    let tower = TowerTerm::new(0, one(5), vec![LevelFactor::new(1, 0)]);
    let (v, ok) = mixed_integrate(&[(lattice, tower)], &[KRange::all().at_least(0)], &zp_cert(1), &ctx).unwrap();
    assert!(ok);
    assert_eq!(v.as_rational(), Some(rat(25, 24)));
}
