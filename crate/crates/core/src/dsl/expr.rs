use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use super::poly::PolyExpr;
use crate::padic::{PadicScalar, PrimeContext, Valuation};
use crate::qexp::RootScaledValue;
use crate::{Error, Rational, Result};

/// A simple q-exponential expression: a `Q`-algebra combination of `|f|`,
/// `v(f)` and `|f|^(a/n)` for polynomials `f`.
///
/// Node order in this enum is also the sort order used when canonicalizing
/// sums and products.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QExpExpr {
    RationalConst(Rational),
    Norm(PolyExpr),
    /// `v(f)`; `f` must not vanish at evaluation points.
    Val(PolyExpr),
    /// `|f|^(numer/denom)`.
    FracNormPower {
        base: PolyExpr,
        numer: i64,
        denom: u32,
    },
    Sum(Vec<QExpExpr>),
    Product(Vec<QExpExpr>),
    ScalarMultiple(Rational, Box<QExpExpr>),
    IntegerPower(Box<QExpExpr>, u32),
}

impl QExpExpr {
    pub fn constant(c: Rational) -> Self {
        QExpExpr::RationalConst(c)
    }

    pub fn integer(c: i64) -> Self {
        QExpExpr::RationalConst(Rational::from_integer(c.into()))
    }

    /// Canonical form: nested sums and products flattened and sorted, scalar
    /// factors hoisted into a single `ScalarMultiple`, constants folded.
    pub fn canonical(&self) -> QExpExpr {
        match self {
            QExpExpr::RationalConst(_) | QExpExpr::Norm(_) | QExpExpr::Val(_) | QExpExpr::FracNormPower { .. } => {
                self.clone()
            }
            QExpExpr::Sum(items) => {
                let mut constant = Rational::zero();
                let mut has_constant = false;
                let mut out = Vec::new();
                let mut stack: Vec<QExpExpr> = items.iter().map(QExpExpr::canonical).collect();
                stack.reverse();
                while let Some(item) = stack.pop() {
                    match item {
                        QExpExpr::Sum(inner) => stack.extend(inner.into_iter().rev()),
                        QExpExpr::RationalConst(c) => {
                            constant += c;
                            has_constant = true;
                        }
                        other => out.push(other),
                    }
                }
                if has_constant && (!constant.is_zero() || out.is_empty()) {
                    out.push(QExpExpr::RationalConst(constant));
                }
                out.sort();
                match out.len() {
                    0 => QExpExpr::integer(0),
                    1 => out.pop().expect("one item"),
                    _ => QExpExpr::Sum(out),
                }
            }
            QExpExpr::Product(items) => {
                let mut coefficient = Rational::one();
                let mut out = Vec::new();
                let mut stack: Vec<QExpExpr> = items.iter().map(QExpExpr::canonical).collect();
                while let Some(item) = stack.pop() {
                    match item {
                        QExpExpr::Product(inner) => stack.extend(inner),
                        QExpExpr::RationalConst(c) => coefficient *= c,
                        QExpExpr::ScalarMultiple(c, inner) => {
                            coefficient *= c;
                            stack.push(*inner);
                        }
                        other => out.push(other),
                    }
                }
                out.sort();
                let inner = match out.len() {
                    0 => return QExpExpr::RationalConst(coefficient),
                    1 => out.pop().expect("one item"),
                    _ => QExpExpr::Product(out),
                };
                if coefficient.is_one() {
                    inner
                } else {
                    QExpExpr::ScalarMultiple(coefficient, Box::new(inner))
                }
            }
            QExpExpr::ScalarMultiple(c, inner) => match inner.canonical() {
                QExpExpr::RationalConst(d) => QExpExpr::RationalConst(c * d),
                QExpExpr::ScalarMultiple(d, x) => {
                    let k = c * d;
                    if k.is_one() {
                        *x
                    } else {
                        QExpExpr::ScalarMultiple(k, x)
                    }
                }
                x if c.is_one() => x,
                x => QExpExpr::ScalarMultiple(c.clone(), Box::new(x)),
            },
            QExpExpr::IntegerPower(inner, k) => match (inner.canonical(), *k) {
                (x, 1) => x,
                (QExpExpr::RationalConst(c), k) => QExpExpr::RationalConst(num_traits::pow(c, k as usize)),
                (QExpExpr::IntegerPower(x, j), k) => QExpExpr::IntegerPower(x, j * k),
                (x, k) => QExpExpr::IntegerPower(Box::new(x), k),
            },
        }
    }

    /// Every polynomial under a `norm`, `val` or fractional norm, deduplicated
    /// and sorted.
    pub fn carriers(&self) -> Vec<PolyExpr> {
        let mut set = BTreeSet::new();
        self.collect_carriers(&mut set);
        set.into_iter().collect()
    }

    fn collect_carriers(&self, set: &mut BTreeSet<PolyExpr>) {
        match self {
            QExpExpr::RationalConst(_) => {}
            QExpExpr::Norm(f) | QExpExpr::Val(f) | QExpExpr::FracNormPower { base: f, .. } => {
                set.insert(f.clone());
            }
            QExpExpr::Sum(items) | QExpExpr::Product(items) => items.iter().for_each(|i| i.collect_carriers(set)),
            QExpExpr::ScalarMultiple(_, x) | QExpExpr::IntegerPower(x, _) => x.collect_carriers(set),
        }
    }

    /// Number of variables the expression reads.
    pub fn arity(&self) -> usize {
        self.carriers().iter().map(PolyExpr::arity).max().unwrap_or(0)
    }

    /// Least common multiple of the fractional-power denominators.
    pub fn root_order(&self) -> u32 {
        match self {
            QExpExpr::FracNormPower { denom, .. } => *denom,
            QExpExpr::Sum(items) | QExpExpr::Product(items) => {
                items.iter().map(QExpExpr::root_order).fold(1, num_integer::lcm)
            }
            QExpExpr::ScalarMultiple(_, x) | QExpExpr::IntegerPower(x, _) => x.root_order(),
            _ => 1,
        }
    }

    /// Evaluates given the valuation of each carrier polynomial.
    pub fn evaluate_with<F>(&self, prime: u64, valuation_of: &F) -> Result<RootScaledValue>
    where
        F: Fn(&PolyExpr) -> Valuation,
    {
        Ok(match self {
            QExpExpr::RationalConst(c) => RootScaledValue::from_rational(prime, c.clone()),
            QExpExpr::Norm(f) => match valuation_of(f) {
                Valuation::Infinite => RootScaledValue::zero(prime),
                Valuation::Finite(v) => RootScaledValue::p_power(prime, -v, 1),
            },
            QExpExpr::Val(f) => match valuation_of(f) {
                Valuation::Infinite => return Err(Error::ValOfZero),
                Valuation::Finite(v) => RootScaledValue::from_rational(prime, Rational::from_integer(v.into())),
            },
            QExpExpr::FracNormPower { base, numer, denom } => match valuation_of(base) {
                Valuation::Infinite if *numer > 0 => RootScaledValue::zero(prime),
                Valuation::Infinite if *numer == 0 => RootScaledValue::one(prime),
                Valuation::Infinite => return Err(Error::ZeroToNegativePower),
                Valuation::Finite(v) => RootScaledValue::p_power(prime, -v * numer, *denom),
            },
            QExpExpr::Sum(items) => {
                let mut acc = RootScaledValue::zero(prime);
                for i in items {
                    acc = &acc + &i.evaluate_with(prime, valuation_of)?;
                }
                acc
            }
            QExpExpr::Product(items) => {
                let mut acc = RootScaledValue::one(prime);
                for i in items {
                    acc = &acc * &i.evaluate_with(prime, valuation_of)?;
                }
                acc
            }
            QExpExpr::ScalarMultiple(c, x) => x.evaluate_with(prime, valuation_of)?.scale(c),
            QExpExpr::IntegerPower(x, k) => {
                let base = x.evaluate_with(prime, valuation_of)?;
                let mut acc = RootScaledValue::one(prime);
                for _ in 0..*k {
                    acc = &acc * &base;
                }
                acc
            }
        })
    }

    /// Exact value at `point`, allowing fractional norm powers.
    pub fn evaluate_fractional(&self, point: &[PadicScalar], ctx: &PrimeContext) -> Result<RootScaledValue> {
        let carriers = self.carriers();
        let mut vals = Vec::with_capacity(carriers.len());
        for f in &carriers {
            vals.push(ctx.valuation(&f.evaluate(point)?));
        }
        let lookup = |f: &PolyExpr| {
            let i = carriers.binary_search(f).expect("carrier collected");
            vals[i]
        };
        self.evaluate_with(ctx.p(), &lookup)
    }

    /// Exact rational value at `point`. Fails with [`Error::InvalidArgument`]
    /// when a fractional norm power makes the value irrational.
    pub fn evaluate(&self, point: &[PadicScalar], ctx: &PrimeContext) -> Result<Rational> {
        self.evaluate_fractional(point, ctx)?
            .as_rational()
            .ok_or(Error::InvalidArgument("value is irrational; use evaluate_fractional".into()))
    }

    fn is_atom(&self) -> bool {
        matches!(self, QExpExpr::Norm(_) | QExpExpr::Val(_) | QExpExpr::FracNormPower { .. })
    }

    fn fmt_factor(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QExpExpr::Sum(_) | QExpExpr::ScalarMultiple(..) => write!(f, "({})", Printer(self)),
            _ => write!(f, "{}", Printer(self)),
        }
    }
}

/// Prints a canonical expression in the DSL grammar.
struct Printer<'a>(&'a QExpExpr);

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            QExpExpr::RationalConst(c) => write!(f, "{c}"),
            QExpExpr::Norm(p) => write!(f, "norm({p})"),
            QExpExpr::Val(p) => write!(f, "val({p})"),
            QExpExpr::FracNormPower { base, numer, denom } => {
                write!(f, "norm({base})^{{{numer}/{denom}}}")
            }
            QExpExpr::Sum(items) => {
                for (i, item) in items.iter().enumerate() {
                    let negative = match item {
                        QExpExpr::RationalConst(c) | QExpExpr::ScalarMultiple(c, _) => c.is_negative(),
                        _ => false,
                    };
                    if i > 0 && negative {
                        f.write_str(" - ")?;
                        match item {
                            QExpExpr::RationalConst(c) => write!(f, "{}", c.abs())?,
                            QExpExpr::ScalarMultiple(c, x) => {
                                write!(f, "{} * ", c.abs())?;
                                x.fmt_factor(f)?;
                            }
                            _ => unreachable!(),
                        }
                        continue;
                    }
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{}", Printer(item))?;
                }
                Ok(())
            }
            QExpExpr::Product(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    item.fmt_factor(f)?;
                }
                Ok(())
            }
            QExpExpr::ScalarMultiple(c, x) => {
                write!(f, "{c} * ")?;
                x.fmt_factor(f)
            }
            QExpExpr::IntegerPower(x, k) => {
                if x.is_atom() {
                    write!(f, "{}^{k}", Printer(x))
                } else {
                    write!(f, "({})^{k}", Printer(x))
                }
            }
        }
    }
}

impl fmt::Display for QExpExpr {
    /// Canonicalizes, then prints in the DSL grammar; parsing the output
    /// yields the canonical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Printer(&self.canonical()))
    }
}
