//! Cells over `Q_p`, exact membership, fiber measures and certificate checks.
//!
//! A cell tower of arity `m` is a list of levels; level `i` constrains the
//! coordinate `x_(i+1)` in terms of `x_1..x_i`:
//!
//! ```text
//! |alpha(x)| <(=) |t - c(x)| <(=) |beta(x)|,   t - c(x) in lambda P_n
//! ```
//!
//! Either bound may be absent. `lambda = 0` makes the fiber the single point
//! `t = c(x)`.

mod check;
mod fast;

use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dsl::PolyExpr;
use crate::padic::{PadicScalar, PrimeContext, Valuation};
use crate::qexp::{shell_sum, KRange, TermOnCell};
use crate::{Error, Rational, Result};

pub use check::{check_norm_description, check_partition, Mismatch, NormReport, PartitionReport, Violation};
pub(crate) use fast::ResidueTower;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundSpec {
    pub expr: PolyExpr,
    pub strict: bool,
}

impl BoundSpec {
    pub fn strict(expr: PolyExpr) -> Self {
        Self { expr, strict: true }
    }

    pub fn closed(expr: PolyExpr) -> Self {
        Self { expr, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSpec {
    pub lambda: PadicScalar,
    pub n: u32,
}

impl CosetSpec {
    pub fn new(lambda: PadicScalar, n: u32) -> Self {
        Self { lambda, n }
    }

    /// `1 * P_1`, all of `Q_p^x`.
    pub fn units() -> Self {
        Self { lambda: PadicScalar::one(), n: 1 }
    }

    /// `0 * P_n`, the point `t = c`.
    pub fn point() -> Self {
        Self { lambda: PadicScalar::zero(), n: 1 }
    }
}

/// One level of a cell tower. `lower` is `alpha` and `upper` is `beta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellLevel {
    pub center: PolyExpr,
    pub lower: Option<BoundSpec>,
    pub upper: Option<BoundSpec>,
    pub coset: CosetSpec,
}

/// Outcome of one membership test at a lifted point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Test {
    pub inside: bool,
    /// Other points of the same residue class may test differently.
    pub ambiguous: bool,
}

impl CellLevel {
    pub fn new(center: PolyExpr, lower: Option<BoundSpec>, upper: Option<BoundSpec>, coset: CosetSpec) -> Self {
        Self { center, lower, upper, coset }
    }

    /// `{ t : t - c in lambda P_n }` with no bounds.
    pub fn unbounded(center: PolyExpr, coset: CosetSpec) -> Self {
        Self::new(center, None, None, coset)
    }

    /// The closed ball `|t - c| <= |radius|` intersected with a coset.
    pub fn ball(center: PolyExpr, radius: PolyExpr, coset: CosetSpec) -> Self {
        Self::new(center, None, Some(BoundSpec::closed(radius)), coset)
    }

    pub fn is_point(&self) -> bool {
        self.coset.lambda.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.center.is_constant()
            && self.lower.as_ref().is_none_or(|b| b.expr.is_constant())
            && self.upper.as_ref().is_none_or(|b| b.expr.is_constant())
    }

    fn validate(&self, index: usize) -> Result<()> {
        let malformed = |msg: &str| Err(Error::MalformedCell(format!("level {index}: {msg}")));
        if self.coset.n == 0 {
            return malformed("n must be positive");
        }
        if self.center.arity() > index {
            return malformed("center uses a later variable");
        }
        for b in [&self.lower, &self.upper].into_iter().flatten() {
            if b.expr.arity() > index {
                return malformed("bound uses a later variable");
            }
            if b.expr.is_zero() {
                return malformed("bound is identically zero");
            }
        }
        if self.is_point() && (self.lower.is_some() || self.upper.is_some()) {
            return malformed("a point fiber takes no bounds");
        }
        Ok(())
    }

    fn bound_valuation(b: &BoundSpec, base: &[PadicScalar], index: usize, ctx: &PrimeContext) -> Result<i64> {
        ctx.valuation(&b.expr.evaluate(base)?).finite().ok_or(Error::BoundVanished { level: index })
    }

    /// The set of `k = v(t - c)` over the fiber above `base`, where the level
    /// index is `base.len()`.
    pub fn fiber_valuation_range(&self, base: &[PadicScalar], ctx: &PrimeContext) -> Result<KRange> {
        let index = base.len();
        let w = ctx.valuation(&self.coset.lambda).finite().ok_or(Error::ZeroCoset)?;
        let mut range = KRange::congruent(w, self.coset.n.max(1));
        if let Some(b) = &self.lower {
            let va = Self::bound_valuation(b, base, index, ctx)?;
            range = if b.strict { range.less_than(va) } else { range.at_most(va) };
        }
        if let Some(b) = &self.upper {
            let vb = Self::bound_valuation(b, base, index, ctx)?;
            range = if b.strict { range.greater_than(vb) } else { range.at_least(vb) };
        }
        Ok(range)
    }

    /// Haar measure of the fiber of a level with constant data.
    pub fn fiber_measure(&self, ctx: &PrimeContext) -> Result<Rational> {
        if !self.is_constant() {
            return Err(Error::NonConstantCell);
        }
        if self.is_point() {
            return Ok(Rational::zero());
        }
        let range = self.fiber_valuation_range(&[], ctx)?;
        let term = TermOnCell::unit(ctx.p(), 0, self.coset.n, 0, self.coset.lambda.clone())?;
        let (value, finite) = shell_sum(&term, &range, ctx)?;
        if !finite {
            return Err(Error::Divergent);
        }
        Ok(value.as_rational().expect("measures are rational"))
    }

    /// Membership of `t` over `base`. With `level = Some(m)`, also flags the
    /// test as ambiguous when `t` and `base` are lifts of residues modulo
    /// `p^m` whose class is not decided at that precision.
    pub(crate) fn test(
        &self,
        base: &[PadicScalar],
        t: &PadicScalar,
        level: Option<u32>,
        ctx: &PrimeContext,
    ) -> Result<Test> {
        let index = base.len();
        let c = self.center.evaluate(base)?;
        let u = PadicScalar::new(t.value() - c.value());
        let vu = ctx.valuation(&u);
        // a residue mod p^m fixes u mod p^(v+need) only when v + need <= m
        let coarse =
            |v: Valuation, need: u32| level.is_some_and(|m| v.finite().is_none_or(|v| v + need as i64 > m as i64));
        let mut ambiguous = coarse(vu, 1);
        if self.is_point() {
            return Ok(Test { inside: u.is_zero(), ambiguous });
        }
        let n = self.coset.n;
        if n > 1 {
            ambiguous |= coarse(vu, ctx.hensel_level(n));
        }
        let inside = match vu {
            Valuation::Infinite => false,
            Valuation::Finite(k) => {
                let mut ok = ctx.coset_membership(&u, &self.coset.lambda, n);
                for (b, is_lower) in [(&self.lower, true), (&self.upper, false)] {
                    let Some(b) = b else { continue };
                    let vb = b.expr.evaluate(base)?;
                    let vb = ctx.valuation(&vb);
                    if !b.expr.is_constant() {
                        ambiguous |= coarse(vb, 1);
                    }
                    let vb = vb.finite().ok_or(Error::BoundVanished { level: index })?;
                    ok &= match (is_lower, b.strict) {
                        (true, true) => k < vb,
                        (true, false) => k <= vb,
                        (false, true) => k > vb,
                        (false, false) => k >= vb,
                    };
                }
                ok
            }
        };
        Ok(Test { inside, ambiguous })
    }
}

/// A cell in `Q_p^arity` given level by level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTower {
    levels: Vec<CellLevel>,
}

impl CellTower {
    pub fn new(levels: Vec<CellLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::MalformedCell("a cell needs at least one level".into()));
        }
        for (i, level) in levels.iter().enumerate() {
            level.validate(i)?;
        }
        Ok(Self { levels })
    }

    /// `Z_p^arity` minus nothing of positive measure: every level is
    /// `{|t| <= 1, t in 1 P_1}`.
    pub fn unit_box(arity: usize) -> Self {
        let level = CellLevel::ball(PolyExpr::zero(), PolyExpr::integer(1), CosetSpec::units());
        Self { levels: alloc::vec![level; arity.max(1)] }
    }

    pub fn levels(&self) -> &[CellLevel] {
        &self.levels
    }

    pub fn arity(&self) -> usize {
        self.levels.len()
    }

    /// Every center and bound is a constant.
    pub fn is_explicit(&self) -> bool {
        self.levels.iter().all(CellLevel::is_constant)
    }

    pub fn contains(&self, point: &[PadicScalar], ctx: &PrimeContext) -> Result<bool> {
        Ok(self.test(point, None, ctx)?.inside)
    }

    /// Membership with ambiguity accounting; stops at the first failing level.
    pub(crate) fn test(&self, point: &[PadicScalar], level: Option<u32>, ctx: &PrimeContext) -> Result<Test> {
        if point.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: point.len() });
        }
        let mut ambiguous = false;
        for (i, lvl) in self.levels.iter().enumerate() {
            let t = lvl.test(&point[..i], &point[i], level, ctx)?;
            ambiguous |= t.ambiguous;
            if !t.inside {
                return Ok(Test { inside: false, ambiguous });
            }
        }
        Ok(Test { inside: true, ambiguous })
    }

    /// Haar measure of an explicit tower: the product of its fiber measures.
    pub fn measure(&self, ctx: &PrimeContext) -> Result<Rational> {
        let mut acc = Rational::from_integer(1.into());
        for level in &self.levels {
            acc *= level.fiber_measure(ctx)?;
        }
        Ok(acc)
    }
}

/// The region a certificate claims to partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// `Z_p^arity`.
    Box {
        arity: usize,
    },
    Tower(CellTower),
}

impl Domain {
    pub fn arity(&self) -> usize {
        match self {
            Domain::Box { arity } => *arity,
            Domain::Tower(t) => t.arity(),
        }
    }

    pub(crate) fn test(&self, point: &[PadicScalar], level: Option<u32>, ctx: &PrimeContext) -> Result<Test> {
        match self {
            Domain::Box { arity } => {
                if point.len() != *arity {
                    return Err(Error::ArityMismatch { expected: *arity, got: point.len() });
                }
                let inside = point.iter().all(|x| ctx.valuation(x) >= Valuation::Finite(0));
                Ok(Test { inside, ambiguous: false })
            }
            Domain::Tower(t) => t.test(point, level, ctx),
        }
    }

    pub fn contains(&self, point: &[PadicScalar], ctx: &PrimeContext) -> Result<bool> {
        Ok(self.test(point, None, ctx)?.inside)
    }
}

/// `|f| = |delta| * |(t - c)^a lambda^(-a)|^(1/n)` on one cell, where `t`,
/// `c`, `lambda` and `n` belong to level `level` of the cell and `delta`
/// reads only earlier variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormDescription {
    pub cell: usize,
    pub function: usize,
    pub level: usize,
    pub delta: PolyExpr,
    pub a: i64,
}

/// A claimed partition of a domain into cells, with norm descriptions of
/// some functions on those cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionCertificate {
    pub domain: Domain,
    pub cells: Vec<CellTower>,
    pub functions: Vec<PolyExpr>,
    pub descriptions: Vec<NormDescription>,
}

impl DecompositionCertificate {
    pub fn new(
        domain: Domain,
        cells: Vec<CellTower>,
        functions: Vec<PolyExpr>,
        descriptions: Vec<NormDescription>,
    ) -> Result<Self> {
        let arity = domain.arity();
        let mismatch = |msg: alloc::string::String| Err(Error::CertificateMismatch(msg));
        for (i, c) in cells.iter().enumerate() {
            if c.arity() != arity {
                return mismatch(format!("cell {i} has arity {}, domain has {arity}", c.arity()));
            }
        }
        for (j, f) in functions.iter().enumerate() {
            if f.arity() > arity {
                return mismatch(format!("function {j} reads more than {arity} variables"));
            }
        }
        for d in &descriptions {
            let Some(cell) = cells.get(d.cell) else {
                return mismatch(format!("description refers to missing cell {}", d.cell));
            };
            if d.function >= functions.len() {
                return mismatch(format!("description refers to missing function {}", d.function));
            }
            let Some(level) = cell.levels.get(d.level) else {
                return mismatch(format!("cell {} has no level {}", d.cell, d.level));
            };
            if d.delta.arity() > d.level {
                return mismatch(format!("delta for cell {} reads a later variable", d.cell));
            }
            if level.is_point() && d.a != 0 {
                return mismatch(format!("cell {} level {} is a point; a must be 0", d.cell, d.level));
            }
        }
        Ok(Self { domain, cells, functions, descriptions })
    }

    /// A certificate with no functions.
    pub fn partition(domain: Domain, cells: Vec<CellTower>) -> Result<Self> {
        Self::new(domain, cells, Vec::new(), Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.domain.arity()
    }
}
