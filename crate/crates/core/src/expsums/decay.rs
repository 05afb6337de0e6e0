use alloc::vec::Vec;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{exp_sum, CharacterValue};
use crate::dsl::PolyExpr;
use crate::padic::{PadicScalar, PrimeContext};
use crate::{Error, Rational, Result};

/// Samples with `|E|` below this are treated as exact zeros.
pub const VANISHING_THRESHOLD: f64 = 1e-13;

const BOUND_SLACK: f64 = 1e-9;

/// `E(u p^(-m))` at one level; `|y| = p^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub m: u32,
    pub value: CharacterValue,
    pub abs: f64,
}

impl DecaySample {
    pub fn vanished(&self) -> bool {
        self.abs < VANISHING_THRESHOLD
    }
}

/// A fitted bound `|E(y)| <= c min(|y|^alpha, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub p: u64,
    pub alpha_hat: f64,
    pub c_hat: f64,
    pub samples: Vec<DecaySample>,
    /// Largest `|E| - c min(|y|^alpha, 1)` over the samples, or `0`.
    pub max_bound_violation: f64,
}

fn envelope(p: u64, m: u32, alpha: f64) -> f64 {
    libm::pow(p as f64, m as f64 * alpha).min(1.0)
}

fn violation(p: u64, samples: &[DecaySample], alpha: f64, c: f64) -> f64 {
    samples.iter().map(|s| s.abs - c * envelope(p, s.m, alpha)).fold(0.0, f64::max)
}

impl DecayFit {
    /// The fit with a fixed exponent and the least `c` bounding every sample.
    pub fn with_parameters(p: u64, samples: Vec<DecaySample>, alpha_hat: f64) -> Self {
        let c_hat =
            samples.iter().filter(|s| !s.vanished()).map(|s| s.abs / envelope(p, s.m, alpha_hat)).fold(0.0, f64::max);
        let max_bound_violation = violation(p, &samples, alpha_hat, c_hat);
        Self { p, alpha_hat, c_hat, samples, max_bound_violation }
    }

    /// Replaces `c` and recomputes the violation.
    pub fn with_constant(mut self, c: f64) -> Self {
        self.c_hat = c;
        self.max_bound_violation = violation(self.p, &self.samples, self.alpha_hat, c);
        self
    }
}

/// Least-squares slope of `log_p |E|` against `m` over the samples that did
/// not vanish. A single sample gives the line through `(0, 0)`.
fn fit_slope(p: u64, samples: &[DecaySample]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| !s.vanished())
        .map(|s| (s.m as f64, libm::log(s.abs) / libm::log(p as f64)))
        .collect();
    match pts.len() {
        0 => Err(Error::AllVanished),
        1 => Ok(pts[0].1 / pts[0].0),
        k => {
            let k = k as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
            Ok(sxy / sxx)
        }
    }
}

fn samples_along(
    fs: &[PolyExpr],
    arity: usize,
    u: &[PadicScalar],
    levels: &core::ops::RangeInclusive<u32>,
    ctx: &PrimeContext,
) -> Result<Vec<DecaySample>> {
    if u.iter().any(|c| ctx.valuation(c).finite() != Some(0)) {
        return Err(Error::InvalidArgument("direction entries must be p-adic units".into()));
    }
    let (m1, m2) = (*levels.start(), *levels.end());
    if m1 < 1 || m2 <= m1 {
        return Err(Error::InvalidArgument("need 1 <= m1 < m2".into()));
    }
    ctx.check_budget(m2, arity)?;
    levels
        .clone()
        .map(|m| {
            let scale = ctx.pow(-(m as i64));
            let y: Vec<PadicScalar> = u.iter().map(|c| PadicScalar::new(c.value() * &scale)).collect();
            exp_sum(fs, arity, &y, ctx).map(|e| DecaySample { m, value: e.value, abs: e.value.norm() })
        })
        .collect()
}

/// Fits `|E(u p^(-m))| ~ c p^(m alpha)` over `m in levels`.
pub fn decay_fit(
    fs: &[PolyExpr],
    arity: usize,
    u: &[PadicScalar],
    levels: core::ops::RangeInclusive<u32>,
    ctx: &PrimeContext,
) -> Result<DecayFit> {
    let samples = samples_along(fs, arity, u, &levels, ctx)?;
    let alpha = fit_slope(ctx.p(), &samples)?;
    Ok(DecayFit::with_parameters(ctx.p(), samples, alpha))
}

/// Whether every sample satisfies `|E| <= c min(|y|^alpha, 1) (1 + 1e-9)`.
pub fn bound_check(fit: &DecayFit) -> bool {
    fit.samples.iter().all(|s| s.abs <= fit.c_hat * envelope(fit.p, s.m, fit.alpha_hat) * (1.0 + BOUND_SLACK))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `(direction index, fit)` for every direction with a nonvanishing sample.
    pub fits: Vec<(usize, DecayFit)>,
    /// Directions along which every sample vanished.
    pub vanished: Vec<usize>,
    /// Index into `fits` of the slowest decay.
    pub worst: usize,
}

/// [`decay_fit`] along each direction, reporting the largest `alpha_hat`.
pub fn decay_sweep(
    fs: &[PolyExpr],
    arity: usize,
    directions: &[Vec<PadicScalar>],
    levels: core::ops::RangeInclusive<u32>,
    ctx: &PrimeContext,
) -> Result<SweepResult> {
    let mut fits = Vec::new();
    let mut vanished = Vec::new();
    for (i, u) in directions.iter().enumerate() {
        match decay_fit(fs, arity, u, levels.clone(), ctx) {
            Ok(f) => fits.push((i, f)),
            Err(Error::AllVanished) => vanished.push(i),
            Err(e) => return Err(e),
        }
    }
    let worst = (0..fits.len())
        .max_by(|a, b| fits[*a].1.alpha_hat.total_cmp(&fits[*b].1.alpha_hat))
        .ok_or(Error::AllVanished)?;
    Ok(SweepResult { fits, vanished, worst })
}

fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|i| !rows[*i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        for i in r + 1..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let (top, bottom) = rows.split_at_mut(i);
            let (pivot_row, row) = (&top[r], &mut bottom[0]);
            let factor = &row[c] / &pivot_row[c];
            for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= &factor * y;
            }
        }
        r += 1;
    }
    r
}

/// Whether the Jacobian of `f` has full rank `r` at one of `trials` random
/// integer points. Full rank anywhere implies dominance; failure only
/// suggests the map is not dominant.
pub fn looks_dominant(fs: &[PolyExpr], arity: usize, trials: u32, seed: u64) -> Result<bool> {
    if fs.len() > arity {
        return Ok(false);
    }
    let jacobian: Vec<Vec<PolyExpr>> = fs.iter().map(|f| (1..=arity).map(|i| f.derivative(i)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let point: Vec<Rational> =
            (0..arity).map(|_| Rational::from_integer(rng.random_range(-50i64..=50).into())).collect();
        let rows = jacobian
            .iter()
            .map(|row| row.iter().map(|d| d.evaluate_rational(&point)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        if rank(rows) == fs.len() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_rank() {
        let f = |s: &str| crate::dsl::parse_poly(s).unwrap();
        assert!(looks_dominant(&[f("x1^2 + x2^2")], 2, 4, 1).unwrap());
        assert!(!looks_dominant(&[f("x1 + x2"), f("2*x1 + 2*x2")], 2, 8, 1).unwrap());
        assert!(!looks_dominant(&[f("3")], 1, 8, 1).unwrap());
        assert!(!looks_dominant(&[f("x1"), f("x1^2")], 1, 8, 1).unwrap());
    }

    fn sample(m: u32, abs: f64) -> DecaySample {
        DecaySample { m, value: CharacterValue::new(abs, 0.0), abs }
    }

    #[test]
    fn slope_and_constant() {
        let samples: Vec<DecaySample> = (1..=6).map(|m| sample(m, 3.0 * libm::pow(5.0, -(m as f64) / 3.0))).collect();
        let alpha = fit_slope(5, &samples).unwrap();
        assert!((alpha + 1.0 / 3.0).abs() < 1e-12);
        let fit = DecayFit::with_parameters(5, samples, alpha);
        assert!((fit.c_hat - 3.0).abs() < 1e-9);
        assert!(bound_check(&fit));
        assert!(!bound_check(&fit.clone().with_constant(2.9)));
        assert!(fit.with_constant(2.9).max_bound_violation > 0.0);
        let gone = [sample(1, 0.0), sample(2, 1e-15)];
        assert_eq!(fit_slope(5, &gone), Err(Error::AllVanished));
    }
}
