use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::padic::PrimeContext;
use crate::{Error, Rational, Result};

/// One residue box `{x in Z_p^n : x = residues mod p^level}` with a weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchwartzPiece {
    pub residues: Vec<u64>,
    pub level: u32,
    pub weight: Rational,
}

/// A locally constant, compactly supported function on `Z_p^n`, given as a
/// weighted sum of indicator functions of residue boxes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchwartzBruhatSpec {
    dim: usize,
    pieces: Vec<SchwartzPiece>,
}

impl SchwartzBruhatSpec {
    pub fn new(dim: usize, pieces: Vec<SchwartzPiece>, ctx: &PrimeContext) -> Result<Self> {
        for piece in &pieces {
            if piece.residues.len() != dim {
                return Err(Error::ArityMismatch { expected: dim, got: piece.residues.len() });
            }
            let modulus = ctx.modulus_u64(piece.level).ok_or(Error::InvalidArgument("piece level too large".into()))?;
            if piece.residues.iter().any(|r| *r >= modulus) {
                return Err(Error::InvalidArgument("residue out of range for its level".into()));
            }
        }
        Ok(Self { dim, pieces })
    }

    /// The indicator function of `Z_p^dim`.
    pub fn unit_box(dim: usize) -> Self {
        Self {
            dim,
            pieces: alloc::vec![SchwartzPiece {
                residues: alloc::vec![0; dim],
                level: 0,
                weight: Rational::from_integer(1.into()),
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[SchwartzPiece] {
        &self.pieces
    }

    pub fn max_level(&self) -> u32 {
        self.pieces.iter().map(|p| p.level).max().unwrap_or(0)
    }

    /// `sum weight * p^(-level * dim)`.
    pub fn total_measure(&self, ctx: &PrimeContext) -> Rational {
        self.pieces
            .iter()
            .map(|piece| &piece.weight * ctx.pow(-(piece.level as i64) * self.dim as i64))
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Splits every piece into its sub-boxes at `level`.
    pub fn refine_to(&self, level: u32, ctx: &PrimeContext) -> Result<Self> {
        if level < self.max_level() {
            return Err(Error::InvalidArgument("cannot refine to a coarser level".into()));
        }
        let mut out = Vec::new();
        for piece in &self.pieces {
            let gap = level - piece.level;
            let count = ctx.check_budget(gap, self.dim)? as u64;
            let step = ctx.modulus_u64(piece.level).expect("validated");
            let sub = ctx.modulus_u64(gap).ok_or(Error::InvalidArgument("level too large".into()))?;
            for idx in 0..count {
                let mut rem = idx;
                let residues = piece
                    .residues
                    .iter()
                    .map(|r| {
                        let digit = rem % sub;
                        rem /= sub;
                        r + step * digit
                    })
                    .collect();
                out.push(SchwartzPiece { residues, level, weight: piece.weight.clone() });
            }
        }
        Ok(Self { dim: self.dim, pieces: out })
    }

    /// Whether the boxes are pairwise disjoint after refinement to a common level.
    pub fn is_disjoint(&self, ctx: &PrimeContext) -> Result<bool> {
        let refined = self.refine_to(self.max_level(), ctx)?;
        let mut seen = BTreeMap::new();
        for piece in &refined.pieces {
            if seen.insert(piece.residues.clone(), ()).is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Value at an integer point (coordinates taken modulo each piece's level).
    pub fn value_at(&self, point: &[u64], ctx: &PrimeContext) -> Rational {
        let mut acc = Rational::zero();
        for piece in &self.pieces {
            let m = ctx.modulus_u64(piece.level).expect("validated");
            if piece.residues.iter().zip(point).all(|(r, x)| x % m == *r) {
                acc += &piece.weight;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn piece(residues: Vec<u64>, level: u32, w: i64) -> SchwartzPiece {
        SchwartzPiece { residues, level, weight: Rational::from_integer(w.into()) }
    }

    #[test]
    fn unit_box_has_measure_one() {
        let ctx = PrimeContext::new(5, 3).unwrap();
        let phi = SchwartzBruhatSpec::unit_box(2);
        assert_eq!(phi.total_measure(&ctx), Rational::from_integer(1.into()));
        let fine = phi.refine_to(2, &ctx).unwrap();
        assert_eq!(fine.pieces().len(), 625);
        assert!(fine.is_disjoint(&ctx).unwrap());
    }

    #[test]
    fn overlapping_boxes_detected() {
        let ctx = PrimeContext::new(3, 3).unwrap();
        let phi = SchwartzBruhatSpec::new(1, vec![piece(vec![1], 1, 2), piece(vec![4], 2, 1)], &ctx).unwrap();
        assert!(!phi.is_disjoint(&ctx).unwrap());
        assert_eq!(phi.value_at(&[4], &ctx), Rational::from_integer(3.into()));
        let ok = SchwartzBruhatSpec::new(1, vec![piece(vec![1], 1, 2), piece(vec![3], 2, 1)], &ctx).unwrap();
        assert!(ok.is_disjoint(&ctx).unwrap());
        assert!(SchwartzBruhatSpec::new(1, vec![piece(vec![9], 2, 1)], &ctx).is_err());
    }

    proptest! {
        #[test]
        fn refinement_preserves_measure(r0 in 0u64..25, r1 in 0u64..5, w0 in -5i64..5, w1 in -5i64..5,
                                        extra in 0u32..2) {
            let ctx = PrimeContext::new(5, 3).unwrap();
            let phi = SchwartzBruhatSpec::new(2, vec![
                piece(vec![r0, r0 % 5], 2, w0),
                piece(vec![r1, 0], 1, w1),
            ], &ctx).unwrap();
            let fine = phi.refine_to(2 + extra, &ctx).unwrap();
            prop_assert_eq!(fine.total_measure(&ctx), phi.total_measure(&ctx));
        }
    }
}
