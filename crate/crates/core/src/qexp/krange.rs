use core::fmt;

use num_integer::Integer;

/// A set of integers `{k : k = residue mod modulus, lower <= k <= upper}`,
/// with either bound possibly absent. Strict bounds are normalized to closed
/// ones on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KRange {
    modulus: u32,
    residue: i64,
    lower: Option<i64>,
    upper: Option<i64>,
    empty: bool,
}

/// An arithmetic progression `start + step * j` with `j` ranging over an
/// interval of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progression {
    pub start: i64,
    pub step: u32,
    pub j_lower: Option<i64>,
    pub j_upper: Option<i64>,
}

impl KRange {
    /// All integers.
    pub fn all() -> Self {
        Self { modulus: 1, residue: 0, lower: None, upper: None, empty: false }
    }

    pub fn empty() -> Self {
        Self { modulus: 1, residue: 0, lower: Some(1), upper: Some(0), empty: true }
    }

    /// `{k : k = residue mod modulus}`.
    pub fn congruent(residue: i64, modulus: u32) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self { modulus, residue: residue.rem_euclid(modulus as i64), lower: None, upper: None, empty: false }
    }

    pub fn between(lower: i64, upper: i64) -> Self {
        Self::all().at_least(lower).at_most(upper)
    }

    pub fn at_least(mut self, k: i64) -> Self {
        self.lower = Some(self.lower.map_or(k, |l| l.max(k)));
        self.normalized()
    }

    pub fn greater_than(self, k: i64) -> Self {
        self.at_least(k + 1)
    }

    pub fn at_most(mut self, k: i64) -> Self {
        self.upper = Some(self.upper.map_or(k, |u| u.min(k)));
        self.normalized()
    }

    pub fn less_than(self, k: i64) -> Self {
        self.at_most(k - 1)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn residue(&self) -> i64 {
        self.residue
    }

    /// Least admissible `k`, if bounded below.
    pub fn lower(&self) -> Option<i64> {
        self.lower
    }

    /// Greatest admissible `k`, if bounded above.
    pub fn upper(&self) -> Option<i64> {
        self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn bounded_below(&self) -> bool {
        self.empty || self.lower.is_some()
    }

    pub fn bounded_above(&self) -> bool {
        self.empty || self.upper.is_some()
    }

    pub fn contains(&self, k: i64) -> bool {
        !self.empty
            && (k - self.residue).rem_euclid(self.modulus as i64) == 0
            && self.lower.is_none_or(|l| k >= l)
            && self.upper.is_none_or(|u| k <= u)
    }

    /// Intersection, combining the congruences by the Chinese remainder theorem.
    pub fn intersect(&self, other: &KRange) -> KRange {
        if self.empty || other.empty {
            return KRange::empty();
        }
        let (m1, m2) = (self.modulus as i64, other.modulus as i64);
        let g = m1.extended_gcd(&m2);
        let diff = other.residue - self.residue;
        if diff % g.gcd != 0 {
            return KRange::empty();
        }
        let lcm = m1 / g.gcd * m2;
        let step = (diff / g.gcd) as i128 * g.x as i128 % (m2 / g.gcd) as i128;
        let residue = (self.residue as i128 + m1 as i128 * step).rem_euclid(lcm as i128) as i64;
        let mut out = KRange {
            modulus: u32::try_from(lcm).expect("modulus overflow"),
            residue,
            lower: self.lower,
            upper: self.upper,
            empty: false,
        };
        if let Some(l) = other.lower {
            out = out.at_least(l);
        }
        if let Some(u) = other.upper {
            out = out.at_most(u);
        }
        out.normalized()
    }

    /// `(self ∩ (-inf, cut), self ∩ [cut, inf))`.
    pub fn split_at(&self, cut: i64) -> (KRange, KRange) {
        (self.less_than(cut), self.at_least(cut))
    }

    /// `{k + shift : k in self}`.
    pub fn shifted(&self, shift: i64) -> KRange {
        if self.empty {
            return *self;
        }
        KRange {
            modulus: self.modulus,
            residue: (self.residue + shift).rem_euclid(self.modulus as i64),
            lower: self.lower.map(|l| l + shift),
            upper: self.upper.map(|u| u + shift),
            empty: false,
        }
    }

    /// The range as `start + modulus * j`. `start` is the least element when
    /// bounded below, else the greatest element when bounded above.
    pub fn progression(&self) -> Option<Progression> {
        if self.empty {
            return None;
        }
        let step = self.modulus;
        let m = step as i64;
        Some(match (self.lower, self.upper) {
            (Some(l), upper) => Progression {
                start: l,
                step,
                j_lower: Some(0),
                j_upper: upper.map(|u| Integer::div_floor(&(u - l), &m)),
            },
            (None, Some(u)) => Progression { start: u, step, j_lower: None, j_upper: Some(0) },
            (None, None) => Progression { start: self.residue, step, j_lower: None, j_upper: None },
        })
    }

    /// Snaps bounds onto the congruence class and detects emptiness.
    fn normalized(mut self) -> Self {
        if self.empty {
            return KRange::empty();
        }
        let m = self.modulus as i64;
        if let Some(l) = self.lower {
            self.lower = Some(l + (self.residue - l).rem_euclid(m));
        }
        if let Some(u) = self.upper {
            self.upper = Some(u - (u - self.residue).rem_euclid(m));
        }
        if let (Some(l), Some(u)) = (self.lower, self.upper) {
            if l > u {
                return KRange::empty();
            }
        }
        self
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return f.write_str("{}");
        }
        match self.lower {
            Some(l) => write!(f, "{l} <= ")?,
            None => f.write_str("-inf < ")?,
        }
        f.write_str("k")?;
        match self.upper {
            Some(u) => write!(f, " <= {u}")?,
            None => f.write_str(" < inf")?,
        }
        if self.modulus > 1 {
            write!(f, ", k = {} mod {}", self.residue, self.modulus)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bounds_snap_to_class() {
        let r = KRange::congruent(1, 3).at_least(-4).less_than(9);
        assert_eq!((r.lower(), r.upper()), (Some(-2), Some(7)));
        assert!(KRange::congruent(0, 2).at_least(3).at_most(3).is_empty());
        assert!(KRange::between(2, 1).is_empty());
        assert_eq!(r.to_string(), "-2 <= k <= 7, k = 1 mod 3");
    }

    #[test]
    fn crt_combines_classes() {
        let a = KRange::congruent(1, 4).at_least(0);
        let b = KRange::congruent(3, 6);
        let c = a.intersect(&b);
        assert_eq!((c.modulus(), c.residue(), c.lower()), (12, 9, Some(9)));
        assert!(KRange::congruent(0, 4).intersect(&KRange::congruent(1, 2)).is_empty());
    }

    #[test]
    fn progression_shapes() {
        let p = KRange::congruent(0, 2).at_most(5).progression().unwrap();
        assert_eq!((p.start, p.step, p.j_lower, p.j_upper), (4, 2, None, Some(0)));
        let p = KRange::congruent(1, 3).at_least(0).at_most(10).progression().unwrap();
        assert_eq!((p.start, p.j_lower, p.j_upper), (1, Some(0), Some(3)));
    }

    proptest! {
        #[test]
        fn intersection_is_pointwise(r1 in -5i64..5, m1 in 1u32..7, r2 in -5i64..5, m2 in 1u32..7,
                                     l1 in -20i64..20, u2 in -20i64..20) {
            let a = KRange::congruent(r1, m1).at_least(l1);
            let b = KRange::congruent(r2, m2).at_most(u2);
            let c = a.intersect(&b);
            for k in -40..40 {
                prop_assert_eq!(c.contains(k), a.contains(k) && b.contains(k));
            }
            let (lo, hi) = a.split_at(u2);
            for k in -40..40 {
                prop_assert_eq!(a.contains(k), lo.contains(k) || hi.contains(k));
                prop_assert!(!(lo.contains(k) && hi.contains(k)));
                prop_assert_eq!(a.shifted(3).contains(k + 3), a.contains(k));
            }
        }
    }
}
