//! Bidegrees and Koszul signs.
//!
//! Everything graded in this crate carries a bidegree: the integer
//! codimension degree and the Z/2 local-system degree. Maps cross graded
//! elements with the sign `(-1)^(d * sum(codim - 1))` computed here.

use std::fmt;
use std::ops::{Add, Sub};

/// A (codimension, local-system) bidegree. Addition is componentwise with
/// the local-system component reduced mod 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bidegree {
    pub codim: i64,
    pub ls: u8,
}

impl Bidegree {
    pub fn new(codim: i64, ls: i64) -> Self {
        Bidegree { codim, ls: ls.rem_euclid(2) as u8 }
    }

    pub const ZERO: Bidegree = Bidegree { codim: 0, ls: 0 };

    /// Shift by (p, q): maps (a, b) to (a + p, b + q mod 2).
    pub fn shifted(&self, p: i64, q: i64) -> Self {
        Bidegree::new(self.codim + p, self.ls as i64 + q)
    }
}

impl Add for Bidegree {
    type Output = Bidegree;
    fn add(self, rhs: Bidegree) -> Bidegree {
        Bidegree::new(self.codim + rhs.codim, self.ls as i64 + rhs.ls as i64)
    }
}

impl Sub for Bidegree {
    type Output = Bidegree;
    fn sub(self, rhs: Bidegree) -> Bidegree {
        Bidegree::new(self.codim - rhs.codim, self.ls as i64 - rhs.ls as i64)
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.codim, self.ls)
    }
}

/// The sign `(-1)^(d * sum_i(codim_i - 1))` picked up when a degree-`d`
/// operator crosses the listed elements in the bar-shifted grading.
pub fn koszul_sign(d: i64, degrees: &[Bidegree]) -> i64 {
    let total: i64 = degrees.iter().map(|g| g.codim - 1).sum();
    if (d * total).rem_euclid(2) == 0 { 1 } else { -1 }
}

/// Exponent parity helper: -1 to the given power.
pub fn sign_pow(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 { 1 } else { -1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn koszul_sign_examples() {
        // Zero exponent.
        assert_eq!(koszul_sign(0, &[Bidegree::new(5, 1), Bidegree::new(-2, 0)]), 1);
        // (-1)^(1 * (2 - 1)) = -1.
        assert_eq!(koszul_sign(1, &[Bidegree::new(2, 0)]), -1);
        // sum(codim - 1) = 0 + 2 = 2: +1.
        assert_eq!(koszul_sign(1, &[Bidegree::new(1, 0), Bidegree::new(3, 1)]), 1);
    }

    #[test]
    fn bidegree_shift_and_add() {
        let g = Bidegree::new(1, 1);
        assert_eq!(g.shifted(2, 1), Bidegree::new(3, 0));
        assert_eq!(g + Bidegree::new(0, 1), Bidegree::new(1, 0));
        assert_eq!(g - Bidegree::new(2, 1), Bidegree::new(-1, 0));
    }

    proptest! {
        // koszul_sign(d, xs ++ ys) = koszul_sign(d, xs) * koszul_sign(d, ys).
        #[test]
        fn koszul_sign_is_multiplicative(
            d in -3i64..4,
            xs in proptest::collection::vec((-4i64..5, 0i64..2), 0..6),
            ys in proptest::collection::vec((-4i64..5, 0i64..2), 0..6),
        ) {
            let xs: Vec<Bidegree> = xs.into_iter().map(|(c, l)| Bidegree::new(c, l)).collect();
            let ys: Vec<Bidegree> = ys.into_iter().map(|(c, l)| Bidegree::new(c, l)).collect();
            let mut both = xs.clone();
            both.extend_from_slice(&ys);
            prop_assert_eq!(koszul_sign(d, &both), koszul_sign(d, &xs) * koszul_sign(d, &ys));
        }
    }
}
