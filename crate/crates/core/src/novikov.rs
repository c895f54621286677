//! Discrete submonoids of energy/index pairs and truncated Novikov scalars.
//!
//! A gapped monoid is generated by finitely many pairs (E, mu) with E > 0,
//! so enumeration below any energy bound is finite and every truncated
//! computation terminates. A Novikov scalar is a finite sum
//! `sum a_beta eps^mu(beta) T^E(beta)` truncated at an energy cutoff; `eps`
//! carries bidegree (1, 0) and `T` bidegree (0, 0).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::grading::{sign_pow, Bidegree};
use crate::scalar::{parse_rational, Rational, RingElt, ScalarError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NovikovError {
    #[error("invalid generator {0}: energy must be strictly positive")]
    InvalidGenerator(MonoidElt),
    #[error("operands live over different monoids")]
    MonoidMismatch,
    #[error("{0}")]
    Scalar(#[from] ScalarError),
}

/// An element (E, mu) of a discrete submonoid of R_{>=0} x Z.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoidElt {
    pub energy: Rational,
    pub maslov: i64,
}

impl MonoidElt {
    pub fn new(energy: Rational, maslov: i64) -> Self {
        MonoidElt { energy, maslov }
    }

    pub fn zero() -> Self {
        MonoidElt { energy: Rational::zero(), maslov: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.energy.is_zero() && self.maslov == 0
    }

    pub fn add(&self, other: &MonoidElt) -> MonoidElt {
        MonoidElt { energy: &self.energy + &other.energy, maslov: self.maslov + other.maslov }
    }

    /// Bidegree of the monomial eps^mu T^E: (mu, mu mod 2).
    pub fn degree(&self) -> Bidegree {
        Bidegree::new(self.maslov, self.maslov)
    }

    /// Parses the serialized form `E=p/q,mu=m`.
    pub fn parse(s: &str) -> Result<MonoidElt, NovikovError> {
        let err = || {
            NovikovError::Scalar(ScalarError::Parse {
                literal: s.to_string(),
                reason: "expected E=p/q,mu=m".to_string(),
            })
        };
        let (e_part, mu_part) = s.split_once(',').ok_or_else(err)?;
        let e = e_part.trim().strip_prefix("E=").ok_or_else(err)?;
        let mu = mu_part.trim().strip_prefix("mu=").ok_or_else(err)?;
        Ok(MonoidElt {
            energy: parse_rational(e)?,
            maslov: mu.trim().parse().map_err(|_| err())?,
        })
    }
}

impl fmt::Display for MonoidElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E={}/{},mu={}", self.energy.numer(), self.energy.denom(), self.maslov)
    }
}

/// A finitely generated discrete submonoid of R_{>=0} x Z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GappedMonoid {
    generators: Vec<MonoidElt>,
}

impl GappedMonoid {
    /// Rejects generators with E <= 0: zero-energy generators would make
    /// energy fibers infinite.
    pub fn new(generators: Vec<MonoidElt>) -> Result<Self, NovikovError> {
        for g in &generators {
            if g.energy <= Rational::zero() {
                return Err(NovikovError::InvalidGenerator(g.clone()));
            }
        }
        Ok(GappedMonoid { generators })
    }

    pub fn trivial() -> Self {
        GappedMonoid { generators: Vec::new() }
    }

    pub fn generators(&self) -> &[MonoidElt] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Minimal energy of a nonzero generator, if any.
    pub fn min_energy(&self) -> Option<Rational> {
        self.generators.iter().map(|g| g.energy.clone()).min()
    }

    /// All sums of generators with total energy <= e_max, sorted by (E, mu),
    /// without duplicates; always contains (0, 0).
    pub fn enumerate(&self, e_max: &Rational) -> Vec<MonoidElt> {
        let mut seen: BTreeSet<MonoidElt> = BTreeSet::new();
        let mut frontier = vec![MonoidElt::zero()];
        if e_max < &Rational::zero() {
            return Vec::new();
        }
        seen.insert(MonoidElt::zero());
        while let Some(elt) = frontier.pop() {
            for g in &self.generators {
                let next = elt.add(g);
                if &next.energy <= e_max && seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        seen.into_iter().collect()
    }
}

/// A truncated Novikov scalar over a gapped monoid: a finite map from
/// monoid elements with E <= cutoff to ring coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NovikovScalar {
    monoid: GappedMonoid,
    cutoff: Rational,
    coeffs: BTreeMap<MonoidElt, RingElt>,
}

impl NovikovScalar {
    pub fn zero(monoid: GappedMonoid, cutoff: Rational) -> Self {
        NovikovScalar { monoid, cutoff, coeffs: BTreeMap::new() }
    }

    pub fn term(
        monoid: GappedMonoid,
        cutoff: Rational,
        beta: MonoidElt,
        coeff: RingElt,
    ) -> Self {
        let mut s = NovikovScalar::zero(monoid, cutoff);
        s.add_term(beta, &coeff);
        s
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MonoidElt, &RingElt)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, beta: MonoidElt, coeff: &RingElt) {
        if coeff.is_zero() || beta.energy > self.cutoff {
            return;
        }
        let entry = self.coeffs.entry(beta.clone()).or_insert_with(|| coeff.ring().zero());
        *entry = entry.add(coeff);
        if entry.is_zero() {
            self.coeffs.remove(&beta);
        }
    }

    pub fn add(&self, other: &NovikovScalar) -> Result<NovikovScalar, NovikovError> {
        if self.monoid != other.monoid {
            return Err(NovikovError::MonoidMismatch);
        }
        let cutoff = self.cutoff.clone().min(other.cutoff.clone());
        let mut out = NovikovScalar::zero(self.monoid.clone(), cutoff);
        for (b, c) in self.coeffs().chain(other.coeffs()) {
            out.add_term(b.clone(), c);
        }
        Ok(out)
    }
}

/// Convolution product of truncated Novikov scalars: energies and Maslov
/// indices add, terms above the effective cutoff are dropped. The effective
/// cutoff is the minimum of both operands' cutoffs and `e_max`.
pub fn novikov_mul(
    a: &NovikovScalar,
    b: &NovikovScalar,
    e_max: &Rational,
) -> Result<NovikovScalar, NovikovError> {
    if a.monoid != b.monoid {
        return Err(NovikovError::MonoidMismatch);
    }
    let cutoff = a.cutoff.clone().min(b.cutoff.clone()).min(e_max.clone());
    let mut out = NovikovScalar::zero(a.monoid.clone(), cutoff);
    for (b1, c1) in a.coeffs() {
        for (b2, c2) in b.coeffs() {
            out.add_term(b1.add(b2), &c1.mul(c2));
        }
    }
    Ok(out)
}

/// The sign `(-1)^((codim + ls + 1) * r1)` of moving `eps^r1` leftward past
/// an element of bidegree (codim, ls) in the Novikov bimodule.
pub fn left_action_sign(codim: i64, ls: u8, r1: i64) -> i64 {
    sign_pow((codim + ls as i64 + 1) * r1)
}

/// Enumerates `monoid` up to `e_max`; thin wrapper kept for symmetry with
/// the other operations.
pub fn enumerate_monoid(monoid: &GappedMonoid, e_max: &Rational) -> Vec<MonoidElt> {
    monoid.enumerate(e_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn me(num: i64, den: i64, mu: i64) -> MonoidElt {
        MonoidElt::new(rat(num, den), mu)
    }

    #[test]
    fn enumerate_examples() {
        let empty = GappedMonoid::trivial();
        assert_eq!(empty.enumerate(&rat(5, 1)), vec![MonoidElt::zero()]);

        let one_gen = GappedMonoid::new(vec![me(1, 1, 2)]).unwrap();
        assert_eq!(
            one_gen.enumerate(&rat(5, 2)),
            vec![MonoidElt::zero(), me(1, 1, 2), me(2, 1, 4)]
        );

        let two_gen = GappedMonoid::new(vec![me(1, 1, 1), me(3, 2, 0)]).unwrap();
        assert_eq!(
            two_gen.enumerate(&rat(3, 1)),
            vec![
                MonoidElt::zero(),
                me(1, 1, 1),
                me(3, 2, 0),
                me(2, 1, 2),
                me(5, 2, 1),
                me(3, 1, 0),
                me(3, 1, 3),
            ]
        );
    }

    #[test]
    fn zero_energy_generators_rejected() {
        let err = GappedMonoid::new(vec![me(0, 1, 3)]).unwrap_err();
        assert!(matches!(err, NovikovError::InvalidGenerator(_)));
    }

    #[test]
    fn mul_examples() {
        let ring = CoefficientRing::Polynomials { num_alphas: 1 };
        let g = GappedMonoid::new(vec![me(1, 1, 2), me(3, 2, 0)]).unwrap();
        let cutoff = rat(10, 1);
        let eps2t = NovikovScalar::term(g.clone(), cutoff.clone(), me(1, 1, 2), ring.one());
        let t32 = NovikovScalar::term(g.clone(), cutoff.clone(), me(3, 2, 0), ring.one());
        let prod = novikov_mul(&eps2t, &t32, &cutoff).unwrap();
        assert_eq!(
            prod,
            NovikovScalar::term(g.clone(), cutoff.clone(), me(5, 2, 2), ring.one())
        );
        // Truncation at E_max = 2 kills the product.
        let trunc = novikov_mul(&eps2t, &t32, &rat(2, 1)).unwrap();
        assert!(trunc.is_zero());
        // Ring coefficients multiply: (a1 T) * (2 T) = 2 a1 T^2.
        let gt = GappedMonoid::new(vec![me(1, 1, 0)]).unwrap();
        let at = NovikovScalar::term(gt.clone(), cutoff.clone(), me(1, 1, 0), ring.alpha(0));
        let twot = NovikovScalar::term(gt.clone(), cutoff.clone(), me(1, 1, 0), ring.from_i64(2));
        let p = novikov_mul(&at, &twot, &cutoff).unwrap();
        assert_eq!(
            p,
            NovikovScalar::term(gt, cutoff, me(2, 1, 0), ring.alpha(0).scale(&rat(2, 1)))
        );
    }

    #[test]
    fn mul_requires_shared_monoid() {
        let ring = CoefficientRing::Rationals;
        let g1 = GappedMonoid::new(vec![me(1, 1, 0)]).unwrap();
        let g2 = GappedMonoid::new(vec![me(1, 2, 0)]).unwrap();
        let a = NovikovScalar::term(g1, rat(5, 1), me(1, 1, 0), ring.one());
        let b = NovikovScalar::term(g2, rat(5, 1), me(1, 2, 0), ring.one());
        assert_eq!(novikov_mul(&a, &b, &rat(5, 1)), Err(NovikovError::MonoidMismatch));
    }

    #[test]
    fn left_action_sign_examples() {
        assert_eq!(left_action_sign(1, 0, 1), 1);
        assert_eq!(left_action_sign(0, 0, 1), -1);
        assert_eq!(left_action_sign(7, 1, 0), 1);
    }

    #[test]
    fn monoid_elt_serialization_round_trips() {
        let e = me(7, 3, -2);
        assert_eq!(MonoidElt::parse(&e.to_string()).unwrap(), e);
    }

    proptest! {
        // Closure: for beta1, beta2 in the enumeration with small total
        // energy, the sum is in the enumeration.
        #[test]
        fn enumeration_is_closed(
            gens in proptest::collection::vec((1i64..4, 1i64..3, -2i64..3), 1..3),
            e_max_num in 0i64..7,
        ) {
            let gens: Vec<MonoidElt> = gens.into_iter().map(|(n, d, mu)| me(n, d, mu)).collect();
            let monoid = GappedMonoid::new(gens).unwrap();
            let e_max = rat(e_max_num, 1);
            let all = monoid.enumerate(&e_max);
            for b1 in &all {
                for b2 in &all {
                    let s = b1.add(b2);
                    if s.energy <= e_max {
                        prop_assert!(all.contains(&s));
                    }
                }
            }
        }

        // left_action_sign(c, r1) * left_action_sign(c, r2) = left_action_sign(c, r1 + r2).
        #[test]
        fn left_action_sign_is_additive(codim in -4i64..5, ls in 0u8..2, r1 in -4i64..5, r2 in -4i64..5) {
            prop_assert_eq!(
                left_action_sign(codim, ls, r1) * left_action_sign(codim, ls, r2),
                left_action_sign(codim, ls, r1 + r2)
            );
        }
    }
}
