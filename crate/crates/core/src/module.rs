//! Graded modules with a finite ordered basis, and their sparse elements.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::grading::Bidegree;
use crate::scalar::{CoefficientRing, Rational, RingElt, ScalarError};

/// A graded module: a finite ordered basis of named generators with
/// bidegrees, over an exact coefficient ring. Basis names are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedModule {
    ring: CoefficientRing,
    basis: Vec<(String, Bidegree)>,
    index: BTreeMap<String, usize>,
}

impl GradedModule {
    pub fn new(ring: CoefficientRing, basis: Vec<(String, Bidegree)>) -> Self {
        let mut index = BTreeMap::new();
        for (i, (name, _)) in basis.iter().enumerate() {
            let prev = index.insert(name.clone(), i);
            assert!(prev.is_none(), "duplicate basis name {name:?}");
        }
        GradedModule { ring, basis, index }
    }

    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[(String, Bidegree)] {
        &self.basis
    }

    pub fn name(&self, i: usize) -> &str {
        &self.basis[i].0
    }

    pub fn degree(&self, i: usize) -> Bidegree {
        self.basis[i].1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn zero(&self) -> ModuleElt {
        ModuleElt { terms: BTreeMap::new() }
    }

    pub fn generator(&self, i: usize) -> ModuleElt {
        let mut terms = BTreeMap::new();
        terms.insert(i, self.ring.one());
        ModuleElt { terms }
    }

    pub fn codim_span(&self) -> (i64, i64) {
        let min = self.basis.iter().map(|(_, g)| g.codim).min().unwrap_or(0);
        let max = self.basis.iter().map(|(_, g)| g.codim).max().unwrap_or(0);
        (min, max)
    }

    /// Same basis names and degrees over a different coefficient ring.
    pub fn with_ring(&self, ring: CoefficientRing) -> GradedModule {
        GradedModule::new(ring, self.basis.clone())
    }

    /// The common bidegree of a homogeneous element, if any (None for 0).
    pub fn degree_of(&self, elt: &ModuleElt) -> Result<Option<Bidegree>, ScalarError> {
        let mut deg = None;
        for (&i, coeff) in &elt.terms {
            let cd = coeff.degree()?.expect("nonzero coefficient");
            let d = self.degree(i) + cd;
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return Err(ScalarError::NotHomogeneous),
                _ => {}
            }
        }
        Ok(deg)
    }
}

/// A sparse module element: a finite map from basis indices to ring elements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModuleElt {
    terms: BTreeMap<usize, RingElt>,
}

impl ModuleElt {
    pub fn zero() -> Self {
        ModuleElt { terms: BTreeMap::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, RingElt)>) -> Self {
        let mut out = ModuleElt::zero();
        for (i, c) in terms {
            out.add_term(i, &c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &RingElt)> {
        self.terms.iter().map(|(&i, c)| (i, c))
    }

    pub fn coeff(&self, i: usize) -> Option<&RingElt> {
        self.terms.get(&i)
    }

    pub fn add_term(&mut self, i: usize, c: &RingElt) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&i) {
            Some(existing) => {
                let sum = existing.add(c);
                if sum.is_zero() {
                    self.terms.remove(&i);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(i, c.clone());
            }
        }
    }

    pub fn add(&self, other: &ModuleElt) -> ModuleElt {
        let mut out = self.clone();
        for (i, c) in other.terms() {
            out.add_term(i, c);
        }
        out
    }

    pub fn sub(&self, other: &ModuleElt) -> ModuleElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModuleElt {
        ModuleElt { terms: self.terms.iter().map(|(&i, c)| (i, c.neg())).collect() }
    }

    pub fn scale(&self, c: &RingElt) -> ModuleElt {
        let mut out = ModuleElt::zero();
        for (i, k) in self.terms() {
            out.add_term(i, &k.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, c: &Rational) -> ModuleElt {
        let mut out = ModuleElt::zero();
        for (i, k) in self.terms() {
            out.add_term(i, &k.scale(c));
        }
        out
    }

    pub fn with_sign(&self, sign: i64) -> ModuleElt {
        if sign.rem_euclid(2) == 0 { self.clone() } else { self.neg() }
    }

    /// Renders against a module's basis names, e.g. `1*w + -1/2*a`.
    pub fn display<'a>(&'a self, module: &'a GradedModule) -> ModuleEltDisplay<'a> {
        ModuleEltDisplay { elt: self, module }
    }
}

pub struct ModuleEltDisplay<'a> {
    elt: &'a ModuleElt,
    module: &'a GradedModule,
}

impl fmt::Display for ModuleEltDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elt.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.elt.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*{}", c, self.module.name(i))?;
        }
        Ok(())
    }
}

/// Shared handle used across structures; modules are immutable once built.
pub type ModuleRef = Arc<GradedModule>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn element_arithmetic_and_degrees() {
        let ring = CoefficientRing::Rationals;
        let m = GradedModule::new(
            ring,
            vec![("x".into(), Bidegree::new(1, 0)), ("y".into(), Bidegree::new(1, 0))],
        );
        let e = m.generator(0).add(&m.generator(1).scale_rat(&rat(-1, 2)));
        assert_eq!(m.degree_of(&e).unwrap(), Some(Bidegree::new(1, 0)));
        let cancelled = e.sub(&e);
        assert!(cancelled.is_zero());
        assert_eq!(m.degree_of(&cancelled).unwrap(), None);
    }

    #[test]
    fn mixed_degrees_are_rejected() {
        let ring = CoefficientRing::Rationals;
        let m = GradedModule::new(
            ring,
            vec![("x".into(), Bidegree::new(1, 0)), ("w".into(), Bidegree::new(2, 1))],
        );
        let e = m.generator(0).add(&m.generator(1));
        assert!(m.degree_of(&e).is_err());
    }
}
