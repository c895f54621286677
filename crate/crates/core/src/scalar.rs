//! Exact coefficient rings: the rationals and polynomial rings Q[a1..an']
//! with every generator a_j of bidegree (2, 0).
//!
//! Elements are sparse maps from exponent vectors to arbitrary-precision
//! rationals. The textual literals are `p/q` for rationals and sums of
//! `c*a1^e1*...*an^en` for polynomials; parsing and printing round-trip
//! bit-exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grading::Bidegree;

/// Exact rational number used throughout the crate.
pub type Rational = BigRational;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ScalarError {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(CoefficientRing, CoefficientRing),
    #[error("element is not homogeneous in the alpha grading")]
    NotHomogeneous,
    #[error("cannot parse scalar literal {literal:?}: {reason}")]
    Parse { literal: String, reason: String },
    #[error("division is only available over the rationals")]
    NotAField,
}

/// The coefficient ring: exact rationals, or polynomials with rational
/// coefficients in alpha generators of bidegree (2, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoefficientRing {
    Rationals,
    Polynomials { num_alphas: usize },
}

impl CoefficientRing {
    pub fn num_alphas(&self) -> usize {
        match self {
            CoefficientRing::Rationals => 0,
            CoefficientRing::Polynomials { num_alphas } => *num_alphas,
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, CoefficientRing::Rationals)
    }

    pub fn zero(&self) -> RingElt {
        RingElt { ring: *self, terms: BTreeMap::new() }
    }

    pub fn one(&self) -> RingElt {
        self.constant(Rational::one())
    }

    pub fn constant(&self, c: Rational) -> RingElt {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; self.num_alphas()], c);
        }
        RingElt { ring: *self, terms }
    }

    pub fn from_i64(&self, n: i64) -> RingElt {
        self.constant(rat(n, 1))
    }

    /// The generator `a_{j+1}` (zero-based index).
    pub fn alpha(&self, j: usize) -> RingElt {
        assert!(j < self.num_alphas(), "alpha index out of range");
        let mut exp = vec![0; self.num_alphas()];
        exp[j] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exp, Rational::one());
        RingElt { ring: *self, terms }
    }
}

impl fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientRing::Rationals => write!(f, "rationals"),
            CoefficientRing::Polynomials { num_alphas } => write!(f, "polynomials {num_alphas}"),
        }
    }
}

/// A ring element: a sparse polynomial (a plain rational when the ring has
/// no alpha generators). Keys are exponent vectors of length `num_alphas`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElt {
    ring: CoefficientRing,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl RingElt {
    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    fn assert_same_ring(&self, other: &RingElt) {
        assert_eq!(self.ring, other.ring, "mixed coefficient rings");
    }

    pub fn add(&self, other: &RingElt) -> RingElt {
        self.assert_same_ring(other);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(e);
            }
        }
        RingElt { ring: self.ring, terms }
    }

    pub fn sub(&self, other: &RingElt) -> RingElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RingElt {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect();
        RingElt { ring: self.ring, terms }
    }

    pub fn mul(&self, other: &RingElt) -> RingElt {
        self.assert_same_ring(other);
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exp: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let entry = terms.entry(exp).or_insert_with(Rational::zero);
                *entry += c1 * c2;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        RingElt { ring: self.ring, terms }
    }

    pub fn scale(&self, c: &Rational) -> RingElt {
        if c.is_zero() {
            return self.ring.zero();
        }
        let terms = self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect();
        RingElt { ring: self.ring, terms }
    }

    /// Multiplies by -1 when `sign` is odd.
    pub fn with_sign(&self, sign: i64) -> RingElt {
        if sign.rem_euclid(2) == 0 { self.clone() } else { self.neg() }
    }

    /// Exact inverse; only defined over the rationals.
    pub fn inverse(&self) -> Result<RingElt, ScalarError> {
        if !self.ring.is_field() {
            return Err(ScalarError::NotAField);
        }
        let c = self.as_rational().ok_or(ScalarError::NotAField)?;
        if c.is_zero() {
            return Err(ScalarError::NotAField);
        }
        Ok(self.ring.constant(Rational::one() / c))
    }

    /// The value as a plain rational, when the element is constant.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            if e.iter().all(|&x| x == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    /// Total alpha-degree when the element is homogeneous, `None` for 0.
    pub fn alpha_degree(&self) -> Result<Option<u32>, ScalarError> {
        let mut deg = None;
        for e in self.terms.keys() {
            let d: u32 = e.iter().sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return Err(ScalarError::NotHomogeneous),
                _ => {}
            }
        }
        Ok(deg)
    }

    /// The bidegree contributed by a homogeneous coefficient: (2 * alpha-degree, 0).
    pub fn degree(&self) -> Result<Option<Bidegree>, ScalarError> {
        Ok(self.alpha_degree()?.map(|d| Bidegree::new(2 * d as i64, 0)))
    }

    /// The part of total alpha-degree `t` (always alpha-homogeneous).
    pub fn alpha_part(&self, t: u32) -> RingElt {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() == t)
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        RingElt { ring: self.ring, terms }
    }

    pub fn max_alpha_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Substitutes `alpha_j = 0` for all j, landing in the rationals.
    pub fn at_alpha_zero(&self) -> RingElt {
        let c = self
            .terms
            .get(&vec![0; self.ring.num_alphas()])
            .cloned()
            .unwrap_or_else(Rational::zero);
        CoefficientRing::Rationals.constant(c)
    }

    /// Reinterprets a rational constant in a (possibly larger) ring.
    pub fn into_ring(&self, ring: CoefficientRing) -> RingElt {
        if self.ring == ring {
            return self.clone();
        }
        let c = self
            .as_rational()
            .expect("only constants can change coefficient ring");
        ring.constant(c)
    }

    /// The coefficient of the monomial with exponent vector `exp`.
    pub fn coeff_of(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }
}

fn fmt_rational(c: &Rational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

impl fmt::Display for RingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| format!("a{}^{}", j + 1, k))
                .collect();
            if first {
                first = false;
            } else {
                write!(f, " + ")?;
            }
            if mono.is_empty() {
                write!(f, "{}", fmt_rational(c))?;
            } else {
                write!(f, "{}*{}", fmt_rational(c), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Parses a rational literal `p/q` or a plain integer `p`.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let s = s.trim();
    let err = |reason: &str| ScalarError::Parse { literal: s.to_string(), reason: reason.to_string() };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| err("bad numerator"))?;
    let d = BigInt::from_str(den).map_err(|_| err("bad denominator"))?;
    if d.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

/// Parses a ring-element literal: a signed sum of `c*a1^e1*...*an^en`
/// monomial terms, where the `c` and any `a_j^e` factor may be omitted.
pub fn parse_ring_elt(s: &str, ring: CoefficientRing) -> Result<RingElt, ScalarError> {
    let s = s.trim();
    let err = |reason: String| ScalarError::Parse { literal: s.to_string(), reason };
    if s.is_empty() {
        return Err(err("empty literal".into()));
    }
    // Split into signed terms at top-level +/- (a leading sign binds to the
    // first term; exponents are unsigned so no sign can appear mid-term).
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut seen_any = false;
    for ch in s.chars() {
        match ch {
            '+' | '-' if seen_any && !cur.trim().is_empty() => {
                terms.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            }
            '-' if cur.trim().is_empty() => {
                neg = !neg;
                seen_any = true;
            }
            '+' if cur.trim().is_empty() => {
                seen_any = true;
            }
            _ => {
                cur.push(ch);
                seen_any = true;
            }
        }
    }
    if !cur.trim().is_empty() {
        terms.push((neg, cur));
    }
    let mut out = ring.zero();
    for (negate, term) in terms {
        let mut coeff = Rational::one();
        let mut exp = vec![0u32; ring.num_alphas()];
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(err(format!("empty factor in term {term:?}")));
            }
            if let Some(rest) = factor.strip_prefix('a') {
                let (idx_s, pow_s) = match rest.split_once('^') {
                    Some((i, p)) => (i, p),
                    None => (rest, "1"),
                };
                let idx: usize = idx_s
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad alpha index in {factor:?}")))?;
                let pow: u32 = pow_s
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad exponent in {factor:?}")))?;
                if idx == 0 || idx > ring.num_alphas() {
                    return Err(err(format!("alpha index {idx} out of range for {ring}")));
                }
                exp[idx - 1] += pow;
            } else {
                coeff *= parse_rational(factor)?;
            }
        }
        if negate {
            coeff = -coeff;
        }
        let mut t = BTreeMap::new();
        if !coeff.is_zero() {
            t.insert(exp, coeff);
        }
        out = out.add(&RingElt { ring, terms: t });
    }
    Ok(out)
}
