//! Degree-checked sparse matrices between graded modules, the graded
//! unipotent inverse, and the small exact linear-algebra kernel used for
//! cohomology ranks and order-by-order solves.
//!
//! Degree checking happens at construction time: a nonzero entry in row `t`
//! (target) and column `s` (source) with coefficient `c` must satisfy
//! `deg(t) + deg(c) = deg(s) + degree(matrix)`, so that applying the matrix
//! to a homogeneous element produces a homogeneous element.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grading::Bidegree;
use crate::module::{ModuleElt, ModuleRef};
use crate::scalar::{Rational, RingElt};
use num_traits::{One, Zero};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("entry ({target}, {from_basis}) violates degree bookkeeping")]
    DegreeMismatch { target: String, from_basis: String },
    #[error("matrix shapes are incompatible")]
    ShapeMismatch,
    #[error("matrix is not unipotent: identity minus input has an entry of zero alpha-degree")]
    NotUnipotent,
    #[error("Neumann series did not terminate within {bound} terms")]
    NotNilpotent { bound: usize },
    #[error("linear system has no solution")]
    NoSolution,
}

/// A sparse graded matrix. Entries are keyed (target index, source index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedMatrix {
    source: ModuleRef,
    target: ModuleRef,
    degree: Bidegree,
    entries: BTreeMap<(usize, usize), RingElt>,
}

impl GradedMatrix {
    pub fn zero(source: ModuleRef, target: ModuleRef, degree: Bidegree) -> Self {
        GradedMatrix { source, target, degree, entries: BTreeMap::new() }
    }

    pub fn identity(module: ModuleRef) -> Self {
        let mut m = GradedMatrix::zero(module.clone(), module.clone(), Bidegree::ZERO);
        for i in 0..module.dim() {
            m.entries.insert((i, i), module.ring().one());
        }
        m
    }

    pub fn source(&self) -> &ModuleRef {
        &self.source
    }

    pub fn target(&self) -> &ModuleRef {
        &self.target
    }

    pub fn degree(&self) -> Bidegree {
        self.degree
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &RingElt)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts (adds) an entry, enforcing the degree rule.
    pub fn add_entry(&mut self, target: usize, source: usize, c: &RingElt) -> Result<(), MatrixError> {
        if c.is_zero() {
            return Ok(());
        }
        let cdeg = c.degree().map_err(|_| MatrixError::DegreeMismatch {
            target: self.target.name(target).to_string(),
            from_basis: self.source.name(source).to_string(),
        })?;
        let cdeg = cdeg.expect("nonzero coefficient");
        if self.target.degree(target) + cdeg != self.source.degree(source) + self.degree {
            return Err(MatrixError::DegreeMismatch {
                target: self.target.name(target).to_string(),
                from_basis: self.source.name(source).to_string(),
            });
        }
        let entry = self.entries.entry((target, source)).or_insert_with(|| c.ring().zero());
        *entry = entry.add(c);
        if entry.is_zero() {
            self.entries.remove(&(target, source));
        }
        Ok(())
    }

    /// Builds a matrix column by column from images of basis elements.
    pub fn from_images(
        source: ModuleRef,
        target: ModuleRef,
        degree: Bidegree,
        images: &[ModuleElt],
    ) -> Result<Self, MatrixError> {
        assert_eq!(images.len(), source.dim());
        let mut m = GradedMatrix::zero(source, target, degree);
        for (s, img) in images.iter().enumerate() {
            for (t, c) in img.terms() {
                m.add_entry(t, s, c)?;
            }
        }
        Ok(m)
    }

    pub fn column(&self, source: usize) -> ModuleElt {
        let mut out = ModuleElt::zero();
        for ((t, s), c) in &self.entries {
            if *s == source {
                out.add_term(*t, c);
            }
        }
        out
    }

    pub fn apply(&self, elt: &ModuleElt) -> ModuleElt {
        let mut out = ModuleElt::zero();
        for (s, c) in elt.terms() {
            for ((t, s2), e) in &self.entries {
                if *s2 == s {
                    out.add_term(*t, &e.mul(c));
                }
            }
        }
        out
    }

    pub fn apply_basis(&self, source: usize) -> ModuleElt {
        self.column(source)
    }

    pub fn add(&self, other: &GradedMatrix) -> Result<GradedMatrix, MatrixError> {
        if self.source != other.source || self.target != other.target || self.degree != other.degree {
            return Err(MatrixError::ShapeMismatch);
        }
        let mut out = self.clone();
        for ((t, s), c) in &other.entries {
            out.add_entry(*t, *s, c)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> GradedMatrix {
        let entries = self.entries.iter().map(|(k, c)| (*k, c.neg())).collect();
        GradedMatrix { source: self.source.clone(), target: self.target.clone(), degree: self.degree, entries }
    }

    pub fn sub(&self, other: &GradedMatrix) -> Result<GradedMatrix, MatrixError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &RingElt) -> Result<GradedMatrix, MatrixError> {
        // Scaling by a homogeneous coefficient shifts the matrix degree.
        let shift = c.degree().map_err(|_| MatrixError::ShapeMismatch)?;
        let Some(shift) = shift else {
            return Ok(GradedMatrix::zero(self.source.clone(), self.target.clone(), self.degree));
        };
        let mut out =
            GradedMatrix::zero(self.source.clone(), self.target.clone(), self.degree + shift);
        for ((t, s), e) in &self.entries {
            out.add_entry(*t, *s, &e.mul(c))?;
        }
        Ok(out)
    }

    /// `self . other` (apply `other` first).
    pub fn compose(&self, other: &GradedMatrix) -> Result<GradedMatrix, MatrixError> {
        if other.target != self.source {
            return Err(MatrixError::ShapeMismatch);
        }
        let mut out = GradedMatrix::zero(
            other.source.clone(),
            self.target.clone(),
            self.degree + other.degree,
        );
        for s in 0..other.source.dim() {
            let img = self.apply(&other.column(s));
            for (t, c) in img.terms() {
                out.add_entry(t, s, c)?;
            }
        }
        Ok(out)
    }

    /// Inverse of `Identity + N` where `N` has strictly positive alpha-degree
    /// in every entry and strictly raises the bounded cohomological grading,
    /// computed by the finite Neumann series `sum_k (Identity - M)^k`.
    pub fn unipotent_inverse(&self) -> Result<GradedMatrix, MatrixError> {
        if self.source != self.target || self.degree != Bidegree::ZERO {
            return Err(MatrixError::ShapeMismatch);
        }
        let id = GradedMatrix::identity(self.source.clone());
        let n = id.sub(self)?; // N = Identity - M, so M^-1 = sum N^k
        for c in n.entries.values() {
            if !c.alpha_part(0).is_zero() {
                return Err(MatrixError::NotUnipotent);
            }
        }
        let (min, max) = self.source.codim_span();
        let bound = ((max - min) / 2).max(0) as usize + 1;
        let mut inv = id.clone();
        let mut power = n.clone();
        let mut k = 0;
        while !power.is_zero() {
            k += 1;
            if k > bound {
                return Err(MatrixError::NotNilpotent { bound });
            }
            inv = inv.add(&power)?;
            power = power.compose(&n)?;
        }
        Ok(inv)
    }
}

/// Dense matrix over the rationals used for kernels, images and solves.
/// Row reduction uses lexicographic pivoting (first column with a nonzero
/// entry, first such row), so every output is deterministic.
#[derive(Debug, Clone)]
pub struct RatMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Rational>>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat { rows, cols, data: vec![vec![Rational::zero(); cols]; rows] }
    }

    /// Columns are images of the source basis under a graded matrix (whose
    /// entries must be plain rationals).
    pub fn from_graded(m: &GradedMatrix) -> Self {
        let mut out = RatMat::zeros(m.target.dim(), m.source.dim());
        for ((t, s), c) in m.entries() {
            out.data[*t][*s] = c.as_rational().expect("rational entries required");
        }
        out
    }

    /// Reduced row echelon form; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self.data[i][c].is_zero()) else {
                continue;
            };
            self.data.swap(r, pr);
            let inv = Rational::one() / self.data[r][c].clone();
            for x in self.data[r].iter_mut() {
                *x *= &inv;
            }
            for i in 0..self.rows {
                if i != r && !self.data[i][c].is_zero() {
                    let f = self.data[i][c].clone();
                    for j in 0..self.cols {
                        let v = self.data[r][j].clone() * &f;
                        self.data[i][j] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// A basis of the kernel, one vector per free column, with the free
    /// coordinate set to 1 (deterministic given the column order).
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut out = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Rational::zero(); self.cols];
            v[free] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.data[r][free].clone();
            }
            out.push(v);
        }
        out
    }

    /// Solves `self * x = b`, returning the particular solution with zero
    /// free coordinates (deterministic), or an error when inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Result<Vec<Rational>, MatrixError> {
        assert_eq!(b.len(), self.rows);
        let mut aug = RatMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            aug.data[i][..self.cols].clone_from_slice(&self.data[i]);
            aug.data[i][self.cols] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return Err(MatrixError::NoSolution);
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.data[r][self.cols].clone();
        }
        Ok(x)
    }

    pub fn transpose(&self) -> RatMat {
        let mut out = RatMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j][i] = self.data[i][j].clone();
            }
        }
        out
    }
}

/// Exact determinant of a square matrix of ring elements by Laplace
/// expansion along the sparsest column. Used only for the small Gram
/// matrices of non-degeneracy checks, where no polynomial division exists.
pub fn det_ring(entries: &[Vec<RingElt>]) -> RingElt {
    let n = entries.len();
    assert!(n > 0 && entries.iter().all(|r| r.len() == n));
    let ring = entries[0][0].ring();
    fn go(entries: &[Vec<RingElt>], live_rows: &[usize], live_cols: &[usize]) -> RingElt {
        let ring = entries[0][0].ring();
        if live_rows.len() == 1 {
            return entries[live_rows[0]][live_cols[0]].clone();
        }
        // Expand along the column with the fewest nonzero entries.
        let (best_k, _) = live_cols
            .iter()
            .enumerate()
            .map(|(k, &c)| (k, live_rows.iter().filter(|&&r| !entries[r][c].is_zero()).count()))
            .min_by_key(|&(_, cnt)| cnt)
            .unwrap();
        let col = live_cols[best_k];
        let sub_cols: Vec<usize> =
            live_cols.iter().copied().filter(|&c| c != col).collect();
        let mut acc = ring.zero();
        for (i, &row) in live_rows.iter().enumerate() {
            let e = &entries[row][col];
            if e.is_zero() {
                continue;
            }
            let sub_rows: Vec<usize> =
                live_rows.iter().copied().filter(|&r| r != row).collect();
            let minor = go(entries, &sub_rows, &sub_cols);
            let term = e.mul(&minor).with_sign((i + best_k) as i64);
            acc = acc.add(&term);
        }
        acc
    }
    let all: Vec<usize> = (0..n).collect();
    let _ = ring;
    go(entries, &all, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, CoefficientRing};
    use std::sync::Arc;

    fn two_dim_poly_module() -> ModuleRef {
        let ring = CoefficientRing::Polynomials { num_alphas: 1 };
        Arc::new(GradedModule::new(
            ring,
            vec![("u".into(), Bidegree::new(0, 0)), ("v".into(), Bidegree::new(2, 0))],
        ))
    }

    #[test]
    fn degree_rule_enforced_at_construction() {
        let m = two_dim_poly_module();
        let ring = m.ring();
        let mut mat = GradedMatrix::zero(m.clone(), m.clone(), Bidegree::ZERO);
        // u -> a1 * u has coefficient degree (2,0): target + (2,0) != source.
        assert!(mat.add_entry(0, 0, &ring.alpha(0)).is_err());
        // v -> a1 * u: (0,0) + (2,0) == (2,0) + (0,0).
        assert!(mat.add_entry(0, 1, &ring.alpha(0)).is_ok());
    }

    #[test]
    fn unipotent_inverse_identity_and_2x2() {
        let m = two_dim_poly_module();
        let ring = m.ring();
        let id = GradedMatrix::identity(m.clone());
        assert_eq!(id.unipotent_inverse().unwrap(), id);

        // [[1, a1], [0, 1]] -> [[1, -a1], [0, 1]].
        let mut mat = GradedMatrix::identity(m.clone());
        mat.add_entry(0, 1, &ring.alpha(0)).unwrap();
        let inv = mat.unipotent_inverse().unwrap();
        let mut expected = GradedMatrix::identity(m.clone());
        expected.add_entry(0, 1, &ring.alpha(0).neg()).unwrap();
        assert_eq!(inv, expected);
        let prod = mat.compose(&inv).unwrap();
        assert_eq!(prod, GradedMatrix::identity(m));
    }

    #[test]
    fn unipotent_inverse_rejects_constant_offsets() {
        let m = two_dim_poly_module();
        let ring = m.ring();
        let mut mat = GradedMatrix::identity(m.clone());
        // Identity - M has a zero-alpha-degree entry.
        mat.add_entry(0, 0, &ring.one()).unwrap();
        assert_eq!(mat.unipotent_inverse(), Err(MatrixError::NotUnipotent));
    }

    #[test]
    fn rref_solve_and_kernel() {
        let mut m = RatMat::zeros(2, 3);
        m.data[0][0] = rat(1, 1);
        m.data[0][2] = rat(1, 1);
        m.data[1][1] = rat(2, 1);
        let x = m.solve(&[rat(3, 1), rat(4, 1)]).unwrap();
        assert_eq!(x, vec![rat(3, 1), rat(2, 1), rat(0, 1)]);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 1);
        assert_eq!(ker[0], vec![rat(-1, 1), rat(0, 1), rat(1, 1)]);
        assert!(m.solve(&[rat(0, 1), rat(0, 1)]).is_ok());
        let inconsistent = RatMat::zeros(1, 1).solve(&[rat(1, 1)]);
        assert_eq!(inconsistent, Err(MatrixError::NoSolution));
    }

    #[test]
    fn det_ring_small() {
        let ring = CoefficientRing::Polynomials { num_alphas: 1 };
        let a = ring.alpha(0);
        let one = ring.one();
        // det [[1, a], [a, 1]] = 1 - a^2.
        let d = det_ring(&[vec![one.clone(), a.clone()], vec![a.clone(), one.clone()]]);
        assert_eq!(d, one.sub(&a.mul(&a)));
    }
}
