//! Gapped twisted A-infinity structures: sparse operation families over a
//! graded module, the DGA adapter, and the validators for the quadratic
//! relations, strict units, pairings and cyclic symmetry.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::exec;
use crate::grading::Bidegree;
use crate::matrix::{det_ring, GradedMatrix, MatrixError, RatMat};
use crate::module::{GradedModule, ModuleElt, ModuleRef};
use crate::novikov::{GappedMonoid, MonoidElt, NovikovError};
use crate::report::{CheckReport, Violation};
use crate::scalar::{Rational, RingElt, ScalarError};
use crate::words::OpsTable;
use num_traits::{One, Zero};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AinftyError {
    #[error("d does not square to zero (on {0})")]
    NotADifferential(String),
    #[error("product is not associative (on {0}, {1}, {2})")]
    NotAssociative(String, String, String),
    #[error("Leibniz rule fails (on {0}, {1})")]
    LeibnizFailure(String, String),
    #[error("designated unit does not act as a unit for the product")]
    InvalidUnit,
    #[error("operation at arity {k}, {beta} violates the degree shift")]
    DegreeViolation { k: usize, beta: MonoidElt },
    #[error("curvature at the trivial monoid element must vanish")]
    Tameness,
    #[error("monoid element {0} exceeds the cutoff {1}")]
    AboveCutoff(MonoidElt, Rational),
    #[error("cohomology requires rational coefficients")]
    NotAField,
    #[error("pairing entry ({0}, {1}) violates the pairing degree")]
    PairingDegree(String, String),
    #[error("{0}")]
    Matrix(#[from] MatrixError),
    #[error("{0}")]
    Scalar(#[from] ScalarError),
    #[error("{0}")]
    Novikov(#[from] NovikovError),
}

/// An antisymmetric pairing of degree (p, q): a sparse symmetric-shaped
/// table of values `<b_i, b_j>` in the coefficient ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    shift: (i64, u8),
    entries: BTreeMap<(usize, usize), RingElt>,
}

impl Pairing {
    pub fn new(shift: (i64, u8)) -> Self {
        Pairing { shift, entries: BTreeMap::new() }
    }

    pub fn shift(&self) -> (i64, u8) {
        self.shift
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &RingElt)> {
        self.entries.iter()
    }

    /// Inserts `<b_i, b_j> = value`, enforcing the degree constraint: the
    /// value must be alpha-homogeneous with
    /// `deg(b_i) + deg(b_j) = (p + 2 * alpha_deg, q)`.
    pub fn insert(
        &mut self,
        module: &GradedModule,
        i: usize,
        j: usize,
        value: RingElt,
    ) -> Result<(), AinftyError> {
        if value.is_zero() {
            return Ok(());
        }
        let bad = || AinftyError::PairingDegree(module.name(i).into(), module.name(j).into());
        let vdeg = value.degree().map_err(|_| bad())?.expect("nonzero");
        let total = module.degree(i) + module.degree(j);
        if total.codim != self.shift.0 + vdeg.codim || (total.ls + self.shift.1) % 2 != 0 {
            return Err(bad());
        }
        self.entries.insert((i, j), value);
        Ok(())
    }

    pub fn value_basis(&self, module: &GradedModule, i: usize, j: usize) -> RingElt {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(|| module.ring().zero())
    }

    pub fn value(&self, module: &GradedModule, x: &ModuleElt, y: &ModuleElt) -> RingElt {
        let mut acc = module.ring().zero();
        for (i, cx) in x.terms() {
            for (j, cy) in y.terms() {
                let v = self.value_basis(module, i, j);
                if !v.is_zero() {
                    acc = acc.add(&cx.mul(cy).mul(&v));
                }
            }
        }
        acc
    }

    /// The full Gram matrix on the module basis.
    pub fn gram(&self, module: &GradedModule) -> Vec<Vec<RingElt>> {
        let n = module.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.value_basis(module, i, j)).collect())
            .collect()
    }

    /// Builds the pairing `<x, y> = (-1)^(codim x * codim y + codim x) *
    /// integral(x wedge y)` from a product table and a linear functional.
    pub fn from_integral(
        module: &GradedModule,
        product: &ProductTable,
        integral: &[RingElt],
        shift: (i64, u8),
    ) -> Result<Pairing, AinftyError> {
        assert_eq!(integral.len(), module.dim());
        let mut pairing = Pairing::new(shift);
        for i in 0..module.dim() {
            for j in 0..module.dim() {
                let prod = product.value(i, j);
                let mut acc = module.ring().zero();
                for (b, c) in prod.terms() {
                    acc = acc.add(&c.mul(&integral[b]));
                }
                let ci = module.degree(i).codim;
                let cj = module.degree(j).codim;
                let v = acc.with_sign(ci * cj + ci);
                pairing.insert(module, i, j, v)?;
            }
        }
        Ok(pairing)
    }

    /// Restricts the pairing along the inclusion of a retract: the induced
    /// pairing `<u, v> = <I u, I v>` on the small module.
    pub fn induced(
        &self,
        big: &GradedModule,
        small: &GradedModule,
        inclusion: &GradedMatrix,
    ) -> Result<Pairing, AinftyError> {
        let mut out = Pairing::new(self.shift);
        for i in 0..small.dim() {
            for j in 0..small.dim() {
                let v = self.value(big, &inclusion.column(i), &inclusion.column(j));
                out.insert(small, i, j, v)?;
            }
        }
        Ok(out)
    }
}

/// A bilinear product on basis elements, extended multilinearly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProductTable {
    entries: BTreeMap<(usize, usize), ModuleElt>,
}

impl ProductTable {
    pub fn new() -> Self {
        ProductTable::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, value: ModuleElt) {
        if !value.is_zero() {
            self.entries.insert((i, j), value);
        }
    }

    pub fn value(&self, i: usize, j: usize) -> ModuleElt {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn value_elts(&self, x: &ModuleElt, y: &ModuleElt) -> ModuleElt {
        let mut acc = ModuleElt::zero();
        for (i, cx) in x.terms() {
            for (j, cy) in y.terms() {
                acc = acc.add(&self.value(i, j).scale(&cx.mul(cy)));
            }
        }
        acc
    }
}

/// A gapped twisted A-infinity structure: a sparse family of operations on
/// basis tuples with an optional strict unit and pairing. Immutable once
/// built; validators read it concurrently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AInftyStructure {
    module: ModuleRef,
    monoid: GappedMonoid,
    cutoff: Rational,
    ops: OpsTable,
    unit: Option<usize>,
    pairing: Option<Pairing>,
}

impl AInftyStructure {
    pub fn new(module: ModuleRef, monoid: GappedMonoid, cutoff: Rational) -> Self {
        AInftyStructure { module, monoid, cutoff, ops: OpsTable::new(1), unit: None, pairing: None }
    }

    pub fn module(&self) -> &ModuleRef {
        &self.module
    }

    pub fn monoid(&self) -> &GappedMonoid {
        &self.monoid
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn ops(&self) -> &OpsTable {
        &self.ops
    }

    pub fn unit(&self) -> Option<usize> {
        self.unit
    }

    pub fn pairing(&self) -> Option<&Pairing> {
        self.pairing.as_ref()
    }

    pub fn set_unit(&mut self, e: usize) -> Result<(), AinftyError> {
        if self.module.degree(e) != Bidegree::ZERO {
            return Err(AinftyError::InvalidUnit);
        }
        self.unit = Some(e);
        Ok(())
    }

    pub fn set_pairing(&mut self, pairing: Pairing) {
        self.pairing = Some(pairing);
    }

    /// The bidegree shift of an operation at (k, beta): [2 - k - mu, mu mod 2].
    pub fn op_shift(k: usize, beta: &MonoidElt) -> Bidegree {
        Bidegree::new(2 - k as i64 - beta.maslov, beta.maslov)
    }

    /// Inserts `m_{k,beta}(inputs) = value`, enforcing tameness, the cutoff
    /// bound and the degree shift.
    pub fn insert_op(
        &mut self,
        k: usize,
        beta: MonoidElt,
        inputs: Vec<usize>,
        value: ModuleElt,
    ) -> Result<(), AinftyError> {
        if value.is_zero() {
            return Ok(());
        }
        if k == 0 && beta.is_zero() {
            return Err(AinftyError::Tameness);
        }
        if beta.energy > self.cutoff {
            return Err(AinftyError::AboveCutoff(beta, self.cutoff.clone()));
        }
        let expected = inputs
            .iter()
            .fold(Self::op_shift(k, &beta), |acc, &i| acc + self.module.degree(i));
        match self.module.degree_of(&value) {
            Ok(Some(d)) if d == expected => {}
            _ => return Err(AinftyError::DegreeViolation { k, beta }),
        }
        self.ops.insert(k, beta, inputs, value);
        Ok(())
    }

    /// Raw insertion without the invariant checks; used to build the broken
    /// structures that the validators must reject.
    pub fn insert_op_unchecked(
        &mut self,
        k: usize,
        beta: MonoidElt,
        inputs: Vec<usize>,
        value: ModuleElt,
    ) {
        self.ops.insert(k, beta, inputs, value);
    }

    /// Multilinear evaluation of one component on module elements.
    pub fn eval_op(&self, k: usize, beta: &MonoidElt, args: &[ModuleElt]) -> ModuleElt {
        assert_eq!(args.len(), k);
        let mut acc = ModuleElt::zero();
        let mut stack: Vec<(usize, RingElt, Vec<usize>)> =
            vec![(0, self.module.ring().one(), Vec::new())];
        while let Some((pos, coeff, tuple)) = stack.pop() {
            if pos == k {
                if let Some(v) = self.ops.get(k, beta, &tuple) {
                    acc = acc.add(&v.scale(&coeff));
                }
                continue;
            }
            for (i, c) in args[pos].terms() {
                let mut t = tuple.clone();
                t.push(i);
                stack.push((pos + 1, coeff.mul(c), t));
            }
        }
        acc
    }

    /// The twisted-differential image of a basis element:
    /// `m_{1,0}(b)`.
    pub fn m1(&self, b: usize) -> ModuleElt {
        self.ops
            .get(1, &MonoidElt::zero(), &[b])
            .cloned()
            .unwrap_or_default()
    }

    /// The underlying complex differential recovered from the perturbation
    /// convention `m_{1,0} x = (-1)^codim(x) d x`.
    pub fn differential(&self) -> Result<GradedMatrix, AinftyError> {
        let images: Vec<ModuleElt> = (0..self.module.dim())
            .map(|b| self.m1(b).with_sign(self.module.degree(b).codim))
            .collect();
        Ok(GradedMatrix::from_images(
            self.module.clone(),
            self.module.clone(),
            Bidegree::new(1, 0),
            &images,
        )?)
    }

    /// All monoid elements below the cutoff, in (energy, index) order.
    pub fn monoid_elements(&self) -> Vec<MonoidElt> {
        self.monoid.enumerate(&self.cutoff)
    }
}

/// Builds the twisted A-infinity algebra of a differential graded algebra:
/// `m_{1,0} x = (-1)^codim(x) dx`,
/// `m_{2,0}(x, y) = (-1)^(codim x + codim x codim y) x wedge y`,
/// all other components zero, with the pairing from the integral when one
/// is supplied. The DGA axioms are checked, not assumed.
pub fn from_dga(
    module: ModuleRef,
    d: &GradedMatrix,
    product: &ProductTable,
    integral: Option<(&[RingElt], (i64, u8))>,
    unit: Option<usize>,
) -> Result<AInftyStructure, AinftyError> {
    let n = module.dim();
    // d^2 = 0.
    for b in 0..n {
        if !d.apply(&d.column(b)).is_zero() {
            return Err(AinftyError::NotADifferential(module.name(b).into()));
        }
    }
    // Associativity on basis triples.
    for i in 0..n {
        for j in 0..n {
            let ij = product.value(i, j);
            for l in 0..n {
                let jl = product.value(j, l);
                let left = product.value_elts(&ij, &module.generator(l));
                let right = product.value_elts(&module.generator(i), &jl);
                if left != right {
                    return Err(AinftyError::NotAssociative(
                        module.name(i).into(),
                        module.name(j).into(),
                        module.name(l).into(),
                    ));
                }
            }
        }
    }
    // Graded Leibniz rule: d(xy) = dx y + (-1)^codim(x) x dy.
    for i in 0..n {
        for j in 0..n {
            let lhs = d.apply(&product.value(i, j));
            let rhs = product
                .value_elts(&d.column(i), &module.generator(j))
                .add(
                    &product
                        .value_elts(&module.generator(i), &d.column(j))
                        .with_sign(module.degree(i).codim),
                );
            if lhs != rhs {
                return Err(AinftyError::LeibnizFailure(
                    module.name(i).into(),
                    module.name(j).into(),
                ));
            }
        }
    }
    if let Some(e) = unit {
        if module.degree(e) != Bidegree::ZERO {
            return Err(AinftyError::InvalidUnit);
        }
        for i in 0..n {
            if product.value(e, i) != module.generator(i)
                || product.value(i, e) != module.generator(i)
            {
                return Err(AinftyError::InvalidUnit);
            }
        }
    }

    let mut a = AInftyStructure::new(module.clone(), GappedMonoid::trivial(), Rational::zero());
    for b in 0..n {
        let v = d.column(b).with_sign(module.degree(b).codim);
        a.insert_op(1, MonoidElt::zero(), vec![b], v)?;
    }
    for i in 0..n {
        for j in 0..n {
            let ci = module.degree(i).codim;
            let cj = module.degree(j).codim;
            let v = product.value(i, j).with_sign(ci + ci * cj);
            a.insert_op(2, MonoidElt::zero(), vec![i, j], v)?;
        }
    }
    if let Some(e) = unit {
        a.set_unit(e)?;
    }
    if let Some((integral, shift)) = integral {
        a.set_pairing(Pairing::from_integral(&module, product, integral, shift)?);
    }
    Ok(a)
}

/// Widens a DGA-backed structure to a nontrivial monoid and cutoff so that
/// deformation components can be inserted.
pub fn with_monoid(
    a: &AInftyStructure,
    monoid: GappedMonoid,
    cutoff: Rational,
) -> AInftyStructure {
    let mut out = AInftyStructure::new(a.module.clone(), monoid, cutoff);
    out.ops = a.ops.clone();
    out.unit = a.unit;
    out.pairing = a.pairing.clone();
    out
}

/// The sign exponent `*` of the quadratic relation: for an inner component
/// at (k2, beta2) inserted at position i (1-based) past the prefix x_1..x_{i-1},
/// `* = sum_{j<i}(codim - 1) + mu(beta2) * sum_{j<i}(ls + codim - 1) + mu(beta2)`.
fn relation_sign_exp(
    module: &GradedModule,
    prefix: &[usize],
    mu2: i64,
    keep_maslov_terms: bool,
) -> i64 {
    let koszul: i64 = prefix.iter().map(|&b| module.degree(b).codim - 1).sum();
    if !keep_maslov_terms {
        return koszul;
    }
    let twist: i64 = prefix
        .iter()
        .map(|&b| {
            let g = module.degree(b);
            g.ls as i64 + g.codim - 1
        })
        .sum();
    koszul + mu2 * twist + mu2
}

fn relation_residual(
    a: &AInftyStructure,
    k: usize,
    _beta: &MonoidElt,
    tuple: &[usize],
    splits: &[(MonoidElt, MonoidElt)],
    keep_maslov_terms: bool,
) -> ModuleElt {
    let module = a.module.as_ref();
    let mut acc = ModuleElt::zero();
    for (beta1, beta2) in splits {
        for k2 in 0..=k {
            let k1 = k + 1 - k2;
            if a.ops.comps.get(&(k2, beta2.clone())).is_none()
                || a.ops.comps.get(&(k1, beta1.clone())).is_none()
            {
                continue;
            }
            for i in 0..=(k - k2) {
                let Some(inner) = a.ops.get(k2, beta2, &tuple[i..i + k2]) else {
                    continue;
                };
                let exp = relation_sign_exp(module, &tuple[..i], beta2.maslov, keep_maslov_terms);
                for (b, c) in inner.terms() {
                    let mut outer_tuple = Vec::with_capacity(k1);
                    outer_tuple.extend_from_slice(&tuple[..i]);
                    outer_tuple.push(b);
                    outer_tuple.extend_from_slice(&tuple[i + k2..]);
                    if let Some(outer) = a.ops.get(k1, beta1, &outer_tuple) {
                        acc = acc.add(&outer.scale(&c.with_sign(exp)));
                    }
                }
            }
        }
    }
    acc
}

fn structure_violations(
    a: &AInftyStructure,
    k_max: usize,
    keep_maslov_terms: bool,
) -> Vec<Violation> {
    let module = a.module.as_ref();
    let mut violations = Vec::new();

    // Tameness and stored degree/cutoff invariants.
    if a.ops.get(0, &MonoidElt::zero(), &[]).is_some() {
        violations.push(Violation {
            check: "tameness".into(),
            k: 0,
            beta: MonoidElt::zero(),
            inputs: vec![],
            residual: "m_{0,0} != 0".into(),
        });
    }
    for ((k, beta), tuples) in &a.ops.comps {
        if beta.energy > *a.cutoff() {
            violations.push(Violation {
                check: "cutoff".into(),
                k: *k,
                beta: beta.clone(),
                inputs: vec![],
                residual: format!("stored component above cutoff {}", a.cutoff()),
            });
        }
        for (tuple, value) in tuples {
            let expected = tuple
                .iter()
                .fold(AInftyStructure::op_shift(*k, beta), |acc, &i| acc + module.degree(i));
            let ok = matches!(module.degree_of(value), Ok(Some(d)) if d == expected);
            if !ok {
                violations.push(Violation {
                    check: "degree".into(),
                    k: *k,
                    beta: beta.clone(),
                    inputs: tuple.iter().map(|&i| module.name(i).to_string()).collect(),
                    residual: "output degree differs from the operation shift".into(),
                });
            }
        }
    }

    // The quadratic relations on all basis tuples.
    let elements = a.monoid_elements();
    let mut tasks = Vec::new();
    for beta in &elements {
        let splits: Vec<(MonoidElt, MonoidElt)> = elements
            .iter()
            .flat_map(|b1| elements.iter().map(move |b2| (b1.clone(), b2.clone())))
            .filter(|(b1, b2)| b1.add(b2) == *beta)
            .collect();
        let splits = Arc::new(splits);
        for k in 0..=k_max {
            for tuple in exec::tuples(module.dim(), k) {
                tasks.push((beta.clone(), k, tuple, splits.clone()));
            }
        }
    }
    let results = exec::map_collect(&tasks, |(beta, k, tuple, splits)| {
        let residual = relation_residual(a, *k, beta, tuple, splits, keep_maslov_terms);
        if residual.is_zero() {
            None
        } else {
            Some(Violation {
                check: "relation".into(),
                k: *k,
                beta: beta.clone(),
                inputs: tuple.iter().map(|&i| module.name(i).to_string()).collect(),
                residual: format!("{}", residual.display(module)),
            })
        }
    });
    violations.extend(results.into_iter().flatten());
    violations
}

/// Checks the twisted quadratic relations for all arities `k <= k_max`, all
/// monoid elements below the cutoff, on all basis tuples, together with
/// tameness and the degree invariant of every stored component.
pub fn validate_structure(a: &AInftyStructure, k_max: usize) -> CheckReport {
    CheckReport::from_violations(structure_violations(a, k_max, true))
}

/// The sign-mutation canary: the same relation check with the Maslov-index
/// terms of the sign deleted. Structures with odd-index deformations must
/// fail this variant; it exists so the test suite can assert both
/// directions and has no other use.
pub fn validate_structure_without_maslov_signs(a: &AInftyStructure, k_max: usize) -> CheckReport {
    CheckReport::from_violations(structure_violations(a, k_max, false))
}

/// Checks the strict unit identities: `m_{2,0}(e, x) = x`,
/// `m_{2,0}(x, e) = (-1)^codim(x) x`, and vanishing of every other stored
/// component with the unit among its inputs.
pub fn validate_unit(a: &AInftyStructure, e: usize) -> CheckReport {
    let module = a.module.as_ref();
    let mut violations = Vec::new();
    if module.degree(e) != Bidegree::ZERO {
        violations.push(Violation {
            check: "unit-degree".into(),
            k: 0,
            beta: MonoidElt::zero(),
            inputs: vec![module.name(e).to_string()],
            residual: "unit must have degree (0,0)".into(),
        });
    }
    let zero = MonoidElt::zero();
    for x in 0..module.dim() {
        let left = a.ops.get(2, &zero, &[e, x]).cloned().unwrap_or_default();
        if left != module.generator(x) {
            violations.push(Violation {
                check: "unit-left".into(),
                k: 2,
                beta: zero.clone(),
                inputs: vec![module.name(e).into(), module.name(x).into()],
                residual: format!("m(e,x) = {}", left.display(module)),
            });
        }
        let right = a.ops.get(2, &zero, &[x, e]).cloned().unwrap_or_default();
        if right != module.generator(x).with_sign(module.degree(x).codim) {
            violations.push(Violation {
                check: "unit-right".into(),
                k: 2,
                beta: zero.clone(),
                inputs: vec![module.name(x).into(), module.name(e).into()],
                residual: format!("m(x,e) = {}", right.display(module)),
            });
        }
    }
    for ((k, beta), tuples) in &a.ops.comps {
        for (tuple, value) in tuples {
            if !tuple.contains(&e) || value.is_zero() {
                continue;
            }
            if *k == 2 && beta.is_zero() {
                continue;
            }
            violations.push(Violation {
                check: "unit-insertion".into(),
                k: *k,
                beta: beta.clone(),
                inputs: tuple.iter().map(|&i| module.name(i).to_string()).collect(),
                residual: format!("{}", value.display(module)),
            });
        }
    }
    CheckReport::from_violations(violations)
}

/// The cyclic-symmetry sign exponent:
/// `(codim x_0 - 1) * sum_{j>=1}(codim x_j - 1) + mu(beta) * ls x_0`.
fn cyclic_sign_exp(module: &GradedModule, x0: usize, rest: &[usize], mu: i64) -> i64 {
    let g0 = module.degree(x0);
    let s: i64 = rest.iter().map(|&b| module.degree(b).codim - 1).sum();
    (g0.codim - 1) * s + mu * g0.ls as i64
}

/// Checks antisymmetry, non-degeneracy (full rank over the fraction field),
/// the twisted cyclic symmetry of every stored component up to `k_max`, and
/// perfectness of the induced pairing on the cohomology of `m_{1,0}`.
pub fn validate_cyclic(a: &AInftyStructure, pairing: &Pairing, k_max: usize) -> CheckReport {
    let module = a.module.as_ref();
    let ring = module.ring();
    let mut violations = Vec::new();
    let zero = MonoidElt::zero();

    // (1a) Antisymmetry on all basis pairs.
    for i in 0..module.dim() {
        for j in 0..module.dim() {
            let lhs = pairing.value_basis(module, i, j);
            let ci = module.degree(i).codim;
            let cj = module.degree(j).codim;
            let rhs = pairing
                .value_basis(module, j, i)
                .with_sign(1 + (ci - 1) * (cj - 1));
            if lhs != rhs {
                violations.push(Violation {
                    check: "antisymmetry".into(),
                    k: 2,
                    beta: zero.clone(),
                    inputs: vec![module.name(i).into(), module.name(j).into()],
                    residual: format!("<{i},{j}> = {lhs}, +-<{j},{i}> = {rhs}"),
                });
            }
        }
    }

    // (1b) Non-degeneracy: the Gram determinant is nonzero over the
    // fraction field.
    if module.dim() > 0 {
        let det = det_ring(&pairing.gram(module));
        if det.is_zero() {
            violations.push(Violation {
                check: "non-degeneracy".into(),
                k: 0,
                beta: zero.clone(),
                inputs: vec![],
                residual: "Gram determinant vanishes".into(),
            });
        }
    }

    // (2) Twisted cyclic symmetry for every stored component.
    let mut tasks = Vec::new();
    for ((k, beta), _) in a.ops.comps.iter() {
        if *k > k_max {
            continue;
        }
        for tuple in exec::tuples(module.dim(), k + 1) {
            tasks.push((*k, beta.clone(), tuple));
        }
    }
    let results = exec::map_collect(&tasks, |(k, beta, tuple)| {
        // tuple = (x_0, ..., x_k); compare <m(x_1..x_k), x_0> with
        // the rotated <m(x_0..x_{k-1}), x_k>.
        let x0 = tuple[0];
        let rest = &tuple[1..];
        let lhs_m = a.ops.get(*k, beta, rest).cloned().unwrap_or_default();
        let lhs = pairing.value(module, &lhs_m, &module.generator(x0));
        let rotated: Vec<usize> = tuple[..*k].to_vec();
        let xk = tuple[*k];
        let rhs_m = a.ops.get(*k, beta, &rotated).cloned().unwrap_or_default();
        let rhs = pairing
            .value(module, &rhs_m, &module.generator(xk))
            .with_sign(cyclic_sign_exp(module, x0, rest, beta.maslov));
        if lhs == rhs {
            None
        } else {
            Some(Violation {
                check: "cyclic-symmetry".into(),
                k: *k,
                beta: beta.clone(),
                inputs: tuple.iter().map(|&i| module.name(i).to_string()).collect(),
                residual: format!("lhs = {lhs}, rhs = {rhs}"),
            })
        }
    });
    violations.extend(results.into_iter().flatten());

    // (3) Perfectness of the induced pairing on H(C, m_{1,0}).
    let m1_zero = a.ops.comps.get(&(1, zero.clone())).map(|t| t.is_empty()).unwrap_or(true);
    if ring.is_field() {
        match cohomology(a) {
            Ok(coh) => {
                if coh.h_module.dim() > 0 {
                    let gram: Vec<Vec<RingElt>> = (0..coh.h_module.dim())
                        .map(|i| {
                            (0..coh.h_module.dim())
                                .map(|j| {
                                    pairing.value(
                                        module,
                                        &coh.inclusion.column(i),
                                        &coh.inclusion.column(j),
                                    )
                                })
                                .collect()
                        })
                        .collect();
                    if det_ring(&gram).is_zero() {
                        violations.push(Violation {
                            check: "perfect-on-cohomology".into(),
                            k: 0,
                            beta: zero.clone(),
                            inputs: vec![],
                            residual: "induced pairing on cohomology is degenerate".into(),
                        });
                    }
                }
            }
            Err(e) => violations.push(Violation {
                check: "perfect-on-cohomology".into(),
                k: 0,
                beta: zero.clone(),
                inputs: vec![],
                residual: format!("cohomology failed: {e}"),
            }),
        }
    } else if !m1_zero {
        violations.push(Violation {
            check: "perfect-on-cohomology".into(),
            k: 0,
            beta: zero,
            inputs: vec![],
            residual:
                "perfectness over a polynomial ring with nonzero differential requires the \
                 equivariant lifting"
                    .into(),
        });
    }
    // Over a polynomial ring with zero differential, cohomology is the
    // module itself and perfectness coincides with non-degeneracy.

    CheckReport::from_violations(violations)
}

/// A homogeneous basis of `H(C, m_{1,0})` with projection and inclusion.
#[derive(Debug, Clone)]
pub struct Cohomology {
    pub h_module: ModuleRef,
    /// C -> H, the projection along the chosen complement.
    pub projection: GradedMatrix,
    /// H -> C, the chosen closed representatives.
    pub inclusion: GradedMatrix,
}

/// Computes cohomology of `m_{1,0}` over the rationals: a homogeneous basis
/// of ker/im with chosen representatives, deterministic in the basis order.
/// A preferred list of closed elements to route into the representative set
/// first (the unit, say) can be supplied.
pub fn cohomology(a: &AInftyStructure) -> Result<Cohomology, AinftyError> {
    cohomology_with_preference(a, &[])
}

pub fn cohomology_with_preference(
    a: &AInftyStructure,
    preferred: &[ModuleElt],
) -> Result<Cohomology, AinftyError> {
    let module = a.module.as_ref();
    if !module.ring().is_field() {
        return Err(AinftyError::NotAField);
    }
    let n = module.dim();
    let m1 = (0..n).map(|b| a.m1(b)).collect::<Vec<_>>();
    let mut d_mat = RatMat::zeros(n, n);
    for (s, img) in m1.iter().enumerate() {
        for (t, c) in img.terms() {
            d_mat.data[t][s] = c.as_rational().expect("field coefficients");
        }
    }

    // Kernel and image of m_{1,0}.
    let kernel = d_mat.kernel_basis();
    let mut image_cols: Vec<Vec<Rational>> = Vec::new();
    {
        let mut probe = RatMat::zeros(n, 0);
        for s in 0..n {
            let col: Vec<Rational> = (0..n).map(|t| d_mat.data[t][s].clone()).collect();
            if col.iter().all(|c| c.is_zero()) {
                continue;
            }
            probe.data.iter_mut().zip(&col).for_each(|(row, c)| row.push(c.clone()));
            probe.cols += 1;
            if probe.rank() == probe.cols {
                image_cols.push(col);
            } else {
                probe.data.iter_mut().for_each(|row| {
                    row.pop();
                });
                probe.cols -= 1;
            }
        }
    }

    // Representatives: extend the image to the kernel, preferring the
    // supplied closed elements, then kernel vectors in column order.
    let mut span = RatMat::zeros(n, 0);
    let push_if_new = |span: &mut RatMat, v: &[Rational]| -> bool {
        span.data.iter_mut().zip(v).for_each(|(row, c)| row.push(c.clone()));
        span.cols += 1;
        if span.rank() == span.cols {
            true
        } else {
            span.data.iter_mut().for_each(|row| {
                row.pop();
            });
            span.cols -= 1;
            false
        }
    };
    for col in &image_cols {
        push_if_new(&mut span, col);
    }
    let mut reps: Vec<Vec<Rational>> = Vec::new();
    let elt_to_vec = |e: &ModuleElt| -> Vec<Rational> {
        let mut v = vec![Rational::zero(); n];
        for (i, c) in e.terms() {
            v[i] = c.as_rational().expect("field coefficients");
        }
        v
    };
    for p in preferred {
        let v = elt_to_vec(p);
        let img = (0..n)
            .map(|t| (0..n).map(|s| d_mat.data[t][s].clone() * v[s].clone()).sum::<Rational>())
            .collect::<Vec<_>>();
        assert!(img.iter().all(|c| c.is_zero()), "preferred representative must be closed");
        if push_if_new(&mut span, &v) {
            reps.push(v);
        }
    }
    for kv in &kernel {
        if push_if_new(&mut span, kv) {
            reps.push(kv.clone());
        }
    }

    // Name classes after their leading representative coordinate.
    let mut names = Vec::new();
    let mut basis = Vec::new();
    for rep in &reps {
        let lead = rep
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .expect("nonzero representative");
        let mut name = format!("[{}]", module.name(lead));
        while names.contains(&name) {
            name.push('\'');
        }
        names.push(name.clone());
        basis.push((name, module.degree(lead)));
    }
    let h_module: ModuleRef = Arc::new(GradedModule::new(module.ring(), basis));

    // Inclusion: H -> C from the representatives.
    let incl_images: Vec<ModuleElt> = reps
        .iter()
        .map(|rep| {
            ModuleElt::from_terms(
                rep.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (i, module.ring().constant(c.clone()))),
            )
        })
        .collect();
    let inclusion =
        GradedMatrix::from_images(h_module.clone(), a.module.clone(), Bidegree::ZERO, &incl_images)?;

    // Projection: solve [reps | image | complement] coordinates; the
    // projection of x is its rep-coordinate vector.
    // Build the change-of-basis matrix with columns reps ++ image ++ extra.
    let mut cols: Vec<Vec<Rational>> = reps.clone();
    cols.extend(image_cols.iter().cloned());
    let mut full = RatMat::zeros(n, 0);
    for c in &cols {
        push_if_new(&mut full, c);
    }
    let mut extra = Vec::new();
    for i in 0..n {
        let mut v = vec![Rational::zero(); n];
        v[i] = Rational::one();
        if push_if_new(&mut full, &v) {
            extra.push(v);
        }
    }
    cols.extend(extra);
    let mut basis_mat = RatMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for t in 0..n {
            basis_mat.data[t][j] = c[t].clone();
        }
    }
    let mut proj_images = Vec::with_capacity(n);
    for b in 0..n {
        let mut target = vec![Rational::zero(); n];
        target[b] = Rational::one();
        let coords = basis_mat.solve(&target)?;
        let e = ModuleElt::from_terms(coords.iter().take(reps.len()).enumerate().filter_map(
            |(j, c)| {
                if c.is_zero() {
                    None
                } else {
                    Some((j, module.ring().constant(c.clone())))
                }
            },
        ));
        proj_images.push(e);
    }
    let projection =
        GradedMatrix::from_images(a.module.clone(), h_module.clone(), Bidegree::ZERO, &proj_images)?;

    Ok(Cohomology { h_module, projection, inclusion })
}
