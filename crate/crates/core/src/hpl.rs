//! Retractions of a dg module onto its cohomology, side conditions, the
//! correction trick that enforces them, and homological perturbation
//! transfer by the operator geometric series.
//!
//! A retraction of (C, d) to HC is a triple (Pi, I, h) with
//! `Pi d' = 0`, `d' I = 0`, `Pi I = id`, and `d' h + h d' = I Pi - id`,
//! where `d' x = (-1)^codim(x) d x`. The side conditions `h h = 0`,
//! `Pi h = 0`, `h I = 0` make the transfer series collapse to tree sums.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::ainfty::{AInftyStructure, AinftyError, Pairing};
use crate::exec;
use crate::grading::Bidegree;
use crate::matrix::{GradedMatrix, MatrixError, RatMat};
use crate::module::{GradedModule, ModuleElt, ModuleRef};
use crate::morphism::{compose, AInftyHomotopy, AInftyMorphism, MorphismError};
use crate::novikov::MonoidElt;
use crate::report::{CheckReport, Violation};
use crate::scalar::Rational;
use crate::words::{
    apply_bicoderivation, apply_coderivation, apply_morphism_words, OpsTable, WordError, WordSum,
};
use num_traits::{One, Zero};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HplError {
    #[error("pairing is degenerate on a subspace needed for the orthogonal splitting")]
    NoOrthogonalComplement,
    #[error("input fails the homotopy identity d'h + hd' = I Pi - id")]
    NotAHomotopy,
    #[error("side-condition correction did not converge in {0} rounds")]
    CorrectionDiverged(usize),
    #[error("structure is not a perturbation of the retraction's complex")]
    NotAPerturbation,
    #[error("retraction does not satisfy the side conditions")]
    SideConditionsMissing,
    #[error("retraction construction requires rational coefficients")]
    NotAField,
    #[error("{0}")]
    Matrix(#[from] MatrixError),
    #[error("{0}")]
    Ainfty(#[from] AinftyError),
    #[error("{0}")]
    Morphism(#[from] MorphismError),
    #[error("{0}")]
    Word(#[from] WordError),
}

/// Verified properties of a retraction; set by `check_retraction`, never
/// declared by callers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RetractionFlags {
    pub side_conditions: bool,
    pub cyclic: bool,
    pub unital: bool,
}

/// A retraction (Pi, I, h) of a complex onto a chosen cohomology module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retraction {
    pub pi: GradedMatrix,
    pub incl: GradedMatrix,
    pub h: GradedMatrix,
    pub flags: RetractionFlags,
}

impl Retraction {
    pub fn complex(&self) -> &ModuleRef {
        self.pi.source()
    }

    pub fn homology(&self) -> &ModuleRef {
        self.pi.target()
    }
}

/// The sign-twisted differential `d' b = (-1)^codim(b) d b` as a matrix.
pub fn twist_differential(d: &GradedMatrix) -> GradedMatrix {
    let module = d.source().clone();
    let images: Vec<ModuleElt> = (0..module.dim())
        .map(|b| d.column(b).with_sign(module.degree(b).codim))
        .collect();
    GradedMatrix::from_images(module.clone(), d.target().clone(), d.degree(), &images)
        .expect("twisting preserves degrees")
}

fn elt_from_vec(module: &GradedModule, v: &[Rational]) -> ModuleElt {
    ModuleElt::from_terms(v.iter().enumerate().filter_map(|(i, c)| {
        if c.is_zero() {
            None
        } else {
            Some((i, module.ring().constant(c.clone())))
        }
    }))
}

fn vec_from_elt(module: &GradedModule, e: &ModuleElt) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); module.dim()];
    for (i, c) in e.terms() {
        v[i] = c.as_rational().expect("rational coefficients");
    }
    v
}

/// Greedily extends a growing column collection by `v`; returns true when
/// the rank grows. Deterministic in the call order.
fn push_if_independent(span: &mut RatMat, v: &[Rational]) -> bool {
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
}

/// Constructs a retraction of (C, d) onto its cohomology from an internal
/// splitting C = H + d(C) + O, with `h = -(d'|_O)^{-1}` on d(C) and zero
/// elsewhere. With a pairing, H is the two-sided orthogonal complement of
/// d(C) + O inside ker d; with a unit, the unit is routed into H first.
/// All side conditions hold by construction and are re-verified.
pub fn retraction_from_splitting(
    module: &ModuleRef,
    d: &GradedMatrix,
    pairing: Option<&Pairing>,
    unit: Option<usize>,
) -> Result<Retraction, HplError> {
    if !module.ring().is_field() {
        return Err(HplError::NotAField);
    }
    let n = module.dim();
    let d_rat = RatMat::from_graded(d);
    let kernel = d_rat.kernel_basis();

    // Image columns of d, thinned to an independent set.
    let mut image: Vec<Vec<Rational>> = Vec::new();
    {
        let mut span = RatMat::zeros(n, 0);
        for s in 0..n {
            let col: Vec<Rational> = (0..n).map(|t| d_rat.data[t][s].clone()).collect();
            if !col.iter().all(|c| c.is_zero()) && push_if_independent(&mut span, &col) {
                image.push(col);
            }
        }
    }

    // O: a complement of ker d, preferring plain basis vectors.
    let mut o_basis: Vec<Vec<Rational>> = Vec::new();
    {
        let mut span = RatMat::zeros(n, 0);
        for k in &kernel {
            push_if_independent(&mut span, k);
        }
        for i in 0..n {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            if push_if_independent(&mut span, &v) {
                o_basis.push(v);
            }
        }
    }

    // H: a complement of d(C) inside ker d. With a pairing, the two-sided
    // orthogonal complement of d(C) + O inside ker d; otherwise greedy.
    let mut h_basis: Vec<Vec<Rational>> = Vec::new();
    let h_dim = kernel.len() - image.len();
    if let Some(p) = pairing {
        let gram = p.gram(module);
        let gram_rat: Vec<Vec<Rational>> = gram
            .iter()
            .map(|row| row.iter().map(|e| e.as_rational().expect("rational pairing")).collect())
            .collect();
        let pair_vec = |x: &[Rational], y: &[Rational]| -> Rational {
            let mut acc = Rational::zero();
            for (i, cx) in x.iter().enumerate() {
                if cx.is_zero() {
                    continue;
                }
                for (j, cy) in y.iter().enumerate() {
                    if !cy.is_zero() {
                        acc += cx * cy * &gram_rat[i][j];
                    }
                }
            }
            acc
        };
        let others: Vec<&Vec<Rational>> = image.iter().chain(o_basis.iter()).collect();
        let mut constraints = RatMat::zeros(2 * others.len(), kernel.len());
        for (r, v) in others.iter().enumerate() {
            for (c, k) in kernel.iter().enumerate() {
                constraints.data[2 * r][c] = pair_vec(k, v);
                constraints.data[2 * r + 1][c] = pair_vec(v, k);
            }
        }
        for coords in constraints.kernel_basis() {
            let mut x = vec![Rational::zero(); n];
            for (c, k) in kernel.iter().enumerate() {
                for t in 0..n {
                    let add = k[t].clone() * &coords[c];
                    x[t] += add;
                }
            }
            h_basis.push(x);
        }
        if h_basis.len() != h_dim {
            return Err(HplError::NoOrthogonalComplement);
        }
        if let Some(e) = unit {
            let mut unit_vec = vec![Rational::zero(); n];
            unit_vec[e] = Rational::one();
            let mut probe = RatMat::zeros(n, 0);
            for v in &h_basis {
                push_if_independent(&mut probe, v);
            }
            if push_if_independent(&mut probe, &unit_vec) {
                // The unit is closed but falls outside the orthogonal H.
                return Err(HplError::NoOrthogonalComplement);
            }
            let mut span = RatMat::zeros(n, 0);
            let mut new_h = Vec::new();
            if push_if_independent(&mut span, &unit_vec) {
                new_h.push(unit_vec);
            }
            for v in &h_basis {
                if push_if_independent(&mut span, v) {
                    new_h.push(v.clone());
                }
            }
            h_basis = new_h;
        }
    } else {
        let mut span = RatMat::zeros(n, 0);
        for v in &image {
            push_if_independent(&mut span, v);
        }
        if let Some(e) = unit {
            let mut unit_vec = vec![Rational::zero(); n];
            unit_vec[e] = Rational::one();
            if push_if_independent(&mut span, &unit_vec) {
                h_basis.push(unit_vec);
            }
        }
        for k in &kernel {
            if push_if_independent(&mut span, k) {
                h_basis.push(k.clone());
            }
        }
        assert_eq!(h_basis.len(), h_dim);
    }

    build_retraction(module, d, &h_basis, &image, &o_basis, pairing, unit)
}

fn build_retraction(
    module: &ModuleRef,
    d: &GradedMatrix,
    h_basis: &[Vec<Rational>],
    image: &[Vec<Rational>],
    o_basis: &[Vec<Rational>],
    pairing: Option<&Pairing>,
    unit: Option<usize>,
) -> Result<Retraction, HplError> {
    let n = module.dim();
    // Name the homology classes after the leading coordinate of each
    // representative.
    let mut names: Vec<String> = Vec::new();
    let mut basis = Vec::new();
    for rep in h_basis {
        let lead = rep.iter().position(|c| !c.is_zero()).expect("nonzero representative");
        let mut name = format!("[{}]", module.name(lead));
        while names.contains(&name) {
            name.push('\'');
        }
        names.push(name.clone());
        basis.push((name, module.degree(lead)));
    }
    let h_module: ModuleRef = Arc::new(GradedModule::new(module.ring(), basis));

    let incl_images: Vec<ModuleElt> = h_basis.iter().map(|rep| elt_from_vec(module, rep)).collect();
    let incl =
        GradedMatrix::from_images(h_module.clone(), module.clone(), Bidegree::ZERO, &incl_images)?;

    // Coordinates with respect to the splitting basis H ++ image ++ O.
    let mut cols: Vec<Vec<Rational>> = Vec::new();
    cols.extend(h_basis.iter().cloned());
    cols.extend(image.iter().cloned());
    cols.extend(o_basis.iter().cloned());
    assert_eq!(cols.len(), n, "splitting must decompose the module");
    let mut basis_mat = RatMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for t in 0..n {
            basis_mat.data[t][j] = c[t].clone();
        }
    }

    let d_twisted = twist_differential(d);
    let mut pi_images = Vec::with_capacity(n);
    let mut h_images = Vec::with_capacity(n);
    for b in 0..n {
        let mut target = vec![Rational::zero(); n];
        target[b] = Rational::one();
        let coords = basis_mat.solve(&target)?;
        let pi_elt =
            ModuleElt::from_terms(coords.iter().take(h_basis.len()).enumerate().filter_map(
                |(j, c)| {
                    if c.is_zero() {
                        None
                    } else {
                        Some((j, module.ring().constant(c.clone())))
                    }
                },
            ));
        pi_images.push(pi_elt);

        // The d(C)-component of b; h(b) = -o where d' o = that component.
        let mut dc_vec = vec![Rational::zero(); n];
        for (j, c) in coords.iter().enumerate().skip(h_basis.len()).take(image.len()) {
            for t in 0..n {
                let add = cols[j][t].clone() * c;
                dc_vec[t] += add;
            }
        }
        if dc_vec.iter().all(|c| c.is_zero()) {
            h_images.push(ModuleElt::zero());
            continue;
        }
        let mut sys = RatMat::zeros(n, o_basis.len());
        for (j, o) in o_basis.iter().enumerate() {
            let img = vec_from_elt(module, &d_twisted.apply(&elt_from_vec(module, o)));
            for t in 0..n {
                sys.data[t][j] = img[t].clone();
            }
        }
        let sol = sys.solve(&dc_vec)?;
        let mut o_vec = vec![Rational::zero(); n];
        for (j, o) in o_basis.iter().enumerate() {
            for t in 0..n {
                let add = o[t].clone() * &sol[j];
                o_vec[t] += add;
            }
        }
        h_images.push(elt_from_vec(module, &o_vec).neg());
    }
    let pi =
        GradedMatrix::from_images(module.clone(), h_module.clone(), Bidegree::ZERO, &pi_images)?;
    let h =
        GradedMatrix::from_images(module.clone(), module.clone(), Bidegree::new(-1, 0), &h_images)?;

    let mut r = Retraction { pi, incl, h, flags: RetractionFlags::default() };
    let report = check_retraction(&mut r, d, pairing, unit);
    debug_assert!(report.passed(), "splitting retraction must verify: {report}");
    Ok(r)
}

/// Verifies the retraction identities on the basis, records side-condition,
/// cyclic and unital flags on the retraction, and reports violations of the
/// core identities.
pub fn check_retraction(
    r: &mut Retraction,
    d: &GradedMatrix,
    pairing: Option<&Pairing>,
    unit: Option<usize>,
) -> CheckReport {
    let module = r.pi.source().clone();
    let h_module = r.pi.target().clone();
    let d_twisted = twist_differential(d);
    let mut violations = Vec::new();
    let zero = MonoidElt::zero();
    let mut check = |name: &str, idx: usize, residual: &ModuleElt, m: &GradedModule| {
        if !residual.is_zero() {
            violations.push(Violation {
                check: name.into(),
                k: 1,
                beta: zero.clone(),
                inputs: vec![m.name(idx).to_string()],
                residual: format!("{}", residual.display(m)),
            });
        }
    };

    for b in 0..module.dim() {
        let x = module.generator(b);
        check("retraction-pi-chain", b, &r.pi.apply(&d_twisted.apply(&x)), &module);
        let lhs = d_twisted.apply(&r.h.apply(&x)).add(&r.h.apply(&d_twisted.apply(&x)));
        let rhs = r.incl.apply(&r.pi.apply(&x)).sub(&x);
        check("retraction-homotopy", b, &lhs.sub(&rhs), &module);
    }
    for b in 0..h_module.dim() {
        let y = h_module.generator(b);
        check("retraction-i-chain", b, &d_twisted.apply(&r.incl.apply(&y)), &h_module);
        check("retraction-pi-i", b, &r.pi.apply(&r.incl.apply(&y)).sub(&y), &h_module);
    }

    let mut side_ok = true;
    for b in 0..module.dim() {
        let hx = r.h.column(b);
        if !r.h.apply(&hx).is_zero() || !r.pi.apply(&hx).is_zero() {
            side_ok = false;
        }
    }
    for b in 0..h_module.dim() {
        if !r.h.apply(&r.incl.column(b)).is_zero() {
            side_ok = false;
        }
    }

    let mut cyclic_ok = pairing.is_some();
    if let Some(p) = pairing {
        for i in 0..module.dim() {
            for j in 0..module.dim() {
                let lhs = p.value(&module, &r.h.column(i), &module.generator(j));
                let rhs = p
                    .value(&module, &module.generator(i), &r.h.column(j))
                    .with_sign(module.degree(i).codim);
                if !lhs.add(&rhs).is_zero() {
                    cyclic_ok = false;
                }
            }
        }
    }

    let unital_ok = match unit {
        Some(e) => r.h.column(e).is_zero(),
        None => false,
    };

    r.flags = RetractionFlags { side_conditions: side_ok, cyclic: cyclic_ok, unital: unital_ok };
    CheckReport::from_violations(violations)
}

/// Turns a homotopy-correct triple into a genuine retraction with side
/// conditions: conjugation `h <- (id - I Pi) h (id - I Pi)` forces
/// `Pi h = 0` and `h I = 0`, and `h <- s (h d' h)` (with the sign chosen so
/// the homotopy identity survives) forces `h h = 0`. At most three rounds;
/// cyclicity and unitality of the input are preserved and re-verified,
/// never assumed.
pub fn correct_side_conditions(
    pi: &GradedMatrix,
    incl: &GradedMatrix,
    h0: &GradedMatrix,
    d: &GradedMatrix,
    pairing: Option<&Pairing>,
    unit: Option<usize>,
) -> Result<Retraction, HplError> {
    let module = pi.source().clone();
    let d_twisted = twist_differential(d);
    let homotopy_holds = |h: &GradedMatrix| -> bool {
        (0..module.dim()).all(|b| {
            let x = module.generator(b);
            let lhs = d_twisted.apply(&h.apply(&x)).add(&h.apply(&d_twisted.apply(&x)));
            let rhs = incl.apply(&pi.apply(&x)).sub(&x);
            lhs.sub(&rhs).is_zero()
        })
    };
    if !homotopy_holds(h0) {
        return Err(HplError::NotAHomotopy);
    }

    let id = GradedMatrix::identity(module.clone());
    let q = id.sub(&incl.compose(pi)?)?;

    let rounds = 3;
    let mut h = h0.clone();
    for _ in 0..rounds {
        h = q.compose(&h)?.compose(&q)?;
        if !homotopy_holds(&h) {
            return Err(HplError::NotAHomotopy);
        }
        let hdh = h.compose(&d_twisted)?.compose(&h)?;
        let mut fixed = None;
        for candidate in [hdh.neg(), hdh.clone()] {
            if homotopy_holds(&candidate) {
                fixed = Some(candidate);
                break;
            }
        }
        let Some(next) = fixed else {
            return Err(HplError::NotAHomotopy);
        };
        h = next;
        let mut r = Retraction {
            pi: pi.clone(),
            incl: incl.clone(),
            h: h.clone(),
            flags: RetractionFlags::default(),
        };
        let report = check_retraction(&mut r, d, pairing, unit);
        if report.passed() && r.flags.side_conditions {
            return Ok(r);
        }
    }
    Err(HplError::CorrectionDiverged(rounds))
}

/// The output of homological perturbation transfer.
#[derive(Debug, Clone)]
pub struct Transfer {
    /// The minimal model on the chosen cohomology module.
    pub canonical: AInftyStructure,
    /// The inclusion morphism, from the minimal model into the input.
    pub incl: AInftyMorphism,
    /// The projection morphism, from the input onto the minimal model.
    pub proj: AInftyMorphism,
    /// The homotopy from the identity to incl . proj.
    pub homotopy: AInftyHomotopy,
}

/// Number of extra word slots that curvature insertions can create below
/// the cutoff: floor(cutoff / min positive generator energy).
pub fn arity_slack(a: &AInftyStructure) -> usize {
    match a.monoid().min_energy() {
        None => 0,
        Some(e_min) => {
            let q = a.cutoff() / e_min;
            q.floor().to_integer().try_into().unwrap_or(0)
        }
    }
}

/// Homological perturbation transfer: evaluates the series
/// `m_can = sum_a PiHat d' (hHat d')^a IHat` and the matching series for
/// the inclusion, projection and homotopy, componentwise on basis words.
/// Gappedness makes every component an exact finite sum; `length_cap`
/// bounds the iteration as a safety net and never truncates a nonzero
/// tail below the cutoff.
pub fn transfer(
    a: &AInftyStructure,
    r: &Retraction,
    k_max: usize,
    length_cap: usize,
) -> Result<Transfer, HplError> {
    let module = a.module().clone();
    if r.pi.source() != &module {
        return Err(HplError::NotAPerturbation);
    }
    // The retraction must retract the complex of this structure's m_{1,0}.
    let d = a.differential()?;
    let mut probe = r.clone();
    let core = check_retraction(&mut probe, &d, None, None);
    if !core.passed() {
        return Err(HplError::NotAPerturbation);
    }
    if !probe.flags.side_conditions {
        return Err(HplError::SideConditionsMissing);
    }

    let cutoff = a.cutoff().clone();
    let h_module = r.homology().clone();
    let store_arity = k_max + arity_slack(a);

    // Word operators of the series.
    let perturbation = a.ops().without_linear_part();
    let p_table = OpsTable::linear(&r.incl.compose(&r.pi)?, 0);
    let h_table = OpsTable::linear(&r.h, -1);
    let id_table = OpsTable::identity(&module);
    let pi_table = OpsTable::linear(&r.pi, 0);
    let i_table = OpsTable::linear(&r.incl, 0);
    let apply_h = |ws: &WordSum| -> Result<WordSum, HplError> {
        Ok(apply_bicoderivation(&module, &module, &id_table, &p_table, &h_table, ws, &cutoff)?)
    };
    let apply_pert = |ws: &WordSum| -> Result<WordSum, HplError> {
        Ok(apply_coderivation(&module, &perturbation, ws, &cutoff)?)
    };

    type Comp = BTreeMap<MonoidElt, ModuleElt>;

    // Canonical operations and inclusion components, from words over HC.
    let mut canonical = AInftyStructure::new(h_module.clone(), a.monoid().clone(), cutoff.clone());
    let mut incl_comps: Vec<(Vec<usize>, Comp)> = Vec::new();
    {
        let mut tasks = Vec::new();
        for k in 0..=store_arity {
            tasks.extend(exec::tuples(h_module.dim(), k));
        }
        let results: Vec<Result<(Vec<usize>, Comp, Comp), HplError>> =
            exec::map_collect(&tasks, |word| {
                let mut mcan: Comp = BTreeMap::new();
                let mut icomp: Comp = BTreeMap::new();
                let mut state = apply_morphism_words(
                    &h_module,
                    &i_table,
                    &WordSum::basis_word(&h_module, word.clone()),
                    &cutoff,
                )?;
                let mut steps = 0;
                while !state.is_zero() && steps <= length_cap {
                    for (beta, v) in state.pi1() {
                        let entry = icomp.entry(beta).or_default();
                        *entry = entry.add(&v);
                    }
                    let u = apply_pert(&state)?;
                    for (beta, v) in u.pi1() {
                        let entry = mcan.entry(beta).or_default();
                        *entry = entry.add(&r.pi.apply(&v));
                    }
                    state = apply_h(&u)?;
                    steps += 1;
                }
                mcan.retain(|_, v| !v.is_zero());
                icomp.retain(|_, v| !v.is_zero());
                Ok((word.clone(), mcan, icomp))
            });
        for res in results {
            let (word, mcan, icomp) = res?;
            for (beta, v) in mcan {
                canonical.insert_op(word.len(), beta, word.clone(), v)?;
            }
            incl_comps.push((word, icomp));
        }
    }

    // Projection and homotopy components, from words over C.
    let mut proj_comps: Vec<(Vec<usize>, Comp)> = Vec::new();
    let mut htopy_comps: Vec<(Vec<usize>, Comp)> = Vec::new();
    {
        let mut tasks = Vec::new();
        for k in 0..=store_arity {
            tasks.extend(exec::tuples(module.dim(), k));
        }
        let results: Vec<Result<(Vec<usize>, Comp, Comp), HplError>> =
            exec::map_collect(&tasks, |word| {
                let mut pcomp: Comp = BTreeMap::new();
                let mut hcomp: Comp = BTreeMap::new();
                let mut state = WordSum::basis_word(&module, word.clone());
                let mut steps = 0;
                loop {
                    let projected = apply_morphism_words(&module, &pi_table, &state, &cutoff)?;
                    for (beta, v) in projected.pi1() {
                        let entry = pcomp.entry(beta).or_default();
                        *entry = entry.add(&v);
                    }
                    let t = apply_h(&state)?;
                    for (beta, v) in t.pi1() {
                        let entry = hcomp.entry(beta).or_default();
                        *entry = entry.add(&v);
                    }
                    if t.is_zero() {
                        break;
                    }
                    state = apply_pert(&t)?;
                    if state.is_zero() {
                        break;
                    }
                    steps += 1;
                    if steps > length_cap {
                        break;
                    }
                }
                pcomp.retain(|_, v| !v.is_zero());
                hcomp.retain(|_, v| !v.is_zero());
                Ok((word.clone(), pcomp, hcomp))
            });
        for res in results {
            let (word, pcomp, hcomp) = res?;
            proj_comps.push((word.clone(), pcomp));
            htopy_comps.push((word, hcomp));
        }
    }

    // Units and pairings descend along the retraction.
    if let Some(e) = a.unit() {
        let pe = r.pi.apply(&module.generator(e));
        let mut terms = pe.terms();
        if let Some((idx, c)) = terms.next() {
            if terms.next().is_none() && c == &h_module.ring().one() {
                canonical.set_unit(idx)?;
            }
        }
    }
    if let Some(p) = a.pairing() {
        canonical.set_pairing(p.induced(&module, &h_module, &r.incl)?);
    }

    // Assemble the morphisms against the finished canonical structure.
    let mut incl = AInftyMorphism::new(canonical.clone(), a.clone(), store_arity);
    for (word, comp) in incl_comps {
        for (beta, v) in comp {
            incl.insert_component(word.len(), beta, word.clone(), v)?;
        }
    }
    let mut proj = AInftyMorphism::new(a.clone(), canonical.clone(), store_arity);
    for (word, comp) in proj_comps {
        for (beta, v) in comp {
            proj.insert_component(word.len(), beta, word.clone(), v)?;
        }
    }

    let ip = compose(&incl, &proj)?;
    let id = AInftyMorphism::identity(a, store_arity);
    let mut homotopy = AInftyHomotopy::new(id, ip);
    for (word, comp) in htopy_comps {
        for (beta, v) in comp {
            homotopy.insert_component(word.len(), beta, word.clone(), v)?;
        }
    }

    Ok(Transfer { canonical, incl, proj, homotopy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainfty::{from_dga, ProductTable};
    use crate::scalar::{rat, CoefficientRing, RingElt};

    /// The point: one generator of degree (0,0), d = 0, unital product,
    /// integral = 1.
    fn point() -> (ModuleRef, GradedMatrix, ProductTable, Vec<RingElt>) {
        let module: ModuleRef = Arc::new(GradedModule::new(
            CoefficientRing::Rationals,
            vec![("1".into(), Bidegree::ZERO)],
        ));
        let d = GradedMatrix::zero(module.clone(), module.clone(), Bidegree::new(1, 0));
        let mut product = ProductTable::new();
        product.insert(0, 0, module.generator(0));
        let integral = vec![module.ring().one()];
        (module, d, product, integral)
    }

    #[test]
    fn point_retraction_is_identity_like() {
        let (module, d, _, _) = point();
        let r = retraction_from_splitting(&module, &d, None, Some(0)).unwrap();
        assert!(r.h.is_zero());
        assert_eq!(r.homology().dim(), 1);
        assert!(r.flags.side_conditions);
        assert!(r.flags.unital);
    }

    #[test]
    fn transfer_of_point_dga_is_point_dga() {
        let (module, d, product, integral) = point();
        let a = from_dga(module.clone(), &d, &product, Some((&integral, (0, 0))), Some(0)).unwrap();
        let r = retraction_from_splitting(&module, &d, a.pairing(), Some(0)).unwrap();
        let t = transfer(&a, &r, 3, 10).unwrap();
        assert_eq!(t.canonical.unit(), Some(0));
        let m2 =
            t.canonical.ops().get(2, &MonoidElt::zero(), &[0, 0]).cloned().unwrap_or_default();
        assert_eq!(m2, t.canonical.module().generator(0));
        assert!(crate::ainfty::validate_structure(&t.canonical, 3).passed());
    }

    #[test]
    fn correction_rejects_non_homotopies() {
        let (module, d, _, _) = point();
        let r = retraction_from_splitting(&module, &d, None, None).unwrap();
        let bad_pi = r.pi.add(&r.pi).unwrap();
        assert!(matches!(
            correct_side_conditions(&bad_pi, &r.incl, &r.h, &d, None, None),
            Err(HplError::NotAHomotopy)
        ));
    }

    #[test]
    fn arity_slack_counts_energy_steps() {
        let (module, d, product, _) = point();
        let a = from_dga(module, &d, &product, None, None).unwrap();
        assert_eq!(arity_slack(&a), 0);
        let monoid = crate::novikov::GappedMonoid::new(vec![MonoidElt::new(rat(1, 2), 0)]).unwrap();
        let widened = crate::ainfty::with_monoid(&a, monoid, rat(2, 1));
        assert_eq!(arity_slack(&widened), 4);
    }
}
