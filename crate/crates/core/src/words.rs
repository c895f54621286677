//! The word-level operator engine.
//!
//! Elements of the bar coalgebra are kept in canonical form: a ring
//! coefficient and a single Novikov monomial tag at the global front,
//! followed by a pure word of basis elements. Every sign in the crate
//! funnels through the evaluators here:
//!
//! * coderivation extension of a component family of degree `d`: insert a
//!   component at position `i` with the Koszul sign
//!   `(-1)^(d * sum_{j<i}(codim x_j - 1))`, and move the component's
//!   Novikov monomial to the global front across the prefix with the
//!   epsilon-crossing sign `(-1)^(mu(beta) * sum_{j<i}(codim + ls + 1))`;
//! * morphism application: split the word into consecutive blocks, apply
//!   one component per block, and move each block's monomial to the front
//!   across the earlier blocks;
//! * (f1, f2)-coderivation extension: one component insertion with `f1`
//!   applied to the prefix and `f2` to the suffix. With `f1 = id` and
//!   `f2` the linear I.Pi projector this is exactly the one-sided homotopy
//!   extension used by the perturbation series.
//!
//! Applying an operator of degree `d` to a term whose global tag has Maslov
//! index `mu` costs the additional sign `(-1)^(d * mu)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::matrix::GradedMatrix;
use crate::module::{GradedModule, ModuleElt};
use crate::novikov::MonoidElt;
use crate::scalar::{Rational, RingElt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("input term at energy {0} exceeds the cutoff {1}")]
    CutoffExceeded(Rational, Rational),
}

/// A formal sum of monoid-tagged basis words with ring coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordSum {
    terms: BTreeMap<(MonoidElt, Vec<usize>), RingElt>,
}

impl WordSum {
    pub fn zero() -> Self {
        WordSum::default()
    }

    /// A single untagged basis word with coefficient 1.
    pub fn basis_word(module: &GradedModule, word: Vec<usize>) -> Self {
        let mut out = WordSum::zero();
        out.add_term(MonoidElt::zero(), word, &module.ring().one());
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(MonoidElt, Vec<usize>), &RingElt)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, beta: MonoidElt, word: Vec<usize>, coeff: &RingElt) {
        if coeff.is_zero() {
            return;
        }
        let key = (beta, word);
        let entry = self.terms.entry(key.clone()).or_insert_with(|| coeff.ring().zero());
        *entry = entry.add(coeff);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &WordSum) -> WordSum {
        let mut out = self.clone();
        for ((b, w), c) in other.terms() {
            out.add_term(b.clone(), w.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &WordSum) -> WordSum {
        let mut out = self.clone();
        for ((b, w), c) in other.terms() {
            out.add_term(b.clone(), w.clone(), &c.neg());
        }
        out
    }

    pub fn scale_sign(&self, sign: i64) -> WordSum {
        if sign.rem_euclid(2) == 0 {
            self.clone()
        } else {
            let terms = self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect();
            WordSum { terms }
        }
    }

    fn check_cutoff(&self, cutoff: &Rational) -> Result<(), WordError> {
        for (beta, _) in self.terms.keys() {
            if &beta.energy > cutoff {
                return Err(WordError::CutoffExceeded(beta.energy.clone(), cutoff.clone()));
            }
        }
        Ok(())
    }

    /// The length-one part, grouped by monoid tag.
    pub fn pi1(&self) -> BTreeMap<MonoidElt, ModuleElt> {
        let mut out: BTreeMap<MonoidElt, ModuleElt> = BTreeMap::new();
        for ((beta, word), coeff) in &self.terms {
            if word.len() == 1 {
                out.entry(beta.clone()).or_default().add_term(word[0], coeff);
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// The coefficient of the empty word at the trivial tag.
    pub fn counit_part(&self) -> Option<&RingElt> {
        self.terms.get(&(MonoidElt::zero(), Vec::new()))
    }

    pub fn max_length(&self) -> usize {
        self.terms.keys().map(|(_, w)| w.len()).max().unwrap_or(0)
    }
}

/// A family of operation components of a fixed coderivation degree,
/// stored on basis tuples: (arity, monoid element) -> input tuple -> value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpsTable {
    pub degree: i64,
    pub comps: BTreeMap<(usize, MonoidElt), BTreeMap<Vec<usize>, ModuleElt>>,
}

impl OpsTable {
    pub fn new(degree: i64) -> Self {
        OpsTable { degree, comps: BTreeMap::new() }
    }

    pub fn insert(&mut self, k: usize, beta: MonoidElt, inputs: Vec<usize>, value: ModuleElt) {
        if value.is_zero() {
            return;
        }
        assert_eq!(inputs.len(), k);
        self.comps.entry((k, beta)).or_default().insert(inputs, value);
    }

    pub fn add_value(&mut self, k: usize, beta: MonoidElt, inputs: Vec<usize>, value: &ModuleElt) {
        if value.is_zero() {
            return;
        }
        assert_eq!(inputs.len(), k);
        let slot = self.comps.entry((k, beta.clone())).or_default().entry(inputs.clone());
        let merged = slot.or_insert_with(ModuleElt::zero);
        *merged = merged.add(value);
        if merged.is_zero() {
            self.comps.get_mut(&(k, beta)).unwrap().remove(&inputs);
        }
    }

    pub fn get(&self, k: usize, beta: &MonoidElt, inputs: &[usize]) -> Option<&ModuleElt> {
        self.comps.get(&(k, beta.clone()))?.get(inputs)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|m| m.values().all(|v| v.is_zero()))
    }

    /// A component table with a single linear piece at (1, 0), as needed for
    /// the hat extensions of Pi, I, h and the contraction operators.
    pub fn linear(matrix: &GradedMatrix, degree: i64) -> Self {
        let mut t = OpsTable::new(degree);
        for s in 0..matrix.source().dim() {
            let img = matrix.column(s);
            if !img.is_zero() {
                t.insert(1, MonoidElt::zero(), vec![s], img);
            }
        }
        t
    }

    pub fn identity(module: &GradedModule) -> Self {
        let mut t = OpsTable::new(0);
        for i in 0..module.dim() {
            t.insert(
                1,
                MonoidElt::zero(),
                vec![i],
                ModuleElt::from_terms([(i, module.ring().one())]),
            );
        }
        t
    }

    /// Keeps every component except the one at (1, 0); this is the
    /// perturbation part used by the transfer series.
    pub fn without_linear_part(&self) -> Self {
        let mut t = OpsTable::new(self.degree);
        for ((k, beta), tuples) in &self.comps {
            if *k == 1 && beta.is_zero() {
                continue;
            }
            t.comps.insert((*k, beta.clone()), tuples.clone());
        }
        t
    }
}

/// Parity of `sum (codim + ls + 1)` over the listed slots: the cost of one
/// epsilon crossing the slots.
pub(crate) fn eps_cross_parity(module: &GradedModule, slots: &[usize]) -> i64 {
    slots
        .iter()
        .map(|&i| {
            let g = module.degree(i);
            g.codim + g.ls as i64 + 1
        })
        .sum()
}

/// Koszul exponent `d * sum(codim - 1)` over the listed slots.
pub(crate) fn koszul_exp(module: &GradedModule, d: i64, slots: &[usize]) -> i64 {
    let total: i64 = slots.iter().map(|&i| module.degree(i).codim - 1).sum();
    d * total
}

/// One insertion of a component at a fixed position, shared by the
/// coderivation evaluator and the tree oracle. `word` is a pure basis word
/// and `beta_in` the incoming global tag of the term.
#[allow(clippy::too_many_arguments)]
pub(crate) fn insert_component_at(
    source: &GradedModule,
    table: &OpsTable,
    k2: usize,
    beta2: &MonoidElt,
    pos: usize,
    beta_in: &MonoidElt,
    word: &[usize],
    coeff: &RingElt,
    cutoff: &Rational,
    out: &mut WordSum,
) {
    debug_assert!(pos + k2 <= word.len());
    let total_beta = beta_in.add(beta2);
    if &total_beta.energy > cutoff {
        return;
    }
    let Some(value) = table.get(k2, beta2, &word[pos..pos + k2]) else {
        return;
    };
    let prefix = &word[..pos];
    let exp = koszul_exp(source, table.degree, prefix)
        + beta2.maslov * eps_cross_parity(source, prefix)
        + table.degree * beta_in.maslov;
    for (b, c) in value.terms() {
        let mut w = Vec::with_capacity(word.len() + 1 - k2);
        w.extend_from_slice(prefix);
        w.push(b);
        w.extend_from_slice(&word[pos + k2..]);
        out.add_term(total_beta.clone(), w, &coeff.mul(c).with_sign(exp));
    }
}

/// The one-sided homotopy operator at a fixed position: prefix untouched,
/// `h` on the slot at `pos`, `f2` (the projector, in the series) on every
/// later slot, with the degree -1 Koszul sign over the prefix. This is the
/// single-position restriction of the (f1, f2)-extension, used by the tree
/// oracle so that per-tree signs are inherited from the series operators.
#[allow(clippy::too_many_arguments)]
pub(crate) fn onesided_h_at(
    source: &GradedModule,
    f1: &MorphismTable,
    f2: &MorphismTable,
    h_table: &OpsTable,
    pos: usize,
    beta_in: &MonoidElt,
    word: &[usize],
    coeff: &RingElt,
    cutoff: &Rational,
    out: &mut WordSum,
) {
    let mut single = WordSum::zero();
    single.add_term(beta_in.clone(), word.to_vec(), coeff);
    let full = apply_bicoderivation_at(source, source, f1, f2, h_table, &single, cutoff, Some(pos));
    if let Ok(ws) = full {
        *out = out.add(&ws);
    }
}

/// Extension of a component family to a coderivation on words: the sum over
/// all insertion positions and components.
pub fn apply_coderivation(
    source: &GradedModule,
    table: &OpsTable,
    ws: &WordSum,
    cutoff: &Rational,
) -> Result<WordSum, WordError> {
    ws.check_cutoff(cutoff)?;
    let mut out = WordSum::zero();
    for ((beta_in, word), coeff) in ws.terms() {
        for (k2, beta2) in table.comps.keys() {
            if *k2 > word.len() {
                continue;
            }
            for pos in 0..=(word.len() - k2) {
                insert_component_at(
                    source, table, *k2, beta2, pos, beta_in, word, coeff, cutoff, &mut out,
                );
            }
        }
    }
    Ok(out)
}

/// Morphism components use the same table layout with degree 0 and values in
/// the target module; tameness means no component at (0, 0).
pub type MorphismTable = OpsTable;

struct BlockFrame<'a> {
    source: &'a GradedModule,
    morph: &'a MorphismTable,
    word: &'a [usize],
    cutoff: &'a Rational,
}

/// Depth-first over block sequences, consuming the word left to right.
/// `crossed` is the epsilon-crossing parity of all slots consumed so far.
fn block_sequences(
    f: &BlockFrame,
    pos: usize,
    out_word: &mut Vec<usize>,
    acc_beta: &MonoidElt,
    acc_coeff: &RingElt,
    crossed: i64,
    out: &mut WordSum,
) {
    if pos == f.word.len() {
        out.add_term(acc_beta.clone(), out_word.clone(), acc_coeff);
    }
    for ((kb, betab), tuples) in &f.morph.comps {
        if pos + kb > f.word.len() {
            continue;
        }
        // An identity-free step must make progress: an empty block carries
        // energy (tameness), so the recursion terminates below the cutoff.
        if *kb == 0 && betab.is_zero() {
            continue;
        }
        let next_beta = acc_beta.add(betab);
        if &next_beta.energy > f.cutoff {
            continue;
        }
        let Some(value) = tuples.get(&f.word[pos..pos + kb]) else {
            continue;
        };
        let exp = betab.maslov * crossed;
        let next_crossed = crossed + eps_cross_parity(f.source, &f.word[pos..pos + kb]);
        for (b, c) in value.terms() {
            let next_coeff = acc_coeff.mul(c).with_sign(exp);
            if next_coeff.is_zero() {
                continue;
            }
            out_word.push(b);
            block_sequences(f, pos + kb, out_word, &next_beta, &next_coeff, next_crossed, out);
            out_word.pop();
        }
    }
}

/// Applies a tame coalgebra morphism to a word sum by block decomposition.
/// Empty blocks (arity-0 components at nonzero monoid elements) may appear
/// anywhere in the sequence; gappedness keeps the sum finite. The empty
/// word maps to itself plus pure-curvature block sequences.
pub fn apply_morphism_words(
    source: &GradedModule,
    morph: &MorphismTable,
    ws: &WordSum,
    cutoff: &Rational,
) -> Result<WordSum, WordError> {
    ws.check_cutoff(cutoff)?;
    assert!(morph.get(0, &MonoidElt::zero(), &[]).is_none(), "morphism must be tame");
    let mut out = WordSum::zero();
    for ((beta_in, word), coeff) in ws.terms() {
        let frame = BlockFrame { source, morph, word, cutoff };
        let mut out_word = Vec::new();
        block_sequences(&frame, 0, &mut out_word, beta_in, coeff, 0, &mut out);
    }
    Ok(out)
}

/// Extension of a component family `table` of degree `d` as an
/// (f1, f2)-coderivation: one component inserted per term, `f1` applied to
/// the prefix and `f2` to the suffix. `target` is the module the component
/// values and the morphism outputs live in.
#[allow(clippy::too_many_arguments)]
pub fn apply_bicoderivation(
    source: &GradedModule,
    target: &GradedModule,
    f1: &MorphismTable,
    f2: &MorphismTable,
    table: &OpsTable,
    ws: &WordSum,
    cutoff: &Rational,
) -> Result<WordSum, WordError> {
    apply_bicoderivation_at(source, target, f1, f2, table, ws, cutoff, None)
}

/// As `apply_bicoderivation`, optionally restricted to one insertion
/// position.
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_bicoderivation_at(
    source: &GradedModule,
    target: &GradedModule,
    f1: &MorphismTable,
    f2: &MorphismTable,
    table: &OpsTable,
    ws: &WordSum,
    cutoff: &Rational,
    fixed_pos: Option<usize>,
) -> Result<WordSum, WordError> {
    ws.check_cutoff(cutoff)?;
    let mut out = WordSum::zero();
    for ((beta_in, word), coeff) in ws.terms() {
        let tag_exp = table.degree * beta_in.maslov;
        for (k2, beta2) in table.comps.keys() {
            if *k2 > word.len() {
                continue;
            }
            for pos in 0..=(word.len() - k2) {
                if let Some(fp) = fixed_pos {
                    if pos != fp {
                        continue;
                    }
                }
                let Some(value) = table.get(*k2, beta2, &word[pos..pos + k2]) else {
                    continue;
                };
                let base = beta_in.add(beta2);
                if &base.energy > cutoff {
                    continue;
                }
                let prefix = &word[..pos];
                let suffix = &word[pos + k2..];
                let xi_exp = koszul_exp(source, table.degree, prefix);
                let left = apply_morphism_words(
                    source,
                    f1,
                    &WordSum::basis_word(source, prefix.to_vec()),
                    cutoff,
                )?;
                let right = apply_morphism_words(
                    source,
                    f2,
                    &WordSum::basis_word(source, suffix.to_vec()),
                    cutoff,
                )?;
                for ((beta_u, u), cu) in left.terms() {
                    let cross_u = eps_cross_parity(target, u);
                    let mid_exp = beta2.maslov * cross_u;
                    for (y, cy) in value.terms() {
                        let gy = target.degree(y);
                        let cross_uy = cross_u + gy.codim + gy.ls as i64 + 1;
                        for ((beta_w, w), cw) in right.terms() {
                            let total = base.add(beta_u).add(beta_w);
                            if &total.energy > cutoff {
                                continue;
                            }
                            let exp = xi_exp + tag_exp + mid_exp + beta_w.maslov * cross_uy;
                            let mut word_out = Vec::with_capacity(u.len() + 1 + w.len());
                            word_out.extend_from_slice(u);
                            word_out.push(y);
                            word_out.extend_from_slice(w);
                            let c = coeff.mul(cu).mul(cy).mul(cw).with_sign(exp);
                            out.add_term(total, word_out, &c);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, CoefficientRing};

    fn module() -> GradedModule {
        GradedModule::new(
            CoefficientRing::Rationals,
            vec![
                ("e".into(), Bidegree::new(0, 0)),
                ("x".into(), Bidegree::new(1, 0)),
                ("y".into(), Bidegree::new(2, 1)),
            ],
        )
    }

    #[test]
    fn coderivation_insertions_carry_koszul_signs() {
        let m = module();
        let ring = m.ring();
        // A single binary component n(x, x) = y of coderivation degree 1.
        let mut table = OpsTable::new(1);
        table.insert(2, MonoidElt::zero(), vec![1, 1], ModuleElt::from_terms([(2, ring.one())]));
        let cutoff = rat(10, 1);
        // Length-3 word (x, x, x): two summands, positions 0 and 1.
        let ws = WordSum::basis_word(&m, vec![1, 1, 1]);
        let out = apply_coderivation(&m, &table, &ws, &cutoff).unwrap();
        let mut expected = WordSum::zero();
        expected.add_term(MonoidElt::zero(), vec![2, 1], &ring.one());
        // Position 1 crosses one x of codim 1: (-1)^(1*(1-1)) = +1.
        expected.add_term(MonoidElt::zero(), vec![1, 2], &ring.one());
        assert_eq!(out, expected);
        // Words shorter than every arity map to zero.
        let short = WordSum::basis_word(&m, vec![1]);
        assert!(apply_coderivation(&m, &table, &short, &cutoff).unwrap().is_zero());
        // A codim-2 prefix slot flips the degree-1 insertion.
        let ws_y = WordSum::basis_word(&m, vec![2, 1, 1]);
        let out_y = apply_coderivation(&m, &table, &ws_y, &cutoff).unwrap();
        let mut expected_y = WordSum::zero();
        expected_y.add_term(MonoidElt::zero(), vec![2, 2], &ring.one().neg());
        assert_eq!(out_y, expected_y);
    }

    #[test]
    fn degree_zero_components_have_no_koszul_signs() {
        let m = module();
        let ring = m.ring();
        let mut table = OpsTable::new(0);
        table.insert(1, MonoidElt::zero(), vec![1], ModuleElt::from_terms([(1, ring.from_i64(3))]));
        let ws = WordSum::basis_word(&m, vec![2, 1]);
        let out = apply_coderivation(&m, &table, &ws, &rat(10, 1)).unwrap();
        let mut expected = WordSum::zero();
        expected.add_term(MonoidElt::zero(), vec![2, 1], &ring.from_i64(3));
        assert_eq!(out, expected);
    }

    #[test]
    fn epsilon_crossing_signs_are_applied() {
        let m = module();
        let ring = m.ring();
        // A curvature component at an odd monoid element inserted past a
        // slot of degree (0,0): crossing parity (0 + 0 + 1) is odd.
        let beta = MonoidElt::new(rat(1, 1), 1);
        let mut table = OpsTable::new(1);
        table.insert(0, beta.clone(), vec![], ModuleElt::from_terms([(1, ring.one())]));
        let ws = WordSum::basis_word(&m, vec![0]);
        let out = apply_coderivation(&m, &table, &ws, &rat(10, 1)).unwrap();
        let mut expected = WordSum::zero();
        // Position 0: no crossings, Koszul exponent 0.
        expected.add_term(beta.clone(), vec![1, 0], &ring.one());
        // Position 1: Koszul (-1)^(1*(0-1)) = -1, crossing (-1)^(1*1) = -1.
        expected.add_term(beta.clone(), vec![0, 1], &ring.one());
        assert_eq!(out, expected);
    }

    #[test]
    fn morphism_blocks_and_counit() {
        let m = module();
        let ring = m.ring();
        let id = OpsTable::identity(&m);
        let ws = WordSum::basis_word(&m, vec![1, 2, 0]);
        let out = apply_morphism_words(&m, &id, &ws, &rat(10, 1)).unwrap();
        assert_eq!(out, ws);
        // A single linear component acts slotwise on a length-2 word.
        let mut f = OpsTable::new(0);
        f.insert(1, MonoidElt::zero(), vec![1], ModuleElt::from_terms([(1, ring.from_i64(2))]));
        f.insert(1, MonoidElt::zero(), vec![0], ModuleElt::from_terms([(0, ring.one())]));
        let ws2 = WordSum::basis_word(&m, vec![1, 1]);
        let out2 = apply_morphism_words(&m, &f, &ws2, &rat(10, 1)).unwrap();
        let mut expected = WordSum::zero();
        expected.add_term(MonoidElt::zero(), vec![1, 1], &ring.from_i64(4));
        assert_eq!(out2, expected);
        // The empty word maps to itself (no curvature components here).
        let empty = WordSum::basis_word(&m, vec![]);
        let oute = apply_morphism_words(&m, &f, &empty, &rat(10, 1)).unwrap();
        assert_eq!(oute, empty);
    }

    #[test]
    fn onesided_extension_projects_trailing_slots() {
        let m = module();
        let ring = m.ring();
        // h: x -> e (degree -1 piece), P: kills x, fixes e and y.
        let mut h = OpsTable::new(-1);
        h.insert(1, MonoidElt::zero(), vec![1], ModuleElt::from_terms([(0, ring.one())]));
        let mut p = OpsTable::new(0);
        p.insert(1, MonoidElt::zero(), vec![0], ModuleElt::from_terms([(0, ring.one())]));
        p.insert(1, MonoidElt::zero(), vec![2], ModuleElt::from_terms([(2, ring.one())]));
        let id = OpsTable::identity(&m);
        let ws = WordSum::basis_word(&m, vec![1, 1, 2]);
        let out = apply_bicoderivation(&m, &m, &id, &p, &h, &ws, &rat(10, 1)).unwrap();
        // Position 0: e ⊗ P(x) ⊗ P(y) dies since P kills x.
        // Position 1: x ⊗ e ⊗ P(y), Koszul (-1)^(-1 * (1-1)) = +1.
        let mut expected = WordSum::zero();
        expected.add_term(MonoidElt::zero(), vec![1, 0, 2], &ring.one());
        assert_eq!(out, expected);
    }

    #[test]
    fn cutoff_violations_are_reported() {
        let m = module();
        let ring = m.ring();
        let mut ws = WordSum::zero();
        ws.add_term(MonoidElt::new(rat(5, 1), 0), vec![0], &ring.one());
        let table = OpsTable::new(1);
        assert!(matches!(
            apply_coderivation(&m, &table, &ws, &rat(2, 1)),
            Err(WordError::CutoffExceeded(_, _))
        ));
    }
}
