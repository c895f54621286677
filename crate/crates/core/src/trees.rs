//! Monoid-labeled rooted ribbon trees and the tree-sum oracle for the
//! transferred operations.
//!
//! A tree's interior vertices carry (arity, monoid element) labels subject
//! to stability: neither (1, 0) nor (0, 0) may appear. Leaves are inputs.
//! Evaluation decorates leaves with I, interior edges with h, vertices with
//! the matching operation and the root with Pi, processing vertices in
//! planar postorder (children left to right, then the vertex) through the
//! same single-position word operators the perturbation series uses; in
//! this order the side conditions kill no surviving summand.
//!
//! The oracle's defining property, exercised by the acceptance suite, is
//! that the sum over all stable trees equals the transfer series component
//! by component, coefficient and sign included.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ainfty::AInftyStructure;
use crate::exec;
use crate::hpl::{HplError, Retraction};
use crate::module::ModuleElt;
use crate::novikov::{GappedMonoid, MonoidElt};
use crate::scalar::Rational;
use crate::words::{self, OpsTable, WordSum};

/// A child of an interior vertex: an input leaf or a subtree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Child {
    Leaf,
    Node(Box<RibbonTree>),
}

/// A stable labeled rooted ribbon tree; the root is an interior vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RibbonTree {
    pub beta: MonoidElt,
    pub children: Vec<Child>,
}

impl RibbonTree {
    pub fn arity(&self) -> usize {
        self.children.len()
    }

    pub fn leaves(&self) -> usize {
        self.children
            .iter()
            .map(|c| match c {
                Child::Leaf => 1,
                Child::Node(t) => t.leaves(),
            })
            .sum()
    }

    pub fn total_label(&self) -> MonoidElt {
        self.children.iter().fold(self.beta.clone(), |acc, c| match c {
            Child::Leaf => acc,
            Child::Node(t) => acc.add(&t.total_label()),
        })
    }

    pub fn vertex_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Child::Leaf => 0,
                Child::Node(t) => t.vertex_count(),
            })
            .sum::<usize>()
    }
}

impl fmt::Display for RibbonTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{}", self.arity(), self.beta)?;
        for c in &self.children {
            match c {
                Child::Leaf => write!(f, " *")?,
                Child::Node(t) => write!(f, " {t}")?,
            }
        }
        write!(f, ")")
    }
}

fn monoid_difference(
    elems: &BTreeSet<MonoidElt>,
    total: &MonoidElt,
    part: &MonoidElt,
) -> Option<MonoidElt> {
    if part.energy > total.energy {
        return None;
    }
    let diff = MonoidElt::new(&total.energy - &part.energy, total.maslov - part.maslov);
    elems.contains(&diff).then_some(diff)
}

/// All isomorphism types of stable labeled trees with `k` leaves and total
/// label `beta`; finite by gappedness.
pub fn enumerate_trees(
    k: usize,
    beta: &MonoidElt,
    monoid: &GappedMonoid,
    cutoff: &Rational,
) -> Vec<RibbonTree> {
    let elems: BTreeSet<MonoidElt> = monoid.enumerate(cutoff).into_iter().collect();
    if !elems.contains(beta) {
        return Vec::new();
    }
    let mut memo: BTreeMap<(usize, MonoidElt), Vec<RibbonTree>> = BTreeMap::new();
    subtrees(k, beta, &elems, &mut memo)
}

fn subtrees(
    k: usize,
    beta: &MonoidElt,
    elems: &BTreeSet<MonoidElt>,
    memo: &mut BTreeMap<(usize, MonoidElt), Vec<RibbonTree>>,
) -> Vec<RibbonTree> {
    if let Some(cached) = memo.get(&(k, beta.clone())) {
        return cached.clone();
    }
    let mut out = Vec::new();
    for beta_v in elems.iter().cloned().collect::<Vec<_>>() {
        let Some(rest) = monoid_difference(elems, beta, &beta_v) else {
            continue;
        };
        for children in child_sequences(k, &rest, beta, k, elems, memo) {
            // Stability: (0, 0) and (1, 0) vertices are excluded.
            if beta_v.is_zero() && children.len() <= 1 {
                continue;
            }
            out.push(RibbonTree { beta: beta_v.clone(), children });
        }
    }
    out.sort();
    out.dedup();
    memo.insert((k, beta.clone()), out.clone());
    out
}

/// Ordered sequences of children consuming exactly `k` leaves and label
/// `rest`. A single node child swallowing the enclosing call's entire
/// budget (`top_beta`, `top_k`) could only complete to an unstable
/// (arity 1, label 0) vertex, so it is pruned here; this also grounds the
/// mutual recursion with `subtrees`.
fn child_sequences(
    k: usize,
    rest: &MonoidElt,
    top_beta: &MonoidElt,
    top_k: usize,
    elems: &BTreeSet<MonoidElt>,
    memo: &mut BTreeMap<(usize, MonoidElt), Vec<RibbonTree>>,
) -> Vec<Vec<Child>> {
    if k == 0 && rest.is_zero() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    if k >= 1 {
        for mut seq in child_sequences(k - 1, rest, top_beta, top_k, elems, memo) {
            seq.insert(0, Child::Leaf);
            out.push(seq);
        }
    }
    for k1 in 0..=k {
        for beta1 in elems.iter().cloned().collect::<Vec<_>>() {
            if k1 == top_k && &beta1 == top_beta {
                continue;
            }
            let Some(remaining) = monoid_difference(elems, rest, &beta1) else {
                continue;
            };
            for sub in subtrees(k1, &beta1, elems, memo) {
                for mut seq in
                    child_sequences(k - k1, &remaining, top_beta, top_k, elems, memo)
                {
                    seq.insert(0, Child::Node(Box::new(sub.clone())));
                    out.push(seq);
                }
            }
        }
    }
    out
}

/// Vertices in planar postorder with the current-word position of each
/// vertex's leftmost descendant token at processing time.
fn postorder(tree: &RibbonTree, next_pos: &mut usize, out: &mut Vec<(usize, MonoidElt, usize)>) {
    let first_pos = *next_pos;
    for c in &tree.children {
        match c {
            Child::Leaf => *next_pos += 1,
            Child::Node(t) => postorder(t, next_pos, out),
        }
    }
    out.push((tree.arity(), tree.beta.clone(), first_pos));
    *next_pos = first_pos + 1;
}

/// Evaluates one tree on a basis tuple of the retraction's homology module.
pub fn evaluate_tree(
    tree: &RibbonTree,
    a: &AInftyStructure,
    r: &Retraction,
    inputs: &[usize],
) -> Result<ModuleElt, HplError> {
    assert_eq!(inputs.len(), tree.leaves(), "input tuple must match the leaf count");
    let module = a.module().clone();
    let h_module = r.homology().clone();
    let cutoff = a.cutoff().clone();

    let mut order = Vec::new();
    let mut pos0 = 0;
    postorder(tree, &mut pos0, &mut order);

    let p_table = OpsTable::linear(&r.incl.compose(&r.pi)?, 0);
    let h_table = OpsTable::linear(&r.h, -1);
    let id_table = OpsTable::identity(&module);
    let i_table = OpsTable::linear(&r.incl, 0);

    // Leaves first: the I-decorated word.
    let mut state = words::apply_morphism_words(
        &h_module,
        &i_table,
        &WordSum::basis_word(&h_module, inputs.to_vec()),
        &cutoff,
    )?;

    let last = order.len() - 1;
    for (v, (arity, beta_v, pos)) in order.iter().enumerate() {
        // The vertex operation at its position.
        let mut next = WordSum::zero();
        for ((beta_in, word), coeff) in state.terms() {
            words::insert_component_at(
                &module, a.ops(), *arity, beta_v, *pos, beta_in, word, coeff, &cutoff, &mut next,
            );
        }
        state = next;
        if state.is_zero() {
            return Ok(ModuleElt::zero());
        }
        if v < last {
            // Interior edge: one-sided h at the vertex position.
            let mut next = WordSum::zero();
            for ((beta_in, word), coeff) in state.terms() {
                words::onesided_h_at(
                    &module, &id_table, &p_table, &h_table, *pos, beta_in, word, coeff, &cutoff,
                    &mut next,
                );
            }
            state = next;
            if state.is_zero() {
                return Ok(ModuleElt::zero());
            }
        }
    }

    // Root decoration: Pi, then the length-one part at the total label.
    let total = tree.total_label();
    let mut out = ModuleElt::zero();
    for (beta, v) in state.pi1() {
        if beta == total {
            out = out.add(&r.pi.apply(&v));
        }
    }
    Ok(out)
}

/// The tree-sum oracle for one transferred component: the sum over all
/// stable trees in Gr(k, beta) of their evaluations, on every basis tuple.
pub fn tree_transfer(
    a: &AInftyStructure,
    r: &Retraction,
    k: usize,
    beta: &MonoidElt,
) -> Result<BTreeMap<Vec<usize>, ModuleElt>, HplError> {
    let trees = enumerate_trees(k, beta, a.monoid(), a.cutoff());
    let h_module = r.homology().clone();
    let tasks = exec::tuples(h_module.dim(), k);
    let results: Vec<Result<(Vec<usize>, ModuleElt), HplError>> =
        exec::map_collect(&tasks, |tuple| {
            let mut acc = ModuleElt::zero();
            for tree in &trees {
                acc = acc.add(&evaluate_tree(tree, a, r, tuple)?);
            }
            Ok((tuple.clone(), acc))
        });
    let mut out = BTreeMap::new();
    for res in results {
        let (tuple, v) = res?;
        if !v.is_zero() {
            out.insert(tuple, v);
        }
    }
    Ok(out)
}
