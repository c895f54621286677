//! Cross-checks between the perturbation series and the tree-sum oracle,
//! and the homological-perturbation conclusions on the fixtures.

use ainfty_core::ainfty::{validate_cyclic, validate_structure, validate_unit};
use ainfty_core::fixtures;
use ainfty_core::hpl::{arity_slack, retraction_from_splitting, transfer};
use ainfty_core::morphism::{check_homotopy, check_morphism, check_unital_morphism, compose};
use ainfty_core::novikov::MonoidElt;
use ainfty_core::scalar::rat;
use ainfty_core::trees::tree_transfer;
use ainfty_core::words::OpsTable;

fn fixture_transfer(name: &str, k_max: usize) -> (ainfty_core::ainfty::AInftyStructure, ainfty_core::hpl::Retraction, ainfty_core::hpl::Transfer) {
    let f = fixtures::build_fixture(name).unwrap();
    let a = f.structure;
    let d = a.differential().unwrap();
    let r = retraction_from_splitting(a.module(), &d, a.pairing(), a.unit()).unwrap();
    let cap = 3 * (k_max + arity_slack(&a)).max(1);
    let t = transfer(&a, &r, k_max, cap).unwrap();
    (a, r, t)
}

#[test]
fn m6_retraction_matches_the_hand_computation() {
    let a = fixtures::m6().unwrap();
    let d = a.differential().unwrap();
    let r = retraction_from_splitting(a.module(), &d, a.pairing(), a.unit()).unwrap();
    let m = a.module();
    // h(b) = a, h(q) = -p, zero elsewhere; note d'a = -b and d'p = q.
    assert_eq!(r.h.column(2), m.generator(1));
    assert_eq!(r.h.column(4), m.generator(3).neg());
    for idx in [0usize, 1, 3, 5] {
        assert!(r.h.column(idx).is_zero());
    }
    assert!(r.flags.side_conditions);
    assert!(r.flags.cyclic, "orthogonal splitting must verify the cyclic identity");
    assert!(r.flags.unital);
    assert_eq!(r.homology().dim(), 2);
}

#[test]
fn transferred_structures_satisfy_the_three_conclusions() {
    for name in ["PT", "S1", "M6", "N3", "DEF-E", "DEF-O"] {
        let (a, _r, t) = fixture_transfer(name, 4);
        let report = validate_structure(&t.canonical, 4);
        assert!(report.passed(), "{name} m_can: {report}");
        // Pi . I = id.
        let pi_i = compose(&t.proj, &t.incl).unwrap();
        let id = ainfty_core::morphism::AInftyMorphism::identity(&t.canonical, 4);
        for k in 0..=4usize {
            for (key, tuples) in &id.components().comps {
                if key.0 != k {
                    continue;
                }
                for (tuple, v) in tuples {
                    let got = pi_i.components().get(key.0, &key.1, tuple).cloned().unwrap_or_default();
                    assert_eq!(&got, v, "{name}: Pi I != id at {key:?} {tuple:?}");
                }
            }
        }
        for ((k, beta), tuples) in &pi_i.components().comps {
            for (tuple, v) in tuples {
                let expect = id.components().get(*k, beta, tuple).cloned().unwrap_or_default();
                assert_eq!(v, &expect, "{name}: extra Pi I component at ({k}, {beta}) {tuple:?}");
            }
        }
        // The homotopy from the identity to I . Pi.
        let ip = compose(&t.incl, &t.proj).unwrap();
        let id_a = ainfty_core::morphism::AInftyMorphism::identity(&a, ip.max_arity());
        let hreport = check_homotopy(&t.homotopy, &id_a, &ip, 4);
        assert!(hreport.passed(), "{name} homotopy: {hreport}");
        // The inclusion and projection are morphisms.
        let ireport = check_morphism(&t.incl, 4);
        assert!(ireport.passed(), "{name} inclusion: {ireport}");
        let preport = check_morphism(&t.proj, 4);
        assert!(preport.passed(), "{name} projection: {preport}");
    }
}

#[test]
fn tree_oracle_agrees_with_the_series() {
    for name in ["M6", "N3", "DEF-E", "DEF-O"] {
        let (a, r, t) = fixture_transfer(name, 4);
        for beta in a.monoid().enumerate(&rat(2, 1)) {
            for k in 0..=4usize {
                let oracle = tree_transfer(&a, &r, k, &beta).unwrap();
                let series: std::collections::BTreeMap<_, _> = t
                    .canonical
                    .ops()
                    .comps
                    .get(&(k, beta.clone()))
                    .cloned()
                    .unwrap_or_default();
                assert_eq!(oracle, series, "{name} at k={k} beta={beta}");
            }
        }
    }
}

#[test]
fn n3_transfer_has_the_massey_witness() {
    let (_a, _r, t) = fixture_transfer("N3", 4);
    let h = t.canonical.module().clone();
    let x1 = h.index_of("[x1]").unwrap();
    let x2 = h.index_of("[x2]").unwrap();
    let zero = MonoidElt::zero();
    // All binary products of the degree-1 classes vanish...
    for i in [x1, x2] {
        for j in [x1, x2] {
            assert!(t.canonical.ops().get(2, &zero, &[i, j]).is_none());
        }
    }
    // ...while some triple product of them does not.
    let mut found = false;
    for i in [x1, x2] {
        for j in [x1, x2] {
            for l in [x1, x2] {
                if t.canonical.ops().get(3, &zero, &[i, j, l]).is_some() {
                    found = true;
                }
            }
        }
    }
    assert!(found, "N3 must carry a nonzero triple product on degree-1 classes");
}

#[test]
fn cyclic_unital_conclusions_on_m6() {
    let (a, _r, t) = fixture_transfer("M6", 4);
    let e = a.unit().unwrap();
    let e_can = t.canonical.unit().expect("canonical unit");
    assert!(validate_unit(&t.canonical, e_can).passed());
    let pairing = t.canonical.pairing().unwrap();
    let report = validate_cyclic(&t.canonical, pairing, 4);
    assert!(report.passed(), "canonical cyclic: {report}");
    // I is cyclic and unital, Pi is unital.
    let icyc = ainfty_core::morphism::check_cyclic_morphism(
        &t.incl,
        pairing,
        a.pairing().unwrap(),
        4,
    );
    assert!(icyc.passed(), "I cyclic: {icyc}");
    assert!(check_unital_morphism(&t.incl, e_can, e).passed());
    assert!(check_unital_morphism(&t.proj, e, e_can).passed());
}

#[test]
fn def_e_transfer_keeps_the_curvature_on_the_unit_class() {
    let (_a, _r, t) = fixture_transfer("DEF-E", 4);
    let beta0 = MonoidElt::new(rat(1, 1), 2);
    let v = t.canonical.ops().get(0, &beta0, &[]).cloned().unwrap_or_default();
    assert_eq!(v, t.canonical.module().generator(0));
}

#[test]
fn m6_transfer_is_a_binary_frobenius_structure() {
    let (_a, _r, t) = fixture_transfer("M6", 4);
    for ((k, beta), tuples) in &t.canonical.ops().comps {
        if *k >= 3 && beta.is_zero() {
            assert!(tuples.is_empty(), "no higher products on the M6 model");
        }
    }
    let _ = OpsTable::new(0);
}
