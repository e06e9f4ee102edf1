//! The bounded-part functor against towers, subtowers and refinements.

use std::sync::Arc;

use num_complex::Complex64;

use procstar_core::bounded::{apply_functor, bounded_part};
use procstar_core::calculus::{uniform_norm, BoundednessVerdict};
use procstar_core::tower::{closed_ideal, TowerSource};
use procstar_core::{
    elements, random, BlockAlgebra, BlockMap, BlockSelector, BlockSource, CoherentElement, ConnectingMap, Tower,
    TowerHomomorphism,
};

/// `M_1 ⊕ M_2` into `∏ M_n`, landing in the first two blocks of each level.
fn embedding(b: &Tower, a: &Tower) -> TowerHomomorphism {
    let (bb, aa) = (b.clone(), a.clone());
    TowerHomomorphism::from_rule(b, a, move |p| {
        let target = aa.algebra(p)?;
        let assignment = (0..target.num_blocks())
            .map(|j| (j < 2).then(|| BlockSource::plain(j)))
            .collect();
        BlockMap::new(bb.algebra(p)?, target, assignment)
    })
}

#[test]
fn maps_out_of_a_c_star_algebra_factor_through_bounded_parts() {
    let b = Tower::single(BlockAlgebra::new(vec![1, 2]).unwrap());
    let a = Tower::product(|k| k, 8).unwrap();
    let phi = embedding(&b, &a);
    let mut rng = random::rng(40, 0);
    assert!(phi.naturality_residual(8, 5, &mut rng).unwrap() < 1e-12);
    for _ in 0..100 {
        let x = CoherentElement::from_top(&b, 1, random::element(&b.algebra(1).unwrap(), &mut rng)).unwrap();
        // B_b = B: every element of a C*-algebra is bounded
        let xb = bounded_part(&x, 1, f64::INFINITY).unwrap().expect("bounded");
        assert!((xb.norm - x.project(1).unwrap().norm().unwrap()).abs() < 1e-12);
        let direct = phi.apply(&x).unwrap();
        let through = apply_functor(&phi, &xb, 8).unwrap();
        for p in 1..=8 {
            assert!(direct.project(p).unwrap().distance(&through.element.project(p).unwrap()).unwrap() < 1e-12);
        }
        assert!(through.norm <= xb.norm + 1e-10);
        assert!(through.upper_bound <= xb.upper_bound + 1e-10);
    }
}

#[test]
fn contractivity_on_random_bounded_elements() {
    let a = Tower::product(|k| k, 5).unwrap().truncated(5).unwrap();
    let c = a.truncated(3).unwrap();
    let aa = a.clone();
    let phi = TowerHomomorphism::from_rule(&a, &c, move |p| aa.composite_map(p.min(3), p));
    let mut rng = random::rng(41, 0);
    for _ in 0..100 {
        let x = CoherentElement::from_top(&a, 5, random::element(&a.algebra(5).unwrap(), &mut rng)).unwrap();
        let xb = bounded_part(&x, 5, f64::INFINITY).unwrap().unwrap();
        let y = apply_functor(&phi, &xb, 5).unwrap();
        assert!(y.norm <= xb.norm + 1e-10);
    }
}

/// Every second level of `∏ M_n`, with the composite connecting maps.
struct EveryOther;

impl TowerSource for EveryOther {
    fn algebra(&self, level: usize) -> BlockAlgebra {
        BlockAlgebra::new((1..=2 * level).collect()).unwrap()
    }

    fn connecting_map(&self, level: usize) -> ConnectingMap {
        let keep: Vec<usize> = (0..2 * level).collect();
        ConnectingMap::new(BlockMap::restriction(&self.algebra(level + 1), &keep).unwrap()).unwrap()
    }

    fn describe(&self) -> String {
        "even levels of the product tower".into()
    }
}

#[test]
fn bounded_parts_ignore_the_choice_of_chain() {
    let full = Tower::product(|k| k, 400).unwrap();
    let coarse = Tower::from_source(Arc::new(EveryOther), 200, None);

    // L is unbounded in both presentations
    let (l_full, l_coarse) = (elements::superdiagonal(&full), elements::superdiagonal(&coarse));
    assert!(bounded_part(&l_full, 400, 100.0).unwrap().is_none());
    assert!(bounded_part(&l_coarse, 200, 100.0).unwrap().is_none());

    // finite truncations: the same element has the same uniform norm
    let mut rng = random::rng(42, 0);
    let full6 = full.truncated(6).unwrap();
    let coarse3 = coarse.truncated(3).unwrap();
    for _ in 0..20 {
        let top = random::element(&full6.algebra(6).unwrap(), &mut rng);
        let a = CoherentElement::from_top(&full6, 6, top.clone()).unwrap();
        let b = CoherentElement::from_top(&coarse3, 3, top).unwrap();
        let na = bounded_part(&a, 6, f64::INFINITY).unwrap().unwrap().norm;
        let nb = bounded_part(&b, 3, f64::INFINITY).unwrap().unwrap().norm;
        assert!((na - nb).abs() < 1e-10);
    }

    // scalars carry their certificate in both
    for t in [&full, &coarse] {
        let s = CoherentElement::scalar(t, Complex64::new(0.0, 2.5));
        assert_eq!(bounded_part(&s, 10, 1e6).unwrap().unwrap().norm, 2.5);
    }
}

#[test]
fn boundedness_in_a_subtower_agrees_with_the_ambient_tower() {
    let even = BlockSelector::rule(|_, a| (0..a.num_blocks()).filter(|j| j % 2 == 0).collect());

    // unbounded diagonal: both see it at the same level
    let lazy = Tower::product(|_| 1, 300).unwrap();
    let dec = closed_ideal(&lazy, even.clone()).unwrap();
    let inside = elements::diag_sequence(&dec.ideal, |j| Complex64::new(j as f64, 0.0));
    let outside = dec.inclusion.apply(&inside).unwrap();
    let (vi, vo) = (
        uniform_norm(&inside, 300, 50.0).unwrap(),
        uniform_norm(&outside, 300, 50.0).unwrap(),
    );
    match (&vi, &vo) {
        (
            BoundednessVerdict::Unbounded { witness_value: a, .. },
            BoundednessVerdict::Unbounded { witness_value: b, .. },
        ) => assert_eq!(a, b),
        other => panic!("expected two unbounded verdicts, got {other:?}"),
    }

    // finite tower: same M
    let finite = Tower::product(|k| k, 5).unwrap().truncated(5).unwrap();
    let dec = closed_ideal(&finite, even).unwrap();
    let mut rng = random::rng(43, 0);
    for _ in 0..50 {
        let top = random::element(&dec.ideal.algebra(5).unwrap(), &mut rng);
        let x = CoherentElement::from_top(&dec.ideal, 5, top).unwrap();
        let in_b = bounded_part(&x, 5, f64::INFINITY).unwrap().unwrap();
        let in_a = bounded_part(&dec.inclusion.apply(&x).unwrap(), 5, f64::INFINITY).unwrap().unwrap();
        assert!((in_b.norm - in_a.norm).abs() < 1e-10);
    }
}

#[test]
fn ideal_sequence_maps_are_natural_homomorphisms() {
    let t = Tower::product(|k| k, 5).unwrap().truncated(5).unwrap();
    let dec = closed_ideal(&t, BlockSelector::rule(|_, a| (0..a.num_blocks().min(2)).collect())).unwrap();
    let mut rng = random::rng(44, 0);
    for hom in [&dec.inclusion, &dec.quotient_map] {
        assert!(hom.naturality_residual(5, 50, &mut rng).unwrap() < 1e-12);
        assert!(hom.homomorphism_residual(5, 10, &mut rng).unwrap() < 1e-12);
    }
}
