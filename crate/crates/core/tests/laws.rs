use netoperad_core::laws::{
    associativity, block_permutation, left_unit, monoid_laws, node_equivariance, right_unit, slot_equivariance,
};
use netoperad_core::sample::{law_colors, law_signature, random_inner, random_operation, random_permutation, random_type};
use netoperad_core::{MonoidKind, NetOperation};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn outer(seed: u64) -> (StdRng, NetOperation) {
    let mut rng = StdRng::seed_from_u64(seed);
    let sig = law_signature();
    let t = random_type(&mut rng, &law_colors(), 5);
    let f = random_operation(&mut rng, &sig, &t, 3, 6);
    (rng, f)
}

// 200 cases for each of five laws.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn left_unit_holds(seed in any::<u64>()) {
        let (_, f) = outer(seed);
        prop_assert!(left_unit(&f).unwrap());
    }

    #[test]
    fn right_unit_holds(seed in any::<u64>()) {
        let (_, f) = outer(seed);
        prop_assert!(right_unit(&f).unwrap());
    }

    #[test]
    fn associativity_holds(seed in any::<u64>()) {
        let (mut rng, f) = outer(seed);
        let gs = random_inner(&mut rng, &f, 3, 4);
        let hs: Vec<NetOperation> = gs.iter().flat_map(|g| random_inner(&mut rng, g, 2, 3)).collect();
        prop_assert!(associativity(&f, &gs, &hs).unwrap());
    }

    #[test]
    fn node_equivariance_holds(seed in any::<u64>()) {
        let (mut rng, f) = outer(seed);
        let gs = random_inner(&mut rng, &f, 3, 4);
        let sigma = random_permutation(&mut rng, f.node_count());
        prop_assert!(node_equivariance(&f, &gs, &sigma).unwrap());
    }

    #[test]
    fn slot_equivariance_holds(seed in any::<u64>()) {
        let (mut rng, f) = outer(seed);
        let gs = random_inner(&mut rng, &f, 3, 4);
        let pi = random_permutation(&mut rng, f.arity());
        prop_assert!(slot_equivariance(&f, &gs, &pi).unwrap());
    }
}

#[test]
fn ill_typed_substitution_is_an_error_not_a_failed_law() {
    let (mut rng, f) = (0..)
        .map(outer)
        .find(|(_, f)| f.arity() >= 2 && f.inputs()[0] != f.inputs()[1])
        .unwrap();
    let mut gs = random_inner(&mut rng, &f, 2, 2);
    gs.swap(0, 1);
    assert!(associativity(&f, &gs, &[]).is_err());
}

#[test]
fn block_permutation_moves_whole_blocks() {
    let (mut rng, _) = outer(0);
    let sig = law_signature();
    let colors = law_colors();
    let t2 = netoperad_core::NetType(colors[..2].to_vec());
    let t1 = netoperad_core::NetType(colors[..1].to_vec());
    let a = random_operation(&mut rng, &sig, &t2, 2, 0);
    let b = random_operation(&mut rng, &sig, &t1, 1, 0);
    let arities = (a.arity(), b.arity());
    let p = block_permutation(&[a, b], &[1, 0]);
    // block a moves after block b
    let expect: Vec<usize> = (arities.1..arities.1 + arities.0).chain(0..arities.1).collect();
    assert_eq!(p, expect);
}

#[test]
fn monoid_laws_for_every_kind() {
    let samples: Vec<u64> = (0..12).chain([100, 1 << 20, u64::MAX / 4]).collect();
    for kind in MonoidKind::ALL {
        let r = monoid_laws(kind, &samples);
        assert!(r.holds(), "{r:?}");
    }
    assert_eq!(MonoidKind::ALL.len(), 4);
}
