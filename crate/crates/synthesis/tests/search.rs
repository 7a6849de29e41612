use std::collections::{BTreeMap, BTreeSet};

use netoperad_core::algebra::{AssetSpec, Catalog, FleetDesign, Scenario};
use netoperad_core::template::{InducedOperad, NetworkTemplate};
use netoperad_synthesis::{search, Algorithm, Explorer, Forest, SearchConfig};
use proptest::prelude::*;

fn data(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn operad() -> InducedOperad {
    InducedOperad::new(NetworkTemplate::parse(&data("sailboat_template.json")).unwrap())
}

fn micro() -> (Catalog, Scenario) {
    (
        Catalog::parse(&data("micro_catalog.json")).unwrap(),
        Scenario::parse(&data("micro_scenario.json")).unwrap(),
    )
}

fn cfg(budget: f64, max_nodes: usize, algorithm: Algorithm, seed: u64) -> SearchConfig {
    SearchConfig {
        budget: Some(budget),
        max_nodes,
        algorithm,
        seed,
        ..Default::default()
    }
}

/// Catalog with a second QD model and a scenario with two bases, so that
/// mutation has something to change.
fn varied() -> (Catalog, Scenario) {
    let (mut cat, mut sc) = micro();
    let mut qd2: AssetSpec = cat.assets.iter().find(|a| a.name == "QD").unwrap().clone();
    qd2.name = "QD2".into();
    qd2.cost = 12e3;
    qd2.speed_search = 30.0;
    cat.assets.push(qd2);
    let mut far = sc.bases[0].clone();
    far.id = "far".into();
    far.distance = 300.0;
    sc.bases.push(far);
    (Catalog::new(cat.assets).unwrap(), sc)
}

/// Every carrier function on every multiset, kept if the template accepts it.
fn brute_force(op: &InducedOperad, cat: &Catalog, sc: &Scenario, budget: f64, max_nodes: usize) -> BTreeSet<Forest> {
    let ex = Explorer::new(op, cat, sc, cfg(budget, max_nodes, Algorithm::Exhaustive, 0)).unwrap();
    let mut out = BTreeSet::new();
    let k = cat.assets.len();
    for n in 0..=max_nodes {
        let mut word = vec![0usize; n];
        loop {
            let cost: f64 = word.iter().map(|&a| cat.assets[a].cost).sum();
            if word.windows(2).all(|w| w[0] <= w[1]) && cost <= budget * (1.0 + 1e-12) {
                let mut carrier = vec![0usize; n];
                loop {
                    let c: Vec<Option<usize>> = carrier.iter().map(|&x| if x == 0 { None } else { Some(x - 1) }).collect();
                    let assets = word.iter().map(|&a| cat.assets[a].clone()).collect();
                    let bases = vec![sc.bases[0].id.clone(); n];
                    if let Ok(d) = FleetDesign::from_parts(op, assets, bases, &c) {
                        out.insert(ex.canonical(&d).unwrap());
                    }
                    if !bump(&mut carrier, n + 1) {
                        break;
                    }
                }
            }
            if !bump(&mut word, k) {
                break;
            }
        }
    }
    out
}

fn bump(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

#[test]
fn tiny_budget_gives_only_the_empty_design() {
    let (cat, sc) = micro();
    let op = operad();
    let ex = Explorer::new(&op, &cat, &sc, cfg(10e3, 5, Algorithm::Exhaustive, 0)).unwrap();
    let all = ex.enumerate_designs().unwrap();
    assert_eq!(all.len(), 1);
    assert!(all[0].is_empty());
}

#[test]
fn enumeration_matches_brute_force_and_contains_helo_with_four_qds() {
    let (cat, sc) = micro();
    let op = operad();
    let ex = Explorer::new(&op, &cat, &sc, cfg(9.06e6, 5, Algorithm::Exhaustive, 0)).unwrap();
    let designs = ex.enumerate_designs().unwrap();
    let forests: Vec<Forest> = designs.iter().map(|d| ex.canonical(d).unwrap()).collect();
    let unique: BTreeSet<Forest> = forests.iter().cloned().collect();
    assert_eq!(unique.len(), forests.len(), "each design exactly once");
    assert_eq!(unique, brute_force(&op, &cat, &sc, 9.06e6, 5));
    let ferry = designs.iter().any(|d| {
        let names: Vec<&str> = d.assets().iter().map(|a| a.name.as_str()).collect();
        let helo = names.iter().position(|n| *n == "Helo");
        names.len() == 5
            && names.iter().filter(|n| **n == "QD").count() == 4
            && helo.is_some_and(|h| (0..5).filter(|&i| i != h).all(|i| d.carrier()[i] == Some(h)))
    });
    assert!(ferry);
    assert_eq!(designs, ex.enumerate_designs().unwrap(), "deterministic order");
}

#[test]
fn edge_insertion_order_does_not_matter() {
    let (cat, sc) = micro();
    let op = operad();
    let ex = Explorer::new(&op, &cat, &sc, cfg(9.06e6, 5, Algorithm::Exhaustive, 0)).unwrap();
    let helo = cat.assets[0].clone();
    let qd = cat.assets[1].clone();
    let base = vec![sc.bases[0].id.clone(); 3];
    let a = FleetDesign::from_parts(&op, vec![helo.clone(), qd.clone(), qd.clone()], base.clone(), &[None, Some(0), Some(0)]).unwrap();
    let b = FleetDesign::from_parts(&op, vec![qd.clone(), qd, helo], base, &[Some(2), Some(2), None]).unwrap();
    assert_eq!(ex.canonical(&a).unwrap(), ex.canonical(&b).unwrap());
}

#[test]
fn exhaustive_equals_enumerate_then_argmax() {
    let (cat, sc) = varied();
    let op = operad();
    let c = cfg(9.05e6, 5, Algorithm::Exhaustive, 0);
    let ex = Explorer::new(&op, &cat, &sc, c.clone()).unwrap();
    let out = search(&op, &cat, &sc, &c).unwrap();
    let mut best: Option<(f64, f64, Forest)> = None;
    for d in ex.enumerate_designs().unwrap() {
        let s = netoperad_core::algebra::kpi_evaluate(&d, &sc).unwrap();
        let f = ex.canonical(&d).unwrap();
        let better = match &best {
            None => true,
            Some((bs, bc, bf)) => {
                s.expected_detections > *bs || (s.expected_detections == *bs && (s.cost < *bc || (s.cost == *bc && f < *bf)))
            }
        };
        if better {
            best = Some((s.expected_detections, s.cost, f));
        }
    }
    let (score, _, forest) = best.unwrap();
    assert_eq!(out.forest, forest);
    assert_eq!(out.score.expected_detections, score);
    assert_eq!(out.audit.len(), ex.enumerate_designs().unwrap().len());
    let threaded = search(&op, &cat, &sc, &SearchConfig { threads: 3, ..c }).unwrap();
    assert_eq!(threaded.audit, out.audit);
}

#[test]
fn annealing_without_steps_returns_the_initial_design() {
    let (cat, sc) = micro();
    let op = operad();
    let c = SearchConfig {
        iterations: 0,
        ..cfg(9.06e6, 5, Algorithm::Anneal, 3)
    };
    let out = search(&op, &cat, &sc, &c).unwrap();
    assert!(out.best.is_empty());
    assert_eq!(out.audit.len(), 1);
    let ex = Explorer::new(&op, &cat, &sc, c).unwrap();
    let start = FleetDesign::from_parts(&op, vec![cat.assets[0].clone()], vec![sc.bases[0].id.clone()], &[None]).unwrap();
    assert_eq!(ex.anneal_from(&start).unwrap().best, start);
}

#[test]
fn seeded_runs_are_reproducible() {
    let (cat, sc) = varied();
    let op = operad();
    for alg in [Algorithm::Anneal, Algorithm::Genetic] {
        let c = SearchConfig {
            iterations: 500,
            generations: 10,
            ..cfg(9.05e6, 6, alg, 11)
        };
        let a = search(&op, &cat, &sc, &c).unwrap();
        let b = search(&op, &cat, &sc, &c).unwrap();
        assert_eq!(a.audit_jsonl(), b.audit_jsonl());
        assert_eq!(a.best, b.best);
        let other = search(&op, &cat, &sc, &SearchConfig { seed: 12, ..c }).unwrap();
        assert_ne!(a.audit_jsonl(), other.audit_jsonl());
    }
}

#[test]
fn best_score_never_drops_as_budget_grows() {
    let (cat, sc) = micro();
    let op = operad();
    let mut last = f64::NEG_INFINITY;
    for b in [0.0, 15e3, 9e6, 9.015e6, 9.03e6, 9.06e6, 9.105e6, 18.0e6, 18.09e6] {
        let out = search(&op, &cat, &sc, &cfg(b, 6, Algorithm::Exhaustive, 0)).unwrap();
        assert!(out.score.expected_detections >= last);
        assert!(out.best.cost() <= b);
        last = out.score.expected_detections;
    }
}

fn multiset(d: &FleetDesign) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for a in d.assets() {
        *m.entry(a.name.clone()).or_insert(0) += 1;
    }
    m
}

#[test]
fn crossover_children_are_valid_and_within_budget() {
    let (cat, sc) = varied();
    let op = operad();
    let budget = 9.1e6;
    let ex = Explorer::new(&op, &cat, &sc, cfg(budget, 8, Algorithm::Genetic, 0)).unwrap();
    let designs = ex.enumerate_designs().unwrap();
    let bigs: Vec<&FleetDesign> = designs.iter().filter(|d| d.len() >= 4).collect();
    for trial in 0..500u64 {
        let a = bigs[(trial as usize * 7) % bigs.len()];
        let b = bigs[(trial as usize * 13 + 5) % bigs.len()];
        let child = ex.crossover(a, b, trial).unwrap();
        op.validate(child.operation()).unwrap();
        assert!(child.cost() <= budget);
        assert!(child.len() <= 8);
        let same = ex.crossover(a, a, trial).unwrap();
        let (have, from) = (multiset(&same), multiset(a));
        assert!(have.iter().all(|(k, n)| from.get(k).is_some_and(|m| n <= m)));
    }
}

#[test]
fn mutation_touches_algebra_data_only() {
    let (cat, sc) = varied();
    let op = operad();
    let ex = Explorer::new(&op, &cat, &sc, cfg(9.1e6, 6, Algorithm::Genetic, 0)).unwrap();
    let ids: BTreeSet<&str> = sc.bases.iter().map(|b| b.id.as_str()).collect();
    let mut changed = 0;
    for d in ex.enumerate_designs().unwrap().iter().filter(|d| !d.is_empty()).take(200) {
        for seed in 0..3 {
            let m = ex.mutate(d, seed).unwrap();
            assert_eq!(m.operation(), d.operation());
            assert_eq!(m.carrier(), d.carrier());
            assert!(m.bases().iter().all(|b| ids.contains(b.as_str())));
            assert_eq!(m, ex.mutate(d, seed).unwrap());
            changed += usize::from(m != *d);
        }
    }
    assert!(changed > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stochastic_results_are_valid(seed in any::<u64>(), budget in 0.0f64..20e6, alg in prop_oneof![Just(Algorithm::Anneal), Just(Algorithm::Genetic)]) {
        let (cat, sc) = varied();
        let op = operad();
        let c = SearchConfig { iterations: 300, generations: 5, population: 8, ..cfg(budget, 6, alg, seed) };
        let out = search(&op, &cat, &sc, &c).unwrap();
        op.validate(out.best.operation()).unwrap();
        prop_assert!(out.best.cost() <= budget);
        prop_assert!(out.best.len() <= 6);
        prop_assert!(out.audit.iter().all(|e| e.cost <= budget));
    }
}
