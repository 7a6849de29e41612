use std::collections::BTreeSet;
use std::path::PathBuf;

use netoperad_core::template::{merge_templates, InducedOperad, NetworkTemplate, SharedPart};
use netoperad_core::{EdgeKey, Endpoints, InteractionId, NetType};
use proptest::prelude::*;
use serde_json::Value;

fn data(name: &str) -> Vec<u8> {
    std::fs::read(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)).unwrap()
}

fn sailboat() -> InducedOperad {
    InducedOperad::new(NetworkTemplate::parse(&data("sailboat_template.json")).unwrap())
}

/// Allowed carrying edges read straight from the JSON table: `carried -> [carriers]`.
fn brute_force(word: &[&str]) -> BTreeSet<(usize, usize)> {
    let raw: Value = serde_json::from_slice(&data("sailboat_template.json")).unwrap();
    let table = &raw["directed"]["carrying"];
    let mut out = BTreeSet::new();
    for (i, a) in word.iter().enumerate() {
        for (j, b) in word.iter().enumerate() {
            let listed = table[*a].as_array().is_some_and(|cs| cs.iter().any(|c| c == b));
            if i != j && listed {
                out.insert((i, j));
            }
        }
    }
    out
}

fn carrying_pairs(op: &InducedOperad, typ: &NetType) -> BTreeSet<(usize, usize)> {
    op.generators(typ)
        .unwrap()
        .iter()
        .map(|g| {
            assert_eq!(g.edge_count(), 1);
            let (key, _) = g.edges().iter().next().unwrap();
            assert_eq!(key.interaction, InteractionId::directed("carrying"));
            match key.endpoints {
                Endpoints::Directed(s, t) => (s, t),
                other => panic!("unexpected endpoints {other:?}"),
            }
        })
        .collect()
}

#[test]
fn generators_on_cutter_helo_and_two_quadcopters() {
    let op = sailboat();
    let word = ["cut", "helo", "qd", "qd"];
    let typ = op.net_type(&word).unwrap();
    let got = carrying_pairs(&op, &typ);
    assert_eq!(got.len(), 5);
    assert_eq!(got, brute_force(&word));
    assert_eq!(got, [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)].into());
}

#[test]
fn every_edge_outside_the_table_is_unconstructible() {
    let op = sailboat();
    let word = ["cut", "helo", "qd", "qd"];
    let typ = op.net_type(&word).unwrap();
    let allowed = brute_force(&word);
    let carrying = InteractionId::directed("carrying");
    for s in 0..word.len() {
        for t in 0..word.len() {
            let key = if s == t {
                EdgeKey::new(carrying.clone(), Endpoints::Loop(s))
            } else {
                EdgeKey::new(carrying.clone(), Endpoints::Directed(s, t))
            };
            let built = op.build(&typ, std::slice::from_ref(&key));
            assert_eq!(built.is_ok(), allowed.contains(&(s, t)), "{s} -> {t}");
            assert_eq!(op.generator(&typ, key).is_ok(), allowed.contains(&(s, t)));
        }
    }
    // an interaction the template never declares
    let bogus = EdgeKey::new(InteractionId::undirected("carrying"), Endpoints::Undirected(0, 1));
    assert!(op.build(&typ, &[bogus]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_match_the_table_on_random_words(idx in proptest::collection::vec(0usize..8, 0..6)) {
        let op = sailboat();
        let names: Vec<String> = op.template().colors().iter().map(|c| c.to_string()).collect();
        let word: Vec<&str> = idx.iter().map(|&i| names[i].as_str()).collect();
        let typ = op.net_type(&word).unwrap();
        prop_assert_eq!(carrying_pairs(&op, &typ), brute_force(&word));
        // every allowed edge set is buildable and validates
        let keys = op.template().allowed_edges(&typ).unwrap();
        let all = op.build(&typ, &keys).unwrap();
        prop_assert!(op.validate(&all).is_ok());
    }
}

const DRONES: &str = r#"{"version": 1, "colors": ["port", "qd", "drone"],
    "directed": {"carrying": {"drone": ["qd"], "qd": ["port"]}}}"#;

#[test]
fn merging_along_shared_names() {
    let a = sailboat().template().clone();
    let b = NetworkTemplate::parse_str(DRONES).unwrap();
    let ab = merge_templates(&a, &b, &SharedPart::by_names(&a, &b)).unwrap();
    let ba = merge_templates(&b, &a, &SharedPart::by_names(&b, &a)).unwrap();
    assert_eq!(ab.colors().len(), 9);
    let colors = |t: &NetworkTemplate| t.colors().iter().map(|c| c.to_string()).collect::<BTreeSet<_>>();
    assert_eq!(colors(&ab), colors(&ba));
    let op = InducedOperad::new(ab.clone());
    let opba = InducedOperad::new(ba);
    for word in [["qd", "drone"], ["qd", "port"], ["helo", "qd"], ["drone", "helo"]] {
        let n = op.template().allowed_edges(&op.net_type(&word).unwrap()).unwrap().len();
        let m = opba.template().allowed_edges(&opba.net_type(&word).unwrap()).unwrap().len();
        assert_eq!(n, m, "{word:?}");
    }
    // the shared table is the union
    let typ = op.net_type(&["qd", "port"]).unwrap();
    assert_eq!(op.template().allowed_edges(&typ).unwrap().len(), 1);
    let typ = op.net_type(&["drone", "helo"]).unwrap();
    assert!(op.template().allowed_edges(&typ).unwrap().is_empty());

    // merging again changes nothing
    let again = merge_templates(&ab, &ab, &SharedPart::by_names(&ab, &ab)).unwrap();
    assert_eq!(again.normalized(), ab.normalized());
}

#[test]
fn disjoint_merge_keeps_both_sides_apart() {
    let a = sailboat().template().clone();
    let b = NetworkTemplate::parse_str(DRONES).unwrap();
    let ab = merge_templates(&a, &b, &SharedPart::empty()).unwrap();
    assert_eq!(ab.colors().len(), a.colors().len() + b.colors().len());
    // clashing names on b's side are renamed, so a's generators are unchanged
    let op = InducedOperad::new(ab);
    let word = ["cut", "helo", "qd", "qd"];
    assert_eq!(carrying_pairs(&op, &op.net_type(&word).unwrap()), brute_force(&word));
}
