//! Random well-typed operations for law checking.
//!
//! The generators are driven by any [`rand::Rng`], so callers pick the seed and
//! the generator. Operations are kept small: the point is to exercise index
//! bookkeeping, not to build large networks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::operad::{
    Color, EdgeKey, Endpoints, InteractionId, MonoidKind, NetOperation, NetType, Signature,
    SlotRef,
};

/// A signature with one interaction per monoid kind in each directionality.
pub fn law_signature() -> Arc<Signature> {
    let mut sig = Signature::new();
    for kind in MonoidKind::ALL {
        let name = format!("{kind:?}").to_lowercase();
        sig.insert(InteractionId::directed(format!("d_{name}")), kind);
        sig.insert(InteractionId::undirected(format!("u_{name}")), kind);
    }
    Arc::new(sig)
}

pub fn random_type<R: Rng>(rng: &mut R, colors: &[Color], max_len: usize) -> NetType {
    let len = rng.gen_range(0..=max_len);
    NetType((0..len).map(|_| colors.choose(rng).expect("colors").clone()).collect())
}

/// Random operation with the given output: a random shuffle of the output nodes
/// split into up to `max_slots` input slots (empty slots allowed), plus random edges.
pub fn random_operation<R: Rng>(
    rng: &mut R,
    sig: &Arc<Signature>,
    output: &NetType,
    max_slots: usize,
    max_edges: usize,
) -> NetOperation {
    let n = output.len();
    let slots = rng.gen_range(1..=max_slots.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut cuts: Vec<usize> = (0..slots - 1).map(|_| rng.gen_range(0..=n)).collect();
    cuts.sort_unstable();
    cuts.push(n);
    let mut inputs = Vec::with_capacity(slots);
    let mut slot_map = vec![SlotRef { slot: 0, pos: 0 }; n];
    let mut start = 0;
    for (slot, &end) in cuts.iter().enumerate() {
        let chunk = &order[start..end];
        for (pos, &node) in chunk.iter().enumerate() {
            slot_map[node] = SlotRef { slot, pos };
        }
        inputs.push(NetType(chunk.iter().map(|&i| output.0[i].clone()).collect()));
        start = end;
    }
    let interactions: Vec<(InteractionId, MonoidKind)> =
        sig.interactions().map(|(k, m)| (k.clone(), m)).collect();
    let mut edges = Vec::new();
    if n > 0 && !interactions.is_empty() {
        for _ in 0..rng.gen_range(0..=max_edges) {
            let (id, monoid) = interactions.choose(rng).expect("nonempty").clone();
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let endpoints = if i == j {
                Endpoints::Loop(i)
            } else if id.directed {
                Endpoints::Directed(i, j)
            } else {
                Endpoints::Undirected(i.min(j), i.max(j))
            };
            let value = match monoid {
                MonoidKind::BooleanOr | MonoidKind::Mod2 => rng.gen_range(0..=1),
                MonoidKind::NatSum | MonoidKind::NatMax => rng.gen_range(0..=3),
            };
            edges.push((EdgeKey::new(id, endpoints), value));
        }
    }
    NetOperation::new(sig.clone(), inputs, output.clone(), slot_map, edges)
        .expect("sampled operation is well formed")
}

/// One operation per input slot of `f`, each producing that slot's type.
pub fn random_inner<R: Rng>(
    rng: &mut R,
    f: &NetOperation,
    max_slots: usize,
    max_edges: usize,
) -> Vec<NetOperation> {
    f.inputs()
        .iter()
        .map(|t| random_operation(rng, f.signature(), t, max_slots, max_edges))
        .collect()
}

/// A uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Default palette for sampled types.
pub fn law_colors() -> Vec<Color> {
    ["a", "b", "c"]
        .into_iter()
        .map(|c| Color::new(c).expect("identifier"))
        .collect()
}
