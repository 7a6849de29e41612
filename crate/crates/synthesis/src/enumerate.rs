//! Exhaustive generation of canonical forests within a node and cost budget.

use std::collections::{BTreeMap, HashSet};

use crate::forest::{Context, Forest, Tree};

/// Budget comparisons allow for float noise in sums of catalog costs.
pub(crate) fn within(cost: f64, budget: f64) -> bool {
    cost <= budget + budget.abs() * 1e-12
}

/// A tree with its size and cost.
type Sized = (Tree, usize, f64);

struct Gen<'c, 'a> {
    cx: &'c Context<'a>,
    budget: f64,
    /// (root asset, max size) -> all trees, sorted.
    memo: BTreeMap<(usize, usize), Vec<Sized>>,
}

impl Gen<'_, '_> {
    fn trees(&mut self, root: usize, max_size: usize) -> Vec<Sized> {
        if let Some(v) = self.memo.get(&(root, max_size)) {
            return v.clone();
        }
        let own = self.cx.asset(root).cost;
        let mut out = Vec::new();
        if max_size >= 1 && within(own, self.budget) {
            let mut pool = Vec::new();
            for b in 0..self.cx.catalog.assets.len() {
                if self.cx.can_carry(root, b) {
                    pool.extend(self.trees(b, max_size - 1));
                }
            }
            pool.sort_by(|x, y| x.0.cmp(&y.0));
            let mut chosen = Vec::new();
            multisets(&pool, 0, max_size - 1, self.budget - own, &mut chosen, &mut |kids: &[usize]| {
                let children: Vec<Tree> = kids.iter().map(|&k| pool[k].0.clone()).collect();
                let size = 1 + kids.iter().map(|&k| pool[k].1).sum::<usize>();
                let cost = own + kids.iter().map(|&k| pool[k].2).sum::<f64>();
                out.push((Tree { asset: root, children }, size, cost));
            });
            out.sort_by(|x, y| x.0.cmp(&y.0));
        }
        self.memo.insert((root, max_size), out.clone());
        out
    }
}

/// Calls `emit` with every non-decreasing index sequence into `pool` whose
/// sizes and costs fit, including the empty one.
fn multisets<T>(
    pool: &[(T, usize, f64)],
    from: usize,
    size_left: usize,
    cost_left: f64,
    chosen: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    emit(chosen);
    for k in from..pool.len() {
        let (_, s, c) = &pool[k];
        if *s <= size_left && within(*c, cost_left) {
            chosen.push(k);
            multisets(pool, k, size_left - s, cost_left - c, chosen, emit);
            chosen.pop();
        }
    }
}

/// Every design over the catalog with at most `max_nodes` nodes and cost
/// within `budget`, once each, in a fixed order starting with the empty design.
pub fn forests(cx: &Context, budget: f64, max_nodes: usize) -> Vec<Forest> {
    let mut g = Gen {
        cx,
        budget,
        memo: BTreeMap::new(),
    };
    let mut pool: Vec<((usize, Tree), usize, f64)> = Vec::new();
    for b in 0..cx.scenario.bases.len() {
        for a in 0..cx.catalog.assets.len() {
            for (t, s, c) in g.trees(a, max_nodes) {
                pool.push(((b, t), s, c));
            }
        }
    }
    pool.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut chosen = Vec::new();
    multisets(&pool, 0, max_nodes, budget, &mut chosen, &mut |ks: &[usize]| {
        let f = Forest(ks.iter().map(|&k| pool[k].0.clone()).collect()).canonical();
        if seen.insert(f.clone()) {
            out.push(f);
        }
    });
    out
}
