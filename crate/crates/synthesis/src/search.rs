//! Exhaustive, annealing and genetic search with a shared audit log.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use netoperad_core::algebra::{Catalog, FleetDesign, KpiScore, Scenario};
use netoperad_core::template::InducedOperad;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::enumerate::{forests, within};
use crate::forest::{Context, Forest, Tree};
use crate::{Algorithm, SearchConfig, SynthesisError};

/// One scored candidate. The audit log holds one per evaluation, in order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub hash: String,
    pub cost: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSummary {
    pub hash: String,
    pub cost: f64,
    pub expected_detections: f64,
    pub nodes: usize,
    pub carried: usize,
    pub counts: BTreeMap<String, usize>,
    pub structure: Value,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub algorithm: Algorithm,
    pub best: FleetDesign,
    pub forest: Forest,
    pub score: KpiScore,
    pub summary: DesignSummary,
    pub audit: Vec<AuditEntry>,
}

impl SearchOutcome {
    /// The audit log as JSON lines.
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.audit {
            out.push_str(&serde_json::to_string(e).expect("audit entries serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Scored {
    forest: Forest,
    score: f64,
    cost: f64,
}

/// Higher score first, then lower cost, then canonical order.
fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.cost.total_cmp(&b.cost))
        .then_with(|| a.forest.cmp(&b.forest))
}

type Path = (usize, Vec<usize>);

/// One worker's scored designs and audit lines.
type Chunk = (Vec<Scored>, Vec<AuditEntry>);

fn node<'t>(f: &'t Forest, p: &Path) -> &'t Tree {
    p.1.iter().fold(&f.0[p.0].1, |t, &i| &t.children[i])
}

fn node_mut<'t>(f: &'t mut Forest, p: &Path) -> &'t mut Tree {
    p.1.iter().fold(&mut f.0[p.0].1, |t, &i| &mut t.children[i])
}

fn paths(f: &Forest) -> Vec<Path> {
    fn walk(t: &Tree, root: usize, here: &mut Vec<usize>, out: &mut Vec<Path>) {
        out.push((root, here.clone()));
        for (i, c) in t.children.iter().enumerate() {
            here.push(i);
            walk(c, root, here, out);
            here.pop();
        }
    }
    let mut out = Vec::new();
    for (r, (_, t)) in f.0.iter().enumerate() {
        walk(t, r, &mut Vec::new(), &mut out);
    }
    out
}

/// Cuts out the subtree at `p`. A root leaves its slot; the base is returned.
fn take(f: &mut Forest, p: &Path) -> (usize, Tree) {
    let base = f.0[p.0].0;
    match p.1.split_last() {
        None => f.0.remove(p.0),
        Some((&last, up)) => {
            let parent = node_mut(f, &(p.0, up.to_vec()));
            (base, parent.children.remove(last))
        }
    }
}

pub struct Explorer<'a> {
    cx: Context<'a>,
    cfg: SearchConfig,
    budget: f64,
}

impl<'a> Explorer<'a> {
    pub fn new(
        operad: &'a InducedOperad,
        catalog: &'a Catalog,
        scenario: &'a Scenario,
        cfg: SearchConfig,
    ) -> Result<Self, SynthesisError> {
        cfg.validate()?;
        let budget = cfg.budget.unwrap_or(scenario.budget);
        Ok(Explorer {
            cx: Context::new(operad, catalog, scenario)?,
            cfg,
            budget,
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }

    fn fits(&self, f: &Forest) -> bool {
        f.size() <= self.cfg.max_nodes && within(self.cx.cost(f), self.budget)
    }

    pub fn enumerate_designs(&self) -> Result<Vec<FleetDesign>, SynthesisError> {
        forests(&self.cx, self.budget, self.cfg.max_nodes)
            .iter()
            .map(|f| self.cx.design(f))
            .collect()
    }

    /// Canonical representative of a design.
    pub fn canonical(&self, d: &FleetDesign) -> Result<Forest, SynthesisError> {
        self.cx.forest_of(d)
    }

    pub fn design(&self, f: &Forest) -> Result<FleetDesign, SynthesisError> {
        self.cx.design(f)
    }

    pub fn summary(&self, f: &Forest) -> Result<DesignSummary, SynthesisError> {
        let (d, s) = self.cx.evaluate(f)?;
        Ok(DesignSummary {
            hash: self.cx.hash(f, &d),
            cost: s.cost,
            expected_detections: s.expected_detections,
            nodes: d.len(),
            carried: d.carrier().iter().filter(|c| c.is_some()).count(),
            counts: self.cx.counts(f),
            structure: self.cx.to_json(f),
        })
    }

    fn score(&self, f: &Forest, audit: &mut Vec<AuditEntry>) -> Result<Scored, SynthesisError> {
        let (d, s) = self.cx.evaluate(f)?;
        audit.push(AuditEntry {
            hash: self.cx.hash(f, &d),
            cost: s.cost,
            score: s.expected_detections,
        });
        Ok(Scored {
            forest: f.clone(),
            score: s.expected_detections,
            cost: s.cost,
        })
    }

    pub fn search(&self) -> Result<SearchOutcome, SynthesisError> {
        let mut audit = Vec::new();
        let best = match self.cfg.algorithm {
            Algorithm::Exhaustive => self.exhaustive(&mut audit)?,
            Algorithm::Anneal => self.anneal(Forest::default(), &mut audit)?,
            Algorithm::Genetic => self.genetic(&mut audit)?,
        };
        let (design, score) = self.cx.evaluate(&best.forest)?;
        Ok(SearchOutcome {
            algorithm: self.cfg.algorithm,
            summary: self.summary(&best.forest)?,
            best: design,
            forest: best.forest,
            score,
            audit,
        })
    }

    fn exhaustive(&self, audit: &mut Vec<AuditEntry>) -> Result<Scored, SynthesisError> {
        let all = forests(&self.cx, self.budget, self.cfg.max_nodes);
        let chunk = all.len().div_ceil(self.cfg.threads).max(1);
        let parts: Vec<Result<Chunk, SynthesisError>> = std::thread::scope(|s| {
            let handles: Vec<_> = all
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        let mut log = Vec::new();
                        let scored = part.iter().map(|f| self.score(f, &mut log)).collect::<Result<Vec<_>, _>>()?;
                        Ok((scored, log))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("scoring thread panicked")).collect()
        });
        let mut best: Option<Scored> = None;
        for part in parts {
            let (scored, log) = part?;
            audit.extend(log);
            for c in scored {
                if best.as_ref().is_none_or(|b| rank(&c, b) == Ordering::Less) {
                    best = Some(c);
                }
            }
        }
        Ok(best.expect("the empty design is always enumerated"))
    }

    /// Simulated annealing from `initial` with geometric cooling.
    pub fn anneal_from(&self, initial: &FleetDesign) -> Result<SearchOutcome, SynthesisError> {
        let mut audit = Vec::new();
        let best = self.anneal(self.cx.forest_of(initial)?, &mut audit)?;
        let (design, score) = self.cx.evaluate(&best.forest)?;
        Ok(SearchOutcome {
            algorithm: Algorithm::Anneal,
            summary: self.summary(&best.forest)?,
            best: design,
            forest: best.forest,
            score,
            audit,
        })
    }

    fn anneal(&self, initial: Forest, audit: &mut Vec<AuditEntry>) -> Result<Scored, SynthesisError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut current = self.score(&initial, audit)?;
        let mut best = current.clone();
        let mut temp = self.cfg.initial_temperature;
        for _ in 0..self.cfg.iterations {
            if let Some(next) = self.neighbor(&current.forest, &mut rng) {
                let next = self.score(&next, audit)?;
                if rank(&next, &best) == Ordering::Less {
                    best = next.clone();
                }
                let delta = next.score - current.score;
                if delta >= 0.0 || (temp > 0.0 && rng.gen::<f64>() < (delta / temp).exp()) {
                    current = next;
                }
            }
            temp *= self.cfg.cooling;
        }
        Ok(best)
    }

    /// One edge or one asset changed, within budget. `None` when no attempt fits.
    fn neighbor(&self, f: &Forest, rng: &mut ChaCha8Rng) -> Option<Forest> {
        for _ in 0..32 {
            let mut g = f.clone();
            let ps = paths(&g);
            let changed = match rng.gen_range(0..6) {
                0 => {
                    let a = rng.gen_range(0..self.cx.catalog.assets.len());
                    let b = rng.gen_range(0..self.cx.scenario.bases.len());
                    g.0.push((b, Tree::atom(a)));
                    true
                }
                1 if !ps.is_empty() => {
                    let p = ps.choose(rng).expect("non-empty");
                    let (base, t) = take(&mut g, p);
                    g.0.extend(t.children.into_iter().map(|c| (base, c)));
                    true
                }
                2 => self.attach_random_root(&mut g, rng),
                3 => {
                    let carried: Vec<&Path> = ps.iter().filter(|p| !p.1.is_empty()).collect();
                    match carried.choose(rng) {
                        Some(p) => {
                            let sub = take(&mut g, p);
                            g.0.push(sub);
                            true
                        }
                        None => false,
                    }
                }
                4 => self.rebase_random_root(&mut g, rng),
                _ => match ps.choose(rng) {
                    Some(p) => self.substitute(node_mut(&mut g, p), rng),
                    None => false,
                },
            };
            if changed {
                let g = g.canonical();
                if &g != f && self.fits(&g) {
                    return Some(g);
                }
            }
        }
        None
    }

    /// Moves a random root under a random node of another tree that may carry it.
    fn attach_random_root(&self, g: &mut Forest, rng: &mut ChaCha8Rng) -> bool {
        if g.0.len() < 2 {
            return false;
        }
        let r = rng.gen_range(0..g.0.len());
        let asset = g.0[r].1.asset;
        let targets: Vec<Path> = paths(g)
            .into_iter()
            .filter(|p| p.0 != r && self.cx.can_carry(node(g, p).asset, asset))
            .collect();
        let Some(target) = targets.choose(rng).cloned() else {
            return false;
        };
        let (_, t) = g.0.remove(r);
        let root = if target.0 > r { target.0 - 1 } else { target.0 };
        node_mut(g, &(root, target.1)).children.push(t);
        true
    }

    fn rebase_random_root(&self, g: &mut Forest, rng: &mut ChaCha8Rng) -> bool {
        let bases = self.cx.scenario.bases.len();
        if g.0.is_empty() || bases < 2 {
            return false;
        }
        let r = rng.gen_range(0..g.0.len());
        let old = g.0[r].0;
        let mut b = rng.gen_range(0..bases - 1);
        if b >= old {
            b += 1;
        }
        g.0[r].0 = b;
        true
    }

    /// Swaps the asset for another catalog entry of the same color.
    fn substitute(&self, t: &mut Tree, rng: &mut ChaCha8Rng) -> bool {
        let color = &self.cx.asset(t.asset).color;
        let others: Vec<usize> = (0..self.cx.catalog.assets.len())
            .filter(|&i| i != t.asset && &self.cx.asset(i).color == color)
            .collect();
        match others.choose(rng) {
            Some(&i) => {
                t.asset = i;
                true
            }
            None => false,
        }
    }

    /// Child of two designs: a random subset of their carry-subtrees,
    /// optionally unpacked one level, regrafted onto compatible carriers and
    /// trimmed back to budget.
    pub fn crossover(&self, a: &FleetDesign, b: &FleetDesign, seed: u64) -> Result<FleetDesign, SynthesisError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let child = self.cross(&self.cx.forest_of(a)?, &self.cx.forest_of(b)?, &mut rng)?;
        self.cx.design(&child)
    }

    fn cross(&self, a: &Forest, b: &Forest, rng: &mut ChaCha8Rng) -> Result<Forest, SynthesisError> {
        // Union of the two root multisets, so a design crossed with itself
        // never gains nodes.
        let mut extra = b.0.clone();
        for r in &a.0 {
            if let Some(i) = extra.iter().position(|x| x == r) {
                extra.remove(i);
            }
        }
        let mut g = Forest::default();
        for (base, t) in a.0.iter().chain(&extra) {
            if !rng.gen_bool(0.5) {
                continue;
            }
            if !t.children.is_empty() && rng.gen_bool(0.3) {
                g.0.push((*base, Tree::atom(t.asset)));
                g.0.extend(t.children.iter().map(|c| (*base, c.clone())));
            } else {
                g.0.push((*base, t.clone()));
            }
        }
        for _ in 0..g.0.len() {
            if rng.gen_bool(0.5) {
                self.attach_random_root(&mut g, rng);
            }
        }
        self.trim(g.canonical())
    }

    /// Drops the subtree with the lowest marginal score per unit cost until the
    /// design fits the budget and node cap.
    fn trim(&self, mut f: Forest) -> Result<Forest, SynthesisError> {
        while !self.fits(&f) {
            let total = self.cx.evaluate(&f)?.1.expected_detections;
            let mut worst: Option<(f64, Path)> = None;
            for p in paths(&f) {
                let mut rest = f.clone();
                let (_, sub) = take(&mut rest, &p);
                let gain = total - self.cx.evaluate(&rest)?.1.expected_detections;
                let cost = self.cx.tree_cost(&sub);
                let density = if cost > 0.0 { gain / cost } else { f64::INFINITY };
                if worst.as_ref().is_none_or(|(w, _)| density < *w) {
                    worst = Some((density, p));
                }
            }
            let (_, p) = worst.expect("an over-budget design has nodes");
            take(&mut f, &p);
            f = f.canonical();
        }
        Ok(f)
    }

    /// Changes algebra data only: a tree's base or one asset within its color.
    /// The operation, and so its edge map, is untouched.
    pub fn mutate(&self, a: &FleetDesign, seed: u64) -> Result<FleetDesign, SynthesisError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.mutate_with(a, &mut rng)
    }

    fn mutate_with(&self, a: &FleetDesign, rng: &mut ChaCha8Rng) -> Result<FleetDesign, SynthesisError> {
        if a.is_empty() {
            return Ok(a.clone());
        }
        let i = rng.gen_range(0..a.len());
        let mut assets = a.assets().to_vec();
        let mut bases = a.bases().to_vec();
        let alternatives: Vec<&_> = self
            .cx
            .catalog
            .assets
            .iter()
            .filter(|c| c.color == assets[i].color && c.name != assets[i].name)
            .collect();
        let can_rebase = self.cx.scenario.bases.len() > 1;
        let rebase = match (can_rebase, alternatives.is_empty()) {
            (false, true) => return Ok(a.clone()),
            (true, false) => rng.gen_bool(0.5),
            (r, _) => r,
        };
        if rebase {
            let root = a.instance().root(i);
            let others: Vec<&str> = self
                .cx
                .scenario
                .bases
                .iter()
                .map(|b| b.id.as_str())
                .filter(|b| *b != bases[root])
                .collect();
            let to = others.choose(rng).expect("at least two bases").to_string();
            for (j, b) in bases.iter_mut().enumerate() {
                if a.instance().root(j) == root {
                    *b = to.clone();
                }
            }
        } else {
            assets[i] = (*alternatives.choose(rng).expect("non-empty")).clone();
        }
        Ok(a.with_algebra(assets, bases)?)
    }

    /// Random valid design: atoms added one by one, each possibly carried.
    fn random_forest(&self, rng: &mut ChaCha8Rng) -> Forest {
        let mut f = Forest::default();
        let steps = rng.gen_range(0..=self.cfg.max_nodes);
        for _ in 0..steps {
            let mut g = f.clone();
            let a = rng.gen_range(0..self.cx.catalog.assets.len());
            let b = rng.gen_range(0..self.cx.scenario.bases.len());
            g.0.push((b, Tree::atom(a)));
            if rng.gen_bool(0.5) {
                let targets: Vec<Path> = paths(&g)
                    .into_iter()
                    .filter(|p| p.0 != g.0.len() - 1 && self.cx.can_carry(node(&g, p).asset, a))
                    .collect();
                if let Some(p) = targets.choose(rng) {
                    g.0.pop();
                    node_mut(&mut g, p).children.push(Tree::atom(a));
                }
            }
            if self.fits(&g) {
                f = g;
            }
        }
        f.canonical()
    }

    fn genetic(&self, audit: &mut Vec<AuditEntry>) -> Result<Scored, SynthesisError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let n = self.cfg.population;
        let mut pop = Vec::with_capacity(n);
        for _ in 0..n {
            let f = self.random_forest(&mut rng);
            pop.push(self.score(&f, audit)?);
        }
        pop.sort_by(rank);
        const ELITE: usize = 2;
        for _ in 0..self.cfg.generations {
            let mut next: Vec<Scored> = pop.iter().take(ELITE).cloned().collect();
            while next.len() < n {
                let a = tournament(&pop, &mut rng);
                let b = tournament(&pop, &mut rng);
                let mut child = self.cross(&a.forest, &b.forest, &mut rng)?;
                if rng.gen_bool(self.cfg.mutation_rate) {
                    let d = self.mutate_with(&self.cx.design(&child)?, &mut rng)?;
                    child = self.cx.forest_of(&d)?;
                }
                next.push(self.score(&child, audit)?);
            }
            next.sort_by(rank);
            pop = next;
        }
        Ok(pop.swap_remove(0))
    }
}

fn tournament<'p>(pop: &'p [Scored], rng: &mut ChaCha8Rng) -> &'p Scored {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    let c = &pop[rng.gen_range(0..pop.len())];
    [a, b, c].into_iter().min_by(|x, y| rank(x, y)).expect("three entrants")
}
