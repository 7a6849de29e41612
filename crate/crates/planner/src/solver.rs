//! Exact depth-first branch and bound for small integer programs.
//!
//! Integer and binary variables are branched in declaration order (the compiler
//! declares task variables first, sorted by start time, transition and binding),
//! trying the largest value first. Linear rows are propagated to a bound-consistent
//! fixpoint at every node, and the incumbent objective is itself propagated as a
//! cut. Continuous variables are never branched: at a leaf each one is set to the
//! bound its objective coefficient prefers (lower bound if it has none). The
//! compiler only emits continuous variables that are pinned or monotone in the
//! objective, so this leaf rule is exact for compiled systems.

use std::collections::VecDeque;

use serde::Serialize;

use crate::lp::{ConstraintSystem, ObjectiveSense, Sense, VarKind};

const EPS: f64 = 1e-9;
/// Feasibility tolerance for the final row check.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Search-node cap; exceeding it yields [`SolveOutcome::Undecided`].
    pub node_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { node_limit: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    /// Names of a subset of rows that is infeasible on its own.
    pub constraints: Vec<String>,
    /// False when some deletion test was undecided, so the subset may not be minimal.
    pub irreducible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SolveOutcome {
    Optimal(Solution),
    Infeasible(Conflict),
    Undecided { nodes: u64, incumbent: Option<Solution> },
}

impl SolveOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub solutions: Vec<Solution>,
    /// More solutions exist beyond the cap.
    pub truncated: bool,
    /// The node limit stopped the enumeration early.
    pub undecided: bool,
}

struct Aborted;

struct Search<'a> {
    cs: &'a ConstraintSystem,
    active: &'a [bool],
    rows_of: Vec<Vec<usize>>,
    /// Objective as a minimization, with `obj_rhs` the current cut.
    obj: Vec<(usize, f64)>,
    obj_rhs: f64,
    optimize: bool,
    nodes: u64,
    limit: u64,
    best: Option<Solution>,
    found: Vec<Solution>,
    cap: usize,
}

#[derive(Clone)]
struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(cs: &'a ConstraintSystem, active: &'a [bool], optimize: bool, cfg: &SolverConfig) -> Self {
        let n = cs.vars().len();
        let mut rows_of = vec![Vec::new(); n];
        for (r, c) in cs.constraints().iter().enumerate() {
            if active[r] {
                for &(v, _) in &c.terms {
                    rows_of[v].push(r);
                }
            }
        }
        let flip = if cs.objective().sense == ObjectiveSense::Maximize { -1.0 } else { 1.0 };
        let obj: Vec<(usize, f64)> = cs.objective().terms.iter().map(|&(v, a)| (v, flip * a)).collect();
        for &(v, _) in &obj {
            rows_of[v].push(usize::MAX);
        }
        Search {
            cs,
            active,
            rows_of,
            obj,
            obj_rhs: f64::INFINITY,
            optimize,
            nodes: 0,
            limit: cfg.node_limit,
            best: None,
            found: Vec::new(),
            cap: usize::MAX,
        }
    }

    fn kind(&self, v: usize) -> VarKind {
        self.cs.vars()[v].kind
    }

    /// Tightens `b` against one `Σ a x ≤ rhs` row; returns changed variables, or None if infeasible.
    fn tighten_le(&self, terms: &[(usize, f64)], rhs: f64, b: &mut Bounds, changed: &mut Vec<usize>) -> Option<()> {
        let mut finite = 0.0;
        let mut ninf = 0usize;
        let mut inf_var = usize::MAX;
        for &(v, a) in terms {
            let c = if a > 0.0 { a * b.lo[v] } else { a * b.hi[v] };
            if c == f64::NEG_INFINITY {
                ninf += 1;
                inf_var = v;
            } else {
                finite += c;
            }
        }
        if ninf == 0 && finite > rhs + FEAS_TOL * (1.0 + rhs.abs()) {
            return None;
        }
        if ninf > 1 {
            return Some(());
        }
        for &(v, a) in terms {
            let c = if a > 0.0 { a * b.lo[v] } else { a * b.hi[v] };
            let residual = if ninf == 0 {
                finite - c
            } else if v == inf_var {
                finite
            } else {
                continue;
            };
            let limit = (rhs - residual) / a;
            let integral = self.kind(v) != VarKind::Continuous;
            if a > 0.0 {
                let mut nh = limit;
                if integral {
                    nh = (nh + 1e-6).floor();
                }
                if nh < b.hi[v] - EPS * (1.0 + nh.abs()) {
                    b.hi[v] = nh;
                    changed.push(v);
                }
            } else {
                let mut nl = limit;
                if integral {
                    nl = (nl - 1e-6).ceil();
                }
                if nl > b.lo[v] + EPS * (1.0 + nl.abs()) {
                    b.lo[v] = nl;
                    changed.push(v);
                }
            }
            if b.lo[v] > b.hi[v] {
                if b.lo[v] - b.hi[v] <= FEAS_TOL * (1.0 + b.lo[v].abs()) && !integral {
                    b.hi[v] = b.lo[v];
                } else {
                    return None;
                }
            }
        }
        Some(())
    }

    fn tighten_row(&self, r: usize, b: &mut Bounds, changed: &mut Vec<usize>) -> Option<()> {
        if r == usize::MAX {
            if self.obj_rhs.is_finite() {
                return self.tighten_le(&self.obj, self.obj_rhs, b, changed);
            }
            return Some(());
        }
        let c = &self.cs.constraints()[r];
        let neg: Vec<(usize, f64)>;
        match c.sense {
            Sense::Le => self.tighten_le(&c.terms, c.rhs, b, changed),
            Sense::Ge => {
                neg = c.terms.iter().map(|&(v, a)| (v, -a)).collect();
                self.tighten_le(&neg, -c.rhs, b, changed)
            }
            Sense::Eq => {
                self.tighten_le(&c.terms, c.rhs, b, changed)?;
                neg = c.terms.iter().map(|&(v, a)| (v, -a)).collect();
                self.tighten_le(&neg, -c.rhs, b, changed)
            }
        }
    }

    fn propagate(&self, b: &mut Bounds, seeds: impl IntoIterator<Item = usize>) -> bool {
        let nrows = self.cs.constraints().len();
        let slot = |r: usize| if r == usize::MAX { nrows } else { r };
        let mut queued = vec![false; nrows + 1];
        let mut queue = VecDeque::new();
        for r in seeds {
            if !queued[slot(r)] {
                queued[slot(r)] = true;
                queue.push_back(r);
            }
        }
        let mut changed = Vec::new();
        let mut steps = 0usize;
        let budget = 200 * (nrows + 1);
        while let Some(r) = queue.pop_front() {
            queued[slot(r)] = false;
            steps += 1;
            if steps > budget {
                // bounds stay valid; stop chasing continuous refinements
                break;
            }
            changed.clear();
            if self.tighten_row(r, b, &mut changed).is_none() {
                return false;
            }
            for &v in &changed {
                for &r2 in &self.rows_of[v] {
                    if r2 != r && !queued[slot(r2)] {
                        queued[slot(r2)] = true;
                        queue.push_back(r2);
                    }
                }
            }
        }
        true
    }

    fn all_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.cs.constraints().len()).filter(|&r| self.active[r]).collect();
        rows.push(usize::MAX);
        rows
    }

    fn leaf(&self, mut b: Bounds) -> Option<Solution> {
        let n = self.cs.vars().len();
        let coef = |v: usize| self.obj.iter().find(|(w, _)| *w == v).map_or(0.0, |(_, a)| *a);
        for v in 0..n {
            if b.lo[v] == b.hi[v] {
                continue;
            }
            let (lo, hi) = (b.lo[v], b.hi[v]);
            let c = coef(v);
            let x = if c < 0.0 && hi.is_finite() {
                hi
            } else if lo.is_finite() {
                lo
            } else if hi.is_finite() {
                hi
            } else {
                0.0
            };
            b.lo[v] = x;
            b.hi[v] = x;
            let seeds = self.rows_of[v].clone();
            if !self.propagate(&mut b, seeds) {
                return None;
            }
        }
        let values = b.lo;
        let ok = self
            .cs
            .constraints()
            .iter()
            .enumerate()
            .all(|(r, c)| !self.active[r] || c.satisfied(&values, FEAS_TOL));
        if !ok {
            return None;
        }
        let objective = self.cs.objective_value(&values);
        Some(Solution { values, objective })
    }

    fn dfs(&mut self, b: Bounds, from: usize) -> Result<(), Aborted> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Aborted);
        }
        let n = self.cs.vars().len();
        let next = (from..n).find(|&v| self.kind(v) != VarKind::Continuous && b.lo[v] < b.hi[v]);
        let Some(v) = next else {
            if let Some(sol) = self.leaf(b) {
                if self.optimize {
                    let min_obj = self.obj.iter().fold(0.0, |s, &(v, a)| s + a * sol.values[v]);
                    self.obj_rhs = min_obj - 1e-6 * (1.0 + min_obj.abs());
                    self.best = Some(sol);
                } else {
                    self.found.push(sol);
                }
            }
            return Ok(());
        };
        let (lo, hi) = (b.lo[v].ceil() as i64, b.hi[v].floor() as i64);
        let mut x = hi;
        while x >= lo {
            if !self.optimize && self.found.len() > self.cap {
                return Ok(());
            }
            let mut child = b.clone();
            child.lo[v] = x as f64;
            child.hi[v] = x as f64;
            let mut seeds = self.rows_of[v].clone();
            if self.optimize {
                seeds.push(usize::MAX);
            }
            if self.propagate(&mut child, seeds) {
                self.dfs(child, v + 1)?;
            }
            x -= 1;
        }
        Ok(())
    }

    fn root(&self) -> Option<Bounds> {
        let mut b = Bounds {
            lo: self.cs.vars().iter().map(|v| v.lo).collect(),
            hi: self.cs.vars().iter().map(|v| v.hi).collect(),
        };
        for (v, var) in self.cs.vars().iter().enumerate() {
            if var.kind != VarKind::Continuous {
                b.lo[v] = b.lo[v].ceil();
                b.hi[v] = b.hi[v].floor();
                if b.lo[v] > b.hi[v] {
                    return None;
                }
            }
        }
        let rows = self.all_rows();
        self.propagate(&mut b, rows).then_some(b)
    }
}

enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
}

fn feasibility(cs: &ConstraintSystem, active: &[bool], cfg: &SolverConfig) -> Verdict {
    let mut s = Search::new(cs, active, false, cfg);
    s.cap = 0;
    let Some(b) = s.root() else { return Verdict::Infeasible };
    match s.dfs(b, 0) {
        Err(Aborted) => Verdict::Undecided,
        Ok(()) if s.found.is_empty() => Verdict::Infeasible,
        Ok(()) => Verdict::Feasible,
    }
}

/// Solves to optimality; the objective of a feasibility system is empty and evaluates to 0.
///
/// `soft` lists named groups of rows eligible for the infeasibility core; rows
/// outside every group are always kept. With no groups every row is soft.
pub fn solve(cs: &ConstraintSystem, soft: &[(String, Vec<usize>)], cfg: &SolverConfig) -> SolveOutcome {
    let active = vec![true; cs.constraints().len()];
    let mut s = Search::new(cs, &active, true, cfg);
    let result = match s.root() {
        None => Ok(()),
        Some(b) => s.dfs(b, 0),
    };
    match (result, s.best) {
        (Ok(()), Some(sol)) => SolveOutcome::Optimal(sol),
        (Ok(()), None) => SolveOutcome::Infeasible(conflict(cs, soft, cfg)),
        (Err(Aborted), incumbent) => SolveOutcome::Undecided { nodes: s.nodes, incumbent },
    }
}

/// Deletion filter: drops each soft group whose removal keeps the system infeasible.
pub fn conflict(cs: &ConstraintSystem, soft: &[(String, Vec<usize>)], cfg: &SolverConfig) -> Conflict {
    let n = cs.constraints().len();
    let groups: Vec<(String, Vec<usize>)> = if soft.is_empty() {
        cs.constraints().iter().enumerate().map(|(i, c)| (c.name.clone(), vec![i])).collect()
    } else {
        soft.to_vec()
    };
    let mut active = vec![true; n];
    let mut kept = vec![true; groups.len()];
    let mut irreducible = true;
    for (g, (_, rows)) in groups.iter().enumerate() {
        for &r in rows {
            active[r] = false;
        }
        match feasibility(cs, &active, cfg) {
            Verdict::Infeasible => kept[g] = false,
            Verdict::Feasible => {
                for &r in rows {
                    active[r] = true;
                }
            }
            Verdict::Undecided => {
                irreducible = false;
                for &r in rows {
                    active[r] = true;
                }
            }
        }
    }
    let constraints = groups
        .iter()
        .zip(&kept)
        .filter(|(_, k)| **k)
        .flat_map(|((_, rows), _)| rows.iter().map(|&r| cs.constraints()[r].name.clone()))
        .collect();
    Conflict {
        constraints,
        irreducible,
    }
}

/// All feasible points in search order, up to `cap`.
pub fn enumerate(cs: &ConstraintSystem, cap: usize, cfg: &SolverConfig) -> Enumeration {
    let active = vec![true; cs.constraints().len()];
    let mut s = Search::new(cs, &active, false, cfg);
    s.cap = cap;
    let result = match s.root() {
        None => Ok(()),
        Some(b) => s.dfs(b, 0),
    };
    let truncated = s.found.len() > cap;
    s.found.truncate(cap);
    Enumeration {
        solutions: s.found,
        truncated,
        undecided: result.is_err(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{ConstraintSystem, Sense, VarKind};

    /// max 5x + 4y + 3z s.t. 2x + 3y + z <= 5, 4x + y + 2z <= 11, 3x + 4y + 2z <= 8, binary.
    fn knapsack() -> ConstraintSystem {
        let mut cs = ConstraintSystem::new();
        let x = cs.add_var("x", VarKind::Binary, 0.0, 1.0).unwrap();
        let y = cs.add_var("y", VarKind::Binary, 0.0, 1.0).unwrap();
        let z = cs.add_var("z", VarKind::Binary, 0.0, 1.0).unwrap();
        cs.add_constraint("a", vec![(x, 2.0), (y, 3.0), (z, 1.0)], Sense::Le, 5.0).unwrap();
        cs.add_constraint("b", vec![(x, 4.0), (y, 1.0), (z, 2.0)], Sense::Le, 11.0).unwrap();
        cs.add_constraint("c", vec![(x, 3.0), (y, 4.0), (z, 2.0)], Sense::Le, 8.0).unwrap();
        cs.set_objective(ObjectiveSense::Maximize, vec![(x, 5.0), (y, 4.0), (z, 3.0)]).unwrap();
        cs
    }

    #[test]
    fn knapsack_matches_brute_force() {
        let cs = knapsack();
        let best = (0..8u32)
            .map(|m| (0..3).map(|i| ((m >> i) & 1) as f64).collect::<Vec<_>>())
            .filter(|v| cs.is_feasible(v, 1e-9))
            .map(|v| cs.objective_value(&v))
            .fold(f64::NEG_INFINITY, f64::max);
        let out = solve(&cs, &[], &SolverConfig::default());
        assert_eq!(out.solution().unwrap().objective, best);
    }

    #[test]
    fn enumeration_counts_and_cap() {
        let cs = knapsack();
        let all = enumerate(&cs, 100, &SolverConfig::default());
        let brute = (0..8u32)
            .filter(|m| cs.is_feasible(&(0..3).map(|i| ((m >> i) & 1) as f64).collect::<Vec<_>>(), 1e-9))
            .count();
        assert_eq!(all.solutions.len(), brute);
        assert!(!all.truncated);
        let some = enumerate(&cs, 2, &SolverConfig::default());
        assert_eq!(some.solutions.len(), 2);
        assert!(some.truncated);
    }

    #[test]
    fn infeasible_core_and_limit() {
        let mut cs = ConstraintSystem::new();
        let x = cs.add_var("x", VarKind::Integer, 0.0, 10.0).unwrap();
        cs.add_constraint("low", vec![(x, 1.0)], Sense::Ge, 6.0).unwrap();
        cs.add_constraint("harmless", vec![(x, 1.0)], Sense::Le, 9.0).unwrap();
        cs.add_constraint("high", vec![(x, 1.0)], Sense::Le, 4.0).unwrap();
        match solve(&cs, &[], &SolverConfig::default()) {
            SolveOutcome::Infeasible(c) => {
                assert_eq!(c.constraints, vec!["low".to_string(), "high".to_string()]);
                assert!(c.irreducible);
            }
            other => panic!("{other:?}"),
        }
        let out = solve(&knapsack(), &[], &SolverConfig { node_limit: 1 });
        assert!(matches!(out, SolveOutcome::Undecided { .. }));
    }
}
