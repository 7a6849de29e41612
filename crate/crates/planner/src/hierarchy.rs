//! Maps between the three tasking levels.
//!
//! Timed schedules project to plans by ASAP layering: a task's step is one more
//! than the latest step of any earlier task of its agents. Plans project to
//! counts by counting tasks of each transition per step. Every projection is
//! re-solved at the coarse level, so its feasibility is checked, not assumed.
//! Lifting enumerates fine solutions whose projection equals the given one.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{compile_untimed, Level, Model};
use crate::solver::{self, Solution, SolveOutcome, SolverConfig};
use crate::lp::Sense;
use crate::PlanError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lift {
    pub solutions: Vec<Solution>,
    pub truncated: bool,
}

/// `(transition, step, agents)` of every active task, in layered step order.
fn layered(fine: &Model, sol: &Solution) -> Vec<(usize, u32, Vec<usize>)> {
    let mut active: Vec<_> = fine.tasks().iter().filter(|tv| sol.values[tv.var] > 0.5).collect();
    active.sort_by_key(|tv| (tv.start, tv.var));
    match fine.level() {
        Level::Plan => active.iter().map(|tv| (tv.transition, tv.start, tv.agents.clone())).collect(),
        _ => {
            let mut last: BTreeMap<usize, u32> = BTreeMap::new();
            let mut out = Vec::new();
            for tv in active {
                let step = tv.agents.iter().filter_map(|a| last.get(a)).map(|s| s + 1).max().unwrap_or(0);
                for &a in &tv.agents {
                    last.insert(a, step);
                }
                out.push((tv.transition, step, tv.agents.clone()));
            }
            out.sort_by_key(|(k, s, agents)| (*s, *k, agents.clone()));
            out
        }
    }
}

fn same_population(a: &Model, b: &Model) -> Result<(), PlanError> {
    if a.agents() != b.agents() || a.template() != b.template() {
        return Err(PlanError::LevelMismatch("models describe different agents or templates".into()));
    }
    Ok(())
}

fn finish(coarse: &Model, fixed: Vec<(usize, f64)>, cfg: &SolverConfig) -> Result<Solution, PlanError> {
    match coarse.complete(&fixed, cfg) {
        SolveOutcome::Optimal(s) => Ok(s),
        other => Err(PlanError::ProjectionInfeasible(format!("{other:?}"))),
    }
}

/// Projects a solution of `fine` onto the coarser `coarse`.
pub fn project(fine: &Model, sol: &Solution, coarse: &Model, cfg: &SolverConfig) -> Result<Solution, PlanError> {
    same_population(fine, coarse)?;
    let layers = layered(fine, sol);
    match (fine.level(), coarse.level()) {
        (Level::Timed, Level::Plan) => {
            let mut fixed: Vec<(usize, f64)> = coarse.decision_vars().into_iter().map(|v| (v, 0.0)).collect();
            for (k, step, agents) in &layers {
                let v = coarse.task_var(*k, *step, agents).ok_or_else(|| {
                    PlanError::ProjectionInfeasible(format!("plan has no step {step} for transition {k}"))
                })?;
                fixed.iter_mut().find(|(w, _)| *w == v).expect("decision var").1 = 1.0;
            }
            finish(coarse, fixed, cfg)
        }
        (Level::Timed | Level::Plan, Level::Counts) => {
            let mut tally: BTreeMap<(usize, u32), u32> = BTreeMap::new();
            for (k, step, _) in &layers {
                *tally.entry((*k, *step)).or_default() += 1;
            }
            let mut fixed: Vec<(usize, f64)> = coarse.decision_vars().into_iter().map(|v| (v, 0.0)).collect();
            for ((k, step), n) in tally {
                let v = coarse
                    .count_var(k, step)
                    .ok_or_else(|| PlanError::ProjectionInfeasible(format!("counts have no step {step} for transition {k}")))?;
                fixed.iter_mut().find(|(w, _)| *w == v).expect("decision var").1 = n as f64;
            }
            finish(coarse, fixed, cfg)
        }
        (from, to) => Err(PlanError::LevelMismatch(format!("cannot project {from:?} to {to:?}"))),
    }
}

fn same_decisions(model: &Model, a: &Solution, b: &Solution) -> bool {
    model.decision_vars().iter().all(|&v| (a.values[v] - b.values[v]).abs() < 0.5)
}

fn sort_dedup(mut sols: Vec<Solution>) -> Vec<Solution> {
    sols.sort_by(|a, b| {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sols.dedup_by(|a, b| a.values == b.values);
    sols
}

/// Finer solutions whose projection equals `sol`, at most `cap` of them.
pub fn lift(coarse: &Model, sol: &Solution, fine: &Model, cap: usize, cfg: &SolverConfig) -> Result<Lift, PlanError> {
    same_population(coarse, fine)?;
    match (coarse.level(), fine.level()) {
        (Level::Plan, Level::Timed) => lift_plan(coarse, sol, fine, cap, cfg),
        (Level::Counts, Level::Plan) => lift_counts(coarse, sol, fine, cap, cfg),
        (Level::Counts, Level::Timed) => {
            let mut plan = compile_untimed(fine.template(), fine.agents(), coarse.horizon())?;
            plan.set_goal(fine.goal())?;
            let plans = lift_counts(coarse, sol, &plan, usize::MAX, cfg)?;
            let mut out = Vec::new();
            let mut truncated = plans.truncated;
            for p in &plans.solutions {
                let l = lift_plan(&plan, p, fine, cap.saturating_sub(out.len()).saturating_add(1), cfg)?;
                truncated |= l.truncated;
                out.extend(l.solutions);
                if out.len() > cap {
                    break;
                }
            }
            let mut out = sort_dedup(out);
            if out.len() > cap {
                out.truncate(cap);
                truncated = true;
            }
            Ok(Lift { solutions: out, truncated })
        }
        (from, to) => Err(PlanError::LevelMismatch(format!("cannot lift {from:?} to {to:?}"))),
    }
}

fn lift_counts(coarse: &Model, sol: &Solution, fine: &Model, cap: usize, cfg: &SolverConfig) -> Result<Lift, PlanError> {
    let mut cs = fine.system().clone();
    let mut covered = BTreeSet::new();
    for cv in coarse.counts() {
        let terms: Vec<(usize, f64)> = fine
            .tasks()
            .iter()
            .filter(|tv| tv.transition == cv.transition && tv.start == cv.step)
            .map(|tv| (tv.var, 1.0))
            .collect();
        covered.extend(terms.iter().map(|(v, _)| *v));
        let name = format!("lift_{}_{}", cv.transition, cv.step);
        cs.add_constraint(name, terms, Sense::Eq, sol.values[cv.var].round())?;
    }
    // tasks with no counterpart at the counts level are not allowed
    for tv in fine.tasks() {
        if !covered.contains(&tv.var) {
            cs.fix(tv.var, 0.0);
        }
    }
    let e = solver::enumerate(&cs, cap, cfg);
    if e.undecided {
        return Err(PlanError::Undecided);
    }
    let mut solutions = Vec::new();
    for s in e.solutions {
        if same_decisions(coarse, &project(fine, &s, coarse, cfg)?, sol) {
            solutions.push(s);
        }
    }
    Ok(Lift {
        solutions: sort_dedup(solutions),
        truncated: e.truncated,
    })
}

fn lift_plan(coarse: &Model, sol: &Solution, fine: &Model, cap: usize, cfg: &SolverConfig) -> Result<Lift, PlanError> {
    let plan = layered(coarse, sol);
    let horizon = fine.horizon();
    let durations: Vec<u32> = fine.template().transitions().iter().map(|t| t.duration).collect();
    let mut starts = vec![0u32; plan.len()];
    let mut found = Vec::new();
    let mut truncated = false;

    struct Ctx<'a> {
        plan: &'a [(usize, u32, Vec<usize>)],
        durations: &'a [u32],
        horizon: u32,
        fine: &'a Model,
        coarse: &'a Model,
        target: &'a Solution,
        cfg: &'a SolverConfig,
        cap: usize,
    }

    fn go(
        ctx: &Ctx<'_>,
        i: usize,
        free_at: &mut BTreeMap<usize, u32>,
        starts: &mut Vec<u32>,
        found: &mut Vec<Solution>,
        truncated: &mut bool,
    ) -> Result<(), PlanError> {
        if found.len() > ctx.cap {
            *truncated = true;
            return Ok(());
        }
        if i == ctx.plan.len() {
            let mut fixed: Vec<(usize, f64)> = ctx.fine.decision_vars().into_iter().map(|v| (v, 0.0)).collect();
            for ((k, _, agents), &s) in ctx.plan.iter().zip(starts.iter()) {
                let Some(v) = ctx.fine.task_var(*k, s, agents) else { return Ok(()) };
                fixed.iter_mut().find(|(w, _)| *w == v).expect("decision var").1 = 1.0;
            }
            if let SolveOutcome::Optimal(s) = ctx.fine.complete(&fixed, ctx.cfg) {
                if project(ctx.fine, &s, ctx.coarse, ctx.cfg).is_ok_and(|p| same_decisions(ctx.coarse, &p, ctx.target)) {
                    found.push(s);
                }
            }
            return Ok(());
        }
        let (k, _, agents) = &ctx.plan[i];
        let d = ctx.durations[*k];
        let earliest = agents.iter().filter_map(|a| free_at.get(a)).copied().max().unwrap_or(0);
        for s in earliest..=ctx.horizon.saturating_sub(d) {
            if s + d > ctx.horizon {
                break;
            }
            let saved: Vec<Option<u32>> = agents.iter().map(|a| free_at.insert(*a, s + d)).collect();
            starts[i] = s;
            go(ctx, i + 1, free_at, starts, found, truncated)?;
            for (a, old) in agents.iter().zip(saved) {
                match old {
                    Some(x) => free_at.insert(*a, x),
                    None => free_at.remove(a),
                };
            }
        }
        Ok(())
    }

    let ctx = Ctx {
        plan: &plan,
        durations: &durations,
        horizon,
        fine,
        coarse,
        target: sol,
        cfg,
        cap,
    };
    go(&ctx, 0, &mut BTreeMap::new(), &mut starts, &mut found, &mut truncated)?;
    let mut solutions = sort_dedup(found);
    if solutions.len() > cap {
        solutions.truncate(cap);
        truncated = true;
    }
    Ok(Lift { solutions, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{rendezvous, pair};
    use crate::model::{compile_counts, compile_timed, PlanObjective};

    fn goal() -> BTreeMap<String, String> {
        [("u1".to_string(), "d".to_string()), ("u2".to_string(), "d".to_string())].into()
    }

    #[test]
    fn rendezvous_projections_and_lift() {
        let cfg = SolverConfig::default();
        let mut timed = compile_timed(&rendezvous(), &pair(), 6).unwrap();
        timed.set_goal(&goal()).unwrap();
        timed.set_objective(PlanObjective::MinMakespan, &BTreeMap::new()).unwrap();
        let sol = timed.solve(&cfg).solution().cloned().unwrap();
        let mut plan = compile_untimed(&rendezvous(), &pair(), 6).unwrap();
        plan.set_goal(&goal()).unwrap();
        let p = project(&timed, &sol, &plan, &cfg).unwrap();
        let names: Vec<String> = plan.decode(&p).tasks.iter().map(|t| t.transition.clone()).collect();
        assert_eq!(names, ["t1", "t2", "t4"]);
        let mut counts = compile_counts(&rendezvous(), &pair(), 6).unwrap();
        counts.set_goal(&goal()).unwrap();
        let c = project(&plan, &p, &counts, &cfg).unwrap();
        let occ = counts.decode(&c).occupancy;
        assert_eq!(occ[0]["uh60"], [("a".to_string(), 1), ("b".to_string(), 1)].into());
        assert_eq!(occ[1]["uh60"], [("c".to_string(), 2)].into());
        assert_eq!(occ[2]["uh60"], [("d".to_string(), 2)].into());

        let lifted = lift(&plan, &p, &timed, 1000, &cfg).unwrap();
        assert!(lifted.solutions.iter().any(|s| s.values[..timed.tasks().len()] == sol.values[..timed.tasks().len()]));
        let from_counts = lift(&counts, &c, &timed, 1000, &cfg).unwrap();
        assert!(!from_counts.solutions.is_empty());
    }

    #[test]
    fn impossible_counts_lift_is_empty() {
        let cfg = SolverConfig::default();
        let counts = compile_counts(&rendezvous(), &pair(), 3).unwrap();
        let plan = compile_untimed(&rendezvous(), &pair(), 3).unwrap();
        // a counts "solution" claiming three t4 teams
        let mut values = vec![0.0; counts.system().vars().len()];
        if let Some(v) = counts.count_var(3, 0) {
            values[v] = 3.0;
        }
        let fake = Solution { values, objective: 0.0 };
        assert!(lift(&counts, &fake, &plan, 10, &cfg).unwrap().solutions.is_empty());
    }
}
