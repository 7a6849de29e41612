//! Brute-force reference semantics for timed tasking.
//!
//! Explores every joint state tick by tick: each agent is either idle at a
//! place or in transit toward one. Independent of the constraint compiler, so
//! it serves as an oracle for the solver on small instances.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use netoperad_core::template::{Lane, TaskingTemplate};

use crate::model::Agent;
use crate::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Status {
    At(usize),
    Busy { to: usize, until: u32 },
}

fn starts(t: &TaskingTemplate, agents: &[Agent]) -> Result<Vec<Status>, PlanError> {
    agents
        .iter()
        .map(|a| {
            if !t.colors().iter().any(|c| c.as_str() == a.color) {
                return Err(PlanError::UnknownColor {
                    agent: a.id.clone(),
                    color: a.color.clone(),
                });
            }
            t.place_index(&a.start_place)
                .map(Status::At)
                .ok_or_else(|| PlanError::UnknownPlace(a.start_place.clone()))
        })
        .collect()
}

/// Teams of free agents for the lanes of one transition, with agent `first` in some lane.
fn teams(lanes: &[Lane], agents: &[Agent], state: &[Status], free: &[bool], first: usize) -> Vec<Vec<usize>> {
    fn go(lanes: &[Lane], agents: &[Agent], state: &[Status], ok: &dyn Fn(usize) -> bool, team: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let l = team.len();
        if l == lanes.len() {
            out.push(team.clone());
            return;
        }
        for a in 0..state.len() {
            let fits = agents[a].color == lanes[l].color.as_str() && state[a] == Status::At(lanes[l].from);
            if fits && ok(a) && !team.contains(&a) {
                team.push(a);
                go(lanes, agents, state, ok, team, out);
                team.pop();
            }
        }
    }
    let ok = |a: usize| a == first || free[a];
    let mut out = Vec::new();
    go(lanes, agents, state, &ok, &mut Vec::new(), &mut out);
    out.retain(|team| team.contains(&first));
    out
}

/// Every way of starting a set of agent-disjoint tasks at `time`. Agents are
/// decided in index order: each idle agent waits or leads a task with later agents.
fn successors(t: &TaskingTemplate, agents: &[Agent], state: &[Status], time: u32, horizon: u32, out: &mut HashSet<Vec<Status>>) {
    fn go(
        t: &TaskingTemplate,
        agents: &[Agent],
        cur: &mut Vec<Status>,
        free: &mut Vec<bool>,
        time: u32,
        horizon: u32,
        out: &mut HashSet<Vec<Status>>,
    ) {
        let Some(i) = (0..cur.len()).find(|&j| free[j]) else {
            out.insert(cur.clone());
            return;
        };
        free[i] = false;
        go(t, agents, cur, free, time, horizon, out);
        for (k, tr) in t.transitions().iter().enumerate() {
            if time + tr.duration > horizon {
                continue;
            }
            let lanes = t.lanes(k);
            for team in teams(lanes, agents, cur, free, i) {
                let saved = cur.clone();
                for (lane, &a) in lanes.iter().zip(&team) {
                    cur[a] = Status::Busy {
                        to: lane.to,
                        until: time + tr.duration,
                    };
                    free[a] = false;
                }
                go(t, agents, cur, free, time, horizon, out);
                for &a in &team {
                    free[a] = a != i;
                }
                *cur = saved;
            }
        }
        free[i] = true;
    }

    let mut cur = state.to_vec();
    let mut free: Vec<bool> = state.iter().map(|s| matches!(s, Status::At(_))).collect();
    go(t, agents, &mut cur, &mut free, time, horizon, out);
}

/// Joint states reachable at each time `0..=horizon`, arrivals applied.
fn frontiers(t: &TaskingTemplate, agents: &[Agent], horizon: u32) -> Result<Vec<HashSet<Vec<Status>>>, PlanError> {
    let mut frontier: HashSet<Vec<Status>> = [starts(t, agents)?].into();
    let mut out = Vec::with_capacity(horizon as usize + 1);
    for time in 0..=horizon {
        let arrived: HashSet<Vec<Status>> = frontier
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|x| match x {
                        Status::Busy { to, until } if until == time => Status::At(to),
                        other => other,
                    })
                    .collect()
            })
            .collect();
        let mut next = HashSet::new();
        if time < horizon {
            for s in &arrived {
                successors(t, agents, s, time, horizon, &mut next);
            }
        }
        out.push(arrived);
        frontier = next;
    }
    Ok(out)
}

fn idle(s: &[Status]) -> Option<Vec<usize>> {
    s.iter()
        .map(|x| match x {
            Status::At(p) => Some(*p),
            Status::Busy { .. } => None,
        })
        .collect()
}

/// Place indices of every all-idle configuration reachable at the horizon.
pub fn idle_configurations(t: &TaskingTemplate, agents: &[Agent], horizon: u32) -> Result<BTreeSet<Vec<usize>>, PlanError> {
    let f = frontiers(t, agents, horizon)?;
    Ok(f.last().expect("horizon + 1 frontiers").iter().filter_map(|s| idle(s)).collect())
}

/// Earliest time by which every task has ended with each goal agent at its goal place,
/// or `None` when no schedule within the horizon does it.
pub fn min_makespan(
    t: &TaskingTemplate,
    agents: &[Agent],
    goal: &BTreeMap<String, String>,
    horizon: u32,
) -> Result<Option<u32>, PlanError> {
    let mut want = Vec::with_capacity(goal.len());
    for (id, place) in goal {
        let a = agents.iter().position(|a| &a.id == id).ok_or_else(|| PlanError::UnknownAgent(id.clone()))?;
        let p = t.place_index(place).ok_or_else(|| PlanError::UnknownPlace(place.clone()))?;
        want.push((a, p));
    }
    let f = frontiers(t, agents, horizon)?;
    Ok(f.iter().position(|states| {
        states
            .iter()
            .filter_map(|s| idle(s))
            .any(|places| want.iter().all(|&(a, p)| places[a] == p))
    })
    .map(|time| time as u32))
}
