//! Compilation of tasking templates into constraint systems.
//!
//! Variable names:
//! - `m_<place><t>_<agent>`: agent at place at time (or step) `t`;
//! - `s_<transition><t>d<d>_<agents>`: timed task started at `t` with duration `d`,
//!   agents listed in lane order; plan tasks drop the `d<d>` part;
//! - `n_<place><j>_<color>` and `c_<transition><j>`: counts-level occupancy and task counts;
//! - `f_<agent>_<t>`: fuel; `makespan`: completion time; `u_<transition><j>`: counts-level activity flags.
//!
//! When a place or transition name ends in a digit, `_` separates it from the time index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use netoperad_core::template::TaskingTemplate;
use serde::{Deserialize, Serialize};

use crate::lp::{ConstraintSystem, ObjectiveSense, Sense, VarKind};
use crate::solver::{self, Solution, SolveOutcome, SolverConfig};
use crate::PlanError;

/// Sparse row terms as `(column, coefficient)`.
type Terms = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub id: String,
    pub color: String,
    pub start_place: String,
    #[serde(default)]
    pub fuel_init: f64,
    #[serde(default)]
    pub fuel_max: f64,
    #[serde(default)]
    pub fuel_min: f64,
}

impl Agent {
    pub fn new(id: &str, color: &str, start_place: &str) -> Self {
        Agent {
            id: id.into(),
            color: color.into(),
            start_place: start_place.into(),
            fuel_init: 0.0,
            fuel_max: 0.0,
            fuel_min: 0.0,
        }
    }

    pub fn with_fuel(mut self, init: f64, max: f64, min: f64) -> Self {
        self.fuel_init = init;
        self.fuel_max = max;
        self.fuel_min = min;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Timed,
    Plan,
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanObjective {
    MinMakespan,
    MaxTotalRiskSurvival,
    #[default]
    Feasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FuelUpdate {
    /// Fuel falls by the burn and is reset to capacity when a refuel completes.
    #[default]
    Clamp,
    /// Literal `f' = max(f - burn, f_max)`, kept for comparison.
    LiteralMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refuel {
    pub transition: String,
    /// Colors refuelled by the task; every participant when absent.
    #[serde(default)]
    pub receivers: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FuelSpec {
    /// Burn per tick by color and place; an agent in transit burns at its destination's rate.
    pub burn: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub refuel: Vec<Refuel>,
    #[serde(default)]
    pub update: FuelUpdate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanScenario {
    pub version: u64,
    pub agents: Vec<Agent>,
    pub horizon: u32,
    #[serde(default)]
    pub objective: PlanObjective,
    /// Agent id -> place it must occupy at the horizon.
    #[serde(default)]
    pub goal: BTreeMap<String, String>,
    #[serde(default)]
    pub fuel: Option<FuelSpec>,
    /// Per-tick survival factor by place; missing places are safe.
    #[serde(default)]
    pub risk: BTreeMap<String, f64>,
    #[serde(default)]
    pub symmetry_breaking: bool,
}

impl PlanScenario {
    pub fn parse(bytes: &[u8]) -> Result<Self, PlanError> {
        let s: PlanScenario = serde_json::from_slice(bytes)?;
        if s.version != 1 {
            return Err(PlanError::UnsupportedVersion(s.version));
        }
        Ok(s)
    }

    /// Compiles the scenario at `level`. Fuel applies to the timed level only.
    pub fn build(&self, template: &TaskingTemplate, level: Level) -> Result<Model, PlanError> {
        let mut model = match level {
            Level::Timed => compile_timed(template, &self.agents, self.horizon)?,
            Level::Plan => compile_untimed(template, &self.agents, self.horizon)?,
            Level::Counts => compile_counts(template, &self.agents, self.horizon)?,
        };
        model.set_goal(&self.goal)?;
        if level == Level::Timed {
            if let Some(fuel) = &self.fuel {
                model.add_fuel_semantics(fuel)?;
            }
        }
        if self.symmetry_breaking {
            model.add_symmetry_breaking()?;
        }
        model.set_objective(self.objective, &self.risk)?;
        Ok(model)
    }
}

/// A task variable: transition `transition` started at `start` by `agents` (one per lane).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskVar {
    pub var: usize,
    pub transition: usize,
    pub start: u32,
    pub duration: u32,
    pub agents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountVar {
    pub var: usize,
    pub transition: usize,
    pub step: u32,
}

/// A primitive task row: a transition with agents bound to its lanes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TaskBinding {
    pub transition: usize,
    pub agents: Vec<usize>,
}

/// Type-update and source matrices over `(agent, place)` columns, agent-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintMatrices {
    pub rows: Vec<TaskBinding>,
    pub columns: Vec<(usize, usize)>,
    pub m: Vec<Vec<i64>>,
    pub ms: Vec<Vec<i64>>,
}

fn validate_agents(t: &TaskingTemplate, agents: &[Agent]) -> Result<(), PlanError> {
    let mut seen = BTreeSet::new();
    for a in agents {
        if !netoperad_core::operad::is_identifier(&a.id) {
            return Err(PlanError::InvalidName(a.id.clone()));
        }
        if !seen.insert(a.id.as_str()) {
            return Err(PlanError::DuplicateName(a.id.clone()));
        }
        if !t.colors().iter().any(|c| c.as_str() == a.color) {
            return Err(PlanError::UnknownColor {
                agent: a.id.clone(),
                color: a.color.clone(),
            });
        }
        if t.place_index(&a.start_place).is_none() {
            return Err(PlanError::UnknownPlace(a.start_place.clone()));
        }
        let finite = a.fuel_init.is_finite() && a.fuel_max.is_finite() && a.fuel_min.is_finite();
        if !finite || a.fuel_min > a.fuel_init || a.fuel_init > a.fuel_max {
            return Err(PlanError::InvalidAgent(a.id.clone()));
        }
    }
    Ok(())
}

/// Agent bindings of transition `k` in lexicographic order. Interchangeable lanes
/// (same color and route) take agents in increasing order so each team appears once.
pub fn bindings(t: &TaskingTemplate, k: usize, agents: &[Agent]) -> Vec<Vec<usize>> {
    let lanes = t.lanes(k);
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(lanes.len());
    fn go(
        lanes: &[netoperad_core::template::Lane],
        agents: &[Agent],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let l = current.len();
        if l == lanes.len() {
            out.push(current.clone());
            return;
        }
        let lane = &lanes[l];
        for (a, agent) in agents.iter().enumerate() {
            if agent.color != lane.color.as_str() || current.contains(&a) {
                continue;
            }
            let ordered = (0..l).all(|i| {
                let same = lanes[i].color == lane.color && lanes[i].from == lane.from && lanes[i].to == lane.to;
                !same || current[i] < a
            });
            if ordered {
                current.push(a);
                go(lanes, agents, current, out);
                current.pop();
            }
        }
    }
    go(lanes, agents, &mut current, &mut out);
    out
}

/// Primitive tasks ordered by team size, then team, then transition.
pub fn primitive_tasks(t: &TaskingTemplate, agents: &[Agent]) -> Vec<TaskBinding> {
    let mut rows: Vec<TaskBinding> = (0..t.transitions().len())
        .flat_map(|k| {
            bindings(t, k, agents)
                .into_iter()
                .map(move |agents| TaskBinding { transition: k, agents })
        })
        .collect();
    rows.sort_by_key(|r| {
        let mut team = r.agents.clone();
        team.sort_unstable();
        (team.len(), team, r.transition)
    });
    rows
}

pub fn constraint_matrices(t: &TaskingTemplate, agents: &[Agent]) -> Result<ConstraintMatrices, PlanError> {
    validate_agents(t, agents)?;
    let np = t.places().len();
    let columns: Vec<(usize, usize)> = (0..agents.len()).flat_map(|a| (0..np).map(move |p| (a, p))).collect();
    let rows = primitive_tasks(t, agents);
    let mut m = vec![vec![0i64; columns.len()]; rows.len()];
    let mut ms = vec![vec![0i64; columns.len()]; rows.len()];
    for (r, row) in rows.iter().enumerate() {
        for (lane, &a) in t.lanes(row.transition).iter().zip(&row.agents) {
            m[r][a * np + lane.from] -= 1;
            m[r][a * np + lane.to] += 1;
            ms[r][a * np + lane.from] += 1;
        }
    }
    Ok(ConstraintMatrices { rows, columns, m, ms })
}

fn join_time(name: &str, t: u32) -> String {
    if name.ends_with(|c: char| c.is_ascii_digit()) {
        format!("{name}_{t}")
    } else {
        format!("{name}{t}")
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    level: Level,
    template: TaskingTemplate,
    agents: Vec<Agent>,
    horizon: u32,
    system: ConstraintSystem,
    tasks: Vec<TaskVar>,
    counts: Vec<CountVar>,
    /// Occupancy variables, indexed by [`Model::loc_index`].
    loc: Vec<usize>,
    /// Colors in template order (counts level).
    colors: Vec<String>,
    fuel: Vec<Vec<usize>>,
    makespan: Option<usize>,
    soft: Vec<(String, Vec<usize>)>,
    goal: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledTask {
    pub transition: String,
    pub start: u32,
    pub duration: u32,
    pub agents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountedTask {
    pub transition: String,
    pub step: u32,
    pub count: u32,
}

/// Decoded solution: tasks, per-time locations (None while in transit) and fuel traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub level: Level,
    pub objective: f64,
    pub makespan: Option<f64>,
    pub tasks: Vec<ScheduledTask>,
    pub counts: Vec<CountedTask>,
    /// Agent id -> location at each time (individual levels).
    pub timeline: BTreeMap<String, Vec<Option<String>>>,
    /// Per step: color -> place -> count (counts level).
    pub occupancy: Vec<BTreeMap<String, BTreeMap<String, u32>>>,
    pub fuel: BTreeMap<String, Vec<f64>>,
}

pub fn compile_timed(t: &TaskingTemplate, agents: &[Agent], horizon: u32) -> Result<Model, PlanError> {
    compile_individual(t, agents, horizon, Level::Timed)
}

pub fn compile_untimed(t: &TaskingTemplate, agents: &[Agent], steps: u32) -> Result<Model, PlanError> {
    if steps == 0 {
        return Err(PlanError::InvalidSteps);
    }
    compile_individual(t, agents, steps, Level::Plan)
}

fn compile_individual(t: &TaskingTemplate, agents: &[Agent], horizon: u32, level: Level) -> Result<Model, PlanError> {
    validate_agents(t, agents)?;
    let timed = level == Level::Timed;
    let np = t.places().len();
    let na = agents.len();
    let mut cs = ConstraintSystem::new();
    let mut tasks = Vec::new();
    for start in 0..horizon {
        for (k, tr) in t.transitions().iter().enumerate() {
            let d = if timed { tr.duration } else { 1 };
            if start + d > horizon {
                continue;
            }
            for team in bindings(t, k, agents) {
                let ids: Vec<&str> = team.iter().map(|&a| agents[a].id.as_str()).collect();
                let name = if timed {
                    format!("s_{}d{d}_{}", join_time(&tr.name, start), ids.join("_"))
                } else {
                    format!("s_{}_{}", join_time(&tr.name, start), ids.join("_"))
                };
                let var = cs.add_var(name, VarKind::Binary, 0.0, 1.0)?;
                tasks.push(TaskVar {
                    var,
                    transition: k,
                    start,
                    duration: d,
                    agents: team,
                });
            }
        }
    }
    let mut loc = Vec::with_capacity((horizon as usize + 1) * na * np);
    for time in 0..=horizon {
        for a in agents {
            for p in t.places() {
                loc.push(cs.add_var(format!("m_{}_{}", join_time(p, time), a.id), VarKind::Binary, 0.0, 1.0)?);
            }
        }
    }
    let x = |time: u32, a: usize, p: usize| loc[(time as usize * na + a) * np + p];

    let mut dep: HashMap<(u32, usize, usize), Vec<usize>> = HashMap::new();
    let mut arr: HashMap<(u32, usize, usize), Vec<usize>> = HashMap::new();
    let mut busy: HashMap<(u32, usize), Vec<usize>> = HashMap::new();
    for task in &tasks {
        for (lane, &a) in t.lanes(task.transition).iter().zip(&task.agents) {
            dep.entry((task.start, a, lane.from)).or_default().push(task.var);
            arr.entry((task.start + task.duration, a, lane.to)).or_default().push(task.var);
            for mid in task.start + 1..task.start + task.duration {
                busy.entry((mid, a)).or_default().push(task.var);
            }
        }
    }
    let none = Vec::new();
    for (a, agent) in agents.iter().enumerate() {
        let start = t.place_index(&agent.start_place).expect("validated");
        for (p, pname) in t.places().iter().enumerate() {
            let rhs = if p == start { 1.0 } else { 0.0 };
            cs.add_constraint(format!("init_{}_{pname}", agent.id), vec![(x(0, a, p), 1.0)], Sense::Eq, rhs)?;
        }
    }
    for time in 0..horizon {
        for (a, agent) in agents.iter().enumerate() {
            for (p, pname) in t.places().iter().enumerate() {
                let leaving = dep.get(&(time, a, p)).unwrap_or(&none);
                let arriving = arr.get(&(time + 1, a, p)).unwrap_or(&none);
                let mut terms = vec![(x(time + 1, a, p), 1.0), (x(time, a, p), -1.0)];
                terms.extend(leaving.iter().map(|&v| (v, 1.0)));
                terms.extend(arriving.iter().map(|&v| (v, -1.0)));
                cs.add_constraint(format!("flow_{}_{pname}_{time}", agent.id), terms, Sense::Eq, 0.0)?;
                if !leaving.is_empty() {
                    let mut terms = vec![(x(time, a, p), 1.0)];
                    terms.extend(leaving.iter().map(|&v| (v, -1.0)));
                    cs.add_constraint(format!("src_{}_{pname}_{time}", agent.id), terms, Sense::Ge, 0.0)?;
                }
            }
        }
    }
    for time in 0..=horizon {
        for (a, agent) in agents.iter().enumerate() {
            let mut terms: Vec<(usize, f64)> = (0..np).map(|p| (x(time, a, p), 1.0)).collect();
            terms.extend(busy.get(&(time, a)).unwrap_or(&none).iter().map(|&v| (v, 1.0)));
            cs.add_constraint(format!("one_{}_{time}", agent.id), terms, Sense::Eq, 1.0)?;
        }
    }
    Ok(Model {
        level,
        template: t.clone(),
        agents: agents.to_vec(),
        horizon,
        system: cs,
        tasks,
        counts: Vec::new(),
        loc,
        colors: Vec::new(),
        fuel: Vec::new(),
        makespan: None,
        soft: Vec::new(),
        goal: BTreeMap::new(),
    })
}

/// Counts level: agents reduced to the number of each color at each place.
pub fn compile_counts(t: &TaskingTemplate, agents: &[Agent], steps: u32) -> Result<Model, PlanError> {
    if steps == 0 {
        return Err(PlanError::InvalidSteps);
    }
    validate_agents(t, agents)?;
    let colors: Vec<String> = t.colors().iter().map(|c| c.to_string()).collect();
    let np = t.places().len();
    let nc = colors.len();
    let fleet: Vec<u32> = colors
        .iter()
        .map(|c| agents.iter().filter(|a| &a.color == c).count() as u32)
        .collect();
    let mut cs = ConstraintSystem::new();
    let mut counts = Vec::new();
    for step in 0..steps {
        for (k, tr) in t.transitions().iter().enumerate() {
            let demand = |ci: usize| -> u32 {
                t.lanes(k).iter().filter(|l| l.color.as_str() == colors[ci]).count() as u32
            };
            let ub = (0..nc).filter(|&ci| demand(ci) > 0).map(|ci| fleet[ci] / demand(ci)).min().unwrap_or(0);
            if ub == 0 {
                continue;
            }
            let var = cs.add_var(format!("c_{}", join_time(&tr.name, step)), VarKind::Integer, 0.0, ub as f64)?;
            counts.push(CountVar { var, transition: k, step });
        }
    }
    let mut loc = Vec::new();
    for step in 0..=steps {
        for (ci, c) in colors.iter().enumerate() {
            for p in t.places() {
                let name = format!("n_{}_{c}", join_time(p, step));
                loc.push(cs.add_var(name, VarKind::Integer, 0.0, fleet[ci] as f64)?);
            }
        }
    }
    let n = |step: u32, c: usize, p: usize| loc[(step as usize * nc + c) * np + p];
    for (ci, c) in colors.iter().enumerate() {
        for (p, pname) in t.places().iter().enumerate() {
            let start = agents.iter().filter(|a| &a.color == c && a.start_place == *pname).count();
            cs.add_constraint(format!("init_{c}_{pname}"), vec![(n(0, ci, p), 1.0)], Sense::Eq, start as f64)?;
        }
    }
    for step in 0..steps {
        for (ci, c) in colors.iter().enumerate() {
            for (p, pname) in t.places().iter().enumerate() {
                let mut flow = vec![(n(step + 1, ci, p), 1.0), (n(step, ci, p), -1.0)];
                let mut src = vec![(n(step, ci, p), 1.0)];
                for cv in counts.iter().filter(|cv| cv.step == step) {
                    let lanes = t.lanes(cv.transition).iter().filter(|l| l.color.as_str() == c.as_str());
                    let (mut out, mut inn) = (0.0, 0.0);
                    for l in lanes {
                        if l.from == p {
                            inn += 1.0;
                        }
                        if l.to == p {
                            out += 1.0;
                        }
                    }
                    flow.push((cv.var, inn - out));
                    if inn > 0.0 {
                        src.push((cv.var, -inn));
                    }
                }
                cs.add_constraint(format!("flow_{c}_{pname}_{step}"), flow, Sense::Eq, 0.0)?;
                if src.len() > 1 {
                    cs.add_constraint(format!("src_{c}_{pname}_{step}"), src, Sense::Ge, 0.0)?;
                }
            }
        }
    }
    for step in 0..=steps {
        for (ci, c) in colors.iter().enumerate() {
            let terms = (0..np).map(|p| (n(step, ci, p), 1.0)).collect();
            cs.add_constraint(format!("one_{c}_{step}"), terms, Sense::Eq, fleet[ci] as f64)?;
        }
    }
    Ok(Model {
        level: Level::Counts,
        template: t.clone(),
        agents: agents.to_vec(),
        horizon: steps,
        system: cs,
        tasks: Vec::new(),
        counts,
        loc,
        colors,
        fuel: Vec::new(),
        makespan: None,
        soft: Vec::new(),
        goal: BTreeMap::new(),
    })
}

impl Model {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn template(&self) -> &TaskingTemplate {
        &self.template
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn system(&self) -> &ConstraintSystem {
        &self.system
    }

    /// Direct access for callers adding scripted rows.
    pub fn system_mut(&mut self) -> &mut ConstraintSystem {
        &mut self.system
    }

    pub fn tasks(&self) -> &[TaskVar] {
        &self.tasks
    }

    pub fn counts(&self) -> &[CountVar] {
        &self.counts
    }

    pub fn goal(&self) -> &BTreeMap<String, String> {
        &self.goal
    }

    pub fn soft_groups(&self) -> &[(String, Vec<usize>)] {
        &self.soft
    }

    pub fn makespan_var(&self) -> Option<usize> {
        self.makespan
    }

    pub fn fuel_vars(&self) -> &[Vec<usize>] {
        &self.fuel
    }

    fn np(&self) -> usize {
        self.template.places().len()
    }

    /// Occupancy variable of agent (or color, at the counts level) `who` at `place` and time `t`.
    pub fn loc_var(&self, t: u32, who: usize, place: usize) -> usize {
        let width = if self.level == Level::Counts { self.colors.len() } else { self.agents.len() };
        self.loc[(t as usize * width + who) * self.np() + place]
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn task_var(&self, transition: usize, start: u32, agents: &[usize]) -> Option<usize> {
        self.tasks
            .iter()
            .find(|tv| tv.transition == transition && tv.start == start && tv.agents == agents)
            .map(|tv| tv.var)
    }

    pub fn count_var(&self, transition: usize, step: u32) -> Option<usize> {
        self.counts
            .iter()
            .find(|c| c.transition == transition && c.step == step)
            .map(|c| c.var)
    }

    /// Requires each listed agent to be at its place at the horizon.
    pub fn set_goal(&mut self, goal: &BTreeMap<String, String>) -> Result<(), PlanError> {
        for (id, place) in goal {
            let a = self.agent_index(id).ok_or_else(|| PlanError::UnknownAgent(id.clone()))?;
            let p = self.template.place_index(place).ok_or_else(|| PlanError::UnknownPlace(place.clone()))?;
            if self.level != Level::Counts {
                let v = self.loc_var(self.horizon, a, p);
                let r = self.system.add_constraint(format!("goal_{id}"), vec![(v, 1.0)], Sense::Eq, 1.0)?;
                self.soft.push((format!("goal_{id}"), vec![r]));
            }
        }
        if self.level == Level::Counts {
            let mut need: BTreeMap<(usize, usize), u32> = BTreeMap::new();
            for (id, place) in goal {
                let a = &self.agents[self.agent_index(id).expect("checked")];
                let c = self.colors.iter().position(|c| c == &a.color).expect("validated");
                *need.entry((c, self.template.place_index(place).expect("checked"))).or_default() += 1;
            }
            for ((c, p), k) in need {
                let name = format!("goal_{}_{}", self.colors[c], self.template.places()[p]);
                let v = self.loc_var(self.horizon, c, p);
                let r = self.system.add_constraint(name.clone(), vec![(v, 1.0)], Sense::Ge, k as f64)?;
                self.soft.push((name, vec![r]));
            }
        }
        self.goal = goal.clone();
        Ok(())
    }

    /// Sets the objective. Makespan adds a `makespan` variable bounded below by every task's end.
    pub fn set_objective(&mut self, objective: PlanObjective, risk: &BTreeMap<String, f64>) -> Result<(), PlanError> {
        match objective {
            PlanObjective::Feasibility => self.system.set_objective(ObjectiveSense::Minimize, vec![]),
            PlanObjective::MinMakespan => {
                let c = match self.makespan {
                    Some(c) => c,
                    None => {
                        let c = self.system.add_var("makespan", VarKind::Continuous, 0.0, self.horizon as f64)?;
                        self.add_span_rows(c)?;
                        self.makespan = Some(c);
                        c
                    }
                };
                self.system.set_objective(ObjectiveSense::Minimize, vec![(c, 1.0)])
            }
            PlanObjective::MaxTotalRiskSurvival => {
                if self.level != Level::Timed {
                    return Err(PlanError::UnsupportedAtLevel {
                        feature: "risk objective",
                        level: self.level,
                    });
                }
                let terms = self.per_tick_terms(|p| {
                    let name = &self.template.places()[p];
                    let f = risk.get(name).copied().unwrap_or(1.0);
                    if !(f > 0.0 && f <= 1.0) {
                        return Err(PlanError::InvalidRisk(name.clone()));
                    }
                    Ok(f.ln())
                })?;
                let all = terms.into_iter().flatten().flatten().collect();
                self.system.set_objective(ObjectiveSense::Maximize, all)
            }
        }
    }

    fn add_span_rows(&mut self, c: usize) -> Result<(), PlanError> {
        if self.level == Level::Counts {
            let counts = self.counts.clone();
            for cv in counts {
                let tr = &self.template.transitions()[cv.transition].name;
                let ub = self.system.vars()[cv.var].hi;
                let u = self.system.add_var(format!("u_{}", join_time(tr, cv.step)), VarKind::Binary, 0.0, 1.0)?;
                let base = join_time(tr, cv.step);
                self.system.add_constraint(format!("link_{base}"), vec![(cv.var, 1.0), (u, -ub)], Sense::Le, 0.0)?;
                self.system.add_constraint(
                    format!("span_{base}"),
                    vec![(c, 1.0), (u, -((cv.step + 1) as f64))],
                    Sense::Ge,
                    0.0,
                )?;
            }
            return Ok(());
        }
        let tasks = self.tasks.clone();
        for tv in tasks {
            let name = format!("span_{}", &self.system.vars()[tv.var].name[2..]);
            let end = (tv.start + tv.duration) as f64;
            self.system.add_constraint(name, vec![(c, 1.0), (tv.var, -end)], Sense::Ge, 0.0)?;
        }
        Ok(())
    }

    /// Per agent and tick `t < horizon`: terms charging `rate(place)` while at a place
    /// and `rate(destination)` while in transit.
    fn per_tick_terms(
        &self,
        rate: impl Fn(usize) -> Result<f64, PlanError>,
    ) -> Result<Vec<Vec<Terms>>, PlanError> {
        let np = self.np();
        let rates: Vec<f64> = (0..np).map(&rate).collect::<Result<_, _>>()?;
        let mut out = vec![vec![Vec::new(); self.horizon as usize]; self.agents.len()];
        for (a, per_agent) in out.iter_mut().enumerate() {
            for (t, terms) in per_agent.iter_mut().enumerate() {
                for (p, &r) in rates.iter().enumerate() {
                    terms.push((self.loc_var(t as u32, a, p), r));
                }
            }
        }
        for tv in &self.tasks {
            for (lane, &a) in self.template.lanes(tv.transition).iter().zip(&tv.agents) {
                for mid in tv.start + 1..tv.start + tv.duration {
                    out[a][mid as usize].push((tv.var, rates[lane.to]));
                }
            }
        }
        Ok(out)
    }

    /// Adds per-agent fuel variables and their update rows (timed level only).
    pub fn add_fuel_semantics(&mut self, spec: &FuelSpec) -> Result<(), PlanError> {
        if self.level != Level::Timed {
            return Err(PlanError::UnsupportedAtLevel {
                feature: "fuel semantics",
                level: self.level,
            });
        }
        if !self.fuel.is_empty() {
            return Err(PlanError::DuplicateName("fuel semantics".into()));
        }
        for r in &spec.refuel {
            if !self.template.transitions().iter().any(|t| t.name == r.transition) {
                return Err(PlanError::UnknownTransition(r.transition.clone()));
            }
        }
        let places = self.template.places().to_vec();
        let mut per_agent_terms = Vec::new();
        for agent in &self.agents {
            let table = spec.burn.get(&agent.color);
            let rate = |p: usize| -> Result<f64, PlanError> {
                let r = table.and_then(|t| t.get(&places[p])).copied().ok_or_else(|| PlanError::MissingBurnRate {
                    color: agent.color.clone(),
                    place: places[p].clone(),
                })?;
                if r.is_finite() && r >= 0.0 {
                    Ok(r)
                } else {
                    Err(PlanError::MissingBurnRate {
                        color: agent.color.clone(),
                        place: places[p].clone(),
                    })
                }
            };
            let max_rate = (0..places.len()).map(&rate).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
            let a = self.agent_index(&agent.id).expect("own agent");
            let terms = self.per_tick_terms(rate)?.swap_remove(a);
            per_agent_terms.push((terms, max_rate));
        }
        // refuel completions per (agent, completion time)
        let mut refills: HashMap<(usize, u32), Vec<usize>> = HashMap::new();
        for tv in &self.tasks {
            let tr = &self.template.transitions()[tv.transition];
            let Some(r) = spec.refuel.iter().find(|r| r.transition == tr.name) else { continue };
            for &a in &tv.agents {
                let receives = r.receivers.as_ref().is_none_or(|cs| cs.contains(&self.agents[a].color));
                if receives {
                    refills.entry((a, tv.start + tv.duration)).or_default().push(tv.var);
                }
            }
        }
        let horizon = self.horizon;
        for (a, (ticks, max_rate)) in per_agent_terms.into_iter().enumerate() {
            let agent = self.agents[a].clone();
            let f: Vec<usize> = (0..=horizon)
                .map(|t| {
                    self.system
                        .add_var(format!("f_{}_{t}", agent.id), VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
                })
                .collect::<Result<_, _>>()?;
            self.system.add_constraint(format!("fuel_init_{}", agent.id), vec![(f[0], 1.0)], Sense::Eq, agent.fuel_init)?;
            let big_m = agent.fuel_max - agent.fuel_init + (horizon as f64 + 1.0) * max_rate;
            let mut mins = Vec::new();
            for (t, burn) in ticks.iter().enumerate() {
                let (now, next) = (f[t], f[t + 1]);
                let refill = refills.get(&(a, t as u32 + 1)).cloned().unwrap_or_default();
                let mut base = vec![(next, 1.0), (now, -1.0)];
                base.extend(burn.iter().copied());
                let id = &agent.id;
                self.system.add_constraint(format!("fuel_inc_{id}_{t}"), base.clone(), Sense::Ge, 0.0)?;
                match spec.update {
                    FuelUpdate::Clamp => {
                        let mut dec = base.clone();
                        dec.extend(refill.iter().map(|&v| (v, -big_m)));
                        self.system.add_constraint(format!("fuel_dec_{id}_{t}"), dec, Sense::Le, 0.0)?;
                        if !refill.is_empty() {
                            let mut fill = vec![(next, 1.0)];
                            fill.extend(refill.iter().map(|&v| (v, -agent.fuel_max)));
                            self.system.add_constraint(format!("fuel_fill_{id}_{t}"), fill, Sense::Ge, 0.0)?;
                        }
                        self.system.add_constraint(format!("fuel_cap_{id}_{t}"), vec![(next, 1.0)], Sense::Le, agent.fuel_max)?;
                    }
                    FuelUpdate::LiteralMax => {
                        self.system.add_constraint(format!("fuel_lit_{id}_{t}"), vec![(next, 1.0)], Sense::Ge, agent.fuel_max)?;
                    }
                }
                mins.push(self.system.add_constraint(
                    format!("fuel_min_{id}_{t}"),
                    vec![(next, 1.0)],
                    Sense::Ge,
                    agent.fuel_min,
                )?);
            }
            self.soft.push((format!("fuel_min_{}", agent.id), mins));
            self.fuel.push(f);
        }
        Ok(())
    }

    /// Orders interchangeable agents (same color, start, fuel and goal) by task count.
    pub fn add_symmetry_breaking(&mut self) -> Result<(), PlanError> {
        if self.level == Level::Counts {
            return Ok(());
        }
        let key = |a: &Agent| {
            (
                a.color.clone(),
                a.start_place.clone(),
                a.fuel_init.to_bits(),
                a.fuel_max.to_bits(),
                a.fuel_min.to_bits(),
                self.goal.get(&a.id).cloned(),
            )
        };
        for i in 0..self.agents.len() {
            let Some(j) = (i + 1..self.agents.len()).find(|&j| key(&self.agents[j]) == key(&self.agents[i])) else {
                continue;
            };
            let mut terms = Vec::new();
            for tv in &self.tasks {
                let w = tv.agents.contains(&i) as i32 - tv.agents.contains(&j) as i32;
                if w != 0 {
                    terms.push((tv.var, w as f64));
                }
            }
            let name = format!("sym_{}_{}", self.agents[i].id, self.agents[j].id);
            self.system.add_constraint(name, terms, Sense::Ge, 0.0)?;
        }
        Ok(())
    }

    pub fn solve(&self, cfg: &SolverConfig) -> SolveOutcome {
        solver::solve(&self.system, &self.soft, cfg)
    }

    /// Fixes the given variables and solves for the rest.
    pub fn complete(&self, fixed: &[(usize, f64)], cfg: &SolverConfig) -> SolveOutcome {
        let mut cs = self.system.clone();
        for &(v, x) in fixed {
            cs.fix(v, x);
        }
        solver::solve(&cs, &self.soft, cfg)
    }

    /// Decision variables of this level (task or count variables).
    pub fn decision_vars(&self) -> Vec<usize> {
        match self.level {
            Level::Counts => self.counts.iter().map(|c| c.var).collect(),
            _ => self.tasks.iter().map(|t| t.var).collect(),
        }
    }

    pub fn decode(&self, sol: &Solution) -> Schedule {
        let v = &sol.values;
        let on = |var: usize| v[var] > 0.5;
        let trs = self.template.transitions();
        let tasks: Vec<ScheduledTask> = self
            .tasks
            .iter()
            .filter(|tv| on(tv.var))
            .map(|tv| ScheduledTask {
                transition: trs[tv.transition].name.clone(),
                start: tv.start,
                duration: tv.duration,
                agents: tv.agents.iter().map(|&a| self.agents[a].id.clone()).collect(),
            })
            .collect();
        let counts = self
            .counts
            .iter()
            .filter(|c| v[c.var] > 0.5)
            .map(|c| CountedTask {
                transition: trs[c.transition].name.clone(),
                step: c.step,
                count: v[c.var].round() as u32,
            })
            .collect();
        let places = self.template.places();
        let mut timeline = BTreeMap::new();
        let mut occupancy = Vec::new();
        if self.level == Level::Counts {
            for step in 0..=self.horizon {
                let mut by_color = BTreeMap::new();
                for (ci, c) in self.colors.iter().enumerate() {
                    let row: BTreeMap<String, u32> = (0..places.len())
                        .filter_map(|p| {
                            let k = v[self.loc_var(step, ci, p)].round() as u32;
                            (k > 0).then(|| (places[p].clone(), k))
                        })
                        .collect();
                    if !row.is_empty() {
                        by_color.insert(c.clone(), row);
                    }
                }
                occupancy.push(by_color);
            }
        } else {
            for (a, agent) in self.agents.iter().enumerate() {
                let line = (0..=self.horizon)
                    .map(|t| (0..places.len()).find(|&p| on(self.loc_var(t, a, p))).map(|p| places[p].clone()))
                    .collect();
                timeline.insert(agent.id.clone(), line);
            }
        }
        let fuel = self
            .fuel
            .iter()
            .zip(&self.agents)
            .map(|(fs, a)| (a.id.clone(), fs.iter().map(|&f| v[f]).collect()))
            .collect();
        Schedule {
            level: self.level,
            objective: sol.objective,
            makespan: self.makespan.map(|c| v[c]),
            tasks,
            counts,
            timeline,
            occupancy,
            fuel,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const RENDEZVOUS: &str = r#"{
        "version": 1,
        "colors": ["uh60", "hc130"],
        "places": ["a", "b", "c", "d"],
        "transitions": [
            {"name": "t1", "inputs": [{"color": "uh60", "place": "a"}], "outputs": [{"color": "uh60", "place": "c"}], "duration": 2},
            {"name": "t2", "inputs": [{"color": "uh60", "place": "b"}], "outputs": [{"color": "uh60", "place": "c"}], "duration": 1},
            {"name": "t3", "inputs": [{"color": "uh60", "place": "c"}, {"color": "hc130", "place": "c"}],
                           "outputs": [{"color": "uh60", "place": "c"}, {"color": "hc130", "place": "c"}], "duration": 1},
            {"name": "t4", "inputs": [{"color": "uh60", "place": "c", "count": 2}], "outputs": [{"color": "uh60", "place": "d", "count": 2}], "duration": 2}
        ]
    }"#;

    pub(crate) fn rendezvous() -> TaskingTemplate {
        TaskingTemplate::parse_str(RENDEZVOUS).unwrap()
    }

    pub(crate) fn pair() -> Vec<Agent> {
        vec![Agent::new("u1", "uh60", "a"), Agent::new("u2", "uh60", "b")]
    }

    #[test]
    fn single_uh60_matrices() {
        let m = constraint_matrices(&rendezvous(), &[Agent::new("u1", "uh60", "a")]).unwrap();
        assert_eq!(m.m, vec![vec![-1, 0, 1, 0], vec![0, -1, 1, 0]]);
        assert_eq!(m.ms, vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]]);
    }

    #[test]
    fn makespan_four() {
        let goal = [("u1".to_string(), "d".to_string()), ("u2".to_string(), "d".to_string())].into();
        let mut model = compile_timed(&rendezvous(), &pair(), 6).unwrap();
        model.set_goal(&goal).unwrap();
        model.set_objective(PlanObjective::MinMakespan, &BTreeMap::new()).unwrap();
        let sol = model.solve(&SolverConfig::default());
        let s = model.decode(sol.solution().expect("feasible"));
        assert_eq!(s.makespan, Some(4.0));
        assert_eq!(s.timeline["u1"][4], Some("d".to_string()));
    }

    #[test]
    fn zero_horizon_and_names() {
        let model = compile_timed(&rendezvous(), &pair(), 0).unwrap();
        assert!(model.tasks().is_empty());
        let sol = model.solve(&SolverConfig::default());
        assert!(sol.solution().is_some());
        let model = compile_timed(&rendezvous(), &pair(), 2).unwrap();
        assert!(model.system().var("m_a0_u1").is_some());
        assert!(model.system().var("s_t1_0d2_u1").is_some());
        assert!(compile_untimed(&rendezvous(), &pair(), 0).is_err());
    }

    #[test]
    fn unknown_color_and_missing_burn() {
        let err = compile_timed(&rendezvous(), &[Agent::new("x", "ch47", "a")], 2).unwrap_err();
        assert!(matches!(err, PlanError::UnknownColor { .. }));
        let mut model = compile_timed(&rendezvous(), &pair(), 2).unwrap();
        let err = model.add_fuel_semantics(&FuelSpec::default()).unwrap_err();
        assert!(matches!(err, PlanError::MissingBurnRate { .. }));
    }
}
