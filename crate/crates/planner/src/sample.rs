//! Random small instances for property and acceptance checks.

use std::collections::BTreeMap;

use netoperad_core::template::{TaskingTemplate, TokenSpec, Transition};
use netoperad_core::Color;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::lp::{ConstraintSystem, ObjectiveSense, Sense, VarKind};
use crate::model::{Agent, PlanObjective, PlanScenario};
use crate::oracle;

/// A tasking template, a fleet and a goal that some schedule within the horizon reaches.
#[derive(Debug, Clone)]
pub struct MicroInstance {
    pub template: TaskingTemplate,
    pub agents: Vec<Agent>,
    pub horizon: u32,
    pub goal: BTreeMap<String, String>,
}

impl MicroInstance {
    pub fn scenario(&self, objective: PlanObjective) -> PlanScenario {
        PlanScenario {
            version: 1,
            agents: self.agents.clone(),
            horizon: self.horizon,
            objective,
            goal: self.goal.clone(),
            fuel: None,
            risk: BTreeMap::new(),
            symmetry_breaking: false,
        }
    }
}

/// Random template with up to two colors, `max_places` places and four
/// transitions of one or two lanes lasting one or two ticks.
pub fn random_template<R: Rng>(rng: &mut R, max_places: usize) -> TaskingTemplate {
    let colors: Vec<Color> = (0..rng.gen_range(1..=2))
        .map(|i| Color::new(format!("c{i}")).expect("identifier"))
        .collect();
    let places: Vec<String> = (0..rng.gen_range(2..=max_places.max(2))).map(|i| format!("p{i}")).collect();
    let transitions = (0..rng.gen_range(1..=4))
        .map(|k| {
            let lanes: Vec<(String, String, String)> = (0..rng.gen_range(1..=2))
                .map(|_| {
                    (
                        colors.choose(rng).expect("colors").to_string(),
                        places.choose(rng).expect("places").clone(),
                        places.choose(rng).expect("places").clone(),
                    )
                })
                .collect();
            let tok = |color: &str, place: &str| TokenSpec {
                color: color.into(),
                place: place.into(),
                count: 1,
            };
            Transition {
                name: format!("t{k}"),
                inputs: lanes.iter().map(|(c, from, _)| tok(c, from)).collect(),
                outputs: lanes.iter().map(|(c, _, to)| tok(c, to)).collect(),
                duration: rng.gen_range(1..=2),
            }
        })
        .collect();
    TaskingTemplate::new(colors, places, transitions).expect("sampled template is valid")
}

/// Random instance whose goal is drawn from the configurations the oracle can reach,
/// avoiding the start configuration when possible.
pub fn random_micro_instance<R: Rng>(rng: &mut R, max_agents: usize, max_places: usize, max_horizon: u32) -> MicroInstance {
    let template = random_template(rng, max_places);
    let agents: Vec<Agent> = (0..rng.gen_range(1..=max_agents.max(1)))
        .map(|i| {
            let color = template.colors().choose(rng).expect("colors").clone();
            // mostly start where some lane of this color begins, so tasks are usable
            let sources: Vec<usize> = (0..template.transitions().len())
                .flat_map(|k| template.lanes(k).iter())
                .filter(|l| l.color == color)
                .map(|l| l.from)
                .collect();
            let place = match sources.choose(rng) {
                Some(&p) if rng.gen_bool(0.8) => p,
                _ => rng.gen_range(0..template.places().len()),
            };
            Agent::new(&format!("a{i}"), color.as_str(), &template.places()[place])
        })
        .collect();
    let horizon = rng.gen_range(1..=max_horizon.max(1));
    let start: Vec<usize> = agents
        .iter()
        .map(|a| template.place_index(&a.start_place).expect("sampled place"))
        .collect();
    let reachable = oracle::idle_configurations(&template, &agents, horizon).expect("sampled agents are valid");
    // staying put is always reachable, so prefer a goal that needs some task
    let moved: Vec<&Vec<usize>> = reachable.iter().filter(|c| **c != start).collect();
    let target = moved.choose(rng).copied().unwrap_or(&start);
    let goal = agents
        .iter()
        .zip(target)
        .map(|(a, &p)| (a.id.clone(), template.places()[p].clone()))
        .collect();
    MicroInstance {
        template,
        agents,
        horizon,
        goal,
    }
}

fn coefficient<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..3) {
        0 => f64::from(rng.gen_range(-5i32..=5)),
        1 => f64::from(rng.gen_range(-40i32..=40)) / 8.0,
        _ => rng.gen_range(-1e3..1e3),
    }
}

/// Random linear system: every variable kind, infinite bounds, empty rows and repeated terms.
pub fn random_system<R: Rng>(rng: &mut R) -> ConstraintSystem {
    let mut cs = ConstraintSystem::new();
    let n = rng.gen_range(0..=8);
    for i in 0..n {
        let (kind, lo, hi) = match rng.gen_range(0..4) {
            0 => (VarKind::Binary, 0.0, 1.0),
            1 => {
                let lo = f64::from(rng.gen_range(-3i32..=3));
                (VarKind::Integer, lo, lo + f64::from(rng.gen_range(0..=10)))
            }
            2 => (VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY),
            _ => {
                let lo = coefficient(rng);
                (VarKind::Continuous, lo, lo + rng.gen_range(0.0..50.0))
            }
        };
        cs.add_var(format!("x_{i}"), kind, lo, hi).expect("fresh name");
    }
    for r in 0..rng.gen_range(0..=6) {
        let terms: Vec<(usize, f64)> = if n == 0 {
            Vec::new()
        } else {
            (0..rng.gen_range(0..=n + 1)).map(|_| (rng.gen_range(0..n), coefficient(rng))).collect()
        };
        let sense = *[Sense::Le, Sense::Ge, Sense::Eq].choose(rng).expect("senses");
        cs.add_constraint(format!("r{r}"), terms, sense, coefficient(rng)).expect("fresh row");
    }
    let sense = if rng.gen_bool(0.5) {
        ObjectiveSense::Minimize
    } else {
        ObjectiveSense::Maximize
    };
    let terms = if n == 0 {
        Vec::new()
    } else {
        (0..rng.gen_range(0..=n)).map(|_| (rng.gen_range(0..n), coefficient(rng))).collect()
    };
    cs.set_objective(sense, terms).expect("known variables");
    cs
}
