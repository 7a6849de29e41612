//! Tasking models compiled to constraint programs.
//!
//! A [`TaskingTemplate`](netoperad_core::template::TaskingTemplate) (a colored
//! Petri net with durations) plus a fleet of agents compiles to a linear system
//! at one of three levels: timed schedules, untimed plans, and per-color counts.
//! Systems are solved exactly by a small branch and bound, exported to LP text
//! for external solvers, and related across levels by projection and lifting.

mod hierarchy;
pub mod lp;
mod model;
pub mod oracle;
pub mod sample;
pub mod solver;

use thiserror::Error;

pub use hierarchy::{lift, project, Lift};
pub use lp::{export_lp, parse_lp, ConstraintSystem, ObjectiveSense, Sense, VarKind};
pub use model::{
    bindings, compile_counts, compile_timed, compile_untimed, constraint_matrices, primitive_tasks, Agent,
    ConstraintMatrices, CountVar, CountedTask, FuelSpec, FuelUpdate, Level, Model, PlanObjective, PlanScenario,
    Refuel, Schedule, ScheduledTask, TaskBinding, TaskVar,
};
pub use solver::{Conflict, Enumeration, Solution, SolveOutcome, SolverConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Template(#[from] netoperad_core::template::TemplateError),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u64),
    #[error("agent `{agent}` has color `{color}`, which the template does not declare")]
    UnknownColor { agent: String, color: String },
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("agent `{0}` violates fuel_min <= fuel_init <= fuel_max")]
    InvalidAgent(String),
    #[error("the number of plan steps must be at least 1")]
    InvalidSteps,
    #[error("no valid burn rate for color `{color}` at place `{place}`")]
    MissingBurnRate { color: String, place: String },
    #[error("risk factor for `{0}` must lie in (0, 1]")]
    InvalidRisk(String),
    #[error("{feature} is not available at the {level:?} level")]
    UnsupportedAtLevel { feature: &'static str, level: Level },
    #[error("`{0}` is not a valid LP name")]
    InvalidName(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable `{name}` has invalid bounds [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("constraint `{0}` has a non-finite coefficient")]
    NonFinite(String),
    #[error("LP parse error at line {line}: {message}")]
    LpParse { line: usize, message: String },
    #[error("{0}")]
    LevelMismatch(String),
    #[error("projection is infeasible at the coarser level: {0}")]
    ProjectionInfeasible(String),
    #[error("search node limit reached")]
    Undecided,
}

impl From<serde_json::Error> for PlanError {
    fn from(e: serde_json::Error) -> Self {
        PlanError::Json(e.to_string())
    }
}
