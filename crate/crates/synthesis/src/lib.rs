//! Budget-constrained design search over a carrying operad.
//!
//! Candidates are carrying forests built only from edges the template allows,
//! so every design the search touches is syntactically valid before it is
//! scored. Scores come from the KPI algebra: expected detections, ties broken
//! by lower cost and then by canonical order.
//!
//! Three strategies share the same scoring and audit log: exhaustive
//! enumeration, simulated annealing and a genetic algorithm whose crossover
//! recomposes carried subtrees and whose mutation only touches algebra data.
//! All randomness comes from one 64-bit seed fed to ChaCha8.

mod enumerate;
mod forest;
mod search;

use netoperad_core::algebra::{AlgebraError, Catalog, FleetDesign, Scenario};
use netoperad_core::template::InducedOperad;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{Forest, Tree};
pub use search::{AuditEntry, DesignSummary, Explorer, SearchOutcome};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("asset `{asset}` has color `{color}` which the template does not declare")]
    UnknownColor { asset: String, color: String },
    #[error("asset `{0}` is not in the catalog")]
    UnknownAsset(String),
    #[error("base `{0}` is not in the scenario")]
    UnknownBase(String),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Exhaustive,
    Anneal,
    Genetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Spending cap. `None` takes the scenario's budget.
    pub budget: Option<f64>,
    pub max_nodes: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Annealing steps.
    pub iterations: usize,
    pub population: usize,
    pub generations: usize,
    pub initial_temperature: f64,
    /// Geometric cooling factor applied every step.
    pub cooling: f64,
    pub mutation_rate: f64,
    /// Worker threads for exhaustive scoring. Results do not depend on it.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: None,
            max_nodes: 8,
            algorithm: Algorithm::Exhaustive,
            seed: 0,
            iterations: 4000,
            population: 32,
            generations: 60,
            initial_temperature: 1.0,
            cooling: 0.998,
            mutation_rate: 0.2,
            threads: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |m: &str| Err(SynthesisError::InvalidConfig(m.to_string()));
        if let Some(b) = self.budget {
            if !(b >= 0.0 && b.is_finite()) {
                return bad("budget must be finite and non-negative");
            }
        }
        if self.max_nodes == 0 {
            return bad("max_nodes must be positive");
        }
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.threads == 0 {
            return bad("threads must be positive");
        }
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial_temperature must be finite and non-negative");
        }
        if !(self.cooling > 0.0 && self.cooling <= 1.0) {
            return bad("cooling must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Every valid design within the budget, once each, in a fixed order.
pub fn enumerate_designs(
    operad: &InducedOperad,
    catalog: &Catalog,
    scenario: &Scenario,
    cfg: &SearchConfig,
) -> Result<Vec<FleetDesign>, SynthesisError> {
    Explorer::new(operad, catalog, scenario, cfg.clone())?.enumerate_designs()
}

/// Runs the configured algorithm.
pub fn search(
    operad: &InducedOperad,
    catalog: &Catalog,
    scenario: &Scenario,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SynthesisError> {
    Explorer::new(operad, catalog, scenario, cfg.clone())?.search()
}
