//! Algebras: semantics attached to operations.
//!
//! An algebra gives, for each operation, a function from instances of its input
//! types to an instance of its output type. A homomorphism between two algebras
//! is a family of maps that commutes with every such function; [`check_homomorphism`]
//! tests that square on concrete probes.

mod failure;
mod kpi;

use std::fmt::Debug;

use thiserror::Error;

use crate::operad::{NetOperation, OperadError};
use crate::template::TemplateError;

pub use failure::{FailureAlgebra, FailureDistribution, NestTree, NORMALIZATION_TOLERANCE};
pub use kpi::{
    kpi_evaluate, kpi_evaluate_instance, timings, AssetSpec, Base, Catalog, CostAlgebra, Endurance,
    FleetAlgebra, FleetDesign, FleetInstance, KpiScore, NodeTiming, Scenario, CARRYING,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("asset `{asset}` has no sweep width for target kind `{kind}`")]
    MissingSweepWidth { asset: String, kind: String },
    #[error("node {node} has color `{expected}` but its asset has color `{found}`")]
    ColorMismatch {
        node: usize,
        expected: String,
        found: String,
    },
    #[error("carrying relation is not a forest: {0}")]
    NotAForest(String),
    #[error("node {node} is carried but based elsewhere than its carrier")]
    BaseMismatch { node: usize },
    #[error("unknown base `{0}`")]
    UnknownBase(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("labels of `{op}` are {found:?}, expected {expected:?}")]
    LabelMismatch {
        op: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("no distribution assigned to operation `{0}`")]
    MissingAssignment(String),
    #[error("expected {expected} inputs, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("input instance {slot} does not have the slot's type")]
    InstanceType { slot: usize },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Operad(#[from] OperadError),
}

impl From<serde_json::Error> for AlgebraError {
    fn from(e: serde_json::Error) -> Self {
        AlgebraError::Json(e.to_string())
    }
}

pub trait OperadAlgebra {
    type Element: Clone + Debug;

    fn act(&self, op: &NetOperation, inputs: &[Self::Element]) -> Result<Self::Element, AlgebraError>;
}

/// Distance used to compare the two sides of a naturality square.
pub trait Discrepancy {
    fn discrepancy(&self, other: &Self) -> f64;
}

impl Discrepancy for f64 {
    fn discrepancy(&self, other: &Self) -> f64 {
        if self == other {
            0.0
        } else {
            (self - other).abs()
        }
    }
}

impl Discrepancy for FleetInstance {
    fn discrepancy(&self, other: &Self) -> f64 {
        if self == other {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub const HOMOMORPHISM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub probe: usize,
    pub passed: bool,
    /// Image under the component map of the source algebra's action.
    pub act_then_map: String,
    /// Target algebra's action on the mapped inputs.
    pub map_then_act: String,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HomomorphismReport {
    pub outcomes: Vec<ProbeOutcome>,
}

impl HomomorphismReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ProbeOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

/// Compares `component(src.act(op, xs))` with `dst.act(op, component(xs))` on each probe.
///
/// Probes the source algebra cannot evaluate are reported as failures.
pub fn check_homomorphism<A, B, F>(
    src: &A,
    dst: &B,
    component: F,
    probes: &[(NetOperation, Vec<A::Element>)],
) -> HomomorphismReport
where
    A: OperadAlgebra,
    B: OperadAlgebra,
    B::Element: Discrepancy,
    F: Fn(&A::Element) -> B::Element,
{
    let outcomes = probes
        .iter()
        .enumerate()
        .map(|(probe, (op, xs))| {
            let left = src.act(op, xs).map(|y| component(&y));
            let mapped: Vec<B::Element> = xs.iter().map(&component).collect();
            let right = dst.act(op, &mapped);
            match (left, right) {
                (Ok(l), Ok(r)) => {
                    let d = l.discrepancy(&r);
                    ProbeOutcome {
                        probe,
                        passed: d <= HOMOMORPHISM_TOLERANCE,
                        act_then_map: format!("{l:?}"),
                        map_then_act: format!("{r:?}"),
                        discrepancy: d,
                    }
                }
                (l, r) => ProbeOutcome {
                    probe,
                    passed: false,
                    act_then_map: format!("{l:?}"),
                    map_then_act: format!("{r:?}"),
                    discrepancy: f64::INFINITY,
                },
            }
        })
        .collect();
    HomomorphismReport { outcomes }
}
