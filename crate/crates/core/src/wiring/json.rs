//! JSON form of a library of wiring diagrams and named nestings of them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Boundary, PortRef, Wire, WiringError, WiringOp};
use crate::algebra::{AlgebraError, FailureAlgebra, NestTree};

pub const WIRING_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireJson {
    name: String,
    ports: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationJson {
    name: String,
    outer: String,
    inner: Vec<String>,
    wires: Vec<WireJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryJson {
    version: u64,
    boundaries: Vec<Boundary>,
    operations: Vec<OperationJson>,
    #[serde(default)]
    composites: BTreeMap<String, NestTree>,
}

/// Named boundaries, named wiring diagrams over them, and named nest trees.
#[derive(Debug, Clone, PartialEq)]
pub struct WiringLibrary {
    boundaries: BTreeMap<String, Boundary>,
    operations: BTreeMap<String, WiringOp>,
    composites: BTreeMap<String, NestTree>,
}

impl WiringLibrary {
    pub fn parse(bytes: &[u8]) -> Result<Self, WiringError> {
        let raw: LibraryJson = serde_json::from_slice(bytes)?;
        if raw.version != WIRING_VERSION {
            return Err(WiringError::UnsupportedVersion(raw.version));
        }
        let mut boundaries = BTreeMap::new();
        for b in raw.boundaries {
            b.validate()?;
            if boundaries.contains_key(&b.name) {
                return Err(WiringError::Duplicate {
                    kind: "boundary",
                    name: b.name,
                });
            }
            boundaries.insert(b.name.clone(), b);
        }
        let lookup = |name: &str| {
            boundaries.get(name).cloned().ok_or_else(|| WiringError::Unknown {
                kind: "boundary",
                name: name.to_string(),
            })
        };
        let mut operations = BTreeMap::new();
        for o in raw.operations {
            let mut names = BTreeSet::new();
            for n in &o.inner {
                if n == &o.outer || !names.insert(n.as_str()) {
                    return Err(WiringError::Duplicate {
                        kind: "boundary in operation",
                        name: format!("{}:{n}", o.name),
                    });
                }
            }
            let outer = lookup(&o.outer)?;
            let inner: Vec<Boundary> = o.inner.iter().map(|n| lookup(n)).collect::<Result<_, _>>()?;
            let wires = o
                .wires
                .into_iter()
                .map(|w| {
                    let ports = w
                        .ports
                        .iter()
                        .map(|s| parse_ref(s, &o.outer, &o.inner))
                        .collect::<Result<_, _>>()?;
                    Ok(Wire { name: w.name, ports })
                })
                .collect::<Result<Vec<_>, WiringError>>()?;
            let op = WiringOp::new(inner, outer, wires)?;
            if operations.insert(o.name.clone(), op).is_some() {
                return Err(WiringError::Duplicate {
                    kind: "operation",
                    name: o.name,
                });
            }
        }
        let lib = WiringLibrary {
            boundaries,
            operations,
            composites: raw.composites,
        };
        for tree in lib.composites.values() {
            lib.flatten(tree)?;
        }
        Ok(lib)
    }

    pub fn parse_str(s: &str) -> Result<Self, WiringError> {
        Self::parse(s.as_bytes())
    }

    pub fn boundary(&self, name: &str) -> Option<&Boundary> {
        self.boundaries.get(name)
    }

    pub fn operation(&self, name: &str) -> Result<&WiringOp, WiringError> {
        self.operations.get(name).ok_or_else(|| WiringError::Unknown {
            kind: "operation",
            name: name.to_string(),
        })
    }

    pub fn operations(&self) -> &BTreeMap<String, WiringOp> {
        &self.operations
    }

    pub fn composite(&self, name: &str) -> Result<&NestTree, WiringError> {
        self.composites.get(name).ok_or_else(|| WiringError::Unknown {
            kind: "composite",
            name: name.to_string(),
        })
    }

    pub fn composites(&self) -> &BTreeMap<String, NestTree> {
        &self.composites
    }

    /// Nests the tree's operations; inner boundaries without a subtree stay as they are.
    pub fn flatten(&self, tree: &NestTree) -> Result<WiringOp, WiringError> {
        let op = self.operation(&tree.op)?;
        if let Some(label) = tree.children.keys().find(|l| !op.inner().iter().any(|b| &b.name == *l)) {
            return Err(WiringError::Unknown {
                kind: "inner boundary",
                name: format!("{}:{label}", tree.op),
            });
        }
        let gs = op
            .inner()
            .iter()
            .map(|b| match tree.children.get(&b.name) {
                Some(child) => self.flatten(child),
                None => Ok(WiringOp::identity(b)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        op.nest(&gs)
    }

    /// Every assigned operation's outcomes must be exactly its inner boundary names.
    pub fn check_failure_labels(&self, algebra: &FailureAlgebra) -> Result<(), AlgebraError> {
        for name in algebra.assignments().keys() {
            let op = self
                .operations
                .get(name)
                .ok_or_else(|| AlgebraError::InvalidSpec(format!("unknown operation `{name}`")))?;
            let labels: Vec<&str> = op.inner().iter().map(|b| b.name.as_str()).collect();
            algebra.check_labels(name, &labels)?;
        }
        Ok(())
    }
}

fn parse_ref(s: &str, outer: &str, inner: &[String]) -> Result<PortRef, WiringError> {
    let bad = || WiringError::Unknown {
        kind: "port reference",
        name: s.to_string(),
    };
    let (b, p) = s.split_once('.').ok_or_else(bad)?;
    if b == outer {
        return Ok(PortRef::Outer(p.to_string()));
    }
    let i = inner.iter().position(|n| n == b).ok_or_else(bad)?;
    Ok(PortRef::Inner(i, p.to_string()))
}
