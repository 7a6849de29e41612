//! Finite-probability semantics for decompositions.
//!
//! Each decomposition step is assigned a distribution over its children: given a
//! failure somewhere in the parent, the chance that it lies in each child.
//! Nesting multiplies probabilities along the path from the root to a leaf.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AlgebraError;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FailureDistribution {
    outcomes: BTreeMap<String, f64>,
}

impl<'de> Deserialize<'de> for FailureDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let outcomes = BTreeMap::<String, f64>::deserialize(d)?;
        FailureDistribution::new(outcomes).map_err(serde::de::Error::custom)
    }
}

impl FailureDistribution {
    pub fn new(outcomes: BTreeMap<String, f64>) -> Result<Self, AlgebraError> {
        if outcomes.is_empty() {
            return Err(AlgebraError::InvalidDistribution("no outcomes".into()));
        }
        if let Some((k, p)) = outcomes.iter().find(|(_, &p)| !(0.0..=1.0).contains(&p)) {
            return Err(AlgebraError::InvalidDistribution(format!("{k} has probability {p}")));
        }
        let total: f64 = outcomes.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(AlgebraError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(FailureDistribution { outcomes })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self, AlgebraError> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.outcomes.get(label).copied()
    }

    pub fn outcomes(&self) -> &BTreeMap<String, f64> {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.keys().map(String::as_str)
    }

    /// Replaces outcome `label` by the outcomes of `inner`, each scaled by the
    /// probability of `label`. Outcomes landing on the same leaf add up.
    pub fn substitute(&self, label: &str, inner: &FailureDistribution) -> Result<Self, AlgebraError> {
        let p = self
            .get(label)
            .ok_or_else(|| AlgebraError::InvalidDistribution(format!("no outcome `{label}`")))?;
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (k, &q) in &self.outcomes {
            if k != label {
                *out.entry(k.clone()).or_default() += q;
            }
        }
        for (k, &q) in &inner.outcomes {
            *out.entry(k.clone()).or_default() += p * q;
        }
        Ok(FailureDistribution { outcomes: out })
    }

    /// Largest absolute difference over the union of the outcome sets.
    pub fn max_abs_diff(&self, other: &FailureDistribution) -> f64 {
        let keys = self.outcomes.keys().chain(other.outcomes.keys());
        keys.map(|k| (self.get(k).unwrap_or(0.0) - other.get(k).unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// A nested decomposition: operation name plus, for each child label that is
/// itself decomposed, the subtree. Labels without a subtree are leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestTree {
    pub op: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<String, NestTree>,
}

impl NestTree {
    pub fn leaf_op(op: impl Into<String>) -> Self {
        NestTree {
            op: op.into(),
            children: BTreeMap::new(),
        }
    }

    pub fn with(mut self, label: impl Into<String>, child: NestTree) -> Self {
        self.children.insert(label.into(), child);
        self
    }

    pub fn depth(&self) -> usize {
        1 + self.children.values().map(NestTree::depth).max().unwrap_or(0)
    }
}

/// Operation name -> distribution over that operation's children.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FailureAlgebra {
    assignments: BTreeMap<String, FailureDistribution>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FailureJson {
    version: u64,
    assignments: BTreeMap<String, FailureDistribution>,
}

impl FailureAlgebra {
    pub fn new(assignments: BTreeMap<String, FailureDistribution>) -> Self {
        FailureAlgebra { assignments }
    }

    /// Reads `{"version": 1, "assignments": {op: {label: p}}}`.
    pub fn parse(bytes: &[u8]) -> Result<Self, AlgebraError> {
        let raw: FailureJson = serde_json::from_slice(bytes)?;
        if raw.version != 1 {
            return Err(AlgebraError::InvalidSpec(format!("unsupported version {}", raw.version)));
        }
        Ok(Self::new(raw.assignments))
    }

    pub fn assignment(&self, op: &str) -> Result<&FailureDistribution, AlgebraError> {
        self.assignments
            .get(op)
            .ok_or_else(|| AlgebraError::MissingAssignment(op.to_string()))
    }

    pub fn assignments(&self) -> &BTreeMap<String, FailureDistribution> {
        &self.assignments
    }

    /// Checks the labels of `op`'s distribution are exactly `children`.
    pub fn check_labels<S: AsRef<str>>(&self, op: &str, children: &[S]) -> Result<(), AlgebraError> {
        let d = self.assignment(op)?;
        let mut want: Vec<&str> = children.iter().map(AsRef::as_ref).collect();
        want.sort_unstable();
        let have: Vec<&str> = d.labels().collect();
        if have != want {
            return Err(AlgebraError::LabelMismatch {
                op: op.to_string(),
                expected: want.iter().map(|s| s.to_string()).collect(),
                found: have.iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(())
    }

    /// Product of probabilities along each root-to-leaf path.
    pub fn composite_distribution(&self, tree: &NestTree) -> Result<FailureDistribution, AlgebraError> {
        let d = self.assignment(&tree.op)?;
        if let Some(label) = tree.children.keys().find(|l| d.get(l).is_none()) {
            return Err(AlgebraError::LabelMismatch {
                op: tree.op.clone(),
                expected: d.labels().map(str::to_string).collect(),
                found: vec![label.clone()],
            });
        }
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (label, &p) in d.outcomes() {
            match tree.children.get(label) {
                Some(child) => {
                    for (leaf, q) in self.composite_distribution(child)?.outcomes {
                        *out.entry(leaf).or_default() += p * q;
                    }
                }
                None => *out.entry(label.clone()).or_default() += p,
            }
        }
        Ok(FailureDistribution { outcomes: out })
    }
}
