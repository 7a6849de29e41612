//! Typed network operads.
//!
//! An operation `O(X_1, ..., X_k; Y)` is a network on the nodes of the output
//! word `Y`, together with a bijection (`slot_map`) telling which input slot and
//! position each output node came from. Edges are keyed by interaction and
//! endpoints and carry a value in the interaction's overlay monoid.
//!
//! Composition pushes the networks of the inner operations forward along the
//! slot inclusions and overlays them with the outer operation's own edges.
//! Because every operation here is a finite monoid-labeled graph, equality is
//! decided structurally on the canonical form.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperadError {
    #[error("operations are governed by different signatures")]
    SignatureMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected {expected} inner operations, found {found}")]
    SlotCountMismatch { expected: usize, found: usize },
    #[error("type mismatch at slot {slot}: expected {expected}, found {found}")]
    TypeMismatch {
        slot: usize,
        expected: NetType,
        found: NetType,
    },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("node index {index} out of range for {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },
    #[error("unknown interaction `{0}`")]
    UnknownInteraction(String),
    #[error("value {value} is not in the carrier of monoid {monoid:?}")]
    InvalidEdgeValue { value: u64, monoid: MonoidKind },
    #[error("invalid slot map: {0}")]
    InvalidSlotMap(String),
    #[error("invalid endpoints: {0}")]
    InvalidEndpoints(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
}

/// Identifiers double as LP name fragments, so they are kept to `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An atomic system type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Color(String);

impl Color {
    pub fn new(name: impl Into<String>) -> Result<Self, OperadError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(Color(name))
        } else {
            Err(OperadError::InvalidIdentifier(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Color {
    type Error = OperadError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Color::new(value)
    }
}

impl From<Color> for String {
    fn from(c: Color) -> String {
        c.0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered word of colors. The empty word is the unit type.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetType(pub Vec<Color>);

impl NetType {
    pub fn new(colors: Vec<Color>) -> Self {
        NetType(colors)
    }

    /// Parses a list of color names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, OperadError> {
        names
            .iter()
            .map(|n| Color::new(n.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map(NetType)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn colors(&self) -> &[Color] {
        &self.0
    }

    pub fn concat(&self, other: &NetType) -> NetType {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        NetType(v)
    }
}

impl fmt::Display for NetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// Overlay monoid on edge values. All carriers are subsets of the naturals with unit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MonoidKind {
    /// Bitwise OR on {0,1}; idempotent.
    #[default]
    BooleanOr,
    /// Addition on the naturals (multigraph overlay).
    NatSum,
    /// Maximum on the naturals (union of multisets).
    NatMax,
    /// Addition mod 2; overlaying an edge with itself cancels it.
    Mod2,
}

impl MonoidKind {
    pub const ALL: [MonoidKind; 4] = [
        MonoidKind::BooleanOr,
        MonoidKind::NatSum,
        MonoidKind::NatMax,
        MonoidKind::Mod2,
    ];

    pub fn unit(self) -> u64 {
        0
    }

    pub fn admits(self, value: u64) -> bool {
        match self {
            MonoidKind::BooleanOr | MonoidKind::Mod2 => value <= 1,
            MonoidKind::NatSum | MonoidKind::NatMax => true,
        }
    }

    pub fn combine(self, a: u64, b: u64) -> u64 {
        match self {
            MonoidKind::BooleanOr => a | b,
            MonoidKind::NatSum => a.saturating_add(b),
            MonoidKind::NatMax => a.max(b),
            MonoidKind::Mod2 => a ^ b,
        }
    }
}

/// An interaction is identified by its name and directionality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InteractionId {
    pub name: String,
    pub directed: bool,
}

impl InteractionId {
    pub fn directed(name: impl Into<String>) -> Self {
        InteractionId {
            name: name.into(),
            directed: true,
        }
    }

    pub fn undirected(name: impl Into<String>) -> Self {
        InteractionId {
            name: name.into(),
            directed: false,
        }
    }
}

impl fmt::Display for InteractionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.directed { "directed" } else { "undirected" };
        write!(f, "{}:{}", kind, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoints {
    Loop(usize),
    /// Stored with the smaller index first.
    Undirected(usize, usize),
    /// (source, target). For carrying, source is carried by target.
    Directed(usize, usize),
}

impl Endpoints {
    pub fn undirected(i: usize, j: usize) -> Result<Self, OperadError> {
        if i == j {
            return Err(OperadError::InvalidEndpoints(format!(
                "undirected edge needs distinct nodes, got {{{i},{j}}}"
            )));
        }
        Ok(Endpoints::Undirected(i.min(j), i.max(j)))
    }

    pub fn directed(source: usize, target: usize) -> Result<Self, OperadError> {
        if source == target {
            return Err(OperadError::InvalidEndpoints(format!(
                "directed edge ({source},{target}) is a loop"
            )));
        }
        Ok(Endpoints::Directed(source, target))
    }

    fn nodes(&self) -> (usize, usize) {
        match *self {
            Endpoints::Loop(i) => (i, i),
            Endpoints::Undirected(i, j) | Endpoints::Directed(i, j) => (i, j),
        }
    }

    fn map(self, f: impl Fn(usize) -> usize) -> Endpoints {
        match self {
            Endpoints::Loop(i) => Endpoints::Loop(f(i)),
            Endpoints::Undirected(i, j) => {
                let (a, b) = (f(i), f(j));
                Endpoints::Undirected(a.min(b), a.max(b))
            }
            Endpoints::Directed(i, j) => Endpoints::Directed(f(i), f(j)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub interaction: InteractionId,
    pub endpoints: Endpoints,
}

impl EdgeKey {
    pub fn new(interaction: InteractionId, endpoints: Endpoints) -> Self {
        EdgeKey {
            interaction,
            endpoints,
        }
    }
}

/// The interactions an operad knows about and the overlay monoid of each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    interactions: BTreeMap<InteractionId, MonoidKind>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: InteractionId, monoid: MonoidKind) -> Self {
        self.interactions.insert(id, monoid);
        self
    }

    pub fn insert(&mut self, id: InteractionId, monoid: MonoidKind) {
        self.interactions.insert(id, monoid);
    }

    pub fn monoid(&self, id: &InteractionId) -> Option<MonoidKind> {
        self.interactions.get(id).copied()
    }

    pub fn interactions(&self) -> impl Iterator<Item = (&InteractionId, MonoidKind)> {
        self.interactions.iter().map(|(k, v)| (k, *v))
    }
}

/// Where an output node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub slot: usize,
    pub pos: usize,
}

/// A network operation `inputs -> output`.
#[derive(Debug, Clone)]
pub struct NetOperation {
    signature: Arc<Signature>,
    inputs: Vec<NetType>,
    output: NetType,
    slot_map: Vec<SlotRef>,
    edges: BTreeMap<EdgeKey, u64>,
}

impl PartialEq for NetOperation {
    fn eq(&self, other: &Self) -> bool {
        same_signature(&self.signature, &other.signature)
            && self.inputs == other.inputs
            && self.output == other.output
            && self.slot_map == other.slot_map
            && self.edges == other.edges
    }
}

impl Eq for NetOperation {}

fn same_signature(a: &Arc<Signature>, b: &Arc<Signature>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

#[derive(Serialize)]
struct EdgeJson<'a> {
    interaction: &'a str,
    directed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r#loop: Option<usize>,
    value: u64,
}

#[derive(Serialize)]
struct OperationJson<'a> {
    inputs: &'a [NetType],
    output: &'a NetType,
    slot_map: Vec<[usize; 2]>,
    edges: Vec<EdgeJson<'a>>,
}

impl NetOperation {
    pub fn new(
        signature: Arc<Signature>,
        inputs: Vec<NetType>,
        output: NetType,
        slot_map: Vec<SlotRef>,
        edges: impl IntoIterator<Item = (EdgeKey, u64)>,
    ) -> Result<Self, OperadError> {
        let n = output.len();
        if slot_map.len() != n {
            return Err(OperadError::InvalidSlotMap(format!(
                "{} entries for {} output nodes",
                slot_map.len(),
                n
            )));
        }
        let total: usize = inputs.iter().map(NetType::len).sum();
        if total != n {
            return Err(OperadError::InvalidSlotMap(format!(
                "inputs hold {total} nodes but output has {n}"
            )));
        }
        let mut seen: Vec<Vec<bool>> = inputs.iter().map(|t| vec![false; t.len()]).collect();
        for (node, r) in slot_map.iter().enumerate() {
            let slot = inputs.get(r.slot).ok_or_else(|| {
                OperadError::InvalidSlotMap(format!("node {node} refers to missing slot {}", r.slot))
            })?;
            let color = slot.0.get(r.pos).ok_or_else(|| {
                OperadError::InvalidSlotMap(format!(
                    "node {node} refers to missing position {} of slot {}",
                    r.pos, r.slot
                ))
            })?;
            if color != &output.0[node] {
                return Err(OperadError::InvalidSlotMap(format!(
                    "node {node} has color {} but slot {} position {} has {}",
                    output.0[node], r.slot, r.pos, color
                )));
            }
            if std::mem::replace(&mut seen[r.slot][r.pos], true) {
                return Err(OperadError::InvalidSlotMap(format!(
                    "slot {} position {} used twice",
                    r.slot, r.pos
                )));
            }
        }
        let mut op = NetOperation {
            signature,
            inputs,
            output,
            slot_map,
            edges: BTreeMap::new(),
        };
        for (key, value) in edges {
            op.insert_edge(key, value)?;
        }
        Ok(op)
    }

    /// Single-slot operation with no edges.
    pub fn identity(signature: Arc<Signature>, t: NetType) -> Self {
        let slot_map = (0..t.len()).map(|pos| SlotRef { slot: 0, pos }).collect();
        NetOperation {
            signature,
            inputs: vec![t.clone()],
            output: t,
            slot_map,
            edges: BTreeMap::new(),
        }
    }

    /// The nullary operation on the empty word; unit for [`NetOperation::parallel`].
    pub fn unit(signature: Arc<Signature>) -> Self {
        NetOperation {
            signature,
            inputs: Vec::new(),
            output: NetType::default(),
            slot_map: Vec::new(),
            edges: BTreeMap::new(),
        }
    }

    fn validate_edge(&self, key: &EdgeKey, value: u64) -> Result<MonoidKind, OperadError> {
        let monoid = self
            .signature
            .monoid(&key.interaction)
            .ok_or_else(|| OperadError::UnknownInteraction(key.interaction.to_string()))?;
        if !monoid.admits(value) {
            return Err(OperadError::InvalidEdgeValue { value, monoid });
        }
        let n = self.output.len();
        let (i, j) = key.endpoints.nodes();
        for idx in [i, j] {
            if idx >= n {
                return Err(OperadError::NodeOutOfRange { index: idx, nodes: n });
            }
        }
        match key.endpoints {
            Endpoints::Undirected(a, b) if a >= b => {
                return Err(OperadError::InvalidEndpoints(format!(
                    "undirected endpoints must be distinct and ordered, got {{{a},{b}}}"
                )))
            }
            Endpoints::Directed(a, b) if a == b => {
                return Err(OperadError::InvalidEndpoints(format!(
                    "directed edge ({a},{b}) is a loop"
                )))
            }
            Endpoints::Undirected(..) | Endpoints::Directed(..) if key.interaction.directed != matches!(key.endpoints, Endpoints::Directed(..)) => {
                return Err(OperadError::InvalidEndpoints(format!(
                    "endpoints do not match the directionality of {}",
                    key.interaction
                )))
            }
            _ => {}
        }
        Ok(monoid)
    }

    /// Overlays `value` onto the edge, pruning the result if it is the unit.
    fn insert_edge(&mut self, key: EdgeKey, value: u64) -> Result<(), OperadError> {
        let monoid = self.validate_edge(&key, value)?;
        let current = self.edges.get(&key).copied().unwrap_or(0);
        let merged = monoid.combine(current, value);
        if merged == monoid.unit() {
            self.edges.remove(&key);
        } else {
            self.edges.insert(key, merged);
        }
        Ok(())
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn inputs(&self) -> &[NetType] {
        &self.inputs
    }

    pub fn output(&self) -> &NetType {
        &self.output
    }

    pub fn slot_map(&self) -> &[SlotRef] {
        &self.slot_map
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, u64> {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.output.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    fn check_signature(&self, other: &NetOperation) -> Result<(), OperadError> {
        if same_signature(&self.signature, &other.signature) {
            Ok(())
        } else {
            Err(OperadError::SignatureMismatch)
        }
    }

    /// Side-by-side juxtaposition: `other`'s nodes and slots come after `self`'s.
    pub fn parallel(&self, other: &NetOperation) -> Result<NetOperation, OperadError> {
        self.check_signature(other)?;
        let shift_nodes = self.output.len();
        let shift_slots = self.inputs.len();
        let mut inputs = self.inputs.clone();
        inputs.extend(other.inputs.iter().cloned());
        let mut slot_map = self.slot_map.clone();
        slot_map.extend(other.slot_map.iter().map(|r| SlotRef {
            slot: r.slot + shift_slots,
            pos: r.pos,
        }));
        let mut edges = self.edges.clone();
        for (k, v) in &other.edges {
            let key = EdgeKey::new(k.interaction.clone(), k.endpoints.map(|i| i + shift_nodes));
            edges.insert(key, *v);
        }
        Ok(NetOperation {
            signature: self.signature.clone(),
            inputs,
            output: self.output.concat(&other.output),
            slot_map,
            edges,
        })
    }

    /// Pointwise merge of two operations with the same shape.
    pub fn overlay(&self, other: &NetOperation) -> Result<NetOperation, OperadError> {
        self.check_signature(other)?;
        if self.inputs != other.inputs {
            return Err(OperadError::ShapeMismatch("input slots differ".into()));
        }
        if self.output != other.output {
            return Err(OperadError::ShapeMismatch(format!(
                "outputs differ: {} vs {}",
                self.output, other.output
            )));
        }
        if self.slot_map != other.slot_map {
            return Err(OperadError::ShapeMismatch("slot maps differ".into()));
        }
        let mut out = self.clone();
        for (k, v) in &other.edges {
            out.insert_edge(k.clone(), *v)?;
        }
        Ok(out)
    }

    /// Moves output node `i` to position `sigma[i]`.
    pub fn permute(&self, sigma: &[usize]) -> Result<NetOperation, OperadError> {
        let n = self.output.len();
        check_permutation(sigma, n)?;
        let mut output = vec![None; n];
        let mut slot_map = vec![SlotRef { slot: 0, pos: 0 }; n];
        for (i, &to) in sigma.iter().enumerate() {
            output[to] = Some(self.output.0[i].clone());
            slot_map[to] = self.slot_map[i];
        }
        let edges = self
            .edges
            .iter()
            .map(|(k, v)| {
                (
                    EdgeKey::new(k.interaction.clone(), k.endpoints.map(|i| sigma[i])),
                    *v,
                )
            })
            .collect();
        Ok(NetOperation {
            signature: self.signature.clone(),
            inputs: self.inputs.clone(),
            output: NetType(output.into_iter().map(|c| c.expect("bijection")).collect()),
            slot_map,
            edges,
        })
    }

    /// Moves input slot `k` to position `pi[k]`.
    pub fn permute_slots(&self, pi: &[usize]) -> Result<NetOperation, OperadError> {
        let k = self.inputs.len();
        check_permutation(pi, k)?;
        let mut inputs = vec![NetType::default(); k];
        for (old, &new) in pi.iter().enumerate() {
            inputs[new] = self.inputs[old].clone();
        }
        let slot_map = self
            .slot_map
            .iter()
            .map(|r| SlotRef {
                slot: pi[r.slot],
                pos: r.pos,
            })
            .collect();
        Ok(NetOperation {
            signature: self.signature.clone(),
            inputs,
            output: self.output.clone(),
            slot_map,
            edges: self.edges.clone(),
        })
    }

    /// Operadic substitution of `inner[i]` into slot `i`.
    pub fn compose(&self, inner: &[NetOperation]) -> Result<NetOperation, OperadError> {
        if inner.len() != self.inputs.len() {
            return Err(OperadError::SlotCountMismatch {
                expected: self.inputs.len(),
                found: inner.len(),
            });
        }
        for (slot, g) in inner.iter().enumerate() {
            self.check_signature(g)?;
            if g.output != self.inputs[slot] {
                return Err(OperadError::TypeMismatch {
                    slot,
                    expected: self.inputs[slot].clone(),
                    found: g.output.clone(),
                });
            }
        }
        // position-in-slot -> output node of self
        let mut inverse: Vec<Vec<usize>> = self.inputs.iter().map(|t| vec![0; t.len()]).collect();
        for (node, r) in self.slot_map.iter().enumerate() {
            inverse[r.slot][r.pos] = node;
        }
        let mut offsets = Vec::with_capacity(inner.len());
        let mut inputs = Vec::new();
        for g in inner {
            offsets.push(inputs.len());
            inputs.extend(g.inputs.iter().cloned());
        }
        let slot_map = self
            .slot_map
            .iter()
            .map(|r| {
                let g = &inner[r.slot];
                let gr = g.slot_map[r.pos];
                SlotRef {
                    slot: offsets[r.slot] + gr.slot,
                    pos: gr.pos,
                }
            })
            .collect();
        let mut out = NetOperation {
            signature: self.signature.clone(),
            inputs,
            output: self.output.clone(),
            slot_map,
            edges: self.edges.clone(),
        };
        for (slot, g) in inner.iter().enumerate() {
            let nodes = &inverse[slot];
            for (k, v) in &g.edges {
                let key = EdgeKey::new(k.interaction.clone(), k.endpoints.map(|p| nodes[p]));
                out.insert_edge(key, *v)?;
            }
        }
        Ok(out)
    }

    /// Deterministic representative. Edges are kept sorted by (interaction, endpoints)
    /// and unit values are never stored, so this is a normalized copy.
    pub fn canonical_form(&self) -> NetOperation {
        let mut out = self.clone();
        out.edges.retain(|k, v| {
            self.signature
                .monoid(&k.interaction)
                .map(|m| *v != m.unit())
                .unwrap_or(true)
        });
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let edges = self
            .edges
            .iter()
            .map(|(k, v)| {
                let mut e = EdgeJson {
                    interaction: &k.interaction.name,
                    directed: k.interaction.directed,
                    source: None,
                    target: None,
                    nodes: None,
                    r#loop: None,
                    value: *v,
                };
                match k.endpoints {
                    Endpoints::Loop(i) => e.r#loop = Some(i),
                    Endpoints::Undirected(i, j) => e.nodes = Some([i, j]),
                    Endpoints::Directed(i, j) => {
                        e.source = Some(i);
                        e.target = Some(j);
                    }
                }
                e
            })
            .collect();
        let json = OperationJson {
            inputs: &self.inputs,
            output: &self.output,
            slot_map: self.slot_map.iter().map(|r| [r.slot, r.pos]).collect(),
            edges,
        };
        serde_json::to_value(json).expect("operation serializes")
    }

    /// Byte-exact encoding of the canonical form.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.canonical_form().to_json_value()).expect("operation serializes")
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<(), OperadError> {
    if p.len() != n {
        return Err(OperadError::InvalidPermutation(format!(
            "expected {n} entries, got {}",
            p.len()
        )));
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return Err(OperadError::InvalidPermutation(format!(
                "{p:?} is not a bijection on 0..{n}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(monoid: MonoidKind) -> Arc<Signature> {
        Arc::new(
            Signature::new()
                .with(InteractionId::undirected("e"), monoid)
                .with(InteractionId::directed("carrying"), MonoidKind::BooleanOr),
        )
    }

    fn ty(names: &[&str]) -> NetType {
        NetType::from_names(names).unwrap()
    }

    fn with_edge(s: &Arc<Signature>, t: NetType, i: usize, j: usize, v: u64) -> NetOperation {
        let id = NetOperation::identity(s.clone(), t);
        let key = EdgeKey::new(InteractionId::undirected("e"), Endpoints::undirected(i, j).unwrap());
        NetOperation::new(s.clone(), id.inputs.clone(), id.output.clone(), id.slot_map.clone(), [(key, v)]).unwrap()
    }

    #[test]
    fn identity_has_no_edges() {
        let s = sig(MonoidKind::BooleanOr);
        let id = NetOperation::identity(s.clone(), ty(&["cut"]));
        assert_eq!(id.arity(), 1);
        assert_eq!(id.edge_count(), 0);
        let unit = NetOperation::identity(s, NetType::default());
        assert_eq!(unit.arity(), 1);
        assert_eq!(unit.node_count(), 0);
        assert_eq!(unit.edge_count(), 0);
    }

    #[test]
    fn parallel_of_two_single_edge_ops() {
        let s = sig(MonoidKind::BooleanOr);
        let f = with_edge(&s, ty(&["a", "b"]), 0, 1, 1);
        let g = with_edge(&s, ty(&["c", "d"]), 0, 1, 1);
        let p = f.parallel(&g).unwrap();
        assert_eq!(p.node_count(), 4);
        assert_eq!(p.edge_count(), 2);
        let shifted = EdgeKey::new(InteractionId::undirected("e"), Endpoints::Undirected(2, 3));
        assert_eq!(p.edges().get(&shifted), Some(&1));
        assert_eq!(p.arity(), 2);
    }

    #[test]
    fn parallel_unit_is_the_nullary_op() {
        let s = sig(MonoidKind::BooleanOr);
        let f = with_edge(&s, ty(&["a", "b"]), 0, 1, 1);
        assert_eq!(f.parallel(&NetOperation::unit(s.clone())).unwrap(), f);
        assert_eq!(NetOperation::unit(s.clone()).parallel(&f).unwrap(), f);
        // identity([]) contributes only an empty input slot
        let p = f.parallel(&NetOperation::identity(s, NetType::default())).unwrap();
        assert_eq!(p.output(), f.output());
        assert_eq!(p.edges(), f.edges());
        assert_eq!(p.slot_map(), f.slot_map());
        assert_eq!(p.inputs().len(), f.inputs().len() + 1);
        assert!(p.inputs().last().unwrap().is_empty());
    }

    #[test]
    fn overlay_uses_interaction_monoid() {
        for (monoid, a, b, expect) in [
            (MonoidKind::BooleanOr, 1, 1, Some(1)),
            (MonoidKind::NatSum, 2, 3, Some(5)),
            (MonoidKind::NatMax, 2, 3, Some(3)),
            (MonoidKind::Mod2, 1, 1, None),
        ] {
            let s = sig(monoid);
            let f = with_edge(&s, ty(&["a", "b"]), 0, 1, a);
            let g = with_edge(&s, ty(&["a", "b"]), 0, 1, b);
            let o = f.overlay(&g).unwrap();
            assert_eq!(o.edges().values().next().copied(), expect, "{monoid:?}");
        }
    }

    #[test]
    fn overlay_rejects_shape_mismatch() {
        let s = sig(MonoidKind::NatSum);
        let f = with_edge(&s, ty(&["a", "b"]), 0, 1, 1);
        let g = with_edge(&s, ty(&["a", "c"]), 0, 1, 1);
        assert!(matches!(f.overlay(&g), Err(OperadError::ShapeMismatch(_))));
        let other = sig(MonoidKind::BooleanOr);
        let h = with_edge(&other, ty(&["a", "b"]), 0, 1, 1);
        assert_eq!(f.overlay(&h), Err(OperadError::SignatureMismatch));
    }

    #[test]
    fn undirected_edge_symmetric_under_swap() {
        let s = sig(MonoidKind::BooleanOr);
        let f = with_edge(&s, ty(&["a", "a"]), 0, 1, 1);
        let p = f.permute(&[1, 0]).unwrap();
        assert_eq!(p.edges(), f.edges());
        assert_eq!(p.slot_map()[0], SlotRef { slot: 0, pos: 1 });
    }

    #[test]
    fn permute_identity_and_inverse() {
        let s = sig(MonoidKind::BooleanOr);
        let f = with_edge(&s, ty(&["a", "b", "c"]), 0, 2, 1);
        assert_eq!(f.permute(&[0, 1, 2]).unwrap(), f);
        let sigma = [2, 0, 1];
        let inv = [1, 2, 0];
        assert_eq!(f.permute(&sigma).unwrap().permute(&inv).unwrap(), f);
        assert!(matches!(f.permute(&[0, 0, 1]), Err(OperadError::InvalidPermutation(_))));
        assert!(matches!(f.permute(&[0, 1]), Err(OperadError::InvalidPermutation(_))));
    }

    #[test]
    fn compose_errors() {
        let s = sig(MonoidKind::BooleanOr);
        let f = NetOperation::identity(s.clone(), ty(&["a"]));
        assert_eq!(
            f.compose(&[]),
            Err(OperadError::SlotCountMismatch { expected: 1, found: 0 })
        );
        let g = NetOperation::identity(s, ty(&["b"]));
        match f.compose(&[g]) {
            Err(OperadError::TypeMismatch { slot, expected, found }) => {
                assert_eq!(slot, 0);
                assert_eq!(expected.to_string(), "[a]");
                assert_eq!(found.to_string(), "[b]");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_tree_flattens_the_same_both_ways() {
        // op(op1(x, y), op2(z)) built in two orders gives the same three-edge network.
        let s = sig(MonoidKind::BooleanOr);
        let a = ty(&["a"]);
        let ab = ty(&["a", "b"]);
        let id_a = NetOperation::identity(s.clone(), a.clone());
        // op1: [a],[b] -> [a,b] with edge {0,1}
        let op1 = {
            let key = EdgeKey::new(InteractionId::undirected("e"), Endpoints::Undirected(0, 1));
            NetOperation::new(s.clone(), vec![a.clone(), ty(&["b"])], ab.clone(),
                vec![SlotRef { slot: 0, pos: 0 }, SlotRef { slot: 1, pos: 0 }], [(key, 1)]).unwrap()
        };
        // op2: [a] -> [a], no edges
        let op2 = id_a.clone();
        // op: [a,b],[a] -> [a,b,a] with edges {1,2}, {0,2}
        let out = ty(&["a", "b", "a"]);
        let op = NetOperation::new(
            s.clone(),
            vec![ab.clone(), a.clone()],
            out,
            vec![SlotRef { slot: 0, pos: 0 }, SlotRef { slot: 0, pos: 1 }, SlotRef { slot: 1, pos: 0 }],
            [
                (EdgeKey::new(InteractionId::undirected("e"), Endpoints::Undirected(1, 2)), 1),
                (EdgeKey::new(InteractionId::undirected("e"), Endpoints::Undirected(0, 2)), 1),
            ],
        )
        .unwrap();
        let left = op.compose(&[op1.clone(), op2.clone()]).unwrap();
        // other bracketing: first plug identities, then op1/op2 one at a time
        let step = op.compose(&[NetOperation::identity(s.clone(), ab.clone()), op2]).unwrap();
        let right = step.compose(&[op1, id_a]).unwrap();
        assert_eq!(left.canonical_bytes(), right.canonical_bytes());
        assert_eq!(left.edge_count(), 3);
    }

    #[test]
    fn canonical_form_is_idempotent_and_prunes() {
        let s = sig(MonoidKind::Mod2);
        let f = with_edge(&s, ty(&["a", "b"]), 0, 1, 1);
        assert_eq!(f.canonical_form().canonical_form(), f.canonical_form());
        let id = NetOperation::identity(s.clone(), ty(&["a", "b"]));
        let zero = with_edge(&s, ty(&["a", "b"]), 0, 1, 0);
        assert_eq!(zero.edge_count(), 0);
        assert_eq!(f.overlay(&zero).unwrap().canonical_bytes(), f.canonical_bytes());
        assert_eq!(id.overlay(&zero).unwrap().canonical_bytes(), id.canonical_bytes());
    }

    #[test]
    fn edge_validation() {
        let s = sig(MonoidKind::BooleanOr);
        let t = ty(&["a", "b"]);
        let id = NetOperation::identity(s.clone(), t.clone());
        let bad_value = EdgeKey::new(InteractionId::undirected("e"), Endpoints::Undirected(0, 1));
        assert!(matches!(
            NetOperation::new(s.clone(), id.inputs.clone(), t.clone(), id.slot_map.clone(), [(bad_value, 2)]),
            Err(OperadError::InvalidEdgeValue { .. })
        ));
        let out_of_range = EdgeKey::new(InteractionId::directed("carrying"), Endpoints::Directed(0, 5));
        assert!(matches!(
            NetOperation::new(s.clone(), id.inputs.clone(), t.clone(), id.slot_map.clone(), [(out_of_range, 1)]),
            Err(OperadError::NodeOutOfRange { index: 5, nodes: 2 })
        ));
        let unknown = EdgeKey::new(InteractionId::directed("towing"), Endpoints::Directed(0, 1));
        assert!(matches!(
            NetOperation::new(s.clone(), id.inputs.clone(), t.clone(), id.slot_map.clone(), [(unknown, 1)]),
            Err(OperadError::UnknownInteraction(_))
        ));
        let wrong_dir = EdgeKey::new(InteractionId::undirected("e"), Endpoints::Directed(0, 1));
        assert!(matches!(
            NetOperation::new(s, id.inputs.clone(), t, id.slot_map.clone(), [(wrong_dir, 1)]),
            Err(OperadError::InvalidEndpoints(_))
        ));
        assert!(Endpoints::undirected(1, 1).is_err());
        assert_eq!(Endpoints::undirected(3, 1).unwrap(), Endpoints::Undirected(1, 3));
    }

    #[test]
    fn slot_map_must_be_a_color_preserving_bijection() {
        let s = sig(MonoidKind::BooleanOr);
        let a = ty(&["a"]);
        let dup = vec![SlotRef { slot: 0, pos: 0 }, SlotRef { slot: 0, pos: 0 }];
        assert!(NetOperation::new(s.clone(), vec![a.clone(), a.clone()], ty(&["a", "a"]), dup, []).is_err());
        let wrong_color = vec![SlotRef { slot: 0, pos: 0 }];
        assert!(NetOperation::new(s, vec![a], ty(&["b"]), wrong_color, []).is_err());
    }

    #[test]
    fn colors_are_identifiers() {
        assert!(Color::new("hc130").is_ok());
        assert!(Color::new("").is_err());
        assert!(Color::new("1x").is_err());
        assert!(Color::new("a-b").is_err());
    }
}
