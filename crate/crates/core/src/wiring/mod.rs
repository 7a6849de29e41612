//! Wiring diagrams: boundaries with typed ports and wires between them.
//!
//! A [`WiringOp`] places inner boundaries inside an outer one and partitions all
//! their ports into wires. Composition is nesting: the outer boundary of an inner
//! diagram is glued onto an inner boundary of the outer diagram and wires that
//! meet at the glued ports merge.

mod json;
mod requirements;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use json::{WiringLibrary, WIRING_VERSION};
pub use requirements::{
    chained_soundness_check, joint_validity, joint_validity_with, project_outer, soundness_check,
    Counterexample, Grid, Interval, Requirement, RequirementsBundle, SoundnessReport,
    StatePredicate, TableRelation, ValidSet,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WiringError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("port {0} is not on any wire")]
    UnwiredPort(String),
    #[error("port {0} is on more than one wire")]
    MultiplyWired(String),
    #[error("wire `{wire}` joins value spaces `{first}` and `{second}`")]
    SpaceMismatch {
        wire: String,
        first: String,
        second: String,
    },
    #[error("boundary mismatch at slot {slot}: port `{port}` {detail}")]
    BoundaryMismatch {
        slot: usize,
        port: String,
        detail: String,
    },
    #[error("expected {expected} inner diagrams, found {found}")]
    SlotCountMismatch { expected: usize, found: usize },
    #[error("grid has no samples for wire `{0}`")]
    MissingGridVariable(String),
    #[error("interval [{lo}, {hi}] is not well ordered")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("requirement `{requirement}` refers to unknown port `{port}` of `{boundary}`")]
    UnknownRequirementPort {
        requirement: String,
        boundary: String,
        port: String,
    },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u64),
}

impl From<serde_json::Error> for WiringError {
    fn from(e: serde_json::Error) -> Self {
        WiringError::Json(e.to_string())
    }
}

fn check_identifier(name: &str) -> Result<(), WiringError> {
    if crate::operad::is_identifier(name) {
        Ok(())
    } else {
        Err(WiringError::InvalidIdentifier(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    #[default]
    Bidirectional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub name: String,
    pub space: String,
    #[serde(default)]
    pub direction: Direction,
}

impl Port {
    pub fn new(name: &str, space: &str, direction: Direction) -> Self {
        Port {
            name: name.to_string(),
            space: space.to_string(),
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub name: String,
    pub ports: Vec<Port>,
}

impl Boundary {
    pub fn new(name: &str, ports: Vec<Port>) -> Result<Self, WiringError> {
        let b = Boundary {
            name: name.to_string(),
            ports,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), WiringError> {
        check_identifier(&self.name)?;
        let mut seen = BTreeSet::new();
        for p in &self.ports {
            check_identifier(&p.name)?;
            if !seen.insert(p.name.as_str()) {
                return Err(WiringError::Duplicate {
                    kind: "port",
                    name: format!("{}.{}", self.name, p.name),
                });
            }
        }
        Ok(())
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Port names and value spaces, sorted; names and directions of the boundary ignored.
    fn interface(&self) -> BTreeMap<&str, &str> {
        self.ports.iter().map(|p| (p.name.as_str(), p.space.as_str())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PortRef {
    Outer(String),
    Inner(usize, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    pub name: String,
    pub ports: Vec<PortRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiringOp {
    inner: Vec<Boundary>,
    outer: Boundary,
    wires: Vec<Wire>,
}

/// Bookkeeping from one nesting step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestStats {
    pub classes_before: usize,
    /// Glued port pairs that joined two previously separate classes.
    pub merges: usize,
    /// Classes left with no ports on the new inner or outer boundaries.
    pub dropped: usize,
    pub classes_after: usize,
}

/// Result of [`diagrams_equal`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Equality {
    pub equal: bool,
    pub witness: Option<String>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
    }
}

impl WiringOp {
    pub fn new(inner: Vec<Boundary>, outer: Boundary, wires: Vec<Wire>) -> Result<Self, WiringError> {
        let op = WiringOp {
            inner,
            outer,
            wires,
        };
        op.validate()?;
        Ok(op)
    }

    fn validate(&self) -> Result<(), WiringError> {
        self.outer.validate()?;
        for b in &self.inner {
            b.validate()?;
        }
        let mut names = BTreeSet::new();
        let mut seen: BTreeSet<&PortRef> = BTreeSet::new();
        for w in &self.wires {
            if !names.insert(w.name.as_str()) {
                return Err(WiringError::Duplicate {
                    kind: "wire",
                    name: w.name.clone(),
                });
            }
            let mut space: Option<&str> = None;
            for r in &w.ports {
                let port = self.port(r).ok_or_else(|| WiringError::Unknown {
                    kind: "port",
                    name: self.render(r),
                })?;
                if !seen.insert(r) {
                    return Err(WiringError::MultiplyWired(self.render(r)));
                }
                match space {
                    None => space = Some(&port.space),
                    Some(s) if s != port.space => {
                        return Err(WiringError::SpaceMismatch {
                            wire: w.name.clone(),
                            first: s.to_string(),
                            second: port.space.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        for r in self.all_ports() {
            if !seen.contains(&r) {
                return Err(WiringError::UnwiredPort(self.render(&r)));
            }
        }
        Ok(())
    }

    fn all_ports(&self) -> Vec<PortRef> {
        let mut out: Vec<PortRef> = self.outer.ports.iter().map(|p| PortRef::Outer(p.name.clone())).collect();
        for (i, b) in self.inner.iter().enumerate() {
            out.extend(b.ports.iter().map(|p| PortRef::Inner(i, p.name.clone())));
        }
        out
    }

    pub fn port(&self, r: &PortRef) -> Option<&Port> {
        match r {
            PortRef::Outer(p) => self.outer.port(p),
            PortRef::Inner(i, p) => self.inner.get(*i)?.port(p),
        }
    }

    /// `Boundary.port` rendering of a port reference.
    pub fn render(&self, r: &PortRef) -> String {
        match r {
            PortRef::Outer(p) => format!("{}.{}", self.outer.name, p),
            PortRef::Inner(i, p) => match self.inner.get(*i) {
                Some(b) => format!("{}.{}", b.name, p),
                None => format!("#{i}.{p}"),
            },
        }
    }

    pub fn inner(&self) -> &[Boundary] {
        &self.inner
    }

    pub fn outer(&self) -> &Boundary {
        &self.outer
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn wire_of(&self, r: &PortRef) -> Option<&Wire> {
        self.wires.iter().find(|w| w.ports.contains(r))
    }

    /// The diagram with one inner copy of `b` wired straight through to the outside.
    pub fn identity(b: &Boundary) -> WiringOp {
        let wires = b
            .ports
            .iter()
            .map(|p| Wire {
                name: p.name.clone(),
                ports: vec![PortRef::Outer(p.name.clone()), PortRef::Inner(0, p.name.clone())],
            })
            .collect();
        WiringOp {
            inner: vec![b.clone()],
            outer: b.clone(),
            wires,
        }
    }

    pub fn nest(&self, gs: &[WiringOp]) -> Result<WiringOp, WiringError> {
        self.nest_with_stats(gs).map(|(op, _)| op)
    }

    /// Substitutes `gs[i]` into inner boundary `i`; wires merge by union-find
    /// through the glued ports.
    pub fn nest_with_stats(&self, gs: &[WiringOp]) -> Result<(WiringOp, NestStats), WiringError> {
        if gs.len() != self.inner.len() {
            return Err(WiringError::SlotCountMismatch {
                expected: self.inner.len(),
                found: gs.len(),
            });
        }
        for (slot, (b, g)) in self.inner.iter().zip(gs).enumerate() {
            let (want, have) = (b.interface(), g.outer.interface());
            for (port, space) in &want {
                match have.get(port) {
                    None => {
                        return Err(WiringError::BoundaryMismatch {
                            slot,
                            port: port.to_string(),
                            detail: format!("is missing from `{}`", g.outer.name),
                        })
                    }
                    Some(s) if s != space => {
                        return Err(WiringError::BoundaryMismatch {
                            slot,
                            port: port.to_string(),
                            detail: format!("has value space `{s}`, expected `{space}`"),
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some(extra) = have.keys().find(|p| !want.contains_key(*p)) {
                return Err(WiringError::BoundaryMismatch {
                    slot,
                    port: extra.to_string(),
                    detail: format!("is not on `{}`", b.name),
                });
            }
        }

        // nodes: result ports first (outer, then flattened inner), then glued ports
        let mut index: BTreeMap<(Option<usize>, PortRef), usize> = BTreeMap::new();
        let mut result_ports: Vec<PortRef> = Vec::new();
        for p in &self.outer.ports {
            let r = PortRef::Outer(p.name.clone());
            index.insert((None, r.clone()), result_ports.len());
            result_ports.push(r);
        }
        let mut inner = Vec::new();
        let mut offsets = Vec::with_capacity(gs.len());
        for (i, g) in gs.iter().enumerate() {
            offsets.push(inner.len());
            for (j, b) in g.inner.iter().enumerate() {
                for p in &b.ports {
                    index.insert(
                        (Some(i), PortRef::Inner(j, p.name.clone())),
                        result_ports.len(),
                    );
                    result_ports.push(PortRef::Inner(inner.len(), p.name.clone()));
                }
                inner.push(b.clone());
            }
        }
        let mut total = result_ports.len();
        for (i, b) in self.inner.iter().enumerate() {
            for p in &b.ports {
                let id = total;
                total += 1;
                // f sees it as Inner(i, p); g_i sees it as Outer(p)
                index.insert((None, PortRef::Inner(i, p.name.clone())), id);
                index.insert((Some(i), PortRef::Outer(p.name.clone())), id);
            }
        }
        let mut uf = UnionFind::new(total);
        let classes_before = self.wires.len() + gs.iter().map(|g| g.wires.len()).sum::<usize>();
        // owner of each wire: (None = f, Some(i) = g_i), wire index
        let mut wire_nodes: Vec<(Option<usize>, usize, Vec<usize>)> = Vec::new();
        for (k, w) in self.wires.iter().enumerate() {
            let nodes: Vec<usize> = w.ports.iter().map(|r| index[&(None, r.clone())]).collect();
            wire_nodes.push((None, k, nodes));
        }
        for (i, g) in gs.iter().enumerate() {
            for (k, w) in g.wires.iter().enumerate() {
                let nodes: Vec<usize> = w.ports.iter().map(|r| index[&(Some(i), r.clone())]).collect();
                wire_nodes.push((Some(i), k, nodes));
            }
        }
        for (_, _, nodes) in &wire_nodes {
            for pair in nodes.windows(2) {
                uf.union(pair[0], pair[1]);
            }
        }
        // merges: how far the class count fell below one class per wire
        let mut roots = BTreeSet::new();
        for (_, _, nodes) in &wire_nodes {
            if let Some(&n) = nodes.first() {
                roots.insert(uf.find(n));
            }
        }
        let merges = classes_before - roots.len();

        // group surviving ports by class; name from the first f wire, else the first g wire
        let mut class_name: BTreeMap<usize, (u8, usize, usize, String, Option<usize>)> = BTreeMap::new();
        for (owner, k, nodes) in &wire_nodes {
            let Some(&n) = nodes.first() else { continue };
            let root = uf.find(n);
            let (rank, slot) = match owner {
                None => (0u8, 0usize),
                Some(i) => (1u8, *i),
            };
            let name = match owner {
                None => self.wires[*k].name.clone(),
                Some(i) => gs[*i].wires[*k].name.clone(),
            };
            let cand = (rank, slot, *k, name, *owner);
            class_name
                .entry(root)
                .and_modify(|cur| {
                    if (cand.0, cand.1, cand.2) < (cur.0, cur.1, cur.2) {
                        *cur = cand.clone();
                    }
                })
                .or_insert(cand);
        }
        let mut members: BTreeMap<usize, Vec<PortRef>> = BTreeMap::new();
        for (node, r) in result_ports.iter().enumerate() {
            members.entry(uf.find(node)).or_default().push(r.clone());
        }
        let dropped = roots.iter().filter(|r| !members.contains_key(r)).count();
        let mut wires = Vec::new();
        let mut used = BTreeSet::new();
        // deterministic order: by the class's first surviving port
        let mut ordered: Vec<(usize, Vec<PortRef>)> = members.into_iter().collect();
        ordered.sort_by_key(|(_, ports)| ports.iter().map(port_order).min());
        for (root, ports) in ordered {
            let (_, _, _, base, owner) = class_name[&root].clone();
            let mut name = base.clone();
            if used.contains(&name) {
                if let Some(i) = owner {
                    name = format!("{}_{}", self.inner[i].name, base);
                }
                let mut k = 2;
                while used.contains(&name) {
                    name = format!("{base}_{k}");
                    k += 1;
                }
            }
            used.insert(name.clone());
            wires.push(Wire { name, ports });
        }
        let stats = NestStats {
            classes_before,
            merges,
            dropped,
            classes_after: wires.len(),
        };
        let op = WiringOp {
            inner,
            outer: self.outer.clone(),
            wires,
        };
        op.validate()?;
        Ok((op, stats))
    }

    /// Inner-in to inner-in wiring with no driver; outer inputs count as drivers.
    pub fn lint(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for w in &self.wires {
            if w.ports.len() < 2 {
                continue;
            }
            let driven = w.ports.iter().any(|r| {
                let dir = self.port(r).map(|p| p.direction).unwrap_or_default();
                match r {
                    PortRef::Outer(_) => dir != Direction::Out,
                    PortRef::Inner(..) => dir != Direction::In,
                }
            });
            if !driven {
                warnings.push(format!("wire `{}` connects only input ports", w.name));
            }
        }
        warnings
    }

    /// Wire classes as sets of `(boundary, port)` labels; outer ports use an empty boundary label.
    fn partition(&self) -> BTreeMap<BTreeSet<(String, String)>, String> {
        self.wires
            .iter()
            .map(|w| {
                let set = w
                    .ports
                    .iter()
                    .map(|r| match r {
                        PortRef::Outer(p) => (String::new(), p.clone()),
                        PortRef::Inner(i, p) => (self.inner[*i].name.clone(), p.clone()),
                    })
                    .collect();
                (set, w.name.clone())
            })
            .collect()
    }
}

fn port_order(r: &PortRef) -> (usize, usize, String) {
    match r {
        PortRef::Outer(p) => (0, 0, p.clone()),
        PortRef::Inner(i, p) => (1, *i, p.clone()),
    }
}

fn render_class(set: &BTreeSet<(String, String)>, outer: &str) -> String {
    let items: Vec<String> = set
        .iter()
        .map(|(b, p)| if b.is_empty() { format!("{outer}.{p}") } else { format!("{b}.{p}") })
        .collect();
    format!("{{{}}}", items.join(", "))
}

/// Equal iff both diagrams have the same outer interface, the same inner boundaries
/// (matched by name) and the same wire partition.
pub fn diagrams_equal(a: &WiringOp, b: &WiringOp) -> Equality {
    let fail = |w: String| Equality {
        equal: false,
        witness: Some(w),
    };
    if a.outer.interface() != b.outer.interface() {
        return fail(format!("outer boundaries `{}` and `{}` differ", a.outer.name, b.outer.name));
    }
    let names = |op: &WiringOp| -> Vec<String> {
        let mut v: Vec<String> = op.inner.iter().map(|x| x.name.clone()).collect();
        v.sort();
        v
    };
    let (na, nb) = (names(a), names(b));
    if na != nb {
        return fail(format!("inner boundaries differ: {na:?} vs {nb:?}"));
    }
    if na.windows(2).any(|w| w[0] == w[1]) {
        return fail("inner boundary names are not unique, cannot match by name".into());
    }
    for x in &a.inner {
        let y = b.inner.iter().find(|y| y.name == x.name).expect("same names");
        if x.interface() != y.interface() {
            return fail(format!("inner boundary `{}` has different ports", x.name));
        }
    }
    let (pa, pb) = (a.partition(), b.partition());
    for (set, name) in &pa {
        if !pb.contains_key(set) {
            return fail(format!("wire `{name}` {} of the first diagram", render_class(set, &a.outer.name)));
        }
    }
    for (set, name) in &pb {
        if !pa.contains_key(set) {
            return fail(format!("wire `{name}` {} of the second diagram", render_class(set, &b.outer.name)));
        }
    }
    Equality {
        equal: true,
        witness: None,
    }
}

impl fmt::Display for WiringOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} <- [{}]", self.outer.name, self.inner.iter().map(|b| b.name.as_str()).collect::<Vec<_>>().join(", "))?;
        for w in &self.wires {
            let ports: Vec<String> = w.ports.iter().map(|r| self.render(r)).collect();
            writeln!(f, "  {}: {}", w.name, ports.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(name: &str, ports: &[(&str, &str)]) -> Boundary {
        Boundary::new(name, ports.iter().map(|(p, s)| Port::new(p, s, Direction::Bidirectional)).collect()).unwrap()
    }

    fn wire(name: &str, ports: Vec<PortRef>) -> Wire {
        Wire {
            name: name.into(),
            ports,
        }
    }

    fn outer(p: &str) -> PortRef {
        PortRef::Outer(p.into())
    }

    fn inner(i: usize, p: &str) -> PortRef {
        PortRef::Inner(i, p.into())
    }

    /// Two components sharing `x`, exposing `y` from the second.
    fn pair() -> WiringOp {
        WiringOp::new(
            vec![b("A", &[("x", "s")]), b("B", &[("x", "s"), ("y", "t")])],
            b("Top", &[("y", "t")]),
            vec![wire("x", vec![inner(0, "x"), inner(1, "x")]), wire("y", vec![outer("y"), inner(1, "y")])],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let err = WiringOp::new(vec![b("A", &[("x", "s")])], b("T", &[]), vec![]).unwrap_err();
        assert!(matches!(err, WiringError::UnwiredPort(_)));
        let err = WiringOp::new(
            vec![b("A", &[("x", "s")]), b("B", &[("x", "u")])],
            b("T", &[]),
            vec![wire("x", vec![inner(0, "x"), inner(1, "x")])],
        )
        .unwrap_err();
        assert!(matches!(err, WiringError::SpaceMismatch { .. }));
    }

    #[test]
    fn nesting_identity_is_neutral() {
        let f = pair();
        let ids: Vec<WiringOp> = f.inner().iter().map(WiringOp::identity).collect();
        let g = f.nest(&ids).unwrap();
        assert!(diagrams_equal(&f, &g).equal);
        let top = WiringOp::identity(f.outer());
        assert!(diagrams_equal(&top.nest(std::slice::from_ref(&f)).unwrap(), &f).equal);
    }

    #[test]
    fn nest_mismatch_names_port() {
        let f = pair();
        let wrong = WiringOp::identity(&b("A", &[("x", "other")]));
        let err = f.nest(&[wrong, WiringOp::identity(&f.inner()[1])]).unwrap_err();
        assert!(matches!(err, WiringError::BoundaryMismatch { slot: 0, ref port, .. } if port == "x"));
    }

    #[test]
    fn split_wire_is_detected() {
        let f = pair();
        let split = WiringOp::new(
            f.inner().to_vec(),
            f.outer().clone(),
            vec![
                wire("x1", vec![inner(0, "x")]),
                wire("x2", vec![inner(1, "x")]),
                wire("y", vec![outer("y"), inner(1, "y")]),
            ],
        )
        .unwrap();
        let eq = diagrams_equal(&f, &split);
        assert!(!eq.equal);
        assert!(eq.witness.unwrap().contains("wire `x`"));
    }

    #[test]
    fn inner_order_does_not_matter() {
        let f = pair();
        let swapped = WiringOp::new(
            vec![f.inner()[1].clone(), f.inner()[0].clone()],
            f.outer().clone(),
            vec![wire("x", vec![inner(1, "x"), inner(0, "x")]), wire("y", vec![outer("y"), inner(0, "y")])],
        )
        .unwrap();
        assert!(diagrams_equal(&f, &swapped).equal);
    }

    #[test]
    fn lint_flags_input_to_input() {
        let op = WiringOp::new(
            vec![
                Boundary::new("A", vec![Port::new("x", "s", Direction::In)]).unwrap(),
                Boundary::new("B", vec![Port::new("x", "s", Direction::In)]).unwrap(),
            ],
            b("T", &[]),
            vec![wire("x", vec![inner(0, "x"), inner(1, "x")])],
        )
        .unwrap();
        assert_eq!(op.lint().len(), 1);
    }
}
