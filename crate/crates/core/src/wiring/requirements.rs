//! Requirements as predicates on port values, checked over finite grids.
//!
//! A wire carries one value, so a joint assignment is a value per wire. The
//! valid set of a diagram is the set of grid assignments satisfying every
//! component requirement; it is sound for an outer requirement when every such
//! assignment also satisfies it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{PortRef, WiringError, WiringOp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, WiringError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(WiringError::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = WiringError;
    fn try_from((lo, hi): (f64, f64)) -> Result<Self, Self::Error> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.lo, i.hi)
    }
}

/// A predicate over the ports of one boundary.
pub trait StatePredicate {
    /// Ports the predicate reads.
    fn ports(&self) -> Vec<String>;
    /// `values` holds one value per port returned by [`StatePredicate::ports`].
    fn holds(&self, values: &BTreeMap<String, f64>) -> bool;
    fn describe(&self) -> String;
}

/// Each constrained port must lie in the union of its intervals; other ports are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub boundary: String,
    pub name: String,
    pub constraints: BTreeMap<String, Vec<Interval>>,
}

impl StatePredicate for Requirement {
    fn ports(&self) -> Vec<String> {
        self.constraints.keys().cloned().collect()
    }

    fn holds(&self, values: &BTreeMap<String, f64>) -> bool {
        self.constraints
            .iter()
            .all(|(p, ivs)| values.get(p).is_some_and(|&x| ivs.iter().any(|i| i.contains(x))))
    }

    fn describe(&self) -> String {
        format!("{}:{}", self.boundary, self.name)
    }
}

/// An explicit finite relation: the listed rows are exactly the allowed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRelation {
    pub ports: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TableRelation {
    /// Rows as a set, compared bitwise.
    pub fn row_set(&self) -> BTreeSet<Vec<u64>> {
        self.rows.iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect()
    }

    /// Same relation up to column and row order.
    pub fn same_relation(&self, other: &TableRelation) -> bool {
        let mut a: Vec<usize> = (0..self.ports.len()).collect();
        a.sort_by(|&i, &j| self.ports[i].cmp(&self.ports[j]));
        let mut b: Vec<usize> = (0..other.ports.len()).collect();
        b.sort_by(|&i, &j| other.ports[i].cmp(&other.ports[j]));
        let pa: Vec<&String> = a.iter().map(|&i| &self.ports[i]).collect();
        let pb: Vec<&String> = b.iter().map(|&i| &other.ports[i]).collect();
        if pa != pb {
            return false;
        }
        let reorder = |t: &TableRelation, idx: &[usize]| -> BTreeSet<Vec<u64>> {
            t.rows.iter().map(|r| idx.iter().map(|&i| r[i].to_bits()).collect()).collect()
        };
        reorder(self, &a) == reorder(other, &b)
    }
}

impl StatePredicate for TableRelation {
    fn ports(&self) -> Vec<String> {
        self.ports.clone()
    }

    fn holds(&self, values: &BTreeMap<String, f64>) -> bool {
        let Some(row) = self.ports.iter().map(|p| values.get(p).copied()).collect::<Option<Vec<f64>>>() else {
            return false;
        };
        self.rows.iter().any(|r| r == &row)
    }

    fn describe(&self) -> String {
        format!("table over [{}]", self.ports.join(", "))
    }
}

/// Sample values, keyed by wire name or by value space. Wire names win.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub BTreeMap<String, Vec<f64>>);

impl Grid {
    pub fn lookup(&self, wire: &str, space: &str) -> Result<&[f64], WiringError> {
        self.0
            .get(wire)
            .or_else(|| self.0.get(space))
            .map(Vec::as_slice)
            .ok_or_else(|| WiringError::MissingGridVariable(wire.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidSet {
    /// Wire names, in the diagram's wire order.
    pub variables: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub assignment: BTreeMap<String, f64>,
    pub violated: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub sound: bool,
    /// Number of jointly valid assignments examined.
    pub checked: usize,
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementsBundle {
    #[serde(default)]
    pub component_requirements: Vec<Requirement>,
    #[serde(default)]
    pub outer_requirements: Vec<Requirement>,
    #[serde(default)]
    pub grid: Grid,
}

impl RequirementsBundle {
    pub fn parse(bytes: &[u8]) -> Result<Self, WiringError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// A predicate placed on a boundary of `op`, with its ports resolved to wire indices.
struct Bound<'a> {
    pred: &'a dyn StatePredicate,
    ports: Vec<(String, usize)>,
    /// Largest wire index read; the predicate is checked once it is assigned.
    last: usize,
}

fn bind<'a>(
    op: &WiringOp,
    slot: Option<usize>,
    pred: &'a dyn StatePredicate,
) -> Result<Bound<'a>, WiringError> {
    let boundary = match slot {
        None => op.outer(),
        Some(i) => &op.inner()[i],
    };
    let mut ports = Vec::new();
    for p in pred.ports() {
        if boundary.port(&p).is_none() {
            return Err(WiringError::UnknownRequirementPort {
                requirement: pred.describe(),
                boundary: boundary.name.clone(),
                port: p,
            });
        }
        let r = match slot {
            None => PortRef::Outer(p.clone()),
            Some(i) => PortRef::Inner(i, p.clone()),
        };
        let w = op
            .wires()
            .iter()
            .position(|w| w.ports.contains(&r))
            .expect("validated diagrams wire every port");
        ports.push((p, w));
    }
    let last = ports.iter().map(|(_, w)| *w).max().unwrap_or(0);
    Ok(Bound { pred, ports, last })
}

fn satisfied(b: &Bound<'_>, values: &[f64]) -> bool {
    let vals: BTreeMap<String, f64> = b.ports.iter().map(|(p, w)| (p.clone(), values[*w])).collect();
    b.pred.holds(&vals)
}

fn slot_of(op: &WiringOp, boundary: &str) -> Result<Option<usize>, WiringError> {
    if let Some(i) = op.inner().iter().position(|b| b.name == boundary) {
        return Ok(Some(i));
    }
    if op.outer().name == boundary {
        return Ok(None);
    }
    Err(WiringError::Unknown {
        kind: "boundary",
        name: boundary.to_string(),
    })
}

/// Joint validity for arbitrary predicates: `(slot, predicate)` with `None` for the outer boundary.
pub fn joint_validity_with(
    op: &WiringOp,
    constraints: &[(Option<usize>, &dyn StatePredicate)],
    grid: &Grid,
) -> Result<ValidSet, WiringError> {
    let bound: Vec<Bound<'_>> = constraints
        .iter()
        .map(|(s, p)| bind(op, *s, *p))
        .collect::<Result<_, _>>()?;
    let domains: Vec<&[f64]> = op
        .wires()
        .iter()
        .map(|w| {
            let space = &op.port(&w.ports[0]).expect("wired port exists").space;
            grid.lookup(&w.name, space)
        })
        .collect::<Result<_, _>>()?;
    let mut by_last: Vec<Vec<usize>> = vec![Vec::new(); domains.len()];
    let mut always = Vec::new();
    for (k, b) in bound.iter().enumerate() {
        if b.ports.is_empty() {
            always.push(k);
        } else {
            by_last[b.last].push(k);
        }
    }
    let variables: Vec<String> = op.wires().iter().map(|w| w.name.clone()).collect();
    let mut points = Vec::new();
    let empty_ok = always.iter().all(|&k| bound[k].pred.holds(&BTreeMap::new()));
    if empty_ok {
        let mut current = vec![0.0; domains.len()];
        search(&domains, &by_last, &bound, 0, &mut current, &mut points);
    }
    Ok(ValidSet { variables, points })
}

fn search(
    domains: &[&[f64]],
    by_last: &[Vec<usize>],
    bound: &[Bound<'_>],
    depth: usize,
    current: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
) {
    if depth == domains.len() {
        out.push(current.clone());
        return;
    }
    for &x in domains[depth] {
        current[depth] = x;
        if by_last[depth].iter().all(|&k| satisfied(&bound[k], current)) {
            search(domains, by_last, bound, depth + 1, current, out);
        }
    }
}

/// Grid assignments satisfying every component requirement.
pub fn joint_validity(op: &WiringOp, requirements: &[Requirement], grid: &Grid) -> Result<ValidSet, WiringError> {
    let constraints = requirements
        .iter()
        .map(|r| Ok((slot_of(op, &r.boundary)?, r as &dyn StatePredicate)))
        .collect::<Result<Vec<_>, WiringError>>()?;
    joint_validity_with(op, &constraints, grid)
}

/// Checks every jointly valid assignment against the outer requirements.
pub fn soundness_check(
    op: &WiringOp,
    components: &[Requirement],
    outer: &[Requirement],
    grid: &Grid,
) -> Result<SoundnessReport, WiringError> {
    let valid = joint_validity(op, components, grid)?;
    let outer_bound: Vec<Bound<'_>> = outer
        .iter()
        .map(|r| {
            if r.boundary != op.outer().name {
                return Err(WiringError::Unknown {
                    kind: "outer boundary",
                    name: r.boundary.clone(),
                });
            }
            bind(op, None, r)
        })
        .collect::<Result<_, _>>()?;
    let mut counterexamples = Vec::new();
    for point in &valid.points {
        for b in &outer_bound {
            if !satisfied(b, point) {
                counterexamples.push(Counterexample {
                    assignment: valid.variables.iter().cloned().zip(point.iter().copied()).collect(),
                    violated: b.pred.describe(),
                });
            }
        }
    }
    Ok(SoundnessReport {
        sound: counterexamples.is_empty(),
        checked: valid.points.len(),
        counterexamples,
    })
}

/// Projects a valid set of `op` onto its outer ports.
pub fn project_outer(op: &WiringOp, valid: &ValidSet) -> TableRelation {
    let ports: Vec<String> = op.outer().ports.iter().map(|p| p.name.clone()).collect();
    let cols: Vec<usize> = ports
        .iter()
        .map(|p| {
            let r = PortRef::Outer(p.clone());
            op.wires().iter().position(|w| w.ports.contains(&r)).expect("outer port wired")
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for pt in &valid.points {
        let row: Vec<f64> = cols.iter().map(|&c| pt[c]).collect();
        if seen.insert(row.iter().map(|x| x.to_bits()).collect::<Vec<u64>>()) {
            rows.push(row);
        }
    }
    TableRelation { ports, rows }
}

/// Soundness computed stage by stage: each `gs[i]` is reduced to the relation its
/// valid set induces on its outer boundary, and those relations constrain `f`.
///
/// Returns the report and the relation obtained on `f`'s outer boundary.
pub fn chained_soundness_check(
    f: &WiringOp,
    gs: &[WiringOp],
    components: &[Requirement],
    outer: &[Requirement],
    grid: &Grid,
) -> Result<(SoundnessReport, TableRelation), WiringError> {
    if gs.len() != f.inner().len() {
        return Err(WiringError::SlotCountMismatch {
            expected: f.inner().len(),
            found: gs.len(),
        });
    }
    let mut relations = Vec::with_capacity(gs.len());
    for g in gs {
        let local: Vec<Requirement> = components
            .iter()
            .filter(|r| g.inner().iter().any(|b| b.name == r.boundary))
            .cloned()
            .collect();
        let valid = joint_validity(g, &local, grid)?;
        relations.push(project_outer(g, &valid));
    }
    for r in components {
        if !gs.iter().any(|g| g.inner().iter().any(|b| b.name == r.boundary)) {
            return Err(WiringError::Unknown {
                kind: "boundary",
                name: r.boundary.clone(),
            });
        }
    }
    let mut constraints: Vec<(Option<usize>, &dyn StatePredicate)> = relations
        .iter()
        .enumerate()
        .map(|(i, t)| (Some(i), t as &dyn StatePredicate))
        .collect();
    let valid = joint_validity_with(f, &constraints, grid)?;
    let projected = project_outer(f, &valid);
    constraints.clear();
    let mut counterexamples = Vec::new();
    for r in outer {
        let b = bind(f, None, r)?;
        for pt in &valid.points {
            if !satisfied(&b, pt) {
                counterexamples.push(Counterexample {
                    assignment: valid.variables.iter().cloned().zip(pt.iter().copied()).collect(),
                    violated: r.describe(),
                });
            }
        }
    }
    Ok((
        SoundnessReport {
            sound: counterexamples.is_empty(),
            checked: valid.points.len(),
            counterexamples,
        },
        projected,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{Boundary, Direction, Port, Wire};
    use super::*;

    fn chain() -> WiringOp {
        // A and B share t; B exposes out.
        let a = Boundary::new("A", vec![Port::new("t", "temp", Direction::Out)]).unwrap();
        let b = Boundary::new(
            "B",
            vec![Port::new("t", "temp", Direction::In), Port::new("out", "temp", Direction::Out)],
        )
        .unwrap();
        let top = Boundary::new("Top", vec![Port::new("out", "temp", Direction::Out)]).unwrap();
        WiringOp::new(
            vec![a, b],
            top,
            vec![
                Wire {
                    name: "t".into(),
                    ports: vec![PortRef::Inner(0, "t".into()), PortRef::Inner(1, "t".into())],
                },
                Wire {
                    name: "out".into(),
                    ports: vec![PortRef::Outer("out".into()), PortRef::Inner(1, "out".into())],
                },
            ],
        )
        .unwrap()
    }

    fn req(boundary: &str, port: &str, lo: f64, hi: f64) -> Requirement {
        Requirement {
            boundary: boundary.into(),
            name: format!("{port}_band"),
            constraints: [(port.to_string(), vec![Interval::new(lo, hi).unwrap()])].into(),
        }
    }

    fn grid() -> Grid {
        Grid([("temp".to_string(), vec![19.9, 20.0, 20.1])].into())
    }

    #[test]
    fn band_inside_grid_selects_centre() {
        let op = chain();
        let v = joint_validity(&op, &[req("A", "t", 19.98, 20.02)], &grid()).unwrap();
        assert_eq!(v.points.len(), 3);
        assert!(v.points.iter().all(|p| p[0] == 20.0));
    }

    #[test]
    fn soundness_with_counterexample() {
        let op = chain();
        let comps = [req("A", "t", 19.98, 20.02), req("B", "out", 19.95, 20.05)];
        let ok = soundness_check(&op, &comps, &[req("Top", "out", 19.9, 20.1)], &grid()).unwrap();
        assert!(ok.sound);
        assert_eq!(ok.checked, 1);
        let loose = [req("A", "t", 19.98, 20.02)];
        let bad = soundness_check(&op, &loose, &[req("Top", "out", 19.98, 20.02)], &grid()).unwrap();
        assert!(!bad.sound);
        assert_eq!(bad.counterexamples.len(), 2);
    }

    #[test]
    fn missing_grid_variable() {
        let op = chain();
        let err = joint_validity(&op, &[], &Grid::default()).unwrap_err();
        assert_eq!(err, WiringError::MissingGridVariable("t".into()));
    }

    #[test]
    fn interval_serde_and_validation() {
        let i: Interval = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert!(i.contains(1.5));
        assert!(serde_json::from_str::<Interval>("[2.0, 1.0]").is_err());
    }
}
