//! Search-and-rescue semantics for the carrying operad.
//!
//! Each asset contributes area swept `W * S * tau` per target kind, where `tau` is
//! the time it can actually spend searching. Detection follows the random-search
//! law `P = 1 - exp(-Z / A)`.
//!
//! Timing model: a carried asset rides to the search area at the speed of the
//! slowest carrier above it and spends none of its own endurance in transit. An
//! uncarried asset flies itself at its max speed and its transit comes out of its
//! time on station. Everyone stops at the end of the mission window.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AlgebraError, OperadAlgebra};
use crate::operad::{Color, EdgeKey, Endpoints, InteractionId, NetOperation, NetType};
use crate::template::InducedOperad;

/// Name of the directed interaction "x is carried by y".
pub const CARRYING: &str = "carrying";

/// Hours; `f64::INFINITY` for unlimited endurance. Serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Endurance(pub f64);

impl Serialize for Endurance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Endurance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Endurance(x)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Endurance(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", found \"{t}\""
            ))),
        }
    }
}

impl fmt::Display for Endurance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub name: String,
    pub color: Color,
    pub cost: f64,
    pub tos: Endurance,
    pub speed_search: f64,
    pub speed_max: f64,
    pub sweep_widths: BTreeMap<String, f64>,
}

impl AssetSpec {
    pub fn validate(&self) -> Result<(), AlgebraError> {
        let nums = [
            ("cost", self.cost),
            ("tos", self.tos.0),
            ("speed_search", self.speed_search),
            ("speed_max", self.speed_max),
        ];
        for (field, v) in nums.into_iter().chain(self.sweep_widths.values().map(|&w| ("sweep width", w))) {
            if v.is_nan() || v < 0.0 || (v.is_infinite() && field != "tos") {
                return Err(AlgebraError::InvalidSpec(format!(
                    "{}: {field} must be a non-negative number",
                    self.name
                )));
            }
        }
        Ok(())
    }

    fn sweep_width(&self, kind: &str) -> Result<f64, AlgebraError> {
        self.sweep_widths
            .get(kind)
            .copied()
            .ok_or_else(|| AlgebraError::MissingSweepWidth {
                asset: self.name.clone(),
                kind: kind.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub version: u64,
    pub assets: Vec<AssetSpec>,
}

impl Catalog {
    pub fn new(assets: Vec<AssetSpec>) -> Result<Self, AlgebraError> {
        let c = Catalog { version: 1, assets };
        c.validate()?;
        Ok(c)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, AlgebraError> {
        let c: Catalog = serde_json::from_slice(bytes)?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        if self.version != 1 {
            return Err(AlgebraError::InvalidSpec(format!("unsupported catalog version {}", self.version)));
        }
        let mut names = std::collections::BTreeSet::new();
        for a in &self.assets {
            a.validate()?;
            if !names.insert(a.name.as_str()) {
                return Err(AlgebraError::InvalidSpec(format!("duplicate asset `{}`", a.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&AssetSpec> {
        self.assets.iter().find(|a| a.name == name)
    }

    /// The sailboat asset table.
    pub fn sailboat() -> Catalog {
        let row = |name: &str, color: &str, cost: f64, tos: f64, s: f64, r: f64, w: [f64; 3]| AssetSpec {
            name: name.to_string(),
            color: Color::new(color).expect("identifier"),
            cost,
            tos: Endurance(tos),
            speed_search: s,
            speed_max: r,
            sweep_widths: [("PIW", w[0]), ("CIR", w[1]), ("DS", w[2])]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        };
        Catalog {
            version: 1,
            assets: vec![
                row("Cut", "cut", 200e6, f64::INFINITY, 11.0, 28.0, [0.5, 4.7, 8.5]),
                row("Boat", "boat", 500e3, 6.0, 22.0, 35.0, [0.4, 4.2, 7.5]),
                row("FW", "fw", 60e6, 9.0, 180.0, 220.0, [0.1, 2.2, 7.6]),
                row("FSAR", "fsar", 72e6, 10.0, 180.0, 235.0, [0.5, 12.1, 16.6]),
                row("Helo", "helo", 9e6, 4.0, 90.0, 180.0, [0.5, 1.5, 4.8]),
                row("UAV", "uav", 250e3, 3.0, 30.0, 45.0, [0.5, 1.8, 4.5]),
                row("QD", "qd", 15e3, 4.0, 35.0, 52.0, [0.5, 1.5, 4.8]),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Base {
    pub id: String,
    /// Nautical miles to the search area.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u64,
    pub bases: Vec<Base>,
    /// Square nautical miles.
    pub search_area: f64,
    /// Hours.
    pub mission_window: f64,
    pub target_mix: BTreeMap<String, f64>,
    pub budget: f64,
}

impl Scenario {
    pub fn parse(bytes: &[u8]) -> Result<Self, AlgebraError> {
        let s: Scenario = serde_json::from_slice(bytes)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        let bad = |m: &str| Err(AlgebraError::InvalidSpec(m.to_string()));
        if self.version != 1 {
            return bad("unsupported scenario version");
        }
        if self.bases.is_empty() {
            return bad("scenario needs at least one base");
        }
        if self.bases.iter().any(|b| !(b.distance >= 0.0 && b.distance.is_finite())) {
            return bad("base distances must be finite and non-negative");
        }
        if !(self.search_area > 0.0 && self.search_area.is_finite()) {
            return bad("search area must be positive");
        }
        if !(self.mission_window > 0.0 && self.mission_window.is_finite()) {
            return bad("mission window must be positive");
        }
        if self.target_mix.values().any(|&w| !(w >= 0.0 && w.is_finite()))
            || self.target_mix.values().sum::<f64>() <= 0.0
        {
            return bad("target mix weights must be non-negative with positive sum");
        }
        if self.budget.is_nan() || self.budget < 0.0 {
            return bad("budget must be non-negative");
        }
        Ok(())
    }

    pub fn base(&self, id: &str) -> Result<&Base, AlgebraError> {
        self.bases
            .iter()
            .find(|b| b.id == id)
            .ok_or_else(|| AlgebraError::UnknownBase(id.to_string()))
    }
}

/// Per-node algebra data for a word of colors: which asset, which base, and who
/// carries it (an index into the same word).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetInstance {
    pub assets: Vec<AssetSpec>,
    pub bases: Vec<String>,
    pub carrier: Vec<Option<usize>>,
}

impl FleetInstance {
    pub fn empty() -> Self {
        FleetInstance {
            assets: Vec::new(),
            bases: Vec::new(),
            carrier: Vec::new(),
        }
    }

    /// A single uncarried asset at `base`.
    pub fn atom(asset: AssetSpec, base: impl Into<String>) -> Self {
        FleetInstance {
            assets: vec![asset],
            bases: vec![base.into()],
            carrier: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn net_type(&self) -> NetType {
        NetType(self.assets.iter().map(|a| a.color.clone()).collect())
    }

    pub fn total_cost(&self) -> f64 {
        self.assets.iter().fold(0.0, |s, a| s + a.cost)
    }

    /// Root of the carry chain of node `i`.
    pub fn root(&self, mut i: usize) -> usize {
        while let Some(c) = self.carrier[i] {
            i = c;
        }
        i
    }

    fn check(&self) -> Result<(), AlgebraError> {
        let n = self.assets.len();
        if self.bases.len() != n || self.carrier.len() != n {
            return Err(AlgebraError::InvalidSpec("fleet instance fields have different lengths".into()));
        }
        for i in 0..n {
            let mut steps = 0;
            let mut j = i;
            while let Some(c) = self.carrier[j] {
                if c >= n {
                    return Err(AlgebraError::NotAForest(format!("node {j} carried by missing node {c}")));
                }
                j = c;
                steps += 1;
                if steps > n {
                    return Err(AlgebraError::NotAForest(format!("carrying cycle through node {i}")));
                }
            }
            if self.bases[i] != self.bases[j] {
                return Err(AlgebraError::BaseMismatch { node: i });
            }
        }
        Ok(())
    }
}

/// A syntactic carrying operation together with its algebra data.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetDesign {
    operation: NetOperation,
    instance: FleetInstance,
}

impl FleetDesign {
    /// Checks the operation against the template and derives carrier links from its edges.
    pub fn new(
        operad: &InducedOperad,
        operation: NetOperation,
        assets: Vec<AssetSpec>,
        bases: Vec<String>,
    ) -> Result<Self, AlgebraError> {
        operad.validate(&operation)?;
        let n = operation.node_count();
        if assets.len() != n || bases.len() != n {
            return Err(AlgebraError::InvalidSpec(format!(
                "design has {n} nodes but {} assets and {} bases",
                assets.len(),
                bases.len()
            )));
        }
        for (node, (a, c)) in assets.iter().zip(operation.output().colors()).enumerate() {
            if &a.color != c {
                return Err(AlgebraError::ColorMismatch {
                    node,
                    expected: c.to_string(),
                    found: a.color.to_string(),
                });
            }
        }
        let mut carrier = vec![None; n];
        let carrying = InteractionId::directed(CARRYING);
        for key in operation.edges().keys() {
            if key.interaction != carrying {
                continue;
            }
            if let Endpoints::Directed(s, t) = key.endpoints {
                if carrier[s].replace(t).is_some() {
                    return Err(AlgebraError::NotAForest(format!("node {s} has two carriers")));
                }
            }
        }
        let instance = FleetInstance {
            assets,
            bases,
            carrier,
        };
        instance.check()?;
        Ok(FleetDesign {
            operation,
            instance,
        })
    }

    /// Builds the operation from carrier links: one carrying edge `i -> carrier[i]`.
    pub fn from_parts(
        operad: &InducedOperad,
        assets: Vec<AssetSpec>,
        bases: Vec<String>,
        carrier: &[Option<usize>],
    ) -> Result<Self, AlgebraError> {
        let typ = NetType(assets.iter().map(|a| a.color.clone()).collect());
        let mut edges = Vec::new();
        for (i, c) in carrier.iter().enumerate() {
            if let Some(j) = *c {
                edges.push(EdgeKey::new(
                    InteractionId::directed(CARRYING),
                    Endpoints::directed(i, j)?,
                ));
            }
        }
        let op = operad.build(&typ, &edges)?;
        Self::new(operad, op, assets, bases)
    }

    pub fn empty(operad: &InducedOperad) -> Self {
        FleetDesign {
            operation: NetOperation::identity(operad.signature().clone(), NetType::default()),
            instance: FleetInstance::empty(),
        }
    }

    pub fn operation(&self) -> &NetOperation {
        &self.operation
    }

    pub fn instance(&self) -> &FleetInstance {
        &self.instance
    }

    pub fn assets(&self) -> &[AssetSpec] {
        &self.instance.assets
    }

    pub fn bases(&self) -> &[String] {
        &self.instance.bases
    }

    pub fn carrier(&self) -> &[Option<usize>] {
        &self.instance.carrier
    }

    pub fn len(&self) -> usize {
        self.instance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance.is_empty()
    }

    pub fn cost(&self) -> f64 {
        self.instance.total_cost()
    }

    /// Same syntax, different algebra data. Colors must not change.
    pub fn with_algebra(&self, assets: Vec<AssetSpec>, bases: Vec<String>) -> Result<Self, AlgebraError> {
        if assets.len() != self.len() || bases.len() != self.len() {
            return Err(AlgebraError::InvalidSpec("algebra data has the wrong length".into()));
        }
        for (node, (a, b)) in assets.iter().zip(&self.instance.assets).enumerate() {
            if a.color != b.color {
                return Err(AlgebraError::ColorMismatch {
                    node,
                    expected: b.color.to_string(),
                    found: a.color.to_string(),
                });
            }
        }
        let instance = FleetInstance {
            assets,
            bases,
            carrier: self.instance.carrier.clone(),
        };
        instance.check()?;
        Ok(FleetDesign {
            operation: self.operation.clone(),
            instance,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTiming {
    pub asset: String,
    pub base: String,
    pub arrival: f64,
    pub search_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiScore {
    pub nodes: Vec<NodeTiming>,
    /// Area effectively swept per target kind.
    pub effort: BTreeMap<String, f64>,
    pub detection_probability: BTreeMap<String, f64>,
    pub expected_detections: f64,
    pub cost: f64,
}

/// Arrival and search time of every node of `fleet`.
pub fn timings(fleet: &FleetInstance, s: &Scenario) -> Result<Vec<NodeTiming>, AlgebraError> {
    fleet.check()?;
    let mut out = Vec::with_capacity(fleet.len());
    for (i, asset) in fleet.assets.iter().enumerate() {
        let root = fleet.root(i);
        let distance = s.base(&fleet.bases[root])?.distance;
        let (speed, own) = match fleet.carrier[i] {
            None => (asset.speed_max, true),
            Some(_) => {
                let mut v = f64::INFINITY;
                let mut j = fleet.carrier[i];
                while let Some(c) = j {
                    v = v.min(fleet.assets[c].speed_max);
                    j = fleet.carrier[c];
                }
                (v, false)
            }
        };
        let arrival = if distance == 0.0 {
            0.0
        } else if speed > 0.0 {
            distance / speed
        } else {
            f64::INFINITY
        };
        let own_transit = if own { arrival } else { 0.0 };
        let search_time = (asset.tos.0 - own_transit).min(s.mission_window - arrival).max(0.0);
        out.push(NodeTiming {
            asset: asset.name.clone(),
            base: fleet.bases[i].clone(),
            arrival,
            search_time,
        });
    }
    Ok(out)
}

pub fn kpi_evaluate_instance(fleet: &FleetInstance, s: &Scenario) -> Result<KpiScore, AlgebraError> {
    let nodes = timings(fleet, s)?;
    let mut effort = BTreeMap::new();
    let mut detection_probability = BTreeMap::new();
    let mut expected_detections = 0.0;
    for (kind, weight) in &s.target_mix {
        let mut z = 0.0;
        for (asset, t) in fleet.assets.iter().zip(&nodes) {
            z += asset.sweep_width(kind)? * asset.speed_search * t.search_time;
        }
        let p = 1.0 - (-z / s.search_area).exp();
        expected_detections += weight * p;
        effort.insert(kind.clone(), z);
        detection_probability.insert(kind.clone(), p);
    }
    Ok(KpiScore {
        nodes,
        effort,
        detection_probability,
        expected_detections,
        cost: fleet.total_cost(),
    })
}

pub fn kpi_evaluate(d: &FleetDesign, s: &Scenario) -> Result<KpiScore, AlgebraError> {
    kpi_evaluate_instance(&d.instance, s)
}

/// The algebra of partial fleets: an operation glues its inputs together along
/// its slot map and adds its carrying edges. Carried assets move to their
/// carrier's base.
#[derive(Debug, Clone, Default)]
pub struct FleetAlgebra;

impl OperadAlgebra for FleetAlgebra {
    type Element = FleetInstance;

    fn act(&self, op: &NetOperation, inputs: &[FleetInstance]) -> Result<FleetInstance, AlgebraError> {
        if inputs.len() != op.arity() {
            return Err(AlgebraError::Arity {
                expected: op.arity(),
                found: inputs.len(),
            });
        }
        for (slot, (x, t)) in inputs.iter().zip(op.inputs()).enumerate() {
            if &x.net_type() != t {
                return Err(AlgebraError::InstanceType { slot });
            }
        }
        // output node of each (slot, pos)
        let mut node_of: Vec<Vec<usize>> = inputs.iter().map(|x| vec![0; x.len()]).collect();
        for (node, r) in op.slot_map().iter().enumerate() {
            node_of[r.slot][r.pos] = node;
        }
        let mut out = FleetInstance {
            assets: Vec::with_capacity(op.node_count()),
            bases: Vec::with_capacity(op.node_count()),
            carrier: Vec::with_capacity(op.node_count()),
        };
        for r in op.slot_map() {
            let x = &inputs[r.slot];
            out.assets.push(x.assets[r.pos].clone());
            out.bases.push(x.bases[r.pos].clone());
            out.carrier.push(x.carrier[r.pos].map(|q| node_of[r.slot][q]));
        }
        let carrying = InteractionId::directed(CARRYING);
        for key in op.edges().keys() {
            if key.interaction != carrying {
                continue;
            }
            if let Endpoints::Directed(s, t) = key.endpoints {
                if out.carrier[s].replace(t).is_some() {
                    return Err(AlgebraError::NotAForest(format!("node {s} has two carriers")));
                }
            }
        }
        let n = out.len();
        for i in 0..n {
            let mut j = i;
            let mut steps = 0;
            while let Some(c) = out.carrier[j] {
                j = c;
                steps += 1;
                if steps > n {
                    return Err(AlgebraError::NotAForest(format!("carrying cycle through node {i}")));
                }
            }
            out.bases[i] = out.bases[j].clone();
        }
        Ok(out)
    }
}

/// Costs add up under every operation.
#[derive(Debug, Clone, Default)]
pub struct CostAlgebra;

impl OperadAlgebra for CostAlgebra {
    type Element = f64;

    fn act(&self, op: &NetOperation, inputs: &[f64]) -> Result<f64, AlgebraError> {
        if inputs.len() != op.arity() {
            return Err(AlgebraError::Arity {
                expected: op.arity(),
                found: inputs.len(),
            });
        }
        Ok(inputs.iter().fold(0.0, |s, x| s + x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::NetworkTemplate;

    pub(crate) fn sail() -> InducedOperad {
        InducedOperad::new(
            NetworkTemplate::parse_str(
                r#"{"version":1,"colors":["port","cut","boat","fw","fsar","helo","uav","qd"],
                "directed":{"carrying":{"cut":["port"],"boat":["port","cut"],"fw":["port"],"fsar":["port"],
                "helo":["port","cut"],"uav":["cut","boat"],"qd":["cut","boat","fw","fsar","helo"]}}}"#,
            )
            .unwrap(),
        )
    }

    fn scenario(distance: f64, window: f64) -> Scenario {
        Scenario {
            version: 1,
            bases: vec![Base {
                id: "p".into(),
                distance,
            }],
            search_area: 1000.0,
            mission_window: window,
            target_mix: [("PIW".to_string(), 1.0)].into_iter().collect(),
            budget: 1e9,
        }
    }

    fn asset(name: &str) -> AssetSpec {
        Catalog::sailboat().get(name).unwrap().clone()
    }

    #[test]
    fn cost_of_helo_and_four_qd() {
        let op = sail();
        let mut assets = vec![asset("Helo")];
        assets.extend(std::iter::repeat_n(asset("QD"), 4));
        let carrier = [None, Some(0), Some(0), Some(0), Some(0)];
        let d = FleetDesign::from_parts(&op, assets, vec!["p".into(); 5], &carrier).unwrap();
        assert!((d.cost() - 9.06e6).abs() < 1e-6);
    }

    #[test]
    fn empty_design_scores_zero() {
        let d = FleetDesign::empty(&sail());
        let k = kpi_evaluate(&d, &scenario(100.0, 8.0)).unwrap();
        assert_eq!(k.cost, 0.0);
        assert_eq!(k.effort["PIW"], 0.0);
        assert_eq!(k.expected_detections, 0.0);
    }

    #[test]
    fn single_qd_at_distance_zero() {
        let d = FleetDesign::from_parts(&sail(), vec![asset("QD")], vec!["p".into()], &[None]).unwrap();
        let k = kpi_evaluate(&d, &scenario(0.0, 10.0)).unwrap();
        // W * S * ToS = 0.5 * 35 * 4
        assert!((k.effort["PIW"] - 70.0).abs() < 1e-12);
        assert!((k.detection_probability["PIW"] - (1.0 - (-0.07f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn carried_qd_rides_at_carrier_speed() {
        let d = FleetDesign::from_parts(
            &sail(),
            vec![asset("Helo"), asset("QD")],
            vec!["p".into(); 2],
            &[None, Some(0)],
        )
        .unwrap();
        let t = timings(d.instance(), &scenario(180.0, 8.0)).unwrap();
        assert!((t[0].arrival - 1.0).abs() < 1e-12);
        assert!((t[0].search_time - 3.0).abs() < 1e-12);
        assert!((t[1].arrival - 1.0).abs() < 1e-12);
        assert!((t[1].search_time - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cutter_has_no_endurance_limit() {
        let d = FleetDesign::from_parts(&sail(), vec![asset("Cut")], vec!["p".into()], &[None]).unwrap();
        let t = timings(d.instance(), &scenario(56.0, 10.0)).unwrap();
        assert!((t[0].search_time - 8.0).abs() < 1e-12);
    }

    #[test]
    fn missing_sweep_width_is_an_error() {
        let d = FleetDesign::from_parts(&sail(), vec![asset("QD")], vec!["p".into()], &[None]).unwrap();
        let mut s = scenario(0.0, 5.0);
        s.target_mix.insert("ZZ".into(), 1.0);
        assert!(matches!(kpi_evaluate(&d, &s), Err(AlgebraError::MissingSweepWidth { .. })));
    }

    #[test]
    fn invalid_designs() {
        let op = sail();
        // qd cannot carry a helo
        assert!(FleetDesign::from_parts(&op, vec![asset("Helo"), asset("QD")], vec!["p".into(); 2], &[Some(1), None]).is_err());
        // carried asset must share its carrier's base
        assert!(matches!(
            FleetDesign::from_parts(&op, vec![asset("Helo"), asset("QD")], vec!["p".into(), "q".into()], &[None, Some(0)]),
            Err(AlgebraError::BaseMismatch { node: 1 })
        ));
        // color mismatch
        let typ = op.net_type(&["qd"]).unwrap();
        assert!(matches!(
            FleetDesign::new(&op, op.identity(&typ).unwrap(), vec![asset("Helo")], vec!["p".into()]),
            Err(AlgebraError::ColorMismatch { .. })
        ));
    }

    #[test]
    fn endurance_json() {
        let e: Endurance = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.0.is_infinite());
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"inf\"");
        let e: Endurance = serde_json::from_str("4").unwrap();
        assert_eq!(e.0, 4.0);
        let back = Catalog::parse(serde_json::to_string(&Catalog::sailboat()).unwrap().as_bytes()).unwrap();
        assert_eq!(back, Catalog::sailboat());
    }

    #[test]
    fn fleet_algebra_rebases_carried_assets() {
        let op = sail();
        let typ = op.net_type(&["helo", "qd"]).unwrap();
        let carry = op.directed_edge(&typ, CARRYING, 1, 0).unwrap();
        // split into two singleton input slots
        let glue = NetOperation::new(
            op.signature().clone(),
            vec![op.net_type(&["qd"]).unwrap(), op.net_type(&["helo"]).unwrap()],
            typ.clone(),
            vec![crate::SlotRef { slot: 1, pos: 0 }, crate::SlotRef { slot: 0, pos: 0 }],
            carry.edges().iter().map(|(k, v)| (k.clone(), *v)),
        )
        .unwrap();
        let out = FleetAlgebra
            .act(&glue, &[FleetInstance::atom(asset("QD"), "q"), FleetInstance::atom(asset("Helo"), "p")])
            .unwrap();
        assert_eq!(out.carrier, vec![None, Some(0)]);
        assert_eq!(out.bases, vec!["p".to_string(), "p".to_string()]);
    }
}
