//! Carrying forests: the syntax of a fleet design in canonical form.
//!
//! A design is a multiset of trees. Each tree is stationed at one base and
//! carries its children. Sorting every children list and the root list gives
//! a canonical representative, so equal designs compare equal regardless of
//! the order their edges were inserted in.

use std::collections::BTreeMap;

use netoperad_core::algebra::{kpi_evaluate, AssetSpec, Catalog, FleetDesign, KpiScore, Scenario, CARRYING};
use netoperad_core::template::InducedOperad;
use netoperad_core::InteractionId;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::SynthesisError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    /// Index into the catalog.
    pub asset: usize,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn atom(asset: usize) -> Self {
        Tree {
            asset,
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    fn canonicalize(&mut self) {
        for c in &mut self.children {
            c.canonicalize();
        }
        self.children.sort();
    }

    fn preorder<'a>(&'a self, out: &mut Vec<&'a Tree>) {
        out.push(self);
        for c in &self.children {
            c.preorder(out);
        }
    }
}

/// Roots paired with the index of their base in the scenario.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Forest(pub Vec<(usize, Tree)>);

impl Forest {
    pub fn canonical(mut self) -> Self {
        for (_, t) in &mut self.0 {
            t.canonicalize();
        }
        self.0.sort();
        self
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(|(_, t)| t.size()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nodes in preorder with their base and carrier position in that order.
    fn flatten(&self) -> Vec<(usize, usize, Option<usize>)> {
        let mut out = Vec::with_capacity(self.size());
        fn walk(t: &Tree, base: usize, parent: Option<usize>, out: &mut Vec<(usize, usize, Option<usize>)>) {
            let me = out.len();
            out.push((t.asset, base, parent));
            for c in &t.children {
                walk(c, base, Some(me), out);
            }
        }
        for (b, t) in &self.0 {
            walk(t, *b, None, &mut out);
        }
        out
    }
}

/// Everything needed to turn forests into checked designs and score them.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub operad: &'a InducedOperad,
    pub catalog: &'a Catalog,
    pub scenario: &'a Scenario,
    /// `can_carry[carrier][carried]` over catalog indices.
    can_carry: Vec<Vec<bool>>,
}

impl<'a> Context<'a> {
    pub fn new(operad: &'a InducedOperad, catalog: &'a Catalog, scenario: &'a Scenario) -> Result<Self, SynthesisError> {
        scenario.validate()?;
        for a in &catalog.assets {
            if !operad.template().has_color(&a.color) {
                return Err(SynthesisError::UnknownColor {
                    asset: a.name.clone(),
                    color: a.color.to_string(),
                });
            }
        }
        let decl = operad.template().interaction(&InteractionId::directed(CARRYING));
        let can_carry = catalog
            .assets
            .iter()
            .map(|carrier| {
                catalog
                    .assets
                    .iter()
                    .map(|carried| decl.is_some_and(|d| d.allows(&carried.color, &carrier.color)))
                    .collect()
            })
            .collect();
        Ok(Context {
            operad,
            catalog,
            scenario,
            can_carry,
        })
    }

    pub fn asset(&self, i: usize) -> &AssetSpec {
        &self.catalog.assets[i]
    }

    pub fn can_carry(&self, carrier: usize, carried: usize) -> bool {
        self.can_carry[carrier][carried]
    }

    pub fn tree_cost(&self, t: &Tree) -> f64 {
        self.asset(t.asset).cost + t.children.iter().map(|c| self.tree_cost(c)).sum::<f64>()
    }

    pub fn cost(&self, f: &Forest) -> f64 {
        f.0.iter().fold(0.0, |s, (_, t)| s + self.tree_cost(t))
    }

    /// Builds the design through the template, so a forbidden edge is an error here.
    pub fn design(&self, f: &Forest) -> Result<FleetDesign, SynthesisError> {
        let nodes = f.flatten();
        let assets = nodes.iter().map(|&(a, _, _)| self.asset(a).clone()).collect();
        let bases = nodes
            .iter()
            .map(|&(_, b, _)| self.scenario.bases[b].id.clone())
            .collect();
        let carrier: Vec<Option<usize>> = nodes.iter().map(|&(_, _, p)| p).collect();
        Ok(FleetDesign::from_parts(self.operad, assets, bases, &carrier)?)
    }

    /// Reads a design back into canonical form. Assets are matched by name.
    pub fn forest_of(&self, d: &FleetDesign) -> Result<Forest, SynthesisError> {
        let n = d.len();
        let mut asset = Vec::with_capacity(n);
        let mut base = Vec::with_capacity(n);
        for (a, b) in d.assets().iter().zip(d.bases()) {
            asset.push(
                self.catalog
                    .assets
                    .iter()
                    .position(|c| c.name == a.name)
                    .ok_or_else(|| SynthesisError::UnknownAsset(a.name.clone()))?,
            );
            base.push(
                self.scenario
                    .bases
                    .iter()
                    .position(|s| &s.id == b)
                    .ok_or_else(|| SynthesisError::UnknownBase(b.clone()))?,
            );
        }
        let mut kids = vec![Vec::new(); n];
        for (i, c) in d.carrier().iter().enumerate() {
            if let Some(c) = *c {
                kids[c].push(i);
            }
        }
        fn build(i: usize, asset: &[usize], kids: &[Vec<usize>]) -> Tree {
            Tree {
                asset: asset[i],
                children: kids[i].iter().map(|&k| build(k, asset, kids)).collect(),
            }
        }
        let roots = (0..n)
            .filter(|&i| d.carrier()[i].is_none())
            .map(|i| (base[i], build(i, &asset, &kids)))
            .collect();
        Ok(Forest(roots).canonical())
    }

    pub fn evaluate(&self, f: &Forest) -> Result<(FleetDesign, KpiScore), SynthesisError> {
        let d = self.design(f)?;
        let s = kpi_evaluate(&d, self.scenario)?;
        Ok((d, s))
    }

    pub fn to_json(&self, f: &Forest) -> Value {
        fn tree(cx: &Context, t: &Tree) -> Value {
            let mut v = json!({ "asset": cx.asset(t.asset).name });
            if !t.children.is_empty() {
                v["carries"] = t.children.iter().map(|c| tree(cx, c)).collect();
            }
            v
        }
        f.0.iter()
            .map(|(b, t)| {
                let mut v = tree(self, t);
                v["base"] = json!(self.scenario.bases[*b].id);
                v
            })
            .collect()
    }

    /// Hex SHA-256 over the canonical operation bytes followed by the algebra data.
    pub fn hash(&self, f: &Forest, d: &FleetDesign) -> String {
        let mut h = Sha256::new();
        h.update(d.operation().canonical_bytes());
        h.update(b"\n");
        h.update(self.to_json(f).to_string().as_bytes());
        hex::encode(h.finalize())
    }

    /// Asset name to number of copies.
    pub fn counts(&self, f: &Forest) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (_, t) in &f.0 {
            let mut nodes = Vec::new();
            t.preorder(&mut nodes);
            for n in nodes {
                *out.entry(self.asset(n.asset).name.clone()).or_insert(0) += 1;
            }
        }
        out
    }
}
