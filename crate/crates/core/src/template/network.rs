use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{check_identifier, check_type, check_version, parse_color, parse_colors, Entries, TemplateError};
use crate::operad::{
    Color, EdgeKey, Endpoints, InteractionId, MonoidKind, NetOperation, NetType, Signature,
    SlotRef,
};

/// One kind of interaction and the color pairs it may link.
///
/// For a directed interaction, `pairs[x]` containing `y` allows the edge `x -> y`,
/// read "x is carried by y". For an undirected interaction the table is symmetric:
/// either orientation of the entry allows the unordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDecl {
    pub id: InteractionId,
    pub monoid: MonoidKind,
    pub loops: bool,
    pub pairs: BTreeMap<Color, BTreeSet<Color>>,
}

impl InteractionDecl {
    pub fn allows(&self, source: &Color, target: &Color) -> bool {
        let has = |a: &Color, b: &Color| self.pairs.get(a).is_some_and(|s| s.contains(b));
        if self.id.directed {
            has(source, target)
        } else {
            has(source, target) || has(target, source)
        }
    }

    /// Loops are opt-in, and only at colors that occur in this interaction's table.
    pub fn allows_loop(&self, color: &Color) -> bool {
        self.loops
            && (self.pairs.contains_key(color) || self.pairs.values().any(|s| s.contains(color)))
    }

    pub fn mentions(&self, color: &Color) -> bool {
        self.pairs.contains_key(color) || self.pairs.values().any(|s| s.contains(color))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTemplate {
    colors: Vec<Color>,
    interactions: Vec<InteractionDecl>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InteractionJson {
    Extended(ExtendedJson),
    Plain(Entries<Vec<String>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtendedJson {
    pairs: Entries<Vec<String>>,
    #[serde(default)]
    monoid: MonoidKind,
    #[serde(default)]
    loops: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateJson {
    version: u64,
    colors: Vec<String>,
    #[serde(default)]
    directed: Entries<InteractionJson>,
    #[serde(default)]
    undirected: Entries<InteractionJson>,
}

impl NetworkTemplate {
    /// Builds and validates a template from already-parsed parts.
    pub fn new(colors: Vec<Color>, interactions: Vec<InteractionDecl>) -> Result<Self, TemplateError> {
        let mut seen_colors = BTreeSet::new();
        for c in &colors {
            if !seen_colors.insert(c) {
                return Err(TemplateError::DuplicateColor(c.to_string()));
            }
        }
        let mut seen = BTreeSet::new();
        for decl in &interactions {
            check_identifier(&decl.id.name)?;
            if !seen.insert(decl.id.clone()) {
                return Err(TemplateError::DuplicateInteraction {
                    name: decl.id.name.clone(),
                    directed: decl.id.directed,
                });
            }
            for (x, ys) in &decl.pairs {
                for c in std::iter::once(x).chain(ys) {
                    if !seen_colors.contains(c) {
                        return Err(TemplateError::UnknownColor {
                            color: c.to_string(),
                            interaction: decl.id.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(NetworkTemplate {
            colors,
            interactions,
        })
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, TemplateError> {
        let raw: TemplateJson = serde_json::from_slice(bytes)?;
        check_version(raw.version)?;
        let colors = parse_colors(&raw.colors)?;
        let mut interactions = Vec::new();
        for (directed, table) in [(true, raw.directed), (false, raw.undirected)] {
            if let Some(name) = table.duplicate() {
                return Err(TemplateError::DuplicateInteraction {
                    name: name.to_string(),
                    directed,
                });
            }
            for (name, body) in table.0 {
                check_identifier(&name)?;
                let (rows, monoid, loops) = match body {
                    InteractionJson::Extended(e) => (e.pairs, e.monoid, e.loops),
                    InteractionJson::Plain(p) => (p, MonoidKind::BooleanOr, false),
                };
                if let Some(dup) = rows.duplicate() {
                    return Err(TemplateError::Duplicate {
                        kind: "adjacency row",
                        name: format!("{name}.{dup}"),
                    });
                }
                let mut pairs = BTreeMap::new();
                for (x, ys) in rows.0 {
                    let known = |c: &str| -> Result<Color, TemplateError> {
                        let color = parse_color(c)?;
                        if colors.contains(&color) {
                            Ok(color)
                        } else {
                            Err(TemplateError::UnknownColor {
                                color: c.to_string(),
                                interaction: name.clone(),
                            })
                        }
                    };
                    let row: BTreeSet<Color> =
                        ys.iter().map(|y| known(y)).collect::<Result<_, _>>()?;
                    pairs.insert(known(&x)?, row);
                }
                interactions.push(InteractionDecl {
                    id: InteractionId {
                        name,
                        directed,
                    },
                    monoid,
                    loops,
                    pairs,
                });
            }
        }
        NetworkTemplate::new(colors, interactions)
    }

    pub fn parse_str(s: &str) -> Result<Self, TemplateError> {
        Self::parse(s.as_bytes())
    }

    /// Key-sorted JSON. The plain adjacency form is used whenever the interaction
    /// has default settings, so files in the short form round-trip to the same shape.
    pub fn to_json(&self) -> Value {
        let mut directed = Map::new();
        let mut undirected = Map::new();
        for decl in &self.interactions {
            let mut rows = Map::new();
            for (x, ys) in &decl.pairs {
                rows.insert(
                    x.to_string(),
                    Value::Array(ys.iter().map(|y| Value::String(y.to_string())).collect()),
                );
            }
            let body = if decl.monoid == MonoidKind::BooleanOr && !decl.loops {
                Value::Object(rows)
            } else {
                json!({ "pairs": rows, "monoid": decl.monoid, "loops": decl.loops })
            };
            let target = if decl.id.directed { &mut directed } else { &mut undirected };
            target.insert(decl.id.name.clone(), body);
        }
        json!({
            "version": super::TEMPLATE_VERSION,
            "colors": self.colors.iter().map(Color::to_string).collect::<Vec<_>>(),
            "directed": directed,
            "undirected": undirected,
        })
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn interactions(&self) -> &[InteractionDecl] {
        &self.interactions
    }

    pub fn interaction(&self, id: &InteractionId) -> Option<&InteractionDecl> {
        self.interactions.iter().find(|d| &d.id == id)
    }

    pub fn has_color(&self, c: &Color) -> bool {
        self.colors.contains(c)
    }

    pub fn color(&self, name: &str) -> Result<Color, TemplateError> {
        self.colors
            .iter()
            .find(|c| c.as_str() == name)
            .cloned()
            .ok_or_else(|| TemplateError::ColorNotInTemplate(name.to_string()))
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for d in &self.interactions {
            sig.insert(d.id.clone(), d.monoid);
        }
        sig
    }

    /// Colors sorted and interactions sorted; used to compare templates that differ
    /// only in declaration order.
    pub fn normalized(&self) -> NetworkTemplate {
        let mut colors = self.colors.clone();
        colors.sort();
        let mut interactions = self.interactions.clone();
        interactions.sort_by(|a, b| a.id.cmp(&b.id));
        for d in &mut interactions {
            d.pairs.retain(|_, row| !row.is_empty());
        }
        NetworkTemplate {
            colors,
            interactions,
        }
    }

    /// All edge keys on `typ` allowed by the template, sorted by interaction then endpoints.
    pub fn allowed_edges(&self, typ: &NetType) -> Result<Vec<EdgeKey>, TemplateError> {
        check_type(&self.colors, typ)?;
        let cs = typ.colors();
        let n = cs.len();
        let mut keys = Vec::new();
        for decl in &self.interactions {
            for i in 0..n {
                if decl.allows_loop(&cs[i]) {
                    keys.push(EdgeKey::new(decl.id.clone(), Endpoints::Loop(i)));
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let endpoints = if decl.id.directed {
                        Endpoints::Directed(i, j)
                    } else if i < j {
                        Endpoints::Undirected(i, j)
                    } else {
                        continue;
                    };
                    if decl.allows(&cs[i], &cs[j]) {
                        keys.push(EdgeKey::new(decl.id.clone(), endpoints));
                    }
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// True iff a single edge with this key is syntactically allowed on `typ`.
    pub fn allows_edge(&self, typ: &NetType, key: &EdgeKey) -> Result<bool, TemplateError> {
        let decl = self
            .interaction(&key.interaction)
            .ok_or_else(|| crate::operad::OperadError::UnknownInteraction(key.interaction.to_string()))?;
        let cs = typ.colors();
        let get = |i: usize| {
            cs.get(i).ok_or(crate::operad::OperadError::NodeOutOfRange {
                index: i,
                nodes: cs.len(),
            })
        };
        Ok(match key.endpoints {
            Endpoints::Loop(i) => decl.allows_loop(get(i)?),
            Endpoints::Directed(i, j) => decl.id.directed && i != j && decl.allows(get(i)?, get(j)?),
            Endpoints::Undirected(i, j) => !decl.id.directed && i < j && decl.allows(get(i)?, get(j)?),
        })
    }
}

/// The network operad generated by a template.
///
/// Every operation it hands out, and every operation passing [`InducedOperad::validate`],
/// only contains edges the template allows.
#[derive(Debug, Clone)]
pub struct InducedOperad {
    template: NetworkTemplate,
    signature: Arc<Signature>,
}

impl InducedOperad {
    pub fn new(template: NetworkTemplate) -> Self {
        let signature = Arc::new(template.signature());
        InducedOperad {
            template,
            signature,
        }
    }

    pub fn template(&self) -> &NetworkTemplate {
        &self.template
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn check_type(&self, typ: &NetType) -> Result<(), TemplateError> {
        check_type(&self.template.colors, typ)
    }

    pub fn net_type(&self, names: &[&str]) -> Result<NetType, TemplateError> {
        names
            .iter()
            .map(|n| self.template.color(n))
            .collect::<Result<Vec<_>, _>>()
            .map(NetType)
    }

    pub fn identity(&self, typ: &NetType) -> Result<NetOperation, TemplateError> {
        self.check_type(typ)?;
        Ok(NetOperation::identity(self.signature.clone(), typ.clone()))
    }

    pub fn unit(&self) -> NetOperation {
        NetOperation::unit(self.signature.clone())
    }

    /// Single-edge endo-shaped operations, one per allowed edge on `typ`.
    pub fn generators(&self, typ: &NetType) -> Result<Vec<NetOperation>, TemplateError> {
        self.template
            .allowed_edges(typ)?
            .into_iter()
            .map(|key| self.generator_unchecked(typ, key))
            .collect()
    }

    fn generator_unchecked(&self, typ: &NetType, key: EdgeKey) -> Result<NetOperation, TemplateError> {
        let slot_map = (0..typ.len()).map(|pos| SlotRef { slot: 0, pos }).collect();
        Ok(NetOperation::new(
            self.signature.clone(),
            vec![typ.clone()],
            typ.clone(),
            slot_map,
            [(key, 1)],
        )?)
    }

    /// The generator for one edge, rejected if the template does not allow it.
    pub fn generator(&self, typ: &NetType, key: EdgeKey) -> Result<NetOperation, TemplateError> {
        self.check_type(typ)?;
        if !self.template.allows_edge(typ, &key)? {
            return Err(disallowed(typ, &key));
        }
        self.generator_unchecked(typ, key)
    }

    /// Convenience: directed generator `source -> target` on `typ`.
    pub fn directed_edge(
        &self,
        typ: &NetType,
        interaction: &str,
        source: usize,
        target: usize,
    ) -> Result<NetOperation, TemplateError> {
        let ep = Endpoints::directed(source, target)?;
        self.generator(typ, EdgeKey::new(InteractionId::directed(interaction), ep))
    }

    /// Overlays generators for every edge in `edges` onto `identity(typ)`.
    pub fn build(&self, typ: &NetType, edges: &[EdgeKey]) -> Result<NetOperation, TemplateError> {
        let mut op = self.identity(typ)?;
        for key in edges {
            op = op.overlay(&self.generator(typ, key.clone())?)?;
        }
        Ok(op)
    }

    /// Checks colors and that every edge of `op` is allowed by the template.
    pub fn validate(&self, op: &NetOperation) -> Result<(), TemplateError> {
        if **op.signature() != *self.signature {
            return Err(crate::operad::OperadError::SignatureMismatch.into());
        }
        for t in op.inputs() {
            self.check_type(t)?;
        }
        self.check_type(op.output())?;
        for key in op.edges().keys() {
            if !self.template.allows_edge(op.output(), key)? {
                return Err(disallowed(op.output(), key));
            }
        }
        Ok(())
    }
}

fn disallowed(typ: &NetType, key: &EdgeKey) -> TemplateError {
    let name = |i: usize| {
        typ.colors()
            .get(i)
            .map(Color::to_string)
            .unwrap_or_else(|| format!("#{i}"))
    };
    let (s, t) = match key.endpoints {
        Endpoints::Loop(i) => (name(i), name(i)),
        Endpoints::Directed(i, j) | Endpoints::Undirected(i, j) => (name(i), name(j)),
    };
    TemplateError::DisallowedEdge {
        interaction: key.interaction.to_string(),
        source_color: s,
        target_color: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAIL: &str = r#"{
        "version": 1,
        "colors": ["port", "cut", "boat", "fw", "fsar", "helo", "uav", "qd"],
        "directed": {"carrying": {
            "cut": ["port"], "boat": ["port", "cut"], "fw": ["port"], "fsar": ["port"],
            "helo": ["port", "cut"], "uav": ["cut", "boat"],
            "qd": ["cut", "boat", "fw", "fsar", "helo"]}}
    }"#;

    #[test]
    fn sailboat_parses() {
        let t = NetworkTemplate::parse_str(SAIL).unwrap();
        assert_eq!(t.colors().len(), 8);
        assert_eq!(t.interactions().len(), 1);
        let d = &t.interactions()[0];
        assert!(d.id.directed);
        assert_eq!(d.monoid, MonoidKind::BooleanOr);
        let c = |n| Color::new(n).unwrap();
        assert!(d.allows(&c("helo"), &c("cut")));
        assert!(!d.allows(&c("cut"), &c("helo")));
    }

    #[test]
    fn degenerate_template() {
        let t = NetworkTemplate::parse_str(r#"{"version":1,"colors":["a"],"directed":{},"undirected":{}}"#).unwrap();
        assert!(t.interactions().is_empty());
    }

    #[test]
    fn unknown_color_is_named() {
        let err = NetworkTemplate::parse_str(
            r#"{"version":1,"colors":["cut","qd"],"directed":{"carrying":{"qd":["cut","x"]}}}"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            TemplateError::UnknownColor {
                color: "x".into(),
                interaction: "carrying".into()
            }
        );
    }

    #[test]
    fn rejects_duplicates_unknown_keys_and_versions() {
        let dup = r#"{"version":1,"colors":["a","b"],"directed":{"r":{"a":["b"]},"r":{"b":["a"]}}}"#;
        assert!(matches!(
            NetworkTemplate::parse_str(dup),
            Err(TemplateError::DuplicateInteraction { directed: true, .. })
        ));
        let unknown = r#"{"version":1,"colors":["a"],"extra":1}"#;
        assert!(matches!(NetworkTemplate::parse_str(unknown), Err(TemplateError::Json(_))));
        let version = r#"{"version":2,"colors":["a"]}"#;
        assert_eq!(NetworkTemplate::parse_str(version), Err(TemplateError::UnsupportedVersion(2)));
        let missing = r#"{"colors":["a"]}"#;
        assert!(matches!(NetworkTemplate::parse_str(missing), Err(TemplateError::Json(_))));
        let dup_color = r#"{"version":1,"colors":["a","a"]}"#;
        assert!(matches!(NetworkTemplate::parse_str(dup_color), Err(TemplateError::DuplicateColor(_))));
        assert!(matches!(NetworkTemplate::parse_str("{"), Err(TemplateError::Json(_))));
    }

    #[test]
    fn extended_interaction_form() {
        let t = NetworkTemplate::parse_str(
            r#"{"version":1,"colors":["a"],"undirected":{"link":{"pairs":{"a":["a"]},"monoid":"nat_sum","loops":true}}}"#,
        )
        .unwrap();
        let d = &t.interactions()[0];
        assert_eq!(d.monoid, MonoidKind::NatSum);
        assert!(d.loops);
        let back = NetworkTemplate::parse(t.to_json().to_string().as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sailboat_generators_on_mixed_word() {
        let op = InducedOperad::new(NetworkTemplate::parse_str(SAIL).unwrap());
        let typ = op.net_type(&["cut", "helo", "qd", "qd"]).unwrap();
        let gens = op.generators(&typ).unwrap();
        assert_eq!(gens.len(), 5);
        let endpoints: Vec<Endpoints> = gens
            .iter()
            .map(|g| g.edges().keys().next().unwrap().endpoints)
            .collect();
        use Endpoints::Directed as D;
        assert_eq!(endpoints, vec![D(1, 0), D(2, 0), D(2, 1), D(3, 0), D(3, 1)]);
        assert!(op.generators(&NetType::default()).unwrap().is_empty());
    }

    #[test]
    fn undirected_pair_on_repeated_color() {
        let t = NetworkTemplate::parse_str(r#"{"version":1,"colors":["a"],"undirected":{"comms":{"a":["a"]}}}"#).unwrap();
        let op = InducedOperad::new(t);
        let gens = op.generators(&op.net_type(&["a", "a"]).unwrap()).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(*gens[0].edges().keys().next().unwrap(), EdgeKey::new(InteractionId::undirected("comms"), Endpoints::Undirected(0, 1)));
    }

    #[test]
    fn disallowed_edges_are_unconstructible() {
        let op = InducedOperad::new(NetworkTemplate::parse_str(SAIL).unwrap());
        let typ = op.net_type(&["cut", "qd"]).unwrap();
        assert!(matches!(
            op.directed_edge(&typ, "carrying", 0, 1),
            Err(TemplateError::DisallowedEdge { .. })
        ));
        assert!(op.directed_edge(&typ, "carrying", 1, 0).is_ok());
        assert!(op.net_type(&["submarine"]).is_err());
    }
}
