use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_identifier, check_version, parse_colors, TemplateError};
use crate::operad::Color;

/// `count` tokens of one color at one place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenSpec {
    pub color: String,
    pub place: String,
    #[serde(default = "one")]
    pub count: u32,
}

fn one() -> u32 {
    1
}

/// A primitive task: consumes the input tokens and, after `duration` ticks,
/// produces the output tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub name: String,
    pub inputs: Vec<TokenSpec>,
    pub outputs: Vec<TokenSpec>,
    pub duration: u32,
}

/// One individual agent's route through a transition.
///
/// Tokens of each color are paired in declared order: the k-th input token of a
/// color moves to the place of the k-th output token of that color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lane {
    pub color: Color,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskingTemplate {
    colors: Vec<Color>,
    places: Vec<String>,
    transitions: Vec<Transition>,
    lanes: Vec<Vec<Lane>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskingJson {
    version: u64,
    colors: Vec<String>,
    places: Vec<String>,
    #[serde(default)]
    transitions: Vec<Transition>,
}

fn expand(side: &[TokenSpec]) -> impl Iterator<Item = &TokenSpec> {
    side.iter().flat_map(|t| std::iter::repeat_n(t, t.count as usize))
}

impl TaskingTemplate {
    pub fn new(
        colors: Vec<Color>,
        places: Vec<String>,
        transitions: Vec<Transition>,
    ) -> Result<Self, TemplateError> {
        let mut seen = HashSet::new();
        for c in &colors {
            if !seen.insert(c.as_str()) {
                return Err(TemplateError::DuplicateColor(c.to_string()));
            }
        }
        let mut seen = HashSet::new();
        for p in &places {
            check_identifier(p)?;
            if !seen.insert(p.as_str()) {
                return Err(TemplateError::Duplicate {
                    kind: "place",
                    name: p.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        let mut lanes = Vec::with_capacity(transitions.len());
        for tr in &transitions {
            check_identifier(&tr.name)?;
            if !seen.insert(tr.name.as_str()) {
                return Err(TemplateError::Duplicate {
                    kind: "transition",
                    name: tr.name.clone(),
                });
            }
            if tr.inputs.is_empty() || tr.outputs.is_empty() {
                return Err(TemplateError::EmptyTransitionSide(tr.name.clone()));
            }
            if tr.duration == 0 {
                return Err(TemplateError::InvalidDuration(tr.name.clone()));
            }
            let mut balance: BTreeMap<&str, i64> = BTreeMap::new();
            for (side, sign) in [(&tr.inputs, 1), (&tr.outputs, -1)] {
                for tok in side {
                    if tok.count == 0 {
                        return Err(TemplateError::InvalidCount(tr.name.clone()));
                    }
                    if !colors.iter().any(|c| c.as_str() == tok.color) {
                        return Err(TemplateError::UnknownColor {
                            color: tok.color.clone(),
                            interaction: tr.name.clone(),
                        });
                    }
                    if !places.contains(&tok.place) {
                        return Err(TemplateError::UnknownPlace {
                            place: tok.place.clone(),
                            transition: tr.name.clone(),
                        });
                    }
                    *balance.entry(tok.color.as_str()).or_default() += sign * i64::from(tok.count);
                }
            }
            if let Some((color, _)) = balance.iter().find(|(_, &v)| v != 0) {
                return Err(TemplateError::ColorCountMismatch {
                    transition: tr.name.clone(),
                    color: color.to_string(),
                });
            }
            lanes.push(Self::pair_lanes(&places, tr));
        }
        Ok(TaskingTemplate {
            colors,
            places,
            transitions,
            lanes,
        })
    }

    fn pair_lanes(places: &[String], tr: &Transition) -> Vec<Lane> {
        let place = |p: &str| places.iter().position(|q| q == p).expect("validated place");
        let mut outs: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for tok in expand(&tr.outputs) {
            outs.entry(tok.color.as_str()).or_default().push(place(&tok.place));
        }
        let mut used: BTreeMap<&str, usize> = BTreeMap::new();
        expand(&tr.inputs)
            .map(|tok| {
                let k = used.entry(tok.color.as_str()).or_default();
                let to = outs[tok.color.as_str()][*k];
                *k += 1;
                Lane {
                    color: Color::new(tok.color.clone()).expect("validated color"),
                    from: place(&tok.place),
                    to,
                }
            })
            .collect()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, TemplateError> {
        let raw: TaskingJson = serde_json::from_slice(bytes)?;
        check_version(raw.version)?;
        let colors = parse_colors(&raw.colors)?;
        Self::new(colors, raw.places, raw.transitions)
    }

    pub fn parse_str(s: &str) -> Result<Self, TemplateError> {
        Self::parse(s.as_bytes())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "version": super::TEMPLATE_VERSION,
            "colors": self.colors.iter().map(Color::to_string).collect::<Vec<_>>(),
            "places": self.places,
            "transitions": self.transitions,
        })
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p == name)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Per-token routes of transition `k`, in declared input order.
    pub fn lanes(&self, k: usize) -> &[Lane] {
        &self.lanes[k]
    }

    pub fn max_duration(&self) -> u32 {
        self.transitions.iter().map(|t| t.duration).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RENDEZVOUS: &str = r#"{
        "version": 1,
        "colors": ["uh60", "hc130"],
        "places": ["a", "b", "c", "d"],
        "transitions": [
            {"name": "t1", "inputs": [{"color": "uh60", "place": "a"}], "outputs": [{"color": "uh60", "place": "c"}], "duration": 2},
            {"name": "t2", "inputs": [{"color": "uh60", "place": "b"}], "outputs": [{"color": "uh60", "place": "c"}], "duration": 1},
            {"name": "t3", "inputs": [{"color": "uh60", "place": "c"}, {"color": "hc130", "place": "c"}],
                           "outputs": [{"color": "uh60", "place": "c"}, {"color": "hc130", "place": "c"}], "duration": 1},
            {"name": "t4", "inputs": [{"color": "uh60", "place": "c", "count": 2}], "outputs": [{"color": "uh60", "place": "d", "count": 2}], "duration": 2}
        ]
    }"#;

    #[test]
    fn rendezvous_net() {
        let t = TaskingTemplate::parse_str(RENDEZVOUS).unwrap();
        assert_eq!(t.places(), ["a", "b", "c", "d"]);
        assert_eq!(t.transitions().len(), 4);
        let t3 = &t.transitions()[2];
        assert_eq!(t3.inputs, t3.outputs);
        assert_eq!(t.lanes(3).len(), 2);
        assert!(t.lanes(3).iter().all(|l| l.from == 2 && l.to == 3));
        assert_eq!(t.max_duration(), 2);
    }

    #[test]
    fn token_preservation_is_enforced() {
        let bad = r#"{"version":1,"colors":["uh60"],"places":["a","b"],"transitions":[
            {"name":"t","inputs":[{"color":"uh60","place":"a","count":2}],"outputs":[{"color":"uh60","place":"b"}],"duration":1}]}"#;
        assert_eq!(
            TaskingTemplate::parse_str(bad),
            Err(TemplateError::ColorCountMismatch {
                transition: "t".into(),
                color: "uh60".into()
            })
        );
    }

    #[test]
    fn other_validation() {
        let none = r#"{"version":1,"colors":["x"],"places":["a"],"transitions":[]}"#;
        assert!(TaskingTemplate::parse_str(none).unwrap().transitions().is_empty());
        let place = r#"{"version":1,"colors":["x"],"places":["a"],"transitions":[
            {"name":"t","inputs":[{"color":"x","place":"a"}],"outputs":[{"color":"x","place":"z"}],"duration":1}]}"#;
        assert!(matches!(TaskingTemplate::parse_str(place), Err(TemplateError::UnknownPlace { .. })));
        let dur = r#"{"version":1,"colors":["x"],"places":["a"],"transitions":[
            {"name":"t","inputs":[{"color":"x","place":"a"}],"outputs":[{"color":"x","place":"a"}],"duration":0}]}"#;
        assert!(matches!(TaskingTemplate::parse_str(dur), Err(TemplateError::InvalidDuration(_))));
        let empty = r#"{"version":1,"colors":["x"],"places":["a"],"transitions":[
            {"name":"t","inputs":[],"outputs":[],"duration":1}]}"#;
        assert!(matches!(TaskingTemplate::parse_str(empty), Err(TemplateError::EmptyTransitionSide(_))));
    }

    #[test]
    fn round_trip() {
        let t = TaskingTemplate::parse_str(RENDEZVOUS).unwrap();
        let back = TaskingTemplate::parse(t.to_json().to_string().as_bytes()).unwrap();
        assert_eq!(back, t);
    }
}
