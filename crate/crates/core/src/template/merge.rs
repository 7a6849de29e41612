//! Gluing two network templates along a shared part.
//!
//! The result is the pushout: shared colors and interactions appear once, every
//! other color and interaction of each side is kept, and adjacency tables of
//! shared interactions are unioned.

use std::collections::{BTreeMap, BTreeSet};

use super::{NetworkTemplate, TemplateError};
use crate::operad::{Color, InteractionId};

/// An explicit identification of colors and interactions of `a` with those of `b`.
///
/// Interactions are identified by name; directionality must agree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SharedPart {
    pub colors: Vec<(Color, Color)>,
    pub interactions: Vec<(String, String)>,
}

impl SharedPart {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Identifies every color and every interaction that has the same name on both sides.
    pub fn by_names(a: &NetworkTemplate, b: &NetworkTemplate) -> Self {
        let colors = a
            .colors()
            .iter()
            .filter(|c| b.has_color(c))
            .map(|c| (c.clone(), c.clone()))
            .collect();
        let interactions = a
            .interactions()
            .iter()
            .filter(|d| b.interaction(&d.id).is_some())
            .map(|d| (d.id.name.clone(), d.id.name.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        SharedPart {
            colors,
            interactions,
        }
    }
}

fn injective<'a>(
    pairs: impl Iterator<Item = (&'a str, &'a str)>,
) -> Result<BTreeMap<&'a str, &'a str>, TemplateError> {
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (x, y) in pairs {
        if let Some(prev) = map.insert(x, y) {
            if prev != y {
                return Err(TemplateError::NonInjectiveIdentification {
                    color: x.to_string(),
                    first: prev.to_string(),
                    second: y.to_string(),
                });
            }
        }
    }
    Ok(map)
}

fn fresh(name: &str, taken: &BTreeSet<String>) -> String {
    let mut candidate = format!("b_{name}");
    while taken.contains(&candidate) {
        candidate = format!("b_{candidate}");
    }
    candidate
}

pub fn merge_templates(
    a: &NetworkTemplate,
    b: &NetworkTemplate,
    shared: &SharedPart,
) -> Result<NetworkTemplate, TemplateError> {
    for (x, y) in &shared.colors {
        for (t, c) in [(a, x), (b, y)] {
            if !t.has_color(c) {
                return Err(TemplateError::UnknownShared {
                    kind: "color",
                    name: c.to_string(),
                });
            }
        }
    }
    // a -> b and b -> a must both be functions
    injective(shared.colors.iter().map(|(x, y)| (x.as_str(), y.as_str())))?;
    let b_to_a = injective(shared.colors.iter().map(|(x, y)| (y.as_str(), x.as_str())))?;

    let mut taken: BTreeSet<String> = a.colors().iter().map(Color::to_string).collect();
    let mut colors: Vec<Color> = a.colors().to_vec();
    let mut color_of_b: BTreeMap<Color, Color> = BTreeMap::new();
    for c in b.colors() {
        let target = match b_to_a.get(c.as_str()) {
            Some(x) => Color::new(*x)?,
            None => {
                let name = if taken.contains(c.as_str()) {
                    fresh(c.as_str(), &taken)
                } else {
                    c.to_string()
                };
                taken.insert(name.clone());
                let color = Color::new(name)?;
                colors.push(color.clone());
                color
            }
        };
        color_of_b.insert(c.clone(), target);
    }

    let shared_names = injective(shared.interactions.iter().map(|(x, y)| (y.as_str(), x.as_str())))?;
    injective(shared.interactions.iter().map(|(x, y)| (x.as_str(), y.as_str())))?;

    let mut interactions = a.interactions().to_vec();
    let mut taken_ids: BTreeSet<InteractionId> = interactions.iter().map(|d| d.id.clone()).collect();
    for decl in b.interactions() {
        let mut mapped = decl.clone();
        mapped.pairs = decl
            .pairs
            .iter()
            .map(|(x, ys)| {
                (
                    color_of_b[x].clone(),
                    ys.iter().map(|y| color_of_b[y].clone()).collect::<BTreeSet<_>>(),
                )
            })
            .fold(BTreeMap::new(), |mut acc: BTreeMap<Color, BTreeSet<Color>>, (x, ys)| {
                acc.entry(x).or_default().extend(ys);
                acc
            });
        match shared_names.get(decl.id.name.as_str()) {
            Some(a_name) => {
                let target = interactions
                    .iter_mut()
                    .find(|d| d.id.name == *a_name && d.id.directed == decl.id.directed);
                let Some(target) = target else {
                    if a.interactions().iter().any(|d| d.id.name == *a_name) {
                        return Err(TemplateError::DirectionalityConflict(a_name.to_string()));
                    }
                    return Err(TemplateError::UnknownShared {
                        kind: "interaction",
                        name: a_name.to_string(),
                    });
                };
                if target.monoid != decl.monoid {
                    return Err(TemplateError::MonoidConflict(a_name.to_string()));
                }
                target.loops |= decl.loops;
                for (x, ys) in mapped.pairs {
                    target.pairs.entry(x).or_default().extend(ys);
                }
            }
            None => {
                if taken_ids.contains(&mapped.id) {
                    let names: BTreeSet<String> = taken_ids.iter().map(|i| i.name.clone()).collect();
                    mapped.id.name = fresh(&mapped.id.name, &names);
                }
                taken_ids.insert(mapped.id.clone());
                interactions.push(mapped);
            }
        }
    }
    for (x, y) in &shared.interactions {
        if !a.interactions().iter().any(|d| &d.id.name == x) {
            return Err(TemplateError::UnknownShared {
                kind: "interaction",
                name: x.clone(),
            });
        }
        if !b.interactions().iter().any(|d| &d.id.name == y) {
            return Err(TemplateError::UnknownShared {
                kind: "interaction",
                name: y.clone(),
            });
        }
    }
    NetworkTemplate::new(colors, interactions)
}
