//! Templates: the combinatorial data that generates an operad.
//!
//! A [`NetworkTemplate`] lists colors and, per interaction, which color pairs may
//! be linked. A [`TaskingTemplate`] is a Petri net whose transitions are the
//! primitive tasks of a planning operad. Both are read from JSON with a required
//! `"version": 1` field and unknown keys rejected.

mod merge;
mod network;
mod tasking;

use std::collections::HashSet;
use std::fmt;
use std::marker::PhantomData;

use serde::de::{Deserialize, Deserializer, MapAccess, Visitor};
use thiserror::Error;

use crate::operad::{Color, NetType, OperadError};

pub use merge::{merge_templates, SharedPart};
pub use network::{InducedOperad, InteractionDecl, NetworkTemplate};
pub use tasking::{Lane, TaskingTemplate, TokenSpec, Transition};

pub const TEMPLATE_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported version {0}, expected 1")]
    UnsupportedVersion(u64),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate color `{0}`")]
    DuplicateColor(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("duplicate {} interaction `{name}`", if *.directed { "directed" } else { "undirected" })]
    DuplicateInteraction { name: String, directed: bool },
    #[error("unknown color `{color}` in interaction `{interaction}`")]
    UnknownColor { color: String, interaction: String },
    #[error("unknown color `{0}`")]
    ColorNotInTemplate(String),
    #[error("unknown place `{place}` in transition `{transition}`")]
    UnknownPlace { place: String, transition: String },
    #[error("transition `{transition}` does not preserve the number of `{color}` tokens")]
    ColorCountMismatch { transition: String, color: String },
    #[error("transition `{0}` needs nonempty inputs and outputs")]
    EmptyTransitionSide(String),
    #[error("transition `{0}` needs a positive integer duration")]
    InvalidDuration(String),
    #[error("token count must be positive in transition `{0}`")]
    InvalidCount(String),
    #[error("{interaction} does not allow an edge between `{source_color}` and `{target_color}`")]
    DisallowedEdge {
        interaction: String,
        source_color: String,
        target_color: String,
    },
    #[error("identification maps `{color}` to both `{first}` and `{second}`")]
    NonInjectiveIdentification {
        color: String,
        first: String,
        second: String,
    },
    #[error("shared interaction `{0}` has different directionality in the two templates")]
    DirectionalityConflict(String),
    #[error("shared interaction `{0}` has different monoids in the two templates")]
    MonoidConflict(String),
    #[error("shared part refers to unknown {kind} `{name}`")]
    UnknownShared { kind: &'static str, name: String },
    #[error(transparent)]
    Operad(#[from] OperadError),
}

impl From<serde_json::Error> for TemplateError {
    fn from(e: serde_json::Error) -> Self {
        TemplateError::Json(e.to_string())
    }
}

fn parse_color(name: &str) -> Result<Color, TemplateError> {
    Color::new(name).map_err(|_| TemplateError::InvalidIdentifier(name.to_string()))
}

fn check_identifier(name: &str) -> Result<(), TemplateError> {
    if crate::operad::is_identifier(name) {
        Ok(())
    } else {
        Err(TemplateError::InvalidIdentifier(name.to_string()))
    }
}

fn parse_colors(names: &[String]) -> Result<Vec<Color>, TemplateError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let c = parse_color(name)?;
        if !seen.insert(name.as_str()) {
            return Err(TemplateError::DuplicateColor(name.clone()));
        }
        out.push(c);
    }
    Ok(out)
}

fn check_version(v: u64) -> Result<(), TemplateError> {
    if v == TEMPLATE_VERSION {
        Ok(())
    } else {
        Err(TemplateError::UnsupportedVersion(v))
    }
}

/// Checks every color of `typ` is declared.
fn check_type(colors: &[Color], typ: &NetType) -> Result<(), TemplateError> {
    match typ.colors().iter().find(|c| !colors.contains(c)) {
        Some(c) => Err(TemplateError::ColorNotInTemplate(c.to_string())),
        None => Ok(()),
    }
}

/// A JSON object read as an ordered list of entries so that repeated keys are
/// visible to validation instead of silently overwritten.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Entries<V>(pub Vec<(String, V)>);

impl<V> Default for Entries<V> {
    fn default() -> Self {
        Entries(Vec::new())
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for EntriesVisitor<V> {
            type Value = Entries<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, V>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(PhantomData))
    }
}

impl<V> Entries<V> {
    /// First repeated key, if any.
    fn duplicate(&self) -> Option<&str> {
        let mut seen = HashSet::new();
        self.0
            .iter()
            .map(|(k, _)| k.as_str())
            .find(|k| !seen.insert(*k))
    }
}
