//! Event schema set: event types, their super-types and argument roles.
//!
//! The hierarchy is one level deep. Every event type names a parent
//! super-type (e.g. `JusticeEvent`) that is not itself an event type, and
//! siblings are the other types sharing that parent.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The keyword reserved for the trigger span in rendered classes.
pub const MENTION_FIELD: &str = "mention";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoleDef {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTypeDef {
    pub name: String,
    pub parent: String,
    pub roles: Vec<RoleDef>,
}

impl EventTypeDef {
    pub fn new(name: impl Into<String>, parent: impl Into<String>, roles: &[&str]) -> Self {
        EventTypeDef {
            name: name.into(),
            parent: parent.into(),
            roles: roles
                .iter()
                .map(|r| RoleDef {
                    name: r.to_string(),
                })
                .collect(),
        }
    }

    pub fn role_names(&self) -> impl Iterator<Item = &str> {
        self.roles.iter().map(|r| r.name.as_str())
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.roles.iter().any(|r| r.name == role)
    }
}

/// Immutable after construction; cheap to share behind `&` across workers.
#[derive(Debug, Clone)]
pub struct Ontology {
    pub name: String,
    event_types: Vec<EventTypeDef>,
    index: HashMap<String, usize>,
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.event_types == other.event_types
    }
}

#[derive(Serialize, Deserialize)]
struct OntologyFile {
    name: String,
    event_types: Vec<EventTypeFile>,
}

#[derive(Serialize, Deserialize)]
struct EventTypeFile {
    name: String,
    parent: String,
    roles: Vec<String>,
}

/// Python-style identifier: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

fn check_name(what: &str, name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Ontology(format!("empty {what} name")));
    }
    if !is_identifier(name) || PYTHON_KEYWORDS.contains(&name) {
        return Err(Error::Ontology(format!(
            "{what} name `{name}` is not a valid identifier"
        )));
    }
    Ok(())
}

impl Ontology {
    pub fn new(name: impl Into<String>, event_types: Vec<EventTypeDef>) -> Result<Self> {
        let name = name.into();
        if event_types.is_empty() {
            return Err(Error::Ontology(format!("ontology `{name}` has no event types")));
        }
        let mut index = HashMap::with_capacity(event_types.len());
        for (i, et) in event_types.iter().enumerate() {
            check_name("event type", &et.name)?;
            if index.insert(et.name.clone(), i).is_some() {
                return Err(Error::Ontology(format!("duplicate event type `{}`", et.name)));
            }
            if et.parent.is_empty() {
                return Err(Error::Ontology(format!(
                    "event type `{}` has an empty parent",
                    et.name
                )));
            }
            check_name("parent", &et.parent)?;
            let mut seen = HashSet::new();
            for role in &et.roles {
                if role.name.is_empty() {
                    return Err(Error::Ontology(format!(
                        "event type `{}` has an empty role name",
                        et.name
                    )));
                }
                check_name(&format!("role of `{}`", et.name), &role.name)?;
                if role.name == MENTION_FIELD {
                    return Err(Error::Ontology(format!(
                        "event type `{}` declares reserved role `{MENTION_FIELD}`",
                        et.name
                    )));
                }
                if !seen.insert(role.name.as_str()) {
                    return Err(Error::Ontology(format!(
                        "event type `{}` repeats role `{}`",
                        et.name, role.name
                    )));
                }
            }
        }
        // One level only: a parent must be a super-type, never another event type.
        for et in &event_types {
            if index.contains_key(&et.parent) {
                return Err(Error::Ontology(format!(
                    "event type `{}` has parent `{}` which is itself an event type; \
                     only one level of hierarchy is supported",
                    et.name, et.parent
                )));
            }
        }
        Ok(Ontology {
            name,
            event_types,
            index,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: OntologyFile =
            serde_json::from_str(s).map_err(|e| Error::json("ontology", e))?;
        let types = file
            .event_types
            .into_iter()
            .map(|et| EventTypeDef {
                name: et.name,
                parent: et.parent,
                roles: et.roles.into_iter().map(|name| RoleDef { name }).collect(),
            })
            .collect();
        Ontology::new(file.name, types)
    }

    /// Canonical JSON: keys in fixed order, two-space indentation, trailing newline.
    pub fn to_json_string(&self) -> String {
        let file = OntologyFile {
            name: self.name.clone(),
            event_types: self
                .event_types
                .iter()
                .map(|et| EventTypeFile {
                    name: et.name.clone(),
                    parent: et.parent.clone(),
                    roles: et.role_names().map(str::to_owned).collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("ontology serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn event_types(&self) -> &[EventTypeDef] {
        &self.event_types
    }

    pub fn len(&self) -> usize {
        self.event_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_types.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&EventTypeDef> {
        self.index.get(name).map(|&i| &self.event_types[i])
    }

    pub fn require(&self, name: &str) -> Result<&EventTypeDef> {
        self.get(name)
            .ok_or_else(|| Error::UnknownEventType(name.to_string()))
    }

    /// Position of the type in file order.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Distinct role names across all event types.
    pub fn role_names(&self) -> BTreeSet<&str> {
        self.event_types
            .iter()
            .flat_map(|et| et.role_names())
            .collect()
    }

    /// Other event types sharing `name`'s parent, in file order.
    pub fn siblings(&self, name: &str) -> Result<Vec<&EventTypeDef>> {
        let target = self.require(name)?;
        Ok(self
            .event_types
            .iter()
            .filter(|et| et.name != target.name && et.parent == target.parent)
            .collect())
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ontology::from_json_str(&text)
}

/// The ACE05 schema as used for sentence-level extraction (33 types, 22 roles).
pub const ACE05_ONTOLOGY_JSON: &str = include_str!("../data/ace05_ontology.json");

pub fn ace05() -> Ontology {
    Ontology::from_json_str(ACE05_ONTOLOGY_JSON).expect("bundled ACE05 ontology is valid")
}
