//! Annotation guidelines: storage, shape validation, exemplar selection and
//! LLM-backed generation and consolidation.
//!
//! On disk a store is one JSON object per (dataset, variant):
//! `{event_type: {"Event Definition": [...], "Arguments Definitions": {role: [...]}}}`.
//! Generation metadata lives next to it in `<file>.provenance.json`.

mod exemplar;
mod generate;
mod prompt;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ontology::{EventTypeDef, Ontology};
use crate::variant::Variant;

pub use exemplar::{select_exemplars, ExemplarBundle, NegativeMode, NEGATIVES, POSITIVES};
pub use generate::{
    consolidate, consolidate_all, extract_json, generate, generate_all, GenerationConfig,
};
pub use prompt::{build_consolidation_prompt, build_generation_prompt, NEGATIVE_TRIGGER_PREFIX};

pub const EVENT_DEFINITION_KEY: &str = "Event Definition";
pub const ARGUMENTS_KEY: &str = "Arguments Definitions";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub timestamp: String,
    pub prompt_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidelineSet {
    pub event_type: String,
    pub variant: Variant,
    pub event_definitions: Vec<String>,
    pub role_definitions: BTreeMap<String, Vec<String>>,
    pub provenance: Option<Provenance>,
}

impl GuidelineSet {
    /// Checks the set against its event type: one entry per role, no extra
    /// roles, and 5 (sampled variants) or 1 definitions everywhere.
    pub fn validate(&self, def: &EventTypeDef) -> Result<()> {
        let fail = |msg: String| Err(Error::Guideline(format!("`{}` ({}): {msg}", self.event_type, self.variant)));
        if self.event_type != def.name {
            return fail(format!("set does not belong to `{}`", def.name));
        }
        let want = self.variant.definitions_per_item();
        if want == 0 {
            return fail("the no-guideline variant carries no definitions".into());
        }
        if self.event_definitions.len() != want {
            return fail(format!(
                "expected {want} event definition(s), found {}",
                self.event_definitions.len()
            ));
        }
        for role in def.role_names() {
            match self.role_definitions.get(role) {
                None => return fail(format!("missing definitions for role `{role}`")),
                Some(defs) if defs.len() != want => {
                    return fail(format!(
                        "expected {want} definition(s) for role `{role}`, found {}",
                        defs.len()
                    ))
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = self.role_definitions.keys().find(|r| !def.has_role(r)) {
            return fail(format!("role `{extra}` is not defined for this event type"));
        }
        Ok(())
    }

    fn to_json(&self, def: Option<&EventTypeDef>) -> Value {
        let mut args = Map::new();
        // ontology role order when known, for readable files
        let order: Vec<&str> = match def {
            Some(d) => d.role_names().collect(),
            None => self.role_definitions.keys().map(String::as_str).collect(),
        };
        for role in order {
            if let Some(defs) = self.role_definitions.get(role) {
                args.insert(role.to_string(), Value::from(defs.clone()));
            }
        }
        let mut obj = Map::new();
        obj.insert(EVENT_DEFINITION_KEY.into(), Value::from(self.event_definitions.clone()));
        obj.insert(ARGUMENTS_KEY.into(), Value::Object(args));
        Value::Object(obj)
    }
}

/// Accepts a list of strings, or a bare string as a one-element list.
fn string_list(v: &Value, what: &str) -> std::result::Result<Vec<String>, String> {
    match v {
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Array(items) => items
            .iter()
            .map(|i| {
                i.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| format!("{what}: expected strings, found {i}"))
            })
            .collect(),
        other => Err(format!("{what}: expected a string or list of strings, found {other}")),
    }
}

/// Reads one entry of the on-disk schema, without checking counts.
fn set_from_json(event_type: &str, variant: Variant, v: &Value) -> std::result::Result<GuidelineSet, String> {
    let obj = v.as_object().ok_or_else(|| format!("`{event_type}`: expected an object"))?;
    let event_definitions = string_list(
        obj.get(EVENT_DEFINITION_KEY)
            .ok_or_else(|| format!("`{event_type}`: missing \"{EVENT_DEFINITION_KEY}\""))?,
        &format!("`{event_type}` event definition"),
    )?;
    let mut role_definitions = BTreeMap::new();
    match obj.get(ARGUMENTS_KEY) {
        None | Some(Value::Null) => {}
        Some(Value::Object(args)) => {
            for (role, defs) in args {
                role_definitions.insert(
                    role.clone(),
                    string_list(defs, &format!("`{event_type}` role `{role}`"))?,
                );
            }
        }
        Some(other) => return Err(format!("`{event_type}`: \"{ARGUMENTS_KEY}\" must be an object, found {other}")),
    }
    Ok(GuidelineSet {
        event_type: event_type.to_string(),
        variant,
        event_definitions,
        role_definitions,
        provenance: None,
    })
}

/// All guideline sets of one variant, keyed by event type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidelineStore {
    pub variant: Variant,
    pub sets: BTreeMap<String, GuidelineSet>,
}

pub fn provenance_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".provenance.json");
    path.with_file_name(name)
}

impl GuidelineStore {
    pub fn new(variant: Variant) -> Self {
        GuidelineStore {
            variant,
            sets: BTreeMap::new(),
        }
    }

    pub fn get(&self, event_type: &str) -> Option<&GuidelineSet> {
        self.sets.get(event_type)
    }

    pub fn insert(&mut self, set: GuidelineSet) -> Result<()> {
        if set.variant != self.variant {
            return Err(Error::Guideline(format!(
                "cannot add a {} set for `{}` to a {} store",
                set.variant, set.event_type, self.variant
            )));
        }
        self.sets.insert(set.event_type.clone(), set);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Ontology types without a set.
    pub fn missing<'a>(&self, ont: &'a Ontology) -> Vec<&'a str> {
        ont.event_types()
            .iter()
            .filter(|d| !self.sets.contains_key(&d.name))
            .map(|d| d.name.as_str())
            .collect()
    }

    /// Validates every stored set against the ontology.
    pub fn validate(&self, ont: &Ontology) -> Result<()> {
        for set in self.sets.values() {
            let def = ont.get(&set.event_type).ok_or_else(|| {
                Error::Guideline(format!("guidelines given for unknown event type `{}`", set.event_type))
            })?;
            set.validate(def)?;
        }
        Ok(())
    }

    /// Serialized store, sets in ontology order (unknown types last).
    pub fn to_json_string(&self, ont: Option<&Ontology>) -> String {
        let mut keys: Vec<&String> = self.sets.keys().collect();
        if let Some(ont) = ont {
            keys.sort_by_key(|k| (ont.position(k).unwrap_or(usize::MAX), (*k).clone()));
        }
        let mut root = Map::new();
        for k in keys {
            let def = ont.and_then(|o| o.get(k));
            root.insert(k.clone(), self.sets[k].to_json(def));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("plain JSON");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str, variant: Variant) -> Result<Self> {
        let root: Value = serde_json::from_str(s).map_err(|e| Error::json("guideline store", e))?;
        let obj = root
            .as_object()
            .ok_or_else(|| Error::Guideline("guideline store must be a JSON object".into()))?;
        let mut store = GuidelineStore::new(variant);
        for (event_type, v) in obj {
            let set = set_from_json(event_type, variant, v).map_err(Error::Guideline)?;
            store.sets.insert(event_type.clone(), set);
        }
        Ok(store)
    }

    /// Writes the store and, when any set carries provenance, its sidecar.
    pub fn save(&self, path: impl AsRef<Path>, ont: Option<&Ontology>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string(ont)).map_err(|e| Error::io(path, e))?;
        let prov: BTreeMap<&str, &Provenance> = self
            .sets
            .values()
            .filter_map(|s| s.provenance.as_ref().map(|p| (s.event_type.as_str(), p)))
            .collect();
        if !prov.is_empty() {
            let side = provenance_path(path);
            let mut text = serde_json::to_string_pretty(&prov).expect("plain JSON");
            text.push('\n');
            fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        }
        Ok(())
    }

    /// Loads a store and checks its shape against the ontology.
    pub fn load(path: impl AsRef<Path>, variant: Variant, ont: &Ontology) -> Result<Self> {
        let path = path.as_ref();
        if !variant.uses_guidelines() {
            return Err(Error::Guideline("the no-guideline variant has no store".into()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store = Self::from_json_str(&text, variant)?;
        let side = provenance_path(path);
        if side.exists() {
            let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            let prov: BTreeMap<String, Provenance> = serde_json::from_str(&text)
                .map_err(|e| Error::json(side.display().to_string(), e))?;
            for (event_type, p) in prov {
                if let Some(set) = store.sets.get_mut(&event_type) {
                    set.provenance = Some(p);
                }
            }
        }
        store.validate(ont)?;
        let missing = store.missing(ont);
        if !missing.is_empty() {
            log::warn!(
                "{}: no {variant} guidelines for {} event type(s): {}",
                path.display(),
                missing.len(),
                missing.join(", ")
            );
        }
        Ok(store)
    }
}

/// Reads curated human guidelines (variant H). Values may be single strings
/// or one-element lists; every role of every listed type must be defined.
pub fn load_human(path: impl AsRef<Path>, ont: &Ontology) -> Result<GuidelineStore> {
    GuidelineStore::load(path, Variant::H, ont)
}
