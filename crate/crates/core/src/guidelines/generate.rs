use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::exemplar::{select_exemplars, ExemplarBundle, NegativeMode};
use super::prompt::{build_consolidation_prompt, build_generation_prompt};
use super::{GuidelineSet, GuidelineStore, Provenance, ARGUMENTS_KEY, EVENT_DEFINITION_KEY};
use crate::corpus::CorpusSplit;
use crate::error::{Error, Result};
use crate::llmgate::{bounded_map, ChatClient, ChatMessage, ChatRequest, Completion};
use crate::ontology::{EventTypeDef, Ontology, MENTION_FIELD};
use crate::variant::Variant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Total attempts per event type, counting the first.
    pub max_attempts: usize,
    /// Sampling temperature for the five diverse definitions.
    pub temperature: f64,
    pub consolidation_temperature: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_attempts: 3,
            temperature: 1.0,
            consolidation_temperature: 0.0,
        }
    }
}

/// Walks `s` outside string literals, letting `f` decide what to emit for
/// each character. `f` gets the remaining characters and returns how many it
/// consumed.
fn outside_strings(s: &str, mut f: impl FnMut(&[char], &mut String) -> usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_str {
            out.push(c);
            if c == '\\' {
                if let Some(&n) = chars.get(i + 1) {
                    out.push(n);
                    i += 1;
                }
            } else if c == '"' {
                in_str = false;
            }
            i += 1;
        } else if c == '"' {
            in_str = true;
            out.push(c);
            i += 1;
        } else {
            i += f(&chars[i..], &mut out).max(1);
        }
    }
    out
}

/// Drops `//` comments and commas before a closing bracket, both of which
/// LLMs copy from the requested output format.
fn relax(s: &str) -> String {
    let no_comments = outside_strings(s, |rest, out| {
        if rest.starts_with(&['/', '/']) {
            rest.iter().take_while(|&&c| c != '\n').count()
        } else {
            out.push(rest[0]);
            1
        }
    });
    outside_strings(&no_comments, |rest, out| {
        let dangling = rest[0] == ','
            && matches!(rest[1..].iter().find(|c| !c.is_whitespace()), Some('}' | ']') | None);
        if !dangling {
            out.push(rest[0]);
        }
        1
    })
}

fn parse_relaxed(s: &str) -> std::result::Result<Value, String> {
    serde_json::from_str(s).or_else(|first| serde_json::from_str(&relax(s)).map_err(|_| first.to_string()))
}

/// Finds the JSON object in an LLM reply: the first ```json fenced block,
/// otherwise the span from the first `{` to the last `}`.
pub fn extract_json(raw: &str) -> std::result::Result<Value, String> {
    let lower = raw.to_ascii_lowercase();
    if let Some(open) = lower.find("```json") {
        let body_start = open + "```json".len();
        let body = match raw[body_start..].find("```") {
            Some(close) => &raw[body_start..body_start + close],
            None => &raw[body_start..],
        };
        return parse_relaxed(body.trim()).map_err(|e| format!("fenced JSON block does not parse: {e}"));
    }
    match (raw.find('{'), raw.rfind('}')) {
        (Some(a), Some(b)) if a < b => {
            parse_relaxed(&raw[a..=b]).map_err(|e| format!("JSON object does not parse: {e}"))
        }
        _ => Err("reply contains no JSON object".into()),
    }
}

fn definitions(v: &Value, what: &str, want: usize) -> std::result::Result<Vec<String>, String> {
    let list: Vec<String> = match v {
        Value::String(s) if want == 1 => vec![s.clone()],
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.clone()),
                other => Err(format!("{what}: definitions must be strings, found {other}")),
            })
            .collect::<std::result::Result<_, _>>()?,
        other => return Err(format!("{what}: expected a list of {want} definition(s), found {other}")),
    };
    if list.len() != want {
        return Err(format!("{what}: expected {want} definition(s), found {}", list.len()));
    }
    if let Some(k) = list.iter().position(|d| d.trim().is_empty()) {
        return Err(format!("{what}: definition {} is empty", k + 1));
    }
    Ok(list)
}

/// Matches role keys exactly, then case-insensitively.
fn lookup<'a>(args: &'a serde_json::Map<String, Value>, role: &str) -> Option<&'a Value> {
    args.get(role).or_else(|| {
        args.iter()
            .find(|(k, _)| k.trim().eq_ignore_ascii_case(role))
            .map(|(_, v)| v)
    })
}

/// Event definitions and per-role definitions.
type Definitions = (Vec<String>, BTreeMap<String, Vec<String>>);

/// Validates a reply against the event type and returns (event, role)
/// definitions with `want` entries each.
fn read_reply(
    v: &Value,
    def: &EventTypeDef,
    want: usize,
) -> std::result::Result<Definitions, String> {
    let obj = v.as_object().ok_or("top-level JSON value is not an object")?;
    let event = obj
        .get(EVENT_DEFINITION_KEY)
        .ok_or_else(|| format!("missing \"{EVENT_DEFINITION_KEY}\" key"))?;
    let event_definitions = definitions(event, &format!("\"{EVENT_DEFINITION_KEY}\""), want)?;

    let empty = serde_json::Map::new();
    let args = match obj.get(ARGUMENTS_KEY) {
        Some(Value::Object(m)) => m,
        None | Some(Value::Null) => &empty,
        Some(Value::Array(a)) if a.is_empty() => &empty,
        Some(other) => return Err(format!("\"{ARGUMENTS_KEY}\" must be an object, found {other}")),
    };
    let mut role_definitions = BTreeMap::new();
    for role in def.role_names() {
        let v = lookup(args, role).ok_or_else(|| format!("missing definitions for argument \"{role}\""))?;
        role_definitions.insert(role.to_string(), definitions(v, &format!("argument \"{role}\""), want)?);
    }
    for key in args.keys() {
        if key != MENTION_FIELD && !def.role_names().any(|r| r.eq_ignore_ascii_case(key.trim())) {
            log::debug!("`{}`: ignoring definitions for unknown argument `{key}`", def.name);
        }
    }
    Ok((event_definitions, role_definitions))
}

/// Sends `prompt`, retrying with the validation error appended until the
/// reply passes `read_reply` or attempts run out.
fn ask_until_valid(
    def: &EventTypeDef,
    prompt: &str,
    temperature: f64,
    want: usize,
    client: &dyn ChatClient,
    cfg: &GenerationConfig,
) -> Result<(Completion, Definitions)> {
    let attempts = cfg.max_attempts.max(1);
    let mut text = prompt.to_string();
    let mut last_error = String::new();
    let mut raw = String::new();
    for attempt in 1..=attempts {
        let req = ChatRequest::new(vec![ChatMessage::user(text.clone())]).with_temperature(temperature);
        let completion = client.complete(&req)?;
        match extract_json(&completion.text).and_then(|v| read_reply(&v, def, want)) {
            Ok(defs) => return Ok((completion, defs)),
            Err(e) => {
                log::warn!("`{}` attempt {attempt}/{attempts}: {e}", def.name);
                last_error = e;
                raw = completion.text;
                text = format!(
                    "{prompt}\n\nYour previous reply could not be used: {last_error}\nReply again with only the JSON object in the required output format."
                );
            }
        }
    }
    Err(Error::GenerationFailed {
        event_type: def.name.clone(),
        attempts,
        last_error,
        raw_response: raw,
    })
}

fn provenance(c: &Completion) -> Option<Provenance> {
    Some(Provenance {
        model: c.model.clone(),
        timestamp: c.timestamp.clone(),
        prompt_hash: c.prompt_hash.clone(),
    })
}

/// Generates the five sampled guidelines for one event type.
pub fn generate(
    def: &EventTypeDef,
    bundle: &ExemplarBundle,
    client: &dyn ChatClient,
    cfg: &GenerationConfig,
) -> Result<GuidelineSet> {
    if bundle.event_type != def.name {
        return Err(Error::Guideline(format!(
            "exemplars for `{}` cannot generate guidelines for `{}`",
            bundle.event_type, def.name
        )));
    }
    let variant = match bundle.negative_mode {
        NegativeMode::None => Variant::P,
        NegativeMode::Random => Variant::PN,
        NegativeMode::Sibling => Variant::PS,
    };
    let want = variant.definitions_per_item();
    let prompt = build_generation_prompt(def, bundle);
    let (completion, (event_definitions, role_definitions)) =
        ask_until_valid(def, &prompt, cfg.temperature, want, client, cfg)?;
    Ok(GuidelineSet {
        event_type: def.name.clone(),
        variant,
        event_definitions,
        role_definitions,
        provenance: provenance(&completion),
    })
}

/// Merges the five PN or PS definitions of a set into one per item.
pub fn consolidate(
    def: &EventTypeDef,
    set: &GuidelineSet,
    client: &dyn ChatClient,
    cfg: &GenerationConfig,
) -> Result<GuidelineSet> {
    let variant = match set.variant {
        Variant::PN => Variant::PNInt,
        Variant::PS => Variant::PSInt,
        other => {
            return Err(Error::Guideline(format!(
                "only PN and PS guidelines can be consolidated, `{}` is {other}",
                set.event_type
            )))
        }
    };
    set.validate(def)?;
    let prompt = build_consolidation_prompt(def, set);
    let (completion, (event_definitions, role_definitions)) =
        ask_until_valid(def, &prompt, cfg.consolidation_temperature, 1, client, cfg)?;
    Ok(GuidelineSet {
        event_type: def.name.clone(),
        variant,
        event_definitions,
        role_definitions,
        provenance: provenance(&completion),
    })
}

/// Generates a store of `variant` (P, PN or PS) for every ontology type that
/// has positives in `split`. Types without positives are skipped with a
/// warning. Requests run concurrently up to the client's in-flight limit.
pub fn generate_all(
    split: &CorpusSplit,
    ont: &Ontology,
    variant: Variant,
    client: &dyn ChatClient,
    cfg: &GenerationConfig,
    seed: u64,
) -> Result<GuidelineStore> {
    let mode = NegativeMode::for_variant(variant).ok_or_else(|| {
        Error::Guideline(format!("variant {variant} is not generated from exemplars"))
    })?;
    let mut bundles = Vec::new();
    for def in ont.event_types() {
        if !split.instances.iter().any(|i| i.has_type(&def.name)) {
            log::warn!("skipping `{}`: no positive instance in `{}`", def.name, split.name);
            continue;
        }
        bundles.push((def, select_exemplars(split, ont, &def.name, mode, seed)?));
    }
    let results = bounded_map(&bundles, client.max_in_flight(), |(def, bundle)| {
        generate(def, bundle, client, cfg)
    });
    let mut store = GuidelineStore::new(variant);
    for set in results {
        store.insert(set?)?;
    }
    Ok(store)
}

/// Consolidates every set of a PN or PS store.
pub fn consolidate_all(
    store: &GuidelineStore,
    ont: &Ontology,
    client: &dyn ChatClient,
    cfg: &GenerationConfig,
) -> Result<GuidelineStore> {
    let target = match store.variant {
        Variant::PN => Variant::PNInt,
        Variant::PS => Variant::PSInt,
        other => return Err(Error::Guideline(format!("cannot consolidate a {other} store"))),
    };
    let items: Vec<(&EventTypeDef, &GuidelineSet)> = store
        .sets
        .values()
        .map(|s| Ok((ont.require(&s.event_type)?, s)))
        .collect::<Result<_>>()?;
    let results = bounded_map(&items, client.max_in_flight(), |(def, set)| {
        consolidate(def, set, client, cfg)
    });
    let mut out = GuidelineStore::new(target);
    for set in results {
        out.insert(set?)?;
    }
    Ok(out)
}
