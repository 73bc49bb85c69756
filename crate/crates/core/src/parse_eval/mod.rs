//! Parsing, validation and scoring of model generations.
//!
//! A generation is parsed under the output grammar, each constructor call is
//! checked against the ontology the way instantiating the dataclass would
//! check it, and the surviving events are matched against gold by surface
//! string to compute trigger and argument micro-F1.

mod errors;
mod grammar;
mod score;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codefmt::{render_output, NormalizedEvent};
use crate::corpus::{CorpusSplit, GoldEvent};
use crate::error::{Error, Result};
use crate::ontology::{Ontology, MENTION_FIELD};

pub use errors::{categorize_errors, load_manual_labels, ErrorCategory, ErrorCounts, ErrorReport, InstanceErrors, ManualLabel};
pub use grammar::{parse_calls, strip_wrapping, Call, KwValue, SyntaxError};
pub use score::{normalize_ws, score, MetricCounts, ScoreReport, TypeScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    ParseError,
    ValidationError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Syntax,
    UnknownClass,
    HallucinatedArgument,
    MissingMention,
    MissingRole,
    NonStringValue,
    DuplicateKeyword,
    CoercedValue,
    TypeNotPrompted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Fatal diagnostics make the record a validation error.
    pub fatal: bool,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, fatal: bool, message: impl Into<String>) -> Self {
        Diagnostic {
            kind,
            fatal,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Source {
    pub instance_id: String,
    pub prompted_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedEvent {
    #[serde(flatten)]
    pub event: NormalizedEvent,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    pub prompted_type: String,
    pub raw_text: String,
    pub parse_status: ParseStatus,
    pub events: Vec<PredictedEvent>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PredictionRecord {
    pub fn failed(&self) -> bool {
        self.parse_status != ParseStatus::Ok
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionInput {
    pub instance_id: String,
    pub prompted_type: String,
    pub raw_text: String,
}

/// Turns one constructor call into an event, or `None` when the call cannot
/// produce one. Diagnostics are appended to `diags`.
fn validate_call(call: &Call, ont: &Ontology, source: &Source, diags: &mut Vec<Diagnostic>) -> Option<NormalizedEvent> {
    use DiagnosticKind::*;
    let Some(def) = ont.get(&call.name) else {
        diags.push(Diagnostic::new(UnknownClass, true, format!("unknown event class `{}`", call.name)));
        return None;
    };
    if call.name != source.prompted_type {
        diags.push(Diagnostic::new(
            TypeNotPrompted,
            false,
            format!("`{}` emitted for a `{}` prompt", call.name, source.prompted_type),
        ));
    }
    let mut mention = None;
    let mut arguments: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen: Vec<&str> = Vec::new();
    let mut usable = true;
    for (key, value) in &call.kwargs {
        if seen.contains(&key.as_str()) {
            diags.push(Diagnostic::new(
                DuplicateKeyword,
                true,
                format!("`{}` repeats keyword `{key}`", call.name),
            ));
            continue;
        }
        seen.push(key);
        if key == MENTION_FIELD {
            match value {
                KwValue::Str(s) => mention = Some(s.clone()),
                KwValue::List(items) if items.len() == 1 => {
                    diags.push(Diagnostic::new(
                        CoercedValue,
                        false,
                        format!("`{}` mention given as a one-element list", call.name),
                    ));
                    mention = Some(items[0].clone());
                }
                KwValue::List(items) => {
                    diags.push(Diagnostic::new(
                        NonStringValue,
                        true,
                        format!("`{}` mention is a list of {} strings", call.name, items.len()),
                    ));
                    usable = false;
                }
            }
        } else if def.has_role(key) {
            let values = match value {
                KwValue::List(items) => items.clone(),
                KwValue::Str(s) => {
                    diags.push(Diagnostic::new(
                        CoercedValue,
                        false,
                        format!("`{}.{key}` given as a string, read as a one-element list", call.name),
                    ));
                    vec![s.clone()]
                }
            };
            arguments.insert(key.clone(), values);
        } else {
            diags.push(Diagnostic::new(
                HallucinatedArgument,
                false,
                format!("hallucinated argument `{key}` for `{}`", call.name),
            ));
        }
    }
    for role in def.role_names() {
        if !arguments.contains_key(role) {
            diags.push(Diagnostic::new(MissingRole, false, format!("`{}` omits role `{role}`", call.name)));
            arguments.insert(role.to_string(), Vec::new());
        }
    }
    if mention.is_none() && usable {
        diags.push(Diagnostic::new(MissingMention, true, format!("`{}` has no mention", call.name)));
    }
    Some(NormalizedEvent {
        event_type: def.name.clone(),
        mention: mention.filter(|_| usable)?,
        arguments,
    })
}

/// Parses and validates one generation. Never fails: problems become the
/// record's status and diagnostics.
pub fn parse_output(raw: &str, ont: &Ontology, instance_id: &str, prompted_type: &str) -> PredictionRecord {
    let source = Source {
        instance_id: instance_id.to_string(),
        prompted_type: prompted_type.to_string(),
    };
    let mut record = PredictionRecord {
        instance_id: instance_id.to_string(),
        prompted_type: prompted_type.to_string(),
        raw_text: raw.to_string(),
        parse_status: ParseStatus::Ok,
        events: Vec::new(),
        diagnostics: Vec::new(),
    };
    let calls = match parse_calls(raw) {
        Ok(calls) => calls,
        Err(e) => {
            record.parse_status = ParseStatus::ParseError;
            record.diagnostics.push(Diagnostic::new(DiagnosticKind::Syntax, true, e.to_string()));
            return record;
        }
    };
    for call in &calls {
        if let Some(event) = validate_call(call, ont, &source, &mut record.diagnostics) {
            record.events.push(PredictedEvent {
                event,
                source: source.clone(),
            });
        }
    }
    if record.diagnostics.iter().any(|d| d.fatal) {
        record.parse_status = ParseStatus::ValidationError;
    }
    record
}

pub fn parse_all(inputs: &[PredictionInput], ont: &Ontology) -> Vec<PredictionRecord> {
    inputs
        .par_iter()
        .map(|p| parse_output(&p.raw_text, ont, &p.instance_id, &p.prompted_type))
        .collect()
}

/// Collects events per instance across all prompted types. An event emitted
/// by several prompts counts once; repeats within one prompt are kept, so an
/// event's multiplicity is its largest count in any single prompt.
pub fn aggregate(records: &[PredictionRecord]) -> BTreeMap<String, Vec<PredictedEvent>> {
    let mut out: BTreeMap<String, Vec<PredictedEvent>> = BTreeMap::new();
    let mut by_instance: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        by_instance.entry(r.instance_id.as_str()).or_default().push(r);
    }
    for (id, recs) in by_instance {
        let mut kept: Vec<PredictedEvent> = Vec::new();
        for r in recs {
            let mut local: BTreeMap<&NormalizedEvent, usize> = BTreeMap::new();
            for ev in &r.events {
                let n = local.entry(&ev.event).or_insert(0);
                *n += 1;
                let have = kept.iter().filter(|k| k.event == ev.event).count();
                if *n > have {
                    kept.push(ev.clone());
                }
            }
        }
        out.insert(id.to_string(), kept);
    }
    out
}

/// Gold outputs rendered as generations, one per (instance, event type),
/// for checking the scorer end to end.
pub fn gold_as_predictions(split: &CorpusSplit, ont: &Ontology) -> Result<Vec<PredictionInput>> {
    let mut out = Vec::with_capacity(split.len() * ont.len());
    for inst in &split.instances {
        for def in ont.event_types() {
            let events: Vec<GoldEvent> = inst.events_of(&def.name).cloned().collect();
            out.push(PredictionInput {
                instance_id: inst.instance_id.clone(),
                prompted_type: def.name.clone(),
                raw_text: render_output(&events, ont)?,
            });
        }
    }
    Ok(out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionInput>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))
        })
        .collect()
}

pub fn predictions_to_jsonl(inputs: &[PredictionInput]) -> String {
    let mut out = String::new();
    for p in inputs {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

pub fn records_to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))
        })
        .collect()
}
