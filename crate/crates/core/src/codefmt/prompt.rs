use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::render_output;
use super::schema::{parse_schema, render_schema};
use crate::corpus::{GoldEvent, SentenceInstance};
use crate::error::{Error, Result};
use crate::guidelines::GuidelineStore;
use crate::ontology::Ontology;
use crate::pylit;
use crate::variant::Variant;

pub const INSTRUCTION: &str = "# This is an event extraction task where the goal is to extract structured events from the text. A structured event contains an event trigger word, an event type, the arguments participating in the event, and their roles in the event. For each different event type, please output the extracted information from the text into python-style dictionaries where the first key will be 'mention' with the value of the event trigger. Next, please output the arguments and their roles following the same format. The event type definitions and their argument roles are defined next.";

pub const TASK_TYPE: &str = "E2E";
pub const IS_AUTH: &str = "0";

const SCHEMA_HEADER: &str = "# The following lines describe the task definition\n\n";
const TEXT_HEADER: &str = "\n\n# This is the text to analyze\ntext = ";
const RESULT_HEADER: &str = "\n\n# The list called result should contain the instances for the following events according to the guidelines above:\n";
pub const RESULT_STUB: &str = "result = \n";

/// One training or inference instance. Serializes to exactly the trainer
/// fields; `event_type` and `guideline_index` stay in memory only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub doc_id: String,
    pub wnd_id: String,
    pub instance_id: String,
    pub dataset_name: String,
    pub task_type: String,
    pub is_auth: String,
    pub instruction: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip)]
    pub event_type: String,
    #[serde(skip)]
    pub guideline_index: Option<usize>,
}

pub struct PromptBuilder<'a> {
    ont: &'a Ontology,
    dataset_name: String,
    variant: Variant,
    guidelines: Option<&'a GuidelineStore>,
}

impl<'a> PromptBuilder<'a> {
    pub fn new(
        ont: &'a Ontology,
        dataset_name: impl Into<String>,
        variant: Variant,
        guidelines: Option<&'a GuidelineStore>,
    ) -> Result<Self> {
        if variant.uses_guidelines() {
            let store = guidelines.ok_or_else(|| {
                Error::Guideline(format!("variant {variant} needs a guideline store"))
            })?;
            if store.variant != variant {
                return Err(Error::Guideline(format!(
                    "guideline store holds variant {}, prompts use {variant}",
                    store.variant
                )));
            }
        }
        Ok(PromptBuilder {
            ont,
            dataset_name: dataset_name.into(),
            variant,
            guidelines,
        })
    }

    pub fn ontology(&self) -> &'a Ontology {
        self.ont
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `prompt = instruction ⊕ schema ⊕ text`. The gold output is attached
    /// when `with_output` is set (training and dev files).
    pub fn build(
        &self,
        inst: &SentenceInstance,
        event_type: &str,
        guideline_index: Option<usize>,
        with_output: bool,
    ) -> Result<PromptRecord> {
        let def = self.ont.require(event_type)?;
        let set = match self.guidelines {
            Some(store) if self.variant.uses_guidelines() => Some(store.get(event_type).ok_or_else(|| {
                Error::Guideline(format!("no {} guideline for `{event_type}`", self.variant))
            })?),
            _ => None,
        };
        let schema = render_schema(def, self.variant, set, guideline_index)?;

        let mut input = String::with_capacity(schema.text.len() + inst.text.len() + 256);
        input.push_str(SCHEMA_HEADER);
        input.push_str(&schema.text);
        input.push_str(TEXT_HEADER);
        input.push_str(&pylit::quote(&inst.text));
        input.push_str(RESULT_HEADER);
        input.push_str(RESULT_STUB);

        let output = if with_output {
            let events: Vec<GoldEvent> = inst.events_of(event_type).cloned().collect();
            Some(render_output(&events, self.ont)?)
        } else {
            None
        };

        Ok(PromptRecord {
            doc_id: inst.doc_id.clone(),
            wnd_id: inst.wnd_id.clone(),
            instance_id: inst.instance_id.clone(),
            dataset_name: self.dataset_name.clone(),
            task_type: TASK_TYPE.to_string(),
            is_auth: IS_AUTH.to_string(),
            instruction: INSTRUCTION.to_string(),
            input,
            output,
            event_type: event_type.to_string(),
            guideline_index: schema.guideline_index,
        })
    }
}

/// Recovers the analyzed sentence from a prompt input.
pub fn extract_text(input: &str) -> Option<String> {
    let start = input.find(TEXT_HEADER)? + TEXT_HEADER.len();
    let chars: Vec<char> = input[start..].chars().collect();
    pylit::scan_string(&chars, 0).ok().map(|(s, _)| s)
}

fn schema_block(input: &str) -> Option<&str> {
    let rest = input.strip_prefix(SCHEMA_HEADER)?;
    let end = rest.find(TEXT_HEADER)?;
    Some(&rest[..end])
}

pub fn records_to_jsonl(records: &[PromptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("prompt record serializes"));
        out.push('\n');
    }
    out
}

/// Writes one JSON object per line; returns the number of lines.
pub fn export_jsonl(records: &[PromptRecord], path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::json(path.display().to_string(), e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(records.len())
}

/// Reads an exported file back. The prompted event type is recovered from
/// the schema block; the guideline index is not stored and comes back empty.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<PromptRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut rec: PromptRecord = serde_json::from_str(line)
                .map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?;
            let schema = schema_block(&rec.input)
                .and_then(|b| parse_schema(b).ok())
                .ok_or_else(|| {
                    Error::instance(rec.instance_id.clone(), "prompt input has no parsable schema block")
                })?;
            rec.event_type = schema.class_name;
            Ok(rec)
        })
        .collect()
}
