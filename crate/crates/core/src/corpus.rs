//! Annotated sentence corpora: ingest, validation, low-data subsets and
//! split statistics.
//!
//! Spans are stored as character offsets (Unicode scalar values, end
//! exclusive). Token-indexed records, recognized by a `tokens` array, are
//! converted at ingest through `token_offsets` when present, otherwise by
//! locating each token in the text left to right.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArgumentMention {
    pub role: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GoldEvent {
    pub event_type: String,
    pub trigger_text: String,
    pub trigger_start: usize,
    pub trigger_end: usize,
    pub arguments: Vec<ArgumentMention>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceInstance {
    pub doc_id: String,
    pub wnd_id: String,
    pub instance_id: String,
    pub text: String,
    pub events: Vec<GoldEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub name: String,
    pub instances: Vec<SentenceInstance>,
}

impl SentenceInstance {
    /// Distinct event types in first-mention order.
    pub fn event_types(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for ev in &self.events {
            if !seen.contains(&ev.event_type.as_str()) {
                seen.push(ev.event_type.as_str());
            }
        }
        seen
    }

    pub fn has_type(&self, event_type: &str) -> bool {
        self.events.iter().any(|e| e.event_type == event_type)
    }

    pub fn events_of<'a>(&'a self, event_type: &'a str) -> impl Iterator<Item = &'a GoldEvent> {
        self.events.iter().filter(move |e| e.event_type == event_type)
    }

    /// Distinct roles filled across this instance's events of `event_type`.
    pub fn coverage(&self, event_type: &str) -> usize {
        self.events_of(event_type)
            .flat_map(|e| e.arguments.iter().map(|a| a.role.as_str()))
            .collect::<HashSet<_>>()
            .len()
    }

    /// Distinct (event type, role) pairs filled anywhere in the instance.
    pub fn total_coverage(&self) -> usize {
        self.events
            .iter()
            .flat_map(|e| {
                e.arguments
                    .iter()
                    .map(move |a| (e.event_type.as_str(), a.role.as_str()))
            })
            .collect::<HashSet<_>>()
            .len()
    }
}

impl CorpusSplit {
    pub fn new(name: impl Into<String>, instances: Vec<SentenceInstance>) -> Self {
        CorpusSplit {
            name: name.into(),
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, instance_id: &str) -> Option<&SentenceInstance> {
        self.instances.iter().find(|i| i.instance_id == instance_id)
    }

    pub fn instance_ids(&self) -> Vec<&str> {
        self.instances.iter().map(|i| i.instance_id.as_str()).collect()
    }

    /// Event types that occur in the split, ordered by ontology position.
    pub fn types_present(&self, ont: &Ontology) -> Vec<String> {
        let present: BTreeSet<&str> = self
            .instances
            .iter()
            .flat_map(|i| i.events.iter().map(|e| e.event_type.as_str()))
            .collect();
        let mut types: Vec<String> = present.into_iter().map(str::to_owned).collect();
        types.sort_by_key(|t| (ont.position(t).unwrap_or(usize::MAX), t.clone()));
        types
    }

    fn pick(&self, name: String, mut indices: Vec<usize>) -> CorpusSplit {
        indices.sort_unstable();
        indices.dedup();
        CorpusSplit {
            name,
            instances: indices
                .into_iter()
                .map(|i| self.instances[i].clone())
                .collect(),
        }
    }
}

pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = indices.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[b_start..b_end])
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// wire format

#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    #[serde(default)]
    doc_id: Option<String>,
    #[serde(default)]
    wnd_id: Option<String>,
    #[serde(default, deserialize_with = "id_string")]
    instance_id: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_offsets: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    event_mentions: Vec<RawEvent>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawEvent {
    event_type: String,
    trigger: RawSpan,
    #[serde(default)]
    arguments: Vec<RawArgument>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSpan {
    text: String,
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawArgument {
    role: String,
    text: String,
    start: usize,
    end: usize,
}

/// Accepts numeric ids as well as strings.
fn id_string<'de, D>(de: D) -> std::result::Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let v = Option::<serde_json::Value>::deserialize(de)?;
    Ok(match v {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(other) => Some(other.to_string()),
    })
}

impl From<&SentenceInstance> for RawRecord {
    fn from(inst: &SentenceInstance) -> Self {
        RawRecord {
            doc_id: Some(inst.doc_id.clone()),
            wnd_id: Some(inst.wnd_id.clone()),
            instance_id: Some(inst.instance_id.clone()),
            text: Some(inst.text.clone()),
            tokens: None,
            token_offsets: None,
            event_mentions: inst
                .events
                .iter()
                .map(|e| RawEvent {
                    event_type: e.event_type.clone(),
                    trigger: RawSpan {
                        text: e.trigger_text.clone(),
                        start: e.trigger_start,
                        end: e.trigger_end,
                    },
                    arguments: e
                        .arguments
                        .iter()
                        .map(|a| RawArgument {
                            role: a.role.clone(),
                            text: a.text.clone(),
                            start: a.start,
                            end: a.end,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Maps corpus labels onto ontology identifiers. Exact names win; otherwise
/// TextEE-style labels such as `Justice:Arrest-Jail` or `Agent` are matched
/// ignoring case and punctuation.
struct NameResolver<'a> {
    ont: &'a Ontology,
    types: HashMap<String, &'a str>,
}

fn fold_label(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl<'a> NameResolver<'a> {
    fn new(ont: &'a Ontology) -> Self {
        let types = ont
            .event_types()
            .iter()
            .map(|et| (fold_label(&et.name), et.name.as_str()))
            .collect();
        NameResolver { ont, types }
    }

    fn event_type(&self, label: &str) -> Option<&'a str> {
        if let Some(et) = self.ont.get(label) {
            return Some(et.name.as_str());
        }
        let tail = label.rsplit(':').next().unwrap_or(label);
        self.types.get(&fold_label(tail)).copied()
    }

    fn role(&self, event_type: &str, label: &str) -> Option<&'a str> {
        let et = self.ont.get(event_type)?;
        if let Some(r) = et.roles.iter().find(|r| r.name == label) {
            return Some(r.name.as_str());
        }
        let folded = fold_label(label);
        et.roles
            .iter()
            .find(|r| fold_label(&r.name) == folded)
            .map(|r| r.name.as_str())
    }
}

struct SpanMap {
    offsets: Vec<(usize, usize)>,
}

impl SpanMap {
    fn build(text: &str, tokens: &[String], given: Option<&[(usize, usize)]>) -> Result<Self, String> {
        if let Some(given) = given {
            if given.len() != tokens.len() {
                return Err(format!(
                    "token_offsets has {} entries for {} tokens",
                    given.len(),
                    tokens.len()
                ));
            }
            return Ok(SpanMap {
                offsets: given.to_vec(),
            });
        }
        let chars: Vec<char> = text.chars().collect();
        let mut offsets = Vec::with_capacity(tokens.len());
        let mut cursor = 0;
        for tok in tokens {
            let tok_chars: Vec<char> = tok.chars().collect();
            if tok_chars.is_empty() {
                return Err("empty token".into());
            }
            let found = (cursor..=chars.len().saturating_sub(tok_chars.len()))
                .find(|&s| chars[s..s + tok_chars.len()] == tok_chars[..])
                .ok_or_else(|| format!("token `{tok}` not found in text after offset {cursor}"))?;
            offsets.push((found, found + tok_chars.len()));
            cursor = found + tok_chars.len();
        }
        Ok(SpanMap { offsets })
    }

    fn chars(&self, start: usize, end: usize) -> Result<(usize, usize), String> {
        if start >= end || end > self.offsets.len() {
            return Err(format!(
                "token span [{start}, {end}) invalid for {} tokens",
                self.offsets.len()
            ));
        }
        Ok((self.offsets[start].0, self.offsets[end - 1].1))
    }
}

fn convert_record(
    raw: RawRecord,
    fallback_id: String,
    resolver: &NameResolver<'_>,
) -> Result<SentenceInstance> {
    let instance_id = raw.instance_id.clone().unwrap_or(fallback_id);
    let fail = |msg: String| Error::instance(instance_id.clone(), msg);

    let text = match (&raw.text, &raw.tokens) {
        (Some(t), _) => t.clone(),
        (None, Some(tokens)) => tokens.join(" "),
        (None, None) => return Err(fail("record has neither `text` nor `tokens`".into())),
    };
    let span_map = match &raw.tokens {
        Some(tokens) => Some(
            SpanMap::build(&text, tokens, raw.token_offsets.as_deref()).map_err(&fail)?,
        ),
        None => None,
    };
    let text_len = text.chars().count();

    // Resolves a span to character offsets and checks it against the text.
    let locate = |what: &str, surface: &str, start: usize, end: usize| -> Result<(usize, usize, String)> {
        let (cs, ce) = match &span_map {
            Some(map) => map.chars(start, end).map_err(|m| fail(format!("{what}: {m}")))?,
            None => (start, end),
        };
        if cs >= ce || ce > text_len {
            return Err(fail(format!(
                "{what} `{surface}` has offsets [{cs}, {ce}) outside a text of {text_len} characters"
            )));
        }
        let slice = char_slice(&text, cs, ce).expect("offsets checked");
        let matches = if span_map.is_some() {
            collapse_ws(slice) == collapse_ws(surface)
        } else {
            slice == surface
        };
        if !matches {
            return Err(fail(format!(
                "{what} text `{surface}` does not match `{slice}` at [{cs}, {ce})"
            )));
        }
        Ok((cs, ce, slice.to_string()))
    };

    let mut events = Vec::with_capacity(raw.event_mentions.len());
    for ev in &raw.event_mentions {
        let event_type = resolver
            .event_type(&ev.event_type)
            .ok_or_else(|| fail(format!("unknown event type `{}`", ev.event_type)))?;
        let (ts, te, trigger_text) =
            locate("trigger", &ev.trigger.text, ev.trigger.start, ev.trigger.end)?;
        let mut arguments = Vec::with_capacity(ev.arguments.len());
        for arg in &ev.arguments {
            let role = resolver.role(event_type, &arg.role).ok_or_else(|| {
                fail(format!(
                    "unknown role `{}` for event type `{event_type}`",
                    arg.role
                ))
            })?;
            let (s, e, surface) = locate(&format!("argument `{role}`"), &arg.text, arg.start, arg.end)?;
            arguments.push(ArgumentMention {
                role: role.to_string(),
                text: surface,
                start: s,
                end: e,
            });
        }
        events.push(GoldEvent {
            event_type: event_type.to_string(),
            trigger_text,
            trigger_start: ts,
            trigger_end: te,
            arguments,
        });
    }

    Ok(SentenceInstance {
        doc_id: raw.doc_id.unwrap_or_default(),
        wnd_id: raw.wnd_id.unwrap_or_default(),
        instance_id,
        text,
        events,
    })
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Skip invalid records instead of aborting on the first one.
    pub lenient: bool,
    /// Split name; defaults to the file stem.
    pub split_name: Option<String>,
}

#[derive(Debug)]
pub struct SkippedRecord {
    pub line: usize,
    pub instance_id: Option<String>,
    pub reason: String,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub split: CorpusSplit,
    pub skipped: Vec<SkippedRecord>,
}

pub fn ingest(path: impl AsRef<Path>, ont: &Ontology, opts: &IngestOptions) -> Result<IngestOutcome> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = opts.split_name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "split".into())
    });
    ingest_str(&text, &name, ont, opts.lenient)
}

/// Ingests JSON-lines text. Record ids default to the zero-based record index.
pub fn ingest_str(text: &str, name: &str, ont: &Ontology, lenient: bool) -> Result<IngestOutcome> {
    let resolver = NameResolver::new(ont);
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let converted: Vec<(usize, Result<SentenceInstance>)> = lines
        .par_iter()
        .enumerate()
        .map(|(record_idx, &(line_idx, line))| {
            let result = serde_json::from_str::<RawRecord>(line)
                .map_err(|e| Error::json(format!("line {}", line_idx + 1), e))
                .and_then(|raw| convert_record(raw, record_idx.to_string(), &resolver));
            (line_idx + 1, result)
        })
        .collect();

    let mut instances = Vec::with_capacity(converted.len());
    let mut skipped = Vec::new();
    let mut seen_ids = HashSet::new();
    for (line, result) in converted {
        let result = result.and_then(|inst| {
            if seen_ids.contains(&inst.instance_id) {
                Err(Error::instance(inst.instance_id.clone(), "duplicate instance_id"))
            } else {
                Ok(inst)
            }
        });
        match result {
            Ok(inst) => {
                seen_ids.insert(inst.instance_id.clone());
                instances.push(inst);
            }
            Err(err) if lenient => {
                let instance_id = match &err {
                    Error::Instance { instance_id, .. } => Some(instance_id.clone()),
                    _ => None,
                };
                log::warn!("line {line}: skipping record: {err}");
                skipped.push(SkippedRecord {
                    line,
                    instance_id,
                    reason: err.to_string(),
                });
            }
            Err(err) => return Err(err),
        }
    }
    if !skipped.is_empty() {
        log::warn!("{name}: skipped {} invalid record(s)", skipped.len());
    }
    Ok(IngestOutcome {
        split: CorpusSplit::new(name, instances),
        skipped,
    })
}

/// Canonical JSON-lines form: character offsets, no tokens, LF endings.
pub fn split_to_jsonl(split: &CorpusSplit) -> String {
    let mut out = String::new();
    for inst in &split.instances {
        out.push_str(&serde_json::to_string(&RawRecord::from(inst)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_split(split: &CorpusSplit, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(split_to_jsonl(split).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// subsets

/// Indices of instances containing `event_type`, best argument coverage
/// first, ties by instance id.
pub(crate) fn ranked_candidates(split: &CorpusSplit, event_type: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..split.len())
        .filter(|&i| split.instances[i].has_type(event_type))
        .collect();
    idx.sort_by(|&a, &b| {
        let (ia, ib) = (&split.instances[a], &split.instances[b]);
        ib.coverage(event_type)
            .cmp(&ia.coverage(event_type))
            .then_with(|| ia.instance_id.cmp(&ib.instance_id))
    });
    idx
}

/// Greedily tops up `chosen` until every present type has `per_type`
/// positives (or runs out of candidates).
fn cover_types(split: &CorpusSplit, types: &[String], per_type: usize, chosen: &mut BTreeSet<usize>) {
    for t in types {
        let mut have = chosen
            .iter()
            .filter(|&&i| split.instances[i].has_type(t))
            .count();
        for cand in ranked_candidates(split, t) {
            if have >= per_type {
                break;
            }
            if chosen.insert(cand) {
                have += 1;
            }
        }
    }
}

/// Development subset: two positives per event type (argument-rich first),
/// the remaining slots filled with seeded-random no-event sentences.
pub fn select_dev(split: &CorpusSplit, ont: &Ontology, n: usize, seed: u64) -> Result<CorpusSplit> {
    let types = split.types_present(ont);
    if n < 2 * types.len() {
        return Err(Error::Precondition(format!(
            "dev size {n} is smaller than 2 x {} event types present in `{}`",
            types.len(),
            split.name
        )));
    }
    let mut chosen = BTreeSet::new();
    cover_types(split, &types, 2, &mut chosen);

    let fillers: Vec<usize> = (0..split.len())
        .filter(|&i| split.instances[i].events.is_empty())
        .collect();
    let want = n.saturating_sub(chosen.len()).min(fillers.len());
    let mut rng = rng::seeded(seed);
    for k in index::sample(&mut rng, fillers.len(), want) {
        chosen.insert(fillers[k]);
    }
    Ok(split.pick(format!("{}-dev{n}", split.name), chosen.into_iter().collect()))
}

/// Seeded uniform sample without replacement, original order kept.
pub fn subset_uniform(split: &CorpusSplit, n: usize, seed: u64) -> Result<CorpusSplit> {
    if n > split.len() {
        return Err(Error::Precondition(format!(
            "cannot sample {n} instances from `{}` of size {}",
            split.name,
            split.len()
        )));
    }
    let mut rng = rng::seeded(seed);
    let picked = index::sample(&mut rng, split.len(), n).into_vec();
    Ok(split.pick(format!("{}-uniform{n}", split.name), picked))
}

/// Low-data subset: at least one instance per event type (argument-rich
/// first), the rest drawn by seeded sampling weighted by argument coverage.
pub fn subset_covered(split: &CorpusSplit, ont: &Ontology, n: usize, seed: u64) -> Result<CorpusSplit> {
    if ont.len() > n {
        return Err(Error::Precondition(format!(
            "subset size {n} cannot cover {} event types",
            ont.len()
        )));
    }
    if n > split.len() {
        return Err(Error::Precondition(format!(
            "cannot select {n} instances from `{}` of size {}",
            split.name,
            split.len()
        )));
    }
    let types = split.types_present(ont);
    let mut chosen = BTreeSet::new();
    cover_types(split, &types, 1, &mut chosen);

    let rest: Vec<usize> = (0..split.len()).filter(|i| !chosen.contains(i)).collect();
    let want = n.saturating_sub(chosen.len()).min(rest.len());
    let mut rng = rng::seeded(seed);
    let drawn: Vec<usize> = rest
        .choose_multiple_weighted(&mut rng, want, |&i| {
            1.0 + split.instances[i].total_coverage() as f64
        })
        .expect("weights are positive and finite")
        .copied()
        .collect();
    chosen.extend(drawn);
    Ok(split.pick(format!("{}-covered{n}-s{seed}", split.name), chosen.into_iter().collect()))
}

// ---------------------------------------------------------------------------
// statistics

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: String,
    pub instances: usize,
    pub no_event_instances: usize,
    pub event_mentions: usize,
    pub argument_mentions: usize,
    /// Event types by descending mention count, ties by name.
    pub event_types: Vec<LabelCount>,
    /// Role fills by descending count, ties by name.
    pub roles: Vec<LabelCount>,
}

impl SplitStats {
    pub fn frequency_order(&self) -> Vec<&str> {
        self.event_types.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn count_of(&self, event_type: &str) -> usize {
        self.event_types
            .iter()
            .find(|c| c.label == event_type)
            .map_or(0, |c| c.count)
    }
}

fn sorted_counts(counts: BTreeMap<&str, usize>) -> Vec<LabelCount> {
    let mut v: Vec<LabelCount> = counts
        .into_iter()
        .map(|(label, count)| LabelCount {
            label: label.to_string(),
            count,
        })
        .collect();
    v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    v
}

pub fn stats(split: &CorpusSplit) -> Result<SplitStats> {
    if split.is_empty() {
        return Err(Error::Precondition(format!("split `{}` is empty", split.name)));
    }
    let mut types = BTreeMap::new();
    let mut roles = BTreeMap::new();
    let mut arguments = 0;
    for ev in split.instances.iter().flat_map(|i| &i.events) {
        *types.entry(ev.event_type.as_str()).or_insert(0) += 1;
        for a in &ev.arguments {
            *roles.entry(a.role.as_str()).or_insert(0) += 1;
            arguments += 1;
        }
    }
    Ok(SplitStats {
        split: split.name.clone(),
        instances: split.len(),
        no_event_instances: split.instances.iter().filter(|i| i.events.is_empty()).count(),
        event_mentions: types.values().sum(),
        argument_mentions: arguments,
        event_types: sorted_counts(types),
        roles: sorted_counts(roles),
    })
}
