//! Automatic error taxonomy.
//!
//! Each instance receives the set of categories its mistakes fall into:
//!
//! * PE: a prompt for the instance produced unparsable or invalid output.
//! * TTE: a predicted event with no gold event of the same type and mention.
//! * AE: an event matched on type and mention carries an argument that is
//!   not in gold (wrong role or wrong span).
//! * MAE: a gold event or gold argument that no prediction accounts for.
//! * unclassified: leftovers that fit none of the above, such as a repeated
//!   copy of a correctly predicted event.
//!
//! A gold event missed because its own prompt failed is charged to PE, and
//! one explained by a wrongly typed or wrongly anchored prediction to TTE.
//! Context ambiguity and label noise need a human; a side file may relabel
//! instances, which are then reported apart from the automatic counts.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::score::normalize_ws;
use super::{PredictedEvent, PredictionRecord};
use crate::corpus::{CorpusSplit, GoldEvent, SentenceInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    PE,
    MAE,
    AE,
    TTE,
    #[serde(rename = "unclassified")]
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManualLabel {
    CA,
    LN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    #[serde(rename = "PE")]
    pub pe: usize,
    #[serde(rename = "MAE")]
    pub mae: usize,
    #[serde(rename = "AE")]
    pub ae: usize,
    #[serde(rename = "TTE")]
    pub tte: usize,
    pub unclassified: usize,
}

impl ErrorCounts {
    fn bump(&mut self, c: ErrorCategory) {
        match c {
            ErrorCategory::PE => self.pe += 1,
            ErrorCategory::MAE => self.mae += 1,
            ErrorCategory::AE => self.ae += 1,
            ErrorCategory::TTE => self.tte += 1,
            ErrorCategory::Unclassified => self.unclassified += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceErrors {
    pub instance_id: String,
    pub labels: Vec<ErrorCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual: Option<ManualLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Instances carrying each category, manually relabeled ones excluded.
    pub counts: ErrorCounts,
    /// Manually relabeled instances per label.
    pub manual: BTreeMap<ManualLabel, usize>,
    /// Instances with at least one category or a manual label.
    pub instances: Vec<InstanceErrors>,
}

/// Reads a `{instance_id: "CA" | "LN"}` side file.
pub fn load_manual_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, ManualLabel>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

fn trigger_key(ty: &str, mention: &str) -> (String, String) {
    (ty.to_string(), normalize_ws(mention))
}

fn arg_list(ev: &PredictedEvent) -> Vec<(String, String)> {
    ev.event
        .arguments
        .iter()
        .flat_map(|(r, vals)| vals.iter().map(move |v| (r.clone(), normalize_ws(v))))
        .collect()
}

fn gold_args(ev: &GoldEvent) -> Vec<(String, String)> {
    ev.arguments.iter().map(|a| (a.role.clone(), normalize_ws(&a.text))).collect()
}

/// Labels for one matched event pair.
fn argument_labels(pred: &PredictedEvent, gold: &GoldEvent, labels: &mut BTreeSet<ErrorCategory>) {
    let mut p = arg_list(pred);
    let mut g = gold_args(gold);
    p.retain(|a| match g.iter().position(|b| b == a) {
        Some(i) => {
            g.remove(i);
            false
        }
        None => true,
    });
    if !p.is_empty() {
        labels.insert(ErrorCategory::AE);
    }
    // each wrong prediction explains at most one gold argument sharing its
    // span or its role
    for wrong in &p {
        if let Some(i) = g
            .iter()
            .position(|b| b.1 == wrong.1)
            .or_else(|| g.iter().position(|b| b.0 == wrong.0))
        {
            g.remove(i);
        }
    }
    if !g.is_empty() {
        labels.insert(ErrorCategory::MAE);
    }
}

fn instance_labels(
    inst: &SentenceInstance,
    pred: &[PredictedEvent],
    records: &[&PredictionRecord],
) -> BTreeSet<ErrorCategory> {
    let mut labels = BTreeSet::new();
    let failed: HashSet<&str> = records
        .iter()
        .filter(|r| r.failed())
        .map(|r| r.prompted_type.as_str())
        .collect();
    if !failed.is_empty() {
        labels.insert(ErrorCategory::PE);
    }

    let gold_keys: Vec<(String, String)> = inst
        .events
        .iter()
        .map(|e| trigger_key(&e.event_type, &e.trigger_text))
        .collect();
    let mut gold_used = vec![false; inst.events.len()];
    let mut wrong: Vec<&PredictedEvent> = Vec::new();
    for p in pred {
        let key = trigger_key(&p.event.event_type, &p.event.mention);
        match (0..gold_keys.len()).find(|&i| !gold_used[i] && gold_keys[i] == key) {
            Some(i) => {
                gold_used[i] = true;
                argument_labels(p, &inst.events[i], &mut labels);
            }
            None if gold_keys.contains(&key) => {
                labels.insert(ErrorCategory::Unclassified);
            }
            None => {
                labels.insert(ErrorCategory::TTE);
                wrong.push(p);
            }
        }
    }

    let mut explained = vec![false; wrong.len()];
    for (i, g) in inst.events.iter().enumerate() {
        if gold_used[i] {
            continue;
        }
        let mention = normalize_ws(&g.trigger_text);
        let by = (0..wrong.len())
            .find(|&k| !explained[k] && normalize_ws(&wrong[k].event.mention) == mention)
            .or_else(|| (0..wrong.len()).find(|&k| !explained[k] && wrong[k].event.event_type == g.event_type));
        match by {
            Some(k) => explained[k] = true,
            None if failed.contains(g.event_type.as_str()) => {}
            None => {
                labels.insert(ErrorCategory::MAE);
            }
        }
    }
    labels
}

/// Assigns error categories per instance. `pred` is the aggregated event
/// map, `records` the parsed prompts it came from.
pub fn categorize_errors(
    pred: &BTreeMap<String, Vec<PredictedEvent>>,
    gold: &CorpusSplit,
    records: &[PredictionRecord],
    manual: Option<&BTreeMap<String, ManualLabel>>,
) -> Result<ErrorReport> {
    let ids: HashSet<&str> = gold.instances.iter().map(|i| i.instance_id.as_str()).collect();
    let stray = pred
        .keys()
        .map(String::as_str)
        .chain(records.iter().map(|r| r.instance_id.as_str()))
        .chain(manual.into_iter().flat_map(|m| m.keys().map(String::as_str)))
        .find(|id| !ids.contains(id));
    if let Some(id) = stray {
        return Err(Error::instance(id, format!("not in gold split `{}`", gold.name)));
    }
    let mut by_instance: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        by_instance.entry(&r.instance_id).or_default().push(r);
    }

    let mut report = ErrorReport::default();
    let none_p = Vec::new();
    let none_r = Vec::new();
    for inst in &gold.instances {
        let id = inst.instance_id.as_str();
        let labels = instance_labels(
            inst,
            pred.get(id).unwrap_or(&none_p),
            by_instance.get(id).unwrap_or(&none_r),
        );
        let manual_label = manual.and_then(|m| m.get(id)).copied();
        match manual_label {
            Some(l) => *report.manual.entry(l).or_insert(0) += 1,
            None => labels.iter().for_each(|&c| report.counts.bump(c)),
        }
        if !labels.is_empty() || manual_label.is_some() {
            report.instances.push(InstanceErrors {
                instance_id: id.to_string(),
                labels: labels.into_iter().collect(),
                manual: manual_label,
            });
        }
    }
    Ok(report)
}
