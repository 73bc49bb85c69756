use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::errors::ErrorReport;
use super::PredictedEvent;
use crate::corpus::{CorpusSplit, SentenceInstance};
use crate::error::{Error, Result};
use crate::ontology::Ontology;

pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricCounts {
    pub predicted: usize,
    pub gold: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricCounts {
    pub fn from_counts(predicted: usize, gold: usize, matched: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if predicted == 0 && gold == 0 {
                1.0
            } else if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(matched, predicted);
        let recall = ratio(matched, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricCounts {
            predicted,
            gold,
            matched,
            precision,
            recall,
            f1,
        }
    }

    fn add(&mut self, predicted: usize, gold: usize, matched: usize) {
        *self = Self::from_counts(self.predicted + predicted, self.gold + gold, self.matched + matched);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeScores {
    pub ti: MetricCounts,
    pub tc: MetricCounts,
    pub ai: MetricCounts,
    pub ac: MetricCounts,
}

impl TypeScores {
    pub fn get(&self, metric: &str) -> Option<&MetricCounts> {
        match metric.to_ascii_uppercase().as_str() {
            "TI" => Some(&self.ti),
            "TC" => Some(&self.tc),
            "AI" => Some(&self.ai),
            "AC" => Some(&self.ac),
            _ => None,
        }
    }

    fn empty() -> Self {
        let zero = MetricCounts::from_counts(0, 0, 0);
        TypeScores {
            ti: zero,
            tc: zero,
            ai: zero,
            ac: zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub instances: usize,
    #[serde(flatten)]
    pub overall: TypeScores,
    /// Every ontology type, with both sides restricted to that type.
    pub per_type: BTreeMap<String, TypeScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorReport>,
}

impl ScoreReport {
    /// Flat TSV of the four F1 values.
    pub fn f1_tsv(&self) -> String {
        let o = &self.overall;
        format!(
            "TI\tTC\tAI\tAC\n{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1
        )
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Matched count of two multisets: each gold item is consumed at most once.
pub(crate) fn multiset_matches<K: Eq + Hash>(pred: impl IntoIterator<Item = K>, gold: impl IntoIterator<Item = K>) -> usize {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for g in gold {
        *counts.entry(g).or_insert(0) += 1;
    }
    let mut matched = 0;
    for p in pred {
        if let Some(c) = counts.get_mut(&p) {
            if *c > 0 {
                *c -= 1;
                matched += 1;
            }
        }
    }
    matched
}

/// Items compared by each metric, owned and whitespace-normalized.
#[derive(Default)]
pub(crate) struct Items {
    pub ti: Vec<(String, String)>,
    pub tc: Vec<(String, String)>,
    pub ai: Vec<(String, String)>,
    pub ac: Vec<(String, String, String)>,
}

pub(crate) fn items<'a>(
    events: impl Iterator<Item = (&'a str, &'a str, Vec<(&'a str, &'a str)>)>,
) -> Items {
    let mut it = Items::default();
    for (ty, mention, args) in events {
        let m = normalize_ws(mention);
        // TI keys on the mention alone; the type rides along for per-type views
        it.ti.push((ty.to_string(), m.clone()));
        it.tc.push((ty.to_string(), m));
        for (role, text) in args {
            let t = normalize_ws(text);
            it.ai.push((ty.to_string(), t.clone()));
            it.ac.push((ty.to_string(), role.to_string(), t));
        }
    }
    it
}

pub(crate) fn predicted_items(events: &[PredictedEvent]) -> Items {
    items(events.iter().map(|e| {
        let args = e
            .event
            .arguments
            .iter()
            .flat_map(|(role, vals)| vals.iter().map(move |v| (role.as_str(), v.as_str())))
            .collect();
        (e.event.event_type.as_str(), e.event.mention.as_str(), args)
    }))
}

pub(crate) fn gold_items(inst: &SentenceInstance) -> Items {
    items(inst.events.iter().map(|e| {
        let args = e.arguments.iter().map(|a| (a.role.as_str(), a.text.as_str())).collect();
        (e.event_type.as_str(), e.trigger_text.as_str(), args)
    }))
}

fn accumulate(scores: &mut TypeScores, p: &Items, g: &Items, only: Option<&str>) {
    let keep2 = |v: &[(String, String)]| -> Vec<(String, String)> {
        v.iter().filter(|(t, _)| only.is_none_or(|o| o == t)).cloned().collect()
    };
    let (pti, gti) = (keep2(&p.ti), keep2(&g.ti));
    let ti = multiset_matches(pti.iter().map(|(_, m)| m), gti.iter().map(|(_, m)| m));
    scores.ti.add(pti.len(), gti.len(), ti);
    let (ptc, gtc) = (keep2(&p.tc), keep2(&g.tc));
    scores.tc.add(ptc.len(), gtc.len(), multiset_matches(&ptc, &gtc));
    let (pai, gai) = (keep2(&p.ai), keep2(&g.ai));
    scores.ai.add(pai.len(), gai.len(), multiset_matches(&pai, &gai));
    let keep3 = |v: &[(String, String, String)]| -> Vec<(String, String, String)> {
        v.iter().filter(|(t, _, _)| only.is_none_or(|o| o == t)).cloned().collect()
    };
    let (pac, gac) = (keep3(&p.ac), keep3(&g.ac));
    scores.ac.add(pac.len(), gac.len(), multiset_matches(&pac, &gac));
}

/// Micro-averaged TI/TC/AI/AC over the gold split. Instances without
/// predictions count as predicting nothing.
pub fn score(
    pred: &BTreeMap<String, Vec<PredictedEvent>>,
    gold: &CorpusSplit,
    ont: &Ontology,
) -> Result<ScoreReport> {
    let index: HashMap<&str, &SentenceInstance> =
        gold.instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    if let Some(unknown) = pred.keys().find(|k| !index.contains_key(k.as_str())) {
        return Err(Error::instance(
            unknown.clone(),
            format!("predicted instance is not in gold split `{}`", gold.name),
        ));
    }
    let mut overall = TypeScores::empty();
    let mut per_type: BTreeMap<String, TypeScores> = ont
        .event_types()
        .iter()
        .map(|d| (d.name.clone(), TypeScores::empty()))
        .collect();
    let none = Vec::new();
    for inst in &gold.instances {
        let p = predicted_items(pred.get(&inst.instance_id).unwrap_or(&none));
        let g = gold_items(inst);
        accumulate(&mut overall, &p, &g, None);
        for (ty, scores) in per_type.iter_mut() {
            accumulate(scores, &p, &g, Some(ty));
        }
    }
    Ok(ScoreReport {
        instances: gold.len(),
        overall,
        per_type,
        errors: None,
    })
}
