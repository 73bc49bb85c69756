//! Training and inference file builders.
//!
//! Training pairs each sentence with the schema of every gold event type it
//! contains; a sentence without events gets one random schema and an empty
//! answer. Negative sampling adds, per positive record, distinct event types
//! absent from the sentence, all answered with `[]`. Inference pairs every
//! sentence with every event type.
//!
//! Each instance draws from its own random stream keyed by (seed, instance
//! id), so the output does not depend on thread scheduling.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codefmt::{PromptBuilder, PromptRecord};
use crate::corpus::{CorpusSplit, SentenceInstance};
use crate::error::{Error, Result};
use crate::guidelines::GuidelineStore;
use crate::ontology::Ontology;
use crate::rng::{self, StreamRng};
use crate::variant::Variant;

pub const DEFAULT_NS_COUNT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub variant: Variant,
    pub with_ns: bool,
    pub ns_count: usize,
    pub seed: u64,
}

impl TrainPlan {
    pub fn new(variant: Variant, seed: u64) -> Self {
        TrainPlan {
            variant,
            with_ns: false,
            ns_count: DEFAULT_NS_COUNT,
            seed,
        }
    }

    pub fn with_negatives(mut self, ns_count: usize) -> Self {
        self.with_ns = true;
        self.ns_count = ns_count;
        self
    }
}

fn draw_index(variant: Variant, rng: &mut StreamRng) -> Option<usize> {
    variant
        .is_sampled()
        .then(|| rng.gen_range(0..variant.definitions_per_item()))
}

fn training_records(
    inst: &SentenceInstance,
    ont: &Ontology,
    builder: &PromptBuilder<'_>,
    plan: &TrainPlan,
) -> Result<Vec<PromptRecord>> {
    let mut rng = rng::stream(plan.seed, &["train", &inst.instance_id]);
    let gold = inst.event_types();
    let mut out = Vec::new();
    if gold.is_empty() {
        let e = &ont.event_types()[rng.gen_range(0..ont.len())].name;
        let gi = draw_index(plan.variant, &mut rng);
        out.push(builder.build(inst, e, gi, true)?);
        return Ok(out);
    }
    let absent: Vec<&str> = ont
        .event_types()
        .iter()
        .map(|d| d.name.as_str())
        .filter(|t| !gold.contains(t))
        .collect();
    if plan.with_ns && plan.ns_count > absent.len() {
        return Err(Error::instance(
            inst.instance_id.clone(),
            format!(
                "cannot draw {} negative types: only {} of {} event types are absent",
                plan.ns_count,
                absent.len(),
                ont.len()
            ),
        ));
    }
    for e in gold {
        let gi = draw_index(plan.variant, &mut rng);
        out.push(builder.build(inst, e, gi, true)?);
        if plan.with_ns {
            for k in index::sample(&mut rng, absent.len(), plan.ns_count) {
                let gi = draw_index(plan.variant, &mut rng);
                out.push(builder.build(inst, absent[k], gi, true)?);
            }
        }
    }
    Ok(out)
}

fn builder<'a>(
    ont: &'a Ontology,
    variant: Variant,
    guidelines: Option<&'a GuidelineStore>,
) -> Result<PromptBuilder<'a>> {
    PromptBuilder::new(ont, ont.name.clone(), variant, guidelines)
}

/// Training records in instance order, gold records before their negatives.
pub fn build_training(
    split: &CorpusSplit,
    ont: &Ontology,
    guidelines: Option<&GuidelineStore>,
    plan: &TrainPlan,
) -> Result<Vec<PromptRecord>> {
    let b = builder(ont, plan.variant, guidelines)?;
    let per_instance: Vec<Vec<PromptRecord>> = split
        .instances
        .par_iter()
        .map(|inst| training_records(inst, ont, &b, plan))
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

fn inference_records(
    inst: &SentenceInstance,
    ont: &Ontology,
    builder: &PromptBuilder<'_>,
    seed: u64,
) -> Result<Vec<PromptRecord>> {
    let mut rng = rng::stream(seed, &["infer", &inst.instance_id]);
    ont.event_types()
        .iter()
        .map(|d| {
            let gi = draw_index(builder.variant(), &mut rng);
            builder.build(inst, &d.name, gi, false)
        })
        .collect()
}

/// One record per (instance, event type), in instance then ontology order,
/// without gold output.
pub fn build_inference(
    split: &CorpusSplit,
    ont: &Ontology,
    guidelines: Option<&GuidelineStore>,
    variant: Variant,
    seed: u64,
) -> Result<Vec<PromptRecord>> {
    let b = builder(ont, variant, guidelines)?;
    let per_instance: Vec<Vec<PromptRecord>> = split
        .instances
        .par_iter()
        .map(|inst| inference_records(inst, ont, &b, seed))
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

const CHUNK: usize = 256;

/// Streams the inference enumeration to `path` without holding it all in
/// memory. Output equals `export_jsonl(build_inference(..))`.
pub fn export_inference(
    split: &CorpusSplit,
    ont: &Ontology,
    guidelines: Option<&GuidelineStore>,
    variant: Variant,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let path = path.as_ref();
    let b = builder(ont, variant, guidelines)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut written = 0;
    for chunk in split.instances.chunks(CHUNK) {
        let lines: Vec<String> = chunk
            .par_iter()
            .map(|inst| {
                let mut s = String::new();
                for r in inference_records(inst, ont, &b, seed)? {
                    s.push_str(&serde_json::to_string(&r).expect("prompt record serializes"));
                    s.push('\n');
                }
                Ok(s)
            })
            .collect::<Result<_>>()?;
        for block in lines {
            written += block.matches('\n').count();
            w.write_all(block.as_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(written)
}
