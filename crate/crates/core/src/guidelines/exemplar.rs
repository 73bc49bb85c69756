use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{ranked_candidates, CorpusSplit, SentenceInstance};
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::rng;
use crate::variant::Variant;

pub const POSITIVES: usize = 10;
pub const NEGATIVES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeMode {
    None,
    Random,
    Sibling,
}

impl NegativeMode {
    /// Exemplar mode used to generate a sampled variant.
    pub fn for_variant(variant: Variant) -> Option<NegativeMode> {
        match variant {
            Variant::P => Some(NegativeMode::None),
            Variant::PN => Some(NegativeMode::Random),
            Variant::PS => Some(NegativeMode::Sibling),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarBundle {
    pub event_type: String,
    pub negative_mode: NegativeMode,
    pub positives: Vec<SentenceInstance>,
    pub negatives: Vec<SentenceInstance>,
}

/// Seeded draw of `want` pool members, returned in pool order.
fn draw(pool: &[usize], want: usize, rng: &mut rng::StreamRng) -> Vec<usize> {
    let mut picked: Vec<usize> = index::sample(rng, pool.len(), want.min(pool.len()))
        .into_iter()
        .map(|k| pool[k])
        .collect();
    picked.sort_unstable();
    picked
}

/// Picks the annotated examples shown to the LLM for event type `e`.
///
/// Positives are the ten most argument-rich instances of `e` (ties by
/// instance id). Negatives never contain `e`: in random mode they come from
/// instances of any other type, in sibling mode from instances holding a
/// sibling type, topped up from the random pool when siblings run short.
pub fn select_exemplars(
    split: &CorpusSplit,
    ont: &Ontology,
    e: &str,
    mode: NegativeMode,
    seed: u64,
) -> Result<ExemplarBundle> {
    ont.require(e)?;
    let ranked = ranked_candidates(split, e);
    if ranked.is_empty() {
        return Err(Error::Precondition(format!(
            "`{}` has no instance of `{e}` to draw exemplars from",
            split.name
        )));
    }
    if ranked.len() < POSITIVES {
        log::warn!("`{e}`: only {} positive exemplar(s) available", ranked.len());
    }
    let positives = ranked
        .into_iter()
        .take(POSITIVES)
        .map(|i| split.instances[i].clone())
        .collect();

    let mut rng = rng::stream(seed, &["exemplars", e]);
    let others: Vec<usize> = (0..split.len())
        .filter(|&i| {
            let inst = &split.instances[i];
            !inst.events.is_empty() && !inst.has_type(e)
        })
        .collect();
    let chosen = match mode {
        NegativeMode::None => Vec::new(),
        NegativeMode::Random => draw(&others, NEGATIVES, &mut rng),
        NegativeMode::Sibling => {
            let sibs: BTreeSet<&str> = ont.siblings(e)?.into_iter().map(|d| d.name.as_str()).collect();
            let pool: Vec<usize> = others
                .iter()
                .copied()
                .filter(|&i| split.instances[i].events.iter().any(|ev| sibs.contains(ev.event_type.as_str())))
                .collect();
            let mut picked = draw(&pool, NEGATIVES, &mut rng);
            if picked.len() < NEGATIVES {
                log::warn!(
                    "`{e}`: sibling pool has {} instance(s); topping up with random negatives",
                    pool.len()
                );
                let taken: BTreeSet<usize> = picked.iter().copied().collect();
                let rest: Vec<usize> = others.iter().copied().filter(|i| !taken.contains(i)).collect();
                picked.extend(draw(&rest, NEGATIVES - picked.len(), &mut rng));
            }
            picked
        }
    };
    if mode != NegativeMode::None && chosen.len() < NEGATIVES {
        log::warn!("`{e}`: only {} negative exemplar(s) available", chosen.len());
    }
    Ok(ExemplarBundle {
        event_type: e.to_string(),
        negative_mode: mode,
        positives,
        negatives: chosen.into_iter().map(|i| split.instances[i].clone()).collect(),
    })
}
