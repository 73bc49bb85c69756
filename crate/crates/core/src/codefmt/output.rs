use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::GoldEvent;
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::pylit;

/// Structured form of one event, shared by gold rendering, the output
/// parser and the external interpreter oracle. Every role of the type is
/// present, unfilled roles as empty lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalizedEvent {
    pub event_type: String,
    pub mention: String,
    pub arguments: BTreeMap<String, Vec<String>>,
}

impl NormalizedEvent {
    pub fn from_gold(event: &GoldEvent, ont: &Ontology) -> Result<Self> {
        let def = ont.require(&event.event_type)?;
        let mut arguments: BTreeMap<String, Vec<String>> = def
            .role_names()
            .map(|r| (r.to_string(), Vec::new()))
            .collect();
        for arg in &event.arguments {
            arguments
                .get_mut(&arg.role)
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "role `{}` is not defined for `{}`",
                        arg.role, event.event_type
                    ))
                })?
                .push(arg.text.clone());
        }
        Ok(NormalizedEvent {
            event_type: event.event_type.clone(),
            mention: event.trigger_text.clone(),
            arguments,
        })
    }
}

/// Renders gold events of one type as a list of constructor calls:
/// `mention` first, then every role in ontology order.
pub fn render_output(events: &[GoldEvent], ont: &Ontology) -> Result<String> {
    if events.is_empty() {
        return Ok("[]".to_string());
    }
    let event_type = &events[0].event_type;
    let def = ont.require(event_type)?;
    let mut calls = Vec::with_capacity(events.len());
    for ev in events {
        if &ev.event_type != event_type {
            return Err(Error::Precondition(format!(
                "render_output mixes `{event_type}` and `{}`",
                ev.event_type
            )));
        }
        let normalized = NormalizedEvent::from_gold(ev, ont)?;
        let mut kwargs = vec![format!("mention={}", pylit::quote(&ev.trigger_text))];
        for role in def.role_names() {
            let values: Vec<String> = normalized.arguments[role]
                .iter()
                .map(|v| pylit::quote(v))
                .collect();
            kwargs.push(format!("{role}=[{}]", values.join(", ")));
        }
        calls.push(format!("{}({})", def.name, kwargs.join(", ")));
    }
    Ok(format!("[{}]", calls.join(", ")))
}
