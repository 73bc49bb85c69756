//! Fixtures shared by the integration suites.

#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use eeguide::corpus::{ArgumentMention, CorpusSplit, GoldEvent, SentenceInstance};
use eeguide::llmgate::{EndpointConfig, Gate, HttpReply, ResponseCache, Transport, TransportError};
use eeguide::{EventTypeDef, Ontology};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn synthetic_ontology() -> Ontology {
    Ontology::new(
        "synthetic",
        vec![
            EventTypeDef::new("Launch", "SpaceEvent", &["agent", "vehicle", "place"]),
            EventTypeDef::new("Dock", "SpaceEvent", &["vehicle", "target"]),
            EventTypeDef::new("Vote", "CivicEvent", &["voter", "measure", "place", "time"]),
            EventTypeDef::new("Riot", "CivicEvent", &[]),
            EventTypeDef::new("Harvest", "FarmEvent", &["farmer", "crop"]),
            EventTypeDef::new("Sell", "FarmEvent", &["seller", "buyer", "crop", "price", "place"]),
        ],
    )
    .expect("synthetic ontology is valid")
}

/// Tokens chosen to stress quoting: quotes, backslashes, non-ASCII, escapes.
const WORDS: &[&str] = &[
    "rocket", "the", "council", "wheat", "Zürich", "O'Brien", "\"quoted\"", "back\\slash",
    "naïve", "東京", "a,b", "x=y", "[bracket]", "(paren)", "tab\there", "new\nline", "€5",
    "it's", "ok", "#hash", "`tick`", "50%", "emoji😀", "\\n", "''", "none", "None", "result",
];

pub fn word(rng: &mut ChaCha8Rng) -> String {
    WORDS.choose(rng).unwrap().to_string()
}

/// A sentence of random words with events whose spans index into it.
pub fn random_instance(
    ont: &Ontology,
    rng: &mut ChaCha8Rng,
    id: &str,
    max_events: usize,
    max_args: usize,
) -> SentenceInstance {
    let n_words = rng.gen_range(4..16);
    let words: Vec<String> = (0..n_words).map(|_| word(rng)).collect();
    let mut starts = Vec::new();
    let mut text = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        starts.push(text.chars().count());
        text.push_str(w);
    }
    let span = |i: usize| (starts[i], starts[i] + words[i].chars().count(), words[i].clone());

    let n_events = rng.gen_range(0..=max_events);
    let mut events = Vec::new();
    let mut args_left = max_args;
    for _ in 0..n_events {
        let def = ont.event_types().choose(rng).unwrap();
        let (ts, te, tt) = span(rng.gen_range(0..n_words));
        let mut arguments = Vec::new();
        if !def.roles.is_empty() {
            let k = rng.gen_range(0..=args_left.min(3));
            args_left -= k;
            for _ in 0..k {
                let role = def.roles.choose(rng).unwrap().name.clone();
                let (start, end, text) = span(rng.gen_range(0..n_words));
                arguments.push(ArgumentMention { role, text, start, end });
            }
        }
        events.push(GoldEvent {
            event_type: def.name.clone(),
            trigger_text: tt,
            trigger_start: ts,
            trigger_end: te,
            arguments,
        });
    }
    SentenceInstance {
        doc_id: format!("doc{}", id.len()),
        wnd_id: format!("{id}-w"),
        instance_id: id.to_string(),
        text,
        events,
    }
}

pub fn random_split(ont: &Ontology, rng: &mut ChaCha8Rng, name: &str, n: usize) -> CorpusSplit {
    let instances = (0..n)
        .map(|i| random_instance(ont, rng, &format!("{name}-{i}"), 3, 6))
        .collect();
    CorpusSplit::new(name, instances)
}

/// Builds an instance from surface strings, locating each span in `text`.
/// (event type, trigger, [(role, argument)]) with surface strings.
pub type EventSpec<'a> = (&'a str, &'a str, &'a [(&'a str, &'a str)]);

pub fn instance(id: &str, text: &str, events: &[EventSpec<'_>]) -> SentenceInstance {
    let locate = |s: &str| {
        let b = text.find(s).unwrap_or_else(|| panic!("`{s}` not in `{text}`"));
        let start = text[..b].chars().count();
        (start, start + s.chars().count())
    };
    SentenceInstance {
        doc_id: "doc".into(),
        wnd_id: format!("{id}-w"),
        instance_id: id.into(),
        text: text.into(),
        events: events
            .iter()
            .map(|(ty, trig, args)| {
                let (ts, te) = locate(trig);
                GoldEvent {
                    event_type: ty.to_string(),
                    trigger_text: trig.to_string(),
                    trigger_start: ts,
                    trigger_end: te,
                    arguments: args
                        .iter()
                        .map(|(role, s)| {
                            let (start, end) = locate(s);
                            ArgumentMention { role: role.to_string(), text: s.to_string(), start, end }
                        })
                        .collect(),
                }
            })
            .collect(),
    }
}

/// Chat endpoint that answers guideline prompts with well-formed JSON:
/// five definitions per item for generation, one for consolidation.
pub struct StubEndpoint {
    ont: Ontology,
    pub calls: AtomicUsize,
}

impl StubEndpoint {
    pub fn new(ont: &Ontology) -> Arc<Self> {
        Arc::new(StubEndpoint { ont: ont.clone(), calls: AtomicUsize::new(0) })
    }

    fn reply_for(&self, prompt: &str) -> String {
        let (name, n) = if let Some(rest) = prompt.split("Event Type: prompt_").nth(1) {
            (rest.split('(').next().unwrap().to_string(), 1)
        } else {
            let name = prompt
                .lines()
                .filter(|l| l.contains(" which is a child event type of super class "))
                .filter_map(|l| l.split_whitespace().next())
                .find(|n| self.ont.contains(n))
                .expect("generation prompt names its type");
            (name.to_string(), 5)
        };
        let def = self.ont.get(&name).unwrap_or_else(|| panic!("unknown type {name}"));
        let defs = |what: &str| -> serde_json::Value {
            if n == 1 {
                format!("Merged definition of {what}.").into()
            } else {
                (1..=n).map(|i| format!("Definition {i} of {what}.")).collect::<Vec<_>>().into()
            }
        };
        let mut roles = serde_json::Map::new();
        for r in def.role_names() {
            roles.insert(r.to_string(), defs(r));
        }
        let body = serde_json::json!({
            "Event Definition": defs(&def.name),
            "Arguments Definitions": roles,
        });
        format!("Sure.\n```json\n{}\n```", serde_json::to_string_pretty(&body).unwrap())
    }
}

impl Transport for StubEndpoint {
    fn post_json(&self, _url: &str, _token: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let req: serde_json::Value = serde_json::from_str(body).map_err(|e| TransportError::Fatal(e.to_string()))?;
        let prompt = req["messages"][0]["content"].as_str().unwrap_or_default();
        let envelope = serde_json::json!({
            "id": "stub",
            "model": req["model"],
            "choices": [{"index": 0, "message": {"role": "assistant", "content": self.reply_for(prompt)}}],
        });
        Ok(HttpReply { status: 200, body: envelope.to_string() })
    }
}

pub fn stub_gate(stub: Arc<StubEndpoint>, cache: Option<ResponseCache>, offline: bool) -> Gate {
    let cfg = EndpointConfig {
        base_url: "http://stub.invalid/v1".into(),
        token_env: "EEGUIDE_TEST_NO_TOKEN".into(),
        offline,
        ..EndpointConfig::default()
    };
    Gate::with_transport(cfg, cache, stub).expect("stub config is valid")
}

/// Largest number of equal pairs over every one-to-one pairing of `pred`
/// with `gold`, by exhaustive search over gold subsets.
pub fn brute_force_matches<T: PartialEq>(pred: &[T], gold: &[T]) -> usize {
    assert!(gold.len() <= 20, "oracle is exponential in the gold size");
    let mut memo = std::collections::HashMap::new();
    fn go<T: PartialEq>(
        i: usize,
        used: u32,
        pred: &[T],
        gold: &[T],
        memo: &mut std::collections::HashMap<(usize, u32), usize>,
    ) -> usize {
        if i == pred.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, used)) {
            return v;
        }
        let mut best = go(i + 1, used, pred, gold, memo);
        for j in 0..gold.len() {
            if used & (1 << j) == 0 {
                let hit = usize::from(pred[i] == gold[j]);
                best = best.max(hit + go(i + 1, used | (1 << j), pred, gold, memo));
            }
        }
        memo.insert((i, used), best);
        best
    }
    go(0, 0, pred, gold, &mut memo)
}

pub fn ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Items per metric, derived straight from the definitions: TI on the
/// mention, TC on (type, mention), AI on (type, argument), AC on
/// (type, role, argument).
#[derive(Debug, Default)]
pub struct OracleItems {
    pub ti: Vec<String>,
    pub tc: Vec<(String, String)>,
    pub ai: Vec<(String, String)>,
    pub ac: Vec<(String, String, String)>,
}

impl OracleItems {
    pub fn push(&mut self, ty: &str, mention: &str, args: &[(String, String)]) {
        self.ti.push(ws(mention));
        self.tc.push((ty.into(), ws(mention)));
        for (role, text) in args {
            self.ai.push((ty.into(), ws(text)));
            self.ac.push((ty.into(), role.clone(), ws(text)));
        }
    }

    pub fn from_gold(inst: &SentenceInstance) -> Self {
        let mut it = OracleItems::default();
        for e in &inst.events {
            let args: Vec<(String, String)> =
                e.arguments.iter().map(|a| (a.role.clone(), a.text.clone())).collect();
            it.push(&e.event_type, &e.trigger_text, &args);
        }
        it
    }

    pub fn from_events(events: &[eeguide::codefmt::NormalizedEvent]) -> Self {
        let mut it = OracleItems::default();
        for e in events {
            let args: Vec<(String, String)> = e
                .arguments
                .iter()
                .flat_map(|(r, vs)| vs.iter().map(move |v| (r.clone(), v.clone())))
                .collect();
            it.push(&e.event_type, &e.mention, &args);
        }
        it
    }

    /// Brute-force matched counts in TI, TC, AI, AC order.
    pub fn matched(&self, gold: &OracleItems) -> [usize; 4] {
        [
            brute_force_matches(&self.ti, &gold.ti),
            brute_force_matches(&self.tc, &gold.tc),
            brute_force_matches(&self.ai, &gold.ai),
            brute_force_matches(&self.ac, &gold.ac),
        ]
    }
}

/// Predictions made by perturbing gold: events dropped, retyped, re-anchored,
/// duplicated, arguments swapped to other roles or other words, and spurious
/// events added.
pub fn perturbed_predictions(
    inst: &SentenceInstance,
    ont: &Ontology,
    rng: &mut ChaCha8Rng,
) -> Vec<eeguide::codefmt::NormalizedEvent> {
    use eeguide::codefmt::NormalizedEvent;
    let words: Vec<&str> = inst.text.split(' ').collect();
    let mut out = Vec::new();
    for ev in &inst.events {
        let mut e = NormalizedEvent::from_gold(ev, ont).unwrap();
        match rng.gen_range(0..8) {
            0 => continue,
            1 => {
                let def = ont.event_types().choose(rng).unwrap();
                let mut args: std::collections::BTreeMap<String, Vec<String>> =
                    def.role_names().map(|r| (r.to_string(), Vec::new())).collect();
                for vals in e.arguments.values() {
                    for v in vals {
                        if let Some(r) = def.roles.choose(rng) {
                            args.get_mut(&r.name).unwrap().push(v.clone());
                        }
                    }
                }
                e = NormalizedEvent { event_type: def.name.clone(), mention: e.mention, arguments: args };
            }
            2 => e.mention = words.choose(rng).unwrap().to_string(),
            3 => out.push(e.clone()),
            4 => {
                if let Some(vals) = e.arguments.values_mut().find(|v| !v.is_empty()) {
                    vals[0] = words.choose(rng).unwrap().to_string();
                }
            }
            5 => {
                let def = ont.require(&e.event_type).unwrap();
                if def.roles.len() > 1 {
                    let moved: Vec<String> = e.arguments.values_mut().flat_map(std::mem::take).collect();
                    for v in moved {
                        let r = def.roles.choose(rng).unwrap();
                        e.arguments.get_mut(&r.name).unwrap().push(v);
                    }
                }
            }
            _ => {}
        }
        out.push(e);
    }
    if rng.gen_bool(0.3) && out.len() < 4 {
        let def = ont.event_types().choose(rng).unwrap();
        let mut arguments: std::collections::BTreeMap<String, Vec<String>> =
            def.role_names().map(|r| (r.to_string(), Vec::new())).collect();
        if let Some(r) = def.roles.choose(rng) {
            arguments.get_mut(&r.name).unwrap().push(words.choose(rng).unwrap().to_string());
        }
        out.push(NormalizedEvent {
            event_type: def.name.clone(),
            mention: words.choose(rng).unwrap().to_string(),
            arguments,
        });
    }
    out
}

pub fn as_predicted(events: &[eeguide::codefmt::NormalizedEvent], instance_id: &str) -> Vec<eeguide::parse_eval::PredictedEvent> {
    events
        .iter()
        .map(|e| eeguide::parse_eval::PredictedEvent {
            event: e.clone(),
            source: eeguide::parse_eval::Source {
                instance_id: instance_id.into(),
                prompted_type: e.event_type.clone(),
            },
        })
        .collect()
}
