//! Acceptance gate. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails. Runs without the libtest harness so the
//! lines are always shown.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use eeguide::codefmt::{render_output, NormalizedEvent, PromptBuilder, INSTRUCTION};
use eeguide::corpus::{self, CorpusSplit, GoldEvent, IngestOptions};
use eeguide::guidelines::{
    build_generation_prompt, consolidate_all, generate_all, select_exemplars, GenerationConfig, NegativeMode,
    NEGATIVE_TRIGGER_PREFIX,
};
use eeguide::llmgate::ResponseCache;
use eeguide::ontology::ace05;
use eeguide::parse_eval::{
    aggregate, categorize_errors, gold_as_predictions, parse_all, parse_output, predictions_to_jsonl,
    records_to_jsonl, score, ErrorCategory, ParseStatus, PredictionInput,
};
use eeguide::sampling::{build_training, export_inference, TrainPlan};
use eeguide::{Ontology, Variant};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, detail: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(d) => Outcome::Pass(d),
        Err(d) => Outcome::Fail(d),
    }
}

// ---------------------------------------------------------------------------

fn grammar_round_trip() -> Outcome {
    outcome((|| {
        let ont = common::synthetic_ontology();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let started = Instant::now();
        let mut sets = 0;
        while sets < 1000 {
            let inst = common::random_instance(&ont, &mut rng, "r", 6, 12);
            for ty in inst.event_types() {
                let events: Vec<GoldEvent> = inst.events_of(ty).cloned().collect();
                let text = render_output(&events, &ont).map_err(|e| e.to_string())?;
                let rec = parse_output(&text, &ont, "r", ty);
                let want: Vec<NormalizedEvent> =
                    events.iter().map(|e| NormalizedEvent::from_gold(e, &ont).unwrap()).collect();
                let got: Vec<NormalizedEvent> = rec.events.into_iter().map(|p| p.event).collect();
                ensure(
                    rec.parse_status == ParseStatus::Ok && rec.diagnostics.is_empty() && got == want,
                    format!("set {sets} did not round-trip: {text}"),
                )?;
                sets += 1;
            }
        }
        let secs = started.elapsed().as_secs_f64();
        ensure(secs < 10.0, format!("{sets} sets took {secs:.2} s"))?;
        Ok(format!("{sets} random event sets reconstructed exactly in {secs:.2} s"))
    })())
}

const REFERENCE_RECORD: &str = r##"{
  "doc_id": "APW_ENG_20030306.0191",
  "wnd_id": "APW_ENG_20030306.0191-6",
  "instance_id": "821",
  "dataset_name": "ace05-en",
  "task_type": "E2E",
  "is_auth": "0",
  "instruction": "# This is an event extraction task where the goal is to extract structured events from the text. A structured event contains an event trigger word, an event type, the arguments participating in the event, and their roles in the event. For each different event type, please output the extracted information from the text into python-style dictionaries where the first key will be 'mention' with the value of the event trigger. Next, please output the arguments and their roles following the same format. The event type definitions and their argument roles are defined next.",
  "input": "# The following lines describe the task definition\n\n@dataclass\nclass Extradite(JusticeEvent):\n    mention: str\n    agent: List\n    destination: List\n    origin: List\n    person: List\n\n# This is the text to analyze\ntext = \"The post-Milosevic government later extradited him to the U.N. war crimes tribunal in The Hague, the Netherlands.\"\n\n# The list called result should contain the instances for the following events according to the guidelines above:\nresult = \n",
  "output": "[Extradite(\n    mention=\"extradited\",\n    person=[\"him\"], \n    destination=[\"Hague\"], \n    agent=[\"government\"],\n    origin=[]\n)]"
}"##;

fn reference_prompt_conformance() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let want: serde_json::Value = serde_json::from_str(REFERENCE_RECORD).unwrap();
        let mut inst = common::instance(
            "821",
            "The post-Milosevic government later extradited him to the U.N. war crimes tribunal in The Hague, the Netherlands.",
            &[("Extradite", "extradited", &[("person", "him"), ("destination", "Hague"), ("agent", "government")])],
        );
        inst.doc_id = "APW_ENG_20030306.0191".into();
        inst.wnd_id = "APW_ENG_20030306.0191-6".into();
        let b = PromptBuilder::new(&ont, "ace05-en", Variant::NoGuideline, None).map_err(|e| e.to_string())?;
        let rec = b.build(&inst, "Extradite", None, true).map_err(|e| e.to_string())?;
        let got = serde_json::to_value(&rec).unwrap();

        let keys = |v: &serde_json::Value| v.as_object().unwrap().keys().cloned().collect::<BTreeSet<_>>();
        ensure(keys(&got) == keys(&want), format!("field set {:?} != {:?}", keys(&got), keys(&want)))?;
        for k in ["doc_id", "wnd_id", "instance_id", "dataset_name", "task_type", "is_auth", "instruction", "input"] {
            ensure(got[k] == want[k], format!("field `{k}` differs"))?;
        }
        ensure(rec.instruction == INSTRUCTION, "instruction constant differs")?;

        let parsed = parse_output(want["output"].as_str().unwrap(), &ont, "821", "Extradite");
        ensure(parsed.parse_status == ParseStatus::Ok, format!("listed output: {:?}", parsed.diagnostics))?;
        ensure(parsed.events.len() == 1, "listed output should hold one event")?;
        let ev = &parsed.events[0].event;
        let args = |r: &str| ev.arguments[r].clone();
        ensure(
            ev.event_type == "Extradite"
                && ev.mention == "extradited"
                && args("person") == ["him"]
                && args("destination") == ["Hague"]
                && args("agent") == ["government"]
                && args("origin").is_empty(),
            format!("parsed {ev:?}"),
        )?;
        let ours = parse_output(rec.output.as_deref().unwrap(), &ont, "821", "Extradite");
        ensure(ours.events == parsed.events, "rendered gold output parses differently from the listed one")?;
        Ok("instruction, input and field set byte-exact; output parses to the Extradite event".into())
    })())
}

/// Small random fixtures for the metric checks: one instance each, at most
/// four events and six arguments.
fn metric_fixture(seed: u64) -> (CorpusSplit, BTreeMap<String, Vec<eeguide::parse_eval::PredictedEvent>>, common::OracleItems) {
    let ont = common::synthetic_ontology();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = common::random_instance(&ont, &mut rng, "m", 4, 6);
    let events = common::perturbed_predictions(&inst, &ont, &mut rng);
    let oracle = common::OracleItems::from_events(&events);
    let mut pred = BTreeMap::new();
    pred.insert("m".to_string(), common::as_predicted(&events, "m"));
    (CorpusSplit::new("fx", vec![inst]), pred, oracle)
}

fn metric_identity_and_zero() -> Outcome {
    outcome((|| {
        let ont = common::synthetic_ontology();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let split = common::random_split(&ont, &mut rng, "id", 200);
        let records = parse_all(&gold_as_predictions(&split, &ont).map_err(|e| e.to_string())?, &ont);
        let rep = score(&aggregate(&records), &split, &ont).map_err(|e| e.to_string())?;
        let o = &rep.overall;
        ensure([o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1] == [1.0; 4], format!("identity gave {:?}", [o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1]))?;

        let nonempty = CorpusSplit::new(
            "z",
            split.instances.iter().filter(|i| i.events.iter().any(|e| !e.arguments.is_empty())).cloned().collect(),
        );
        let rep = score(&BTreeMap::new(), &nonempty, &ont).map_err(|e| e.to_string())?;
        let o = &rep.overall;
        ensure([o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1] == [0.0; 4], "empty predictions should score 0")?;

        let mut mismatches = 0;
        for seed in 0..500 {
            let (gold, pred, oracle) = metric_fixture(seed);
            let rep = score(&pred, &gold, &ont).map_err(|e| e.to_string())?;
            let want = oracle.matched(&common::OracleItems::from_gold(&gold.instances[0]));
            let o = &rep.overall;
            if [o.ti.matched, o.tc.matched, o.ai.matched, o.ac.matched] != want {
                mismatches += 1;
            }
        }
        ensure(mismatches == 0, format!("{mismatches} of 500 fixtures disagree with brute force"))?;
        Ok("gold-as-prediction = 1.0, empty = 0.0, greedy = brute force on 500 fixtures".into())
    })())
}

fn strictness_ordering() -> Outcome {
    outcome((|| {
        let ont = common::synthetic_ontology();
        let mut reports = 0;
        for seed in 0..500 {
            let (gold, pred, _) = metric_fixture(seed);
            let rep = score(&pred, &gold, &ont).map_err(|e| e.to_string())?;
            for (name, s) in std::iter::once(("overall", &rep.overall)).chain(rep.per_type.iter().map(|(k, v)| (k.as_str(), v))) {
                ensure(
                    s.tc.matched <= s.ti.matched && s.ac.matched <= s.ai.matched,
                    format!("fixture {seed} {name}: TC {} TI {} AC {} AI {}", s.tc.matched, s.ti.matched, s.ac.matched, s.ai.matched),
                )?;
                reports += 1;
            }
        }
        Ok(format!("TC <= TI and AC <= AI on {reports} overall and per-type views"))
    })())
}

fn negative_sampling() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let split = common::random_split(&ont, &mut rng, "ns", 300);
        let plain = build_training(&split, &ont, None, &TrainPlan::new(Variant::NoGuideline, 7)).map_err(|e| e.to_string())?;
        let with = build_training(&split, &ont, None, &TrainPlan::new(Variant::NoGuideline, 7).with_negatives(15))
            .map_err(|e| e.to_string())?;
        let positives: usize = split.instances.iter().map(|i| i.event_types().len()).sum();
        ensure(
            with.len() == plain.len() + 15 * positives,
            format!("{} records with negatives, {} without, {positives} positives", with.len(), plain.len()),
        )?;
        for inst in &split.instances {
            let gold: BTreeSet<&str> = inst.event_types().into_iter().collect();
            let negs = with
                .iter()
                .filter(|r| r.instance_id == inst.instance_id && !gold.contains(r.event_type.as_str()));
            for r in negs {
                ensure(r.output.as_deref() == Some("[]"), "negative record with non-empty output")?;
            }
            let typed_gold = with
                .iter()
                .filter(|r| r.instance_id == inst.instance_id && gold.contains(r.event_type.as_str()))
                .count();
            ensure(typed_gold == gold.len(), format!("{}: a negative carries a gold type", inst.instance_id))?;
        }

        let big = CorpusSplit::new(
            "test",
            (0..2519)
                .map(|i| {
                    common::instance(&format!("t{i}"), &format!("sentence number {i} ends here."), &[])
                })
                .collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("infer.jsonl");
        let n = export_inference(&big, &ont, None, Variant::NoGuideline, 7, &path).map_err(|e| e.to_string())?;
        let lines = fs::read_to_string(&path).unwrap().lines().count();
        ensure(ont.len() == 33 && n == 83_127 && lines == 83_127, format!("{n} records, {lines} lines"))?;
        Ok(format!("15 negatives per positive over {positives} positives; 2519 x 33 = {lines} inference records"))
    })())
}

/// Attack-rich split for exemplar selection: 12 Attack sentences, 20 others.
fn exemplar_split() -> CorpusSplit {
    let mut instances = Vec::new();
    for i in 0..12 {
        instances.push(common::instance(
            &format!("a{i}"),
            &format!("Rebels {i} shelled the town of Kefar at dawn."),
            &[("Attack", "shelled", &[("attacker", "Rebels"), ("target", "town"), ("place", "Kefar")])],
        ));
    }
    let others: [(&str, &str, &str); 4] = [
        ("Meet", "met", "Leaders {} met in Oslo."),
        ("Die", "died", "The singer {} died on Monday."),
        ("ArrestJail", "arrested", "Police {} arrested the mayor."),
        ("Elect", "elected", "Voters {} elected a new council."),
    ];
    for i in 0..20 {
        let (ty, trig, tpl) = others[i % 4];
        let text = tpl.replace("{}", &i.to_string());
        instances.push(common::instance(&format!("o{i}"), &text, &[(ty, trig, &[])]));
    }
    CorpusSplit::new("train", instances)
}

fn guideline_shape() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let split = exemplar_split();
        let stub = common::StubEndpoint::new(&ont);
        let gate = common::stub_gate(stub.clone(), None, false);
        let cfg = GenerationConfig::default();
        let mut lines = Vec::new();
        for variant in [Variant::P, Variant::PN, Variant::PS] {
            let store = generate_all(&split, &ont, variant, &gate, &cfg, 11).map_err(|e| e.to_string())?;
            ensure(store.len() == 5, format!("{variant}: {} sets", store.len()))?;
            for set in store.sets.values() {
                ensure(
                    set.event_definitions.len() == 5 && set.role_definitions.values().all(|d| d.len() == 5),
                    format!("{variant} `{}` is not 5-wide", set.event_type),
                )?;
                set.validate(ont.require(&set.event_type).unwrap()).map_err(|e| e.to_string())?;
            }
            if variant != Variant::P {
                let merged = consolidate_all(&store, &ont, &gate, &cfg).map_err(|e| e.to_string())?;
                ensure(
                    merged.sets.values().all(|s| {
                        s.event_definitions.len() == 1 && s.role_definitions.values().all(|d| d.len() == 1)
                    }),
                    format!("{} is not 1-wide", merged.variant),
                )?;
                lines.push(format!("{variant} 5-wide, {} 1-wide", merged.variant));
            } else {
                lines.push(format!("{variant} 5-wide"));
            }
        }

        let def = ont.require("Attack").unwrap();
        let bundle = select_exemplars(&split, &ont, "Attack", NegativeMode::Random, 11).map_err(|e| e.to_string())?;
        let prompt = build_generation_prompt(def, &bundle);
        let triggers: Vec<&str> = prompt
            .split("### Event Trigger ###\n")
            .skip(1)
            .map(|rest| rest.lines().next().unwrap_or_default())
            .collect();
        let neg = triggers.iter().filter(|t| t.starts_with(NEGATIVE_TRIGGER_PREFIX)).count();
        let pos = triggers.len() - neg;
        ensure(pos == 10 && neg == 15, format!("PN prompt has {pos} positive and {neg} negative blocks"))?;
        Ok(format!("{}; PN prompt holds 10 positive and 15 negative blocks", lines.join(", ")))
    })())
}

/// Deterministic stand-in for a fine-tuned model: gold for most prompts,
/// perturbed or broken output for the rest.
fn fake_generations(split: &CorpusSplit, ont: &Ontology, seed: u64) -> Vec<PredictionInput> {
    let mut out = gold_as_predictions(split, ont).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut out {
        match rng.gen_range(0..10) {
            0 => p.raw_text = p.raw_text.chars().take(p.raw_text.chars().count() / 2).collect(),
            1 => {
                let inst = split.get(&p.instance_id).unwrap();
                let words: Vec<&str> = inst.text.split(' ').collect();
                p.raw_text = format!(
                    "[{}(mention={:?})]",
                    p.prompted_type,
                    words.choose(&mut rng).unwrap()
                );
            }
            _ => {}
        }
    }
    out
}

fn run_pipeline(raw_corpus: &Path, cache: &Path, out: &Path) -> Result<(), String> {
    let e = |e: eeguide::Error| e.to_string();
    let ont = ace05();
    let seed = 13;
    fs::create_dir_all(out).unwrap();
    let ingested = corpus::ingest(raw_corpus, &ont, &IngestOptions::default()).map_err(e)?.split;
    corpus::write_split(&ingested, out.join("train.jsonl")).map_err(e)?;
    fs::write(out.join("stats.json"), serde_json::to_string_pretty(&corpus::stats(&ingested).map_err(e)?).unwrap()).unwrap();
    let sub = corpus::subset_covered(&ingested, &ont, 60, seed).map_err(e)?;
    corpus::write_split(&sub, out.join("train100.jsonl")).map_err(e)?;
    let dev = corpus::select_dev(&ingested, &ont, 80, seed).map_err(e)?;
    corpus::write_split(&dev, out.join("dev.jsonl")).map_err(e)?;

    let gate = common::stub_gate(common::StubEndpoint::new(&ont), Some(ResponseCache::open(cache).map_err(|e| e.to_string())?), true);
    let cfg = GenerationConfig::default();
    let pn = generate_all(&sub, &ont, Variant::PN, &gate, &cfg, seed).map_err(e)?;
    pn.save(out.join("pn.json"), Some(&ont)).map_err(e)?;
    let pn_int = consolidate_all(&pn, &ont, &gate, &cfg).map_err(e)?;
    pn_int.save(out.join("pn-int.json"), Some(&ont)).map_err(e)?;

    let plan = TrainPlan::new(Variant::PN, seed).with_negatives(15);
    let train = build_training(&sub, &ont, Some(&pn), &plan).map_err(e)?;
    eeguide::codefmt::export_jsonl(&train, out.join("train.prompts.jsonl")).map_err(e)?;
    export_inference(&dev, &ont, Some(&pn_int), Variant::PNInt, seed, out.join("dev.prompts.jsonl")).map_err(e)?;

    let gens = fake_generations(&dev, &ont, seed);
    fs::write(out.join("generations.jsonl"), predictions_to_jsonl(&gens)).unwrap();
    let records = parse_all(&gens, &ont);
    fs::write(out.join("parsed.jsonl"), records_to_jsonl(&records)).unwrap();
    let agg = aggregate(&records);
    let mut report = score(&agg, &dev, &ont).map_err(e)?;
    report.errors = Some(categorize_errors(&agg, &dev, &records, None).map_err(e)?);
    fs::write(out.join("score.json"), report.to_json_string()).unwrap();
    fs::write(out.join("score.tsv"), report.f1_tsv()).unwrap();
    Ok(())
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    out
}

fn determinism() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let tmp = tempfile::tempdir().unwrap();
        let raw = tmp.path().join("raw.jsonl");
        let split = common::random_split(&ont, &mut ChaCha8Rng::seed_from_u64(4), "raw", 400);
        fs::write(&raw, corpus::split_to_jsonl(&split)).unwrap();

        // record pass against the live stub, then freeze the cache
        let cache = tmp.path().join("cache");
        {
            let ingested = corpus::ingest(&raw, &ont, &IngestOptions::default()).map_err(|e| e.to_string())?.split;
            let sub = corpus::subset_covered(&ingested, &ont, 60, 13).map_err(|e| e.to_string())?;
            let gate = common::stub_gate(common::StubEndpoint::new(&ont), Some(ResponseCache::open(&cache).unwrap()), false);
            let pn = generate_all(&sub, &ont, Variant::PN, &gate, &GenerationConfig::default(), 13).map_err(|e| e.to_string())?;
            consolidate_all(&pn, &ont, &gate, &GenerationConfig::default()).map_err(|e| e.to_string())?;
        }

        let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
        run_pipeline(&raw, &cache, &a)?;
        run_pipeline(&raw, &cache, &b)?;
        let (fa, fb) = (dir_contents(&a), dir_contents(&b));
        ensure(fa.keys().eq(fb.keys()), "runs wrote different file sets")?;
        let differing: Vec<&String> = fa.iter().filter(|(k, v)| fb[*k] != **v).map(|(k, _)| k).collect();
        ensure(differing.is_empty(), format!("files differ: {differing:?}"))?;
        Ok(format!("{} output files byte-identical across two runs from a frozen cache", fa.len()))
    })())
}

fn robust_parsing() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seeds: Vec<String> = {
            let split = common::random_split(&ont, &mut rng, "f", 50);
            gold_as_predictions(&split, &ont).unwrap().into_iter().map(|p| p.raw_text).filter(|t| t != "[]").collect()
        };
        let alphabet = b"[](),='\"\\ \n_=Attackmention`#";
        let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
        for i in 0..10_000 {
            let bytes: Vec<u8> = if i % 2 == 0 {
                (0..rng.gen_range(0..200)).map(|_| rng.gen()).collect()
            } else {
                let mut b = seeds.choose(&mut rng).unwrap().as_bytes().to_vec();
                for _ in 0..rng.gen_range(1..6) {
                    let at = rng.gen_range(0..=b.len());
                    match rng.gen_range(0..3) {
                        0 if at < b.len() => {
                            b.remove(at);
                        }
                        1 => b.insert(at, *alphabet.choose(&mut rng).unwrap()),
                        _ => b.truncate(at),
                    }
                }
                b
            };
            let text = String::from_utf8_lossy(&bytes).into_owned();
            let rec = catch_unwind(|| parse_output(&text, &ont, "f", "Attack"))
                .map_err(|_| format!("parser panicked on {text:?}"))?;
            *statuses.entry(format!("{:?}", rec.parse_status)).or_insert(0) += 1;
        }
        Ok(format!("10000 fuzzed inputs, no crash, statuses {statuses:?}"))
    })())
}

fn taxonomy_fixture() -> (CorpusSplit, Vec<PredictionInput>, BTreeMap<&'static str, Vec<ErrorCategory>>) {
    use ErrorCategory::*;
    let gold = vec![
        common::instance("pe1", "Troops fired on the crowd.", &[("Attack", "fired", &[("attacker", "Troops"), ("target", "crowd")])]),
        common::instance("pe2", "Two soldiers died in Basra.", &[("Die", "died", &[("victim", "soldiers"), ("place", "Basra")])]),
        common::instance("tte1", "A guard was killed at the gate.", &[("Die", "killed", &[("victim", "guard")])]),
        common::instance("tte2", "Ministers held talks in Cairo.", &[("Meet", "talks", &[("entity", "Ministers"), ("place", "Cairo")])]),
        common::instance("ae1", "Police arrested the suspect.", &[("ArrestJail", "arrested", &[("agent", "Police"), ("person", "suspect")])]),
        common::instance("ae2", "Voters elected Sharon.", &[("Elect", "elected", &[("entity", "Voters"), ("person", "Sharon")])]),
        common::instance("mae1", "The firm paid Smith a fee.", &[("TransferMoney", "paid", &[("giver", "firm"), ("recipient", "Smith")])]),
        common::instance(
            "mae2",
            "He married Ann and moved to Rome.",
            &[("Marry", "married", &[("person", "Ann")]), ("Transport", "moved", &[("destination", "Rome")])],
        ),
        common::instance("ok1", "The court acquitted Lee.", &[("Acquit", "acquitted", &[("adjudicator", "court"), ("defendant", "Lee")])]),
        common::instance("ok2", "It rained all week.", &[]),
    ];
    let split = CorpusSplit::new("taxonomy", gold);
    let ont = ace05();
    let mut preds = gold_as_predictions(&split, &ont).unwrap();
    let mut set = |id: &str, ty: &str, raw: &str| {
        let p = preds.iter_mut().find(|p| p.instance_id == id && p.prompted_type == ty).unwrap();
        p.raw_text = raw.to_string();
    };
    set("pe1", "Attack", "[Attack(mention='fired', attacker=['Troops'], target=['crowd']");
    set("pe2", "Die", "[Killing(mention='died', victim=['soldiers'])]");
    set("tte1", "Die", "[]");
    set("tte1", "Injure", "[Injure(mention='killed', victim=['guard'])]");
    set("tte2", "Demonstrate", "[Demonstrate(mention='held', entity=['Ministers'])]");
    set("ae1", "ArrestJail", "[ArrestJail(mention='arrested', agent=['Police'], person=['suspect'], place=['station'])]");
    set("ae2", "Elect", "[Elect(mention='elected', entity=['Voters'], person=['Sharon'], place=['Israel'])]");
    set("mae1", "TransferMoney", "[TransferMoney(mention='paid', giver=['firm'], recipient=[], beneficiary=[], place=[])]");
    set("mae2", "Transport", "[]");
    let expected = BTreeMap::from([
        ("pe1", vec![PE]),
        ("pe2", vec![PE]),
        ("tte1", vec![TTE]),
        ("tte2", vec![TTE]),
        ("ae1", vec![AE]),
        ("ae2", vec![AE]),
        ("mae1", vec![MAE]),
        ("mae2", vec![MAE]),
        ("ok1", vec![]),
        ("ok2", vec![]),
    ]);
    (split, preds, expected)
}

fn error_taxonomy() -> Outcome {
    outcome((|| {
        let ont = ace05();
        let (split, preds, expected) = taxonomy_fixture();
        let records = parse_all(&preds, &ont);
        let agg = aggregate(&records);
        let report = categorize_errors(&agg, &split, &records, None).map_err(|e| e.to_string())?;
        let got: BTreeMap<&str, Vec<ErrorCategory>> =
            report.instances.iter().map(|i| (i.instance_id.as_str(), i.labels.clone())).collect();
        for (id, want) in &expected {
            let have = got.get(id).cloned().unwrap_or_default();
            ensure(&have == want, format!("{id}: planted {want:?}, assigned {have:?}"))?;
        }
        let c = report.counts;
        ensure(
            (c.pe, c.tte, c.ae, c.mae, c.unclassified) == (2, 2, 2, 2, 0),
            format!("counts {c:?}"),
        )?;
        Ok("10 instances labeled exactly as planted (2 PE, 2 TTE, 2 AE, 2 MAE, 2 clean)".into())
    })())
}

fn corpus_statistics() -> Outcome {
    let Ok(dir) = std::env::var("EECODE_ACE05_DIR") else {
        return Outcome::Skip("EECODE_ACE05_DIR is not set; licensed ACE05 split not available".into());
    };
    outcome((|| {
        let ont = ace05();
        let mut counts = Vec::new();
        let mut train_types = 0;
        for name in ["train", "dev", "test"] {
            let path = ["jsonl", "json"]
                .iter()
                .map(|ext| Path::new(&dir).join(format!("{name}.{ext}")))
                .find(|p| p.exists())
                .ok_or_else(|| format!("no {name}.jsonl or {name}.json in {dir}"))?;
            let split = corpus::ingest(&path, &ont, &IngestOptions::default()).map_err(|e| e.to_string())?.split;
            let stats = corpus::stats(&split).map_err(|e| e.to_string())?;
            if name == "train" {
                train_types = stats.event_types.len();
            }
            counts.push(stats.instances);
        }
        ensure(
            counts == [16531, 1870, 2519] && train_types == 33,
            format!("instances {counts:?}, {train_types} event types in train"),
        )?;
        Ok("16531/1870/2519 instances, 33 event types".into())
    })())
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("grammar round-trip", grammar_round_trip),
        ("prompt format conformance", reference_prompt_conformance),
        ("metric identity and zero", metric_identity_and_zero),
        ("strictness ordering", strictness_ordering),
        ("negative sampling", negative_sampling),
        ("guideline shape", guideline_shape),
        ("determinism", determinism),
        ("robust parsing", robust_parsing),
        ("error taxonomy", error_taxonomy),
        ("corpus statistics", corpus_statistics),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        match result {
            Outcome::Pass(d) => println!("PASS {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP {name}: {d}"),
            Outcome::Fail(d) => {
                println!("FAIL {name}: {d}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

