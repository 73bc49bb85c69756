use serde::Serialize;
use serde_json::{Map, Value};

use super::exemplar::ExemplarBundle;
use super::GuidelineSet;
use crate::codefmt::MENTION_DESCRIPTION;
use crate::corpus::SentenceInstance;
use crate::ontology::EventTypeDef;
use crate::pylit;

/// Trigger line of a negative exemplar, followed by the event type and `)`.
pub const NEGATIVE_TRIGGER_PREFIX: &str = "None (this text does not express ";

const GENERATION_BODY: &str = r#"Input Format will be as following
```
Event Schema:
Event Name and its parent class
Arguments:
Arguments separated by new lines. If there are no arguments None will be given.

Examples
```
Instructions:
1) Identify and list all unique arguments related to the event type.
2) Define the event type and each argument. You can take help of examples below to understand the events and their arguments. 
3) Please remember that the examples may not cover all the arguments in the list. In some cases, you may not have arguments at all, in such cases, you can have an empty list for arguments. 
4) For each definition, provide 5 illustrative definitions in JSON format. For events you can add example triggers and the explanation of the events such as edge cases and other critical details starting with "The event can be triggered by ... ". Similarly for arguments also you can add examples, and detailed information for them including any edge case or domain knowledge starting with "Examples are ... ".
5) Remember to not generate any additional information such as examples, etc. and strictly follow the output format shown below.
6) Remember also to add detailed information for the events and arguments so that the annotators who are not familiar with machine learning and NLP can still solve the task. Remember to add required domain knowledge and please cover the edge cases when possible.
7) Remember that while generating examples for the event or attributes you should generate diverse set of triggers or argument values rather than picking them from the examples I have provided for each of the 5 generated guidelines.

Output Format:
{
  "Event Definition": [
    "Definition 1",
    "Definition 2",
    "Definition 3",
    "Definition 4",
    "Definition 5"
  ],
  "Arguments Definitions": {
    "Argument1": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    "Argument2": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ]
    // Add additional arguments as necessary
  }
}

"#;

const CONSOLIDATION_HEAD: &str = r#"You are an expert in summarizing NLP event extraction guidelines. Your goal is to consolidate multiple detailed descriptions into a single concise, comprehensive "Intergrated" guideline.

### Input Format ###
Event Type: Event Type Name
```json
{
  "Event Definition": [
    "Definition 1",
    "Definition 2",
    "Definition 3",
    "Definition 4",
    "Definition 5"
  ],
  "Arguments Definitions": {
    "mention": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    "Argument1": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    // Add additional arguments as necessary
  }
}
```

### Task ###
1. Integrated the 5 definitions under "Event Definition" into a single definition:
   - Highlight all critical points and examples from the five definitions.
   - Ensure the description is concise, comprehensive, and clear, using formal language that non-experts can understand.

2. Do the same for each argument under "Arguments Definitions," producing a single intergrated definition for each. 

### Output Format ###
```json
{
  "Event Definition": "Consolidated intergrated guideline for the event type.",
  "Arguments Definitions": {
    "mention": "Consolidated intergrated guideline for the mention argument.",
    "Argument1": "Consolidated intergrated guideline for Argument1.",
    "Argument2": "Consolidated intergrated guideline for Argument2."
    // Add additional arguments as necessary
  }
}
```

### Guidelines to Summarize ###
"#;

fn schema_line(def: &EventTypeDef) -> String {
    format!("{} which is a child event type of super class {}", def.name, def.parent)
}

fn positive_block(inst: &SentenceInstance, event_type: &str) -> (String, String) {
    let triggers: Vec<&str> = inst.events_of(event_type).map(|e| e.trigger_text.as_str()).collect();
    // roles in first-mention order, spans gathered across all events of the type
    let mut roles: Vec<(&str, Vec<&str>)> = Vec::new();
    for arg in inst.events_of(event_type).flat_map(|e| &e.arguments) {
        match roles.iter_mut().find(|(r, _)| *r == arg.role) {
            Some((_, spans)) => spans.push(&arg.text),
            None => roles.push((&arg.role, vec![&arg.text])),
        }
    }
    let args = if roles.is_empty() {
        "None".to_string()
    } else {
        roles
            .iter()
            .map(|(role, spans)| format!("For argument \"{role}\" extracted spans {}", pylit::repr_list(spans)))
            .collect::<Vec<_>>()
            .join("\n")
    };
    (triggers.join("\n"), args)
}

/// The guideline-generation prompt: task header, fixed instructions and
/// output format, the event schema, then one `Example k` block per
/// exemplar, positives first.
pub fn build_generation_prompt(def: &EventTypeDef, bundle: &ExemplarBundle) -> String {
    let mut out = format!(
        "You are an expert in annotating NLP datasets for event extraction. Your task is to generate \"detailed\" annotation guidelines for the event type {}.\n\n",
        schema_line(def)
    );
    out.push_str(GENERATION_BODY);
    out.push_str("Event Schema:\n");
    out.push_str(&schema_line(def));
    out.push_str("\nArguments:\n");
    if def.roles.is_empty() {
        out.push_str("None\n");
    }
    for (i, role) in def.roles.iter().enumerate() {
        out.push_str(&format!("Argument {} -> {}\n", i + 1, role.name));
    }

    let negative = (
        format!("{NEGATIVE_TRIGGER_PREFIX}{})", def.name),
        "None".to_string(),
    );
    let blocks = bundle
        .positives
        .iter()
        .map(|inst| (inst, positive_block(inst, &def.name)))
        .chain(bundle.negatives.iter().map(|inst| (inst, negative.clone())));
    for (k, (inst, (trigger, args))) in blocks.enumerate() {
        out.push_str(&format!(
            "\nExample {}\n### Input Text ###\n{}\n### Event Trigger ###\n{trigger}\n### Event Arguments ###\n{args}\n",
            k + 1,
            inst.text
        ));
    }
    out
}

fn pretty4(v: &Value) -> String {
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    v.serialize(&mut ser).expect("plain JSON");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// The consolidation prompt embedding all five sampled definitions.
pub fn build_consolidation_prompt(def: &EventTypeDef, set: &GuidelineSet) -> String {
    let mut description = Map::new();
    description.insert("description".into(), Value::from(set.event_definitions.clone()));
    let mut attributes = Map::new();
    attributes.insert("mention".into(), Value::from(MENTION_DESCRIPTION));
    for role in def.role_names() {
        let defs = set.role_definitions.get(role).cloned().unwrap_or_default();
        attributes.insert(role.to_string(), Value::from(defs));
    }
    let mut root = Map::new();
    root.insert(format!("{}({})", def.name, def.parent), Value::Object(description));
    root.insert("attributes".into(), Value::Object(attributes));

    let mut out = String::from(CONSOLIDATION_HEAD);
    out.push_str(&format!("Event Type: prompt_{}({})\n```json\n", def.name, def.parent));
    out.push_str(&pretty4(&Value::Object(root)));
    out.push_str("\n```");
    out
}
