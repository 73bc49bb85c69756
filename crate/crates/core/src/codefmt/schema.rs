use crate::error::{Error, Result};
use crate::guidelines::GuidelineSet;
use crate::ontology::{is_identifier, EventTypeDef, MENTION_FIELD};
use crate::variant::Variant;

/// Fixed description attached to the trigger field whenever guidelines are on.
pub const MENTION_DESCRIPTION: &str = "The text span that triggers the event.";

const INDENT: &str = "    ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaRendering {
    pub event_type: String,
    pub variant: Variant,
    pub guideline_index: Option<usize>,
    pub text: String,
}

fn docstring(text: &str) -> String {
    // escape only what could terminate the literal early
    let mut out = String::with_capacity(text.len() + 6);
    out.push_str("\"\"\"");
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out.push_str("\"\"\"");
    out
}

fn comment(text: &str) -> String {
    text.split(['\n', '\r']).map(str::trim).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ")
}

/// Renders the class block for one event type.
///
/// Without guidelines the block holds only the decorator, the class header,
/// `mention: str` and one `List` field per role. With guidelines the event
/// definition becomes the class docstring and each role definition a
/// trailing comment on its field line.
pub fn render_schema(
    event: &EventTypeDef,
    variant: Variant,
    guidelines: Option<&GuidelineSet>,
    guideline_index: Option<usize>,
) -> Result<SchemaRendering> {
    let mut text = format!("@dataclass\nclass {}({}):\n", event.name, event.parent);

    if !variant.uses_guidelines() {
        text.push_str(&format!("{INDENT}{MENTION_FIELD}: str"));
        for role in &event.roles {
            text.push_str(&format!("\n{INDENT}{}: List", role.name));
        }
        return Ok(SchemaRendering {
            event_type: event.name.clone(),
            variant,
            guideline_index: None,
            text,
        });
    }

    let set = guidelines.ok_or_else(|| {
        Error::Guideline(format!("variant {variant} needs guidelines for `{}`", event.name))
    })?;
    if set.event_type != event.name {
        return Err(Error::Guideline(format!(
            "guideline set is for `{}`, not `{}`",
            set.event_type, event.name
        )));
    }
    if set.variant != variant {
        return Err(Error::Guideline(format!(
            "guideline set for `{}` is variant {}, prompt asks for {variant}",
            event.name, set.variant
        )));
    }
    let index = if variant.is_sampled() {
        let i = guideline_index.ok_or_else(|| {
            Error::Guideline(format!("variant {variant} needs a guideline index"))
        })?;
        if i >= variant.definitions_per_item() {
            return Err(Error::Guideline(format!(
                "guideline index {i} out of range for variant {variant}"
            )));
        }
        i
    } else {
        match guideline_index {
            None | Some(0) => 0,
            Some(i) => {
                return Err(Error::Guideline(format!(
                    "variant {variant} has a single guideline; index {i} given"
                )))
            }
        }
    };

    let event_def = set.event_definitions.get(index).ok_or_else(|| {
        Error::Guideline(format!("`{}` has no event definition #{index}", event.name))
    })?;
    text.push_str(&format!("{INDENT}{}\n", docstring(event_def)));
    text.push_str(&format!("{INDENT}{MENTION_FIELD}: str  # {MENTION_DESCRIPTION}"));
    for role in &event.roles {
        let def = set
            .role_definitions
            .get(&role.name)
            .and_then(|defs| defs.get(index))
            .ok_or_else(|| {
                Error::Guideline(format!(
                    "missing guideline #{index} for role `{}` of `{}`",
                    role.name, event.name
                ))
            })?;
        let c = comment(def);
        if c.is_empty() {
            text.push_str(&format!("\n{INDENT}{}: List", role.name));
        } else {
            text.push_str(&format!("\n{INDENT}{}: List  # {c}", role.name));
        }
    }
    Ok(SchemaRendering {
        event_type: event.name.clone(),
        variant,
        guideline_index: variant.is_sampled().then_some(index),
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedField {
    pub name: String,
    pub annotation: String,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSchema {
    pub class_name: String,
    pub parent: String,
    pub docstring: Option<String>,
    pub fields: Vec<ParsedField>,
}

fn parse_class_header(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix("class ")?;
    let (name, rest) = rest.split_once('(')?;
    let (parent, rest) = rest.split_once(')')?;
    if rest.trim_end() != ":" || !is_identifier(name.trim()) || !is_identifier(parent.trim()) {
        return None;
    }
    Some((name.trim().to_string(), parent.trim().to_string()))
}

/// Checks a rendered block against the schema grammar and returns its parts.
pub fn parse_schema(text: &str) -> Result<ParsedSchema, String> {
    let (decorator, rest) = text.split_once('\n').ok_or("missing class header")?;
    if decorator.trim_end() != "@dataclass" {
        return Err(format!("expected `@dataclass`, found `{decorator}`"));
    }
    let (header, mut body) = rest.split_once('\n').unwrap_or((rest, ""));
    let (class_name, parent) =
        parse_class_header(header).ok_or_else(|| format!("malformed class header `{header}`"))?;

    let mut docstring = None;
    let trimmed = body.trim_start_matches([' ', '\t']);
    if let Some(after) = trimmed.strip_prefix("\"\"\"") {
        let chars: Vec<char> = after.chars().collect();
        let mut doc = String::new();
        let mut i = 0;
        let end = loop {
            match chars.get(i) {
                None => return Err("unterminated docstring".into()),
                Some('\\') => {
                    match chars.get(i + 1) {
                        Some(&c @ ('\\' | '"')) => doc.push(c),
                        Some(&c) => {
                            doc.push('\\');
                            doc.push(c);
                        }
                        None => return Err("unterminated docstring".into()),
                    }
                    i += 2;
                }
                Some('"') if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                    break i + 3;
                }
                Some(&c) => {
                    doc.push(c);
                    i += 1;
                }
            }
        };
        docstring = Some(doc);
        let consumed: usize = chars[..end].iter().map(|c| c.len_utf8()).sum();
        let after_doc = &after[consumed..];
        body = after_doc
            .strip_prefix('\n')
            .ok_or("docstring must end its line")?;
    }

    let mut fields = Vec::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let stripped = line
            .strip_prefix(INDENT)
            .ok_or_else(|| format!("field line not indented: `{line}`"))?;
        let (decl, comment) = match stripped.split_once('#') {
            Some((d, c)) => (d, Some(c.trim().to_string())),
            None => (stripped, None),
        };
        let (name, annotation) = decl
            .split_once(':')
            .ok_or_else(|| format!("malformed field `{line}`"))?;
        let (name, annotation) = (name.trim(), annotation.trim());
        if !is_identifier(name) {
            return Err(format!("invalid field name `{name}`"));
        }
        let expected = if fields.is_empty() { "str" } else { "List" };
        if fields.is_empty() && name != MENTION_FIELD {
            return Err(format!("first field must be `{MENTION_FIELD}`, found `{name}`"));
        }
        if annotation != expected {
            return Err(format!("field `{name}` must be annotated `{expected}`"));
        }
        if fields.iter().any(|f: &ParsedField| f.name == name) {
            return Err(format!("duplicate field `{name}`"));
        }
        fields.push(ParsedField {
            name: name.to_string(),
            annotation: annotation.to_string(),
            comment,
        });
    }
    if fields.is_empty() {
        return Err(format!("class `{class_name}` has no `{MENTION_FIELD}` field"));
    }
    Ok(ParsedSchema {
        class_name,
        parent,
        docstring,
        fields,
    })
}
