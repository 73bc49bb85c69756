//! Run configuration: one TOML or JSON file with per-stage seeds, the LLM
//! endpoint and generation settings. Command-line flags override it.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use eeguide::guidelines::GenerationConfig;
use eeguide::llmgate::EndpointConfig;
use eeguide::sampling::DEFAULT_NS_COUNT;
use eeguide::Variant;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub subset: u64,
    pub exemplars: u64,
    pub train: u64,
    pub infer: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            subset: 13,
            exemplars: 13,
            train: 13,
            infer: 13,
        }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Seeds {
            subset: seed,
            exemplars: seed,
            train: seed,
            infer: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub variant: Variant,
    pub with_ns: bool,
    pub ns_count: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            variant: Variant::NoGuideline,
            with_ns: false,
            ns_count: DEFAULT_NS_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Directory relative paths resolve against. Defaults to the config
    /// file's directory, or the working directory without a config file.
    pub root: Option<PathBuf>,
    /// Ontology JSON; the bundled ACE05 ontology when absent.
    pub ontology: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub strict: bool,
    pub seeds: Seeds,
    pub sampling: SamplingConfig,
    pub endpoint: EndpointConfig,
    pub generation: GenerationConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            root: None,
            ontology: None,
            cache_dir: PathBuf::from("cache"),
            strict: true,
            seeds: Seeds::default(),
            sampling: SamplingConfig::default(),
            endpoint: EndpointConfig::default(),
            generation: GenerationConfig::default(),
        }
    }
}

/// Every problem found in a config file.
#[derive(Debug)]
pub struct ConfigError {
    pub source_name: String,
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration in {}:", self.source_name)?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "a table",
    }
}

/// Compares the user's tree with the defaults: unknown keys and values of
/// the wrong kind are reported with their dotted path.
fn check_shape(user: &Value, default: &Value, path: &str, problems: &mut Vec<String>) {
    match (user, default) {
        (Value::Object(u), Value::Object(d)) => {
            for (k, v) in u {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match d.get(k) {
                    Some(dv) => check_shape(v, dv, &p, problems),
                    None => problems.push(format!("unknown key `{p}`")),
                }
            }
        }
        // optional settings default to null and accept scalars
        (_, Value::Null) => {}
        (Value::Number(_), Value::Number(_)) | (Value::Bool(_), Value::Bool(_)) | (Value::String(_), Value::String(_)) => {}
        (u, d) => problems.push(format!("`{path}` must be {}, found {}", kind(d), kind(u))),
    }
}

impl Config {
    pub fn parse(text: &str, json: bool, source_name: &str) -> Result<Config, ConfigError> {
        let fail = |problems: Vec<String>| ConfigError {
            source_name: source_name.to_string(),
            problems,
        };
        let value: Value = if json {
            serde_json::from_str(text).map_err(|e| fail(vec![e.to_string()]))?
        } else {
            toml::from_str(text).map_err(|e| fail(vec![e.to_string()]))?
        };
        let mut problems = Vec::new();
        if !value.is_object() {
            problems.push("the configuration must be a table".into());
            return Err(fail(problems));
        }
        let default = serde_json::to_value(Config::default()).expect("defaults serialize");
        check_shape(&value, &default, "", &mut problems);
        if !problems.is_empty() {
            return Err(fail(problems));
        }
        let cfg: Config = serde_json::from_value(value).map_err(|e| fail(vec![e.to_string()]))?;
        cfg.validate().map_err(fail)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: path.display().to_string(),
            problems: vec![e.to_string()],
        })?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = Config::parse(&text, json, &path.display().to_string())?;
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        cfg.root = Some(match cfg.root.take() {
            Some(r) if r.is_relative() => dir.join(r),
            Some(r) => r,
            None => dir,
        });
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if let Err(p) = self.endpoint.validate() {
            problems.extend(p);
        }
        if self.generation.max_attempts == 0 {
            problems.push("generation.max_attempts must be at least 1".into());
        }
        for (key, t) in [
            ("generation.temperature", self.generation.temperature),
            ("generation.consolidation_temperature", self.generation.consolidation_temperature),
        ] {
            if !(0.0..=2.0).contains(&t) {
                problems.push(format!("{key} must lie in [0, 2]"));
            }
        }
        if self.cache_dir.as_os_str().is_empty() {
            problems.push("cache_dir must not be empty".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    pub fn root(&self) -> PathBuf {
        self.root.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root().join(p)
        }
    }
}
