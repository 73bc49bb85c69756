use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How the event schema in a prompt is annotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "noguide")]
    NoGuideline,
    #[serde(rename = "h")]
    H,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "pn")]
    PN,
    #[serde(rename = "ps")]
    PS,
    #[serde(rename = "pn-int")]
    PNInt,
    #[serde(rename = "ps-int")]
    PSInt,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::NoGuideline,
        Variant::H,
        Variant::P,
        Variant::PN,
        Variant::PS,
        Variant::PNInt,
        Variant::PSInt,
    ];

    /// Number of definitions each guideline item carries for this variant.
    pub fn definitions_per_item(self) -> usize {
        match self {
            Variant::NoGuideline => 0,
            Variant::P | Variant::PN | Variant::PS => 5,
            Variant::H | Variant::PNInt | Variant::PSInt => 1,
        }
    }

    pub fn uses_guidelines(self) -> bool {
        self != Variant::NoGuideline
    }

    /// Variants whose prompts pick one of several sampled guidelines.
    pub fn is_sampled(self) -> bool {
        self.definitions_per_item() > 1
    }

    pub fn flag(self) -> &'static str {
        match self {
            Variant::NoGuideline => "noguide",
            Variant::H => "h",
            Variant::P => "p",
            Variant::PN => "pn",
            Variant::PS => "ps",
            Variant::PNInt => "pn-int",
            Variant::PSInt => "ps-int",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::NoGuideline => "NoGuideline",
            Variant::H => "Guideline-H",
            Variant::P => "Guideline-P",
            Variant::PN => "Guideline-PN",
            Variant::PS => "Guideline-PS",
            Variant::PNInt => "Guideline-PN-Int",
            Variant::PSInt => "Guideline-PS-Int",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.flag() == lowered || v.display_name().to_ascii_lowercase() == lowered)
            .ok_or_else(|| {
                format!("unknown variant `{s}` (expected one of noguide, h, p, pn, ps, pn-int, ps-int)")
            })
    }
}
