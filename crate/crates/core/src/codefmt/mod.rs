//! The code format: event schemas as dataclass blocks, gold outputs as lists
//! of constructor calls, and the instruction-tuning prompt records that join
//! them with the input sentence.

mod output;
mod prompt;
mod schema;

pub use output::{render_output, NormalizedEvent};
pub use prompt::{
    export_jsonl, extract_text, read_jsonl, records_to_jsonl, PromptBuilder, PromptRecord,
    INSTRUCTION, IS_AUTH, RESULT_STUB, TASK_TYPE,
};
pub use schema::{parse_schema, render_schema, ParsedField, ParsedSchema, SchemaRendering, MENTION_DESCRIPTION};
