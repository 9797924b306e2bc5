//! Model access for every stage that needs one: prompt templates, the
//! backends that answer them, and parsers for what comes back.

pub mod backend;
mod error;
mod gateway;
pub mod parse;
pub mod prompts;

pub use backend::{
    BackendRegistry, BackendSpec, ChatBackend, ChatRequest, EchoBackend, HttpBackend, MockBackend, MockEntry,
};
pub use error::LlmError;
pub use gateway::{Gateway, GatewayConfig};
pub use parse::{parse_bold_verdict, parse_extraction_json, strip_code_fence, ProblemDraft, TriVerdict, Verdict};
pub use prompts::{PromptId, PromptRegistry, PromptTemplate};
