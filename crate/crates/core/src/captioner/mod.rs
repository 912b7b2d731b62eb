//! Text generation through a multimodal or text model: captions, double-query
//! colors and instruction dialogues, behind a caching, rate-limited client.

mod backend;
mod client;
mod color;
mod dialogue;
mod instruct;
mod template;

pub use backend::{
    Backend, BackendError, HttpBackend, HttpBackendConfig, ImagePayload, LlmRequest, MockBackend, MockFixtures, COLOR_LEXICON,
};
pub use client::{ClientConfig, ClientCounters, ClientError, LlmClient, LlmTranscript, RateLimit, RetryPolicy};
pub use color::{crop_image, extract_color, normalize_color, ColorOutcome};
pub use dialogue::{caption_image, gen_dialogue, parse_dialogue, render_objects, DialogueMode, DialogueOutcome, InstanceSummary, Role, Turn};
pub use instruct::{
    conversation_count, generate_instruct, plan as plan_instruct, resolution_text, summarize_instances, DialogueRecord, InstructConfig,
    InstructReport, Rejection as DialogueRejection,
};
pub use template::{PromptTemplate, Protocol, TemplateError, TemplateSet};
