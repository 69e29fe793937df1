//! Provider-agnostic LLM access: the three prompt builders (attack
//! generation, rule generation, refinement), chat-completion adapters for
//! remote providers, a deterministic filesystem-backed mock provider, and
//! response parsers.

mod parse;
mod prompt;
mod provider;

pub use parse::{parse_payload_list, parse_ruleset_block};
pub use prompt::{
    build_attack_prompt, build_refine_prompt, build_rule_prompt, FeedbackItem, FeedbackReport,
    HumanNote, PromptSpec, MAX_FEEDBACK_FALSE_NEGATIVES,
};
pub use provider::{
    complete, gemini_request_body, openai_request_body, LlmResponse, ProviderConfig, ProviderKind,
};
