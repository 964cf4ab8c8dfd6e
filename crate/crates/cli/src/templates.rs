//! Prompt templates for each answer-length configuration, shipped for the
//! bridge's generation endpoint. Nothing in this workspace renders them.

use std::collections::BTreeMap;

use hedge_core::PromptConfig;
use serde::{Deserialize, Serialize};

pub const PROMPT_TEMPLATES_JSON: &str = include_str!("../resources/prompt_templates.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

pub fn prompt_templates() -> BTreeMap<PromptConfig, Vec<ChatMessage>> {
    serde_json::from_str(PROMPT_TEMPLATES_JSON).expect("bundled templates parse")
}
