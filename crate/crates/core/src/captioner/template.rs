use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Caption,
    Color,
    Conversation,
    Reasoning,
    Judge,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template:?}: unbound placeholder {{{name}}}")]
    Unbound { template: String, name: String },
    #[error("unknown template {0:?}")]
    Unknown(String),
    #[error("cannot read template {0}: {1}")]
    Io(String, String),
}

/// Prompt text with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
    pub required: Vec<String>,
    pub protocol: Protocol,
}

fn placeholders(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    if seen.insert(name.to_string()) {
                        out.push(name.to_string());
                    }
                }
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

impl PromptTemplate {
    pub fn new(name: &str, text: &str, protocol: Protocol) -> Self {
        Self {
            name: name.to_string(),
            required: placeholders(text),
            text: text.to_string(),
            protocol,
        }
    }

    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = self.text.clone();
        for name in &self.required {
            let value = bindings.get(name.as_str()).ok_or_else(|| TemplateError::Unbound {
                template: self.name.clone(),
                name: name.clone(),
            })?;
            out = out.replace(&format!("{{{name}}}"), value);
        }
        Ok(out)
    }
}

const BUILTIN: [(&str, &str, Protocol); 7] = [
    ("caption", include_str!("../../templates/caption.txt"), Protocol::Caption),
    ("color_a", include_str!("../../templates/color_a.txt"), Protocol::Color),
    ("color_b", include_str!("../../templates/color_b.txt"), Protocol::Color),
    ("conversation", include_str!("../../templates/conversation.txt"), Protocol::Conversation),
    ("reasoning", include_str!("../../templates/reasoning.txt"), Protocol::Reasoning),
    ("reprompt", include_str!("../../templates/reprompt.txt"), Protocol::Conversation),
    ("judge_color", include_str!("../../templates/judge_color.txt"), Protocol::Judge),
];

/// The prompt templates in use, keyed by name.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text, protocol)| (name.to_string(), PromptTemplate::new(name, text, *protocol)))
            .collect();
        Self { templates }
    }

    /// Builtins overridden by any `<name>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for (name, _, protocol) in BUILTIN {
            let p = dir.join(format!("{name}.txt"));
            if p.exists() {
                let text = fs::read_to_string(&p).map_err(|e| TemplateError::Io(p.display().to_string(), e.to_string()))?;
                set.templates.insert(name.to_string(), PromptTemplate::new(name, &text, protocol));
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates.get(name).ok_or_else(|| TemplateError::Unknown(name.to_string()))
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.name.clone(), template);
    }
}
