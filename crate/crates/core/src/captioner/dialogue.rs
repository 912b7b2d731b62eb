//! Caption and instruction-dialogue protocols.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::backend::ImagePayload;
use super::client::{ClientError, LlmClient, LlmTranscript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DialogueMode {
    Conversation,
    Reasoning,
}

impl DialogueMode {
    fn template(self) -> &'static str {
        match self {
            DialogueMode::Conversation => "conversation",
            DialogueMode::Reasoning => "reasoning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

/// Object line fed to the dialogue prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub category: String,
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DialogueOutcome {
    Accepted { turns: Vec<Turn>, transcripts: Vec<String> },
    Rejected { reason: String, transcripts: Vec<String> },
}

fn role_marker(line: &str) -> Option<(Role, &str)> {
    let upper = line.get(..10).map(str::to_ascii_uppercase).unwrap_or_else(|| line.to_ascii_uppercase());
    if upper.starts_with("USER:") {
        Some((Role::User, line[5..].trim()))
    } else if upper.starts_with("ASSISTANT:") {
        Some((Role::Assistant, line[10..].trim()))
    } else {
        None
    }
}

/// Turn grammar: each message starts on a line with `USER:` or
/// `ASSISTANT:` (case-insensitive); following unmarked lines continue it.
/// Messages must start with the user, alternate, end with the assistant
/// and be non-empty.
pub fn parse_dialogue(text: &str) -> Result<Vec<Turn>, String> {
    let mut turns: Vec<Turn> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match role_marker(line) {
            Some((role, rest)) => {
                let expected = if turns.len() % 2 == 0 { Role::User } else { Role::Assistant };
                if role != expected {
                    return Err(format!("line {}: expected {expected:?} turn", i + 1));
                }
                turns.push(Turn { role, text: rest.to_string() });
            }
            None => match turns.last_mut() {
                Some(t) => {
                    if !t.text.is_empty() {
                        t.text.push(' ');
                    }
                    t.text.push_str(line);
                }
                None => return Err(format!("line {}: text before the first role marker", i + 1)),
            },
        }
    }
    if turns.is_empty() {
        return Err("no turns".into());
    }
    if let Some(t) = turns.iter().find(|t| t.text.is_empty()) {
        return Err(format!("empty {:?} turn", t.role));
    }
    if turns.len() % 2 != 0 {
        return Err("dialogue ends without an assistant reply".into());
    }
    Ok(turns)
}

/// Rich-content caption for one image.
pub fn caption_image(client: &LlmClient, image: &ImagePayload, modality: &str, resolution: &str) -> Result<LlmTranscript, ClientError> {
    let bindings = BTreeMap::from([("modality", modality.to_string()), ("resolution", resolution.to_string())]);
    client.call_named("caption", &bindings, Some(image))
}

pub fn render_objects(boxes: &[InstanceSummary]) -> String {
    if boxes.is_empty() {
        return "- none".into();
    }
    boxes
        .iter()
        .map(|b| format!("- {}: [{:.0}, {:.0}, {:.0}, {:.0}]", b.category, b.bbox[0], b.bbox[1], b.bbox[2], b.bbox[3]))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Asks the text model for a dialogue. A malformed reply gets one reprompt;
/// if that also fails to parse the result is a rejection carrying both
/// transcripts.
pub fn gen_dialogue(
    client: &LlmClient,
    caption: &str,
    boxes: &[InstanceSummary],
    size: (u32, u32),
    mode: DialogueMode,
) -> Result<DialogueOutcome, ClientError> {
    if caption.trim().is_empty() {
        return Ok(DialogueOutcome::Rejected {
            reason: "empty caption".into(),
            transcripts: Vec::new(),
        });
    }
    let bindings = BTreeMap::from([
        ("caption", caption.to_string()),
        ("objects", render_objects(boxes)),
        ("width", size.0.to_string()),
        ("height", size.1.to_string()),
    ]);
    let first = client.call_named(mode.template(), &bindings, None)?;
    let mut transcripts = vec![first.request_id.clone()];
    let first_err = match parse_dialogue(&first.response) {
        Ok(turns) => return Ok(DialogueOutcome::Accepted { turns, transcripts }),
        Err(e) => e,
    };
    log::debug!("reprompting after malformed dialogue: {first_err}");
    let retry_bindings = BTreeMap::from([("previous", first.response.clone())]);
    let second = client.call_named("reprompt", &retry_bindings, None)?;
    transcripts.push(second.request_id.clone());
    Ok(match parse_dialogue(&second.response) {
        Ok(turns) => DialogueOutcome::Accepted { turns, transcripts },
        Err(e) => DialogueOutcome::Rejected {
            reason: format!("unparseable after reprompt: {first_err}; then {e}"),
            transcripts,
        },
    })
}
