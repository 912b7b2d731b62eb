//! Deciding whether a free-form color answer declines a deceptive question.

use std::collections::BTreeMap;

use crate::captioner::{ClientError, LlmClient};
use crate::sample::{InstructionSample, SampleKind};

use super::normalize::{canonical, first_color};

pub trait Judge: Sync {
    /// `true` when `prediction` correctly declines the deceptive `sample`.
    fn declines(&self, sample: &InstructionSample, prediction: &str) -> Result<bool, ClientError>;

    fn name(&self) -> &str;
}

const REFUSAL_MARKERS: [&str; 14] = [
    "there is no",
    "there are no",
    "not present",
    "not visible",
    "no such",
    "cannot",
    "can't",
    "can not",
    "unable",
    "impossible",
    "not possible",
    "does not contain",
    "doesn't contain",
    "panchromatic",
];

/// Keyword rule: a refusal marker must appear, and a color may only be named
/// after it (as in "there is no red car").
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleJudge;

impl Judge for RuleJudge {
    fn declines(&self, _sample: &InstructionSample, prediction: &str) -> Result<bool, ClientError> {
        Ok(rule_declines(prediction))
    }

    fn name(&self) -> &str {
        "rule"
    }
}

pub fn rule_declines(prediction: &str) -> bool {
    let canon = canonical(prediction);
    let Some(marker) = REFUSAL_MARKERS.iter().filter_map(|m| canon.find(m)).min() else {
        return false;
    };
    match first_color(&canon[..marker]) {
        Some(_) => false,
        None => true,
    }
}

/// Asks a model through the `judge_color` template and reads a leading
/// yes/no. Anything else counts as not declining.
pub struct LlmJudge<'a> {
    pub client: &'a LlmClient,
}

pub fn deception_reason(sample: &InstructionSample) -> String {
    let category = sample.provenance.categories.first().map(String::as_str).unwrap_or("object");
    match sample.kind {
        SampleKind::DeceptivePan => "the image is panchromatic, so no colors can be observed".to_string(),
        _ => format!("there is no {category} in the image"),
    }
}

impl Judge for LlmJudge<'_> {
    fn declines(&self, sample: &InstructionSample, prediction: &str) -> Result<bool, ClientError> {
        let bindings = BTreeMap::from([
            ("reason", deception_reason(sample)),
            ("question", sample.question.clone()),
            ("reference", sample.answer.clone()),
            ("prediction", prediction.to_string()),
        ]);
        let t = self.client.call_named("judge_color", &bindings, None)?;
        Ok(super::normalize::leading_yes_no(&canonical(&t.response)) == Some("yes"))
    }

    fn name(&self) -> &str {
        "llm"
    }
}
