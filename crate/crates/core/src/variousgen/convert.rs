//! Passthrough converters for existing question-answering, grounding and
//! scene-classification datasets.
//!
//! Source schemas, one JSON object per line unless noted:
//!
//! * question answering: `{"image_id", "question", "answer", "type"}`
//! * grounding: `{"image_id", "width", "height", "expression", "box": [x1, y1, x2, y2]}`
//!   in pixels
//! * scene (a single JSON document): `{"classes": [...], "images": [{"image_id", "label"}]}`

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coords::render_box;
use super::tasks::{sample, with_options};
use crate::geometry::BBox;
use crate::io::read_jsonl;
use crate::sample::{InstructionSample, TaskName};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaRecord {
    pub image_id: String,
    pub question: String,
    pub answer: String,
    #[serde(default, rename = "type")]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub expression: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneImage {
    pub image_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDataset {
    pub classes: Vec<String>,
    pub images: Vec<SceneImage>,
}

pub fn read_vqa(path: &Path) -> std::io::Result<Vec<VqaRecord>> {
    read_jsonl(path)
}

pub fn read_grounding(path: &Path) -> std::io::Result<Vec<GroundingRecord>> {
    read_jsonl(path)
}

pub fn read_scene(path: &Path) -> std::io::Result<SceneDataset> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

/// How many options a scene question lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneChoices {
    All,
    K(usize),
}

impl SceneChoices {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "all" {
            return Some(SceneChoices::All);
        }
        s.parse().ok().filter(|&k| k >= 2).map(SceneChoices::K)
    }
}

const SCENE: [&str; 5] = [
    "Classify the scene of this image.",
    "Which scene category does this image belong to?",
    "What kind of scene is shown in the image?",
    "Choose the scene class that best describes this image.",
    "What is the scene category of this remote sensing image?",
];

const GROUNDING: [&str; 4] = [
    "Locate {a} in the image.",
    "Give the bounding box of {a}.",
    "Where is {a}? Answer with a bounding box.",
    "Find {a} and output its box.",
];

pub fn gen_scene<R: Rng>(record: &SceneImage, classes: &[String], choices: SceneChoices, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    if !classes.contains(&record.label) {
        return None;
    }
    let options: Vec<String> = match choices {
        SceneChoices::All => classes.to_vec(),
        SceneChoices::K(k) => {
            let others: Vec<&String> = classes.iter().filter(|c| **c != record.label).collect();
            let mut v: Vec<String> = others.choose_multiple(rng, k.saturating_sub(1)).map(|s| (*s).clone()).collect();
            v.push(record.label.clone());
            v.shuffle(rng);
            v
        }
    };
    let q = with_options(SCENE[rng.gen_range(0..SCENE.len())], &options);
    Some(sample(&record.image_id, TaskName::Scene, q, record.label.clone(), Some(options), seed, Vec::new()))
}

/// Question and answer text are kept verbatim; the record's question type
/// goes into the provenance categories.
pub fn convert_vqa(record: &VqaRecord, seed: u64) -> InstructionSample {
    sample(
        &record.image_id,
        TaskName::Vqa,
        record.question.clone(),
        record.answer.clone(),
        None,
        seed,
        record.kind.iter().cloned().collect(),
    )
}

/// Box rendered in the scaled frame. The flag reports whether clamping to
/// the image was needed.
pub fn convert_grounding<R: Rng>(record: &GroundingRecord, scale: u32, seed: u64, rng: &mut R) -> (InstructionSample, bool) {
    let [x0, y0, x1, y1] = record.bbox;
    let raw = BBox::new(x0, y0, x1, y1);
    let b = raw.clamp(f64::from(record.width), f64::from(record.height));
    let clamped = b != raw;
    let q = GROUNDING[rng.gen_range(0..GROUNDING.len())].replace("{a}", &record.expression);
    let s = sample(&record.image_id, TaskName::Grounding, q, render_box(&b, record.width, record.height, scale), None, seed, Vec::new());
    (s, clamped)
}

/// Source index for each of `target` outputs. With duplication every
/// record appears `target / n` or `target / n + 1` times; without it the
/// output is capped at `n`.
pub fn duplication_plan(n: usize, target: usize, duplicate: bool) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let total = if duplicate { target } else { target.min(n) };
    (0..total).map(|i| i % n).collect()
}
