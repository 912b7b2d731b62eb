//! Per-image generators for the open-ended and single-choice tasks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::coords::{render_rings, scale_polygon};
use crate::geometry::obb_dims;
use crate::ingest::{AnnotatedImage, Modality};
use crate::sample::{render_choices, InstructionSample, Provenance, SampleKind, TaskName};

pub const GENERATOR: &str = "variousgen";

const COUNTING: [&str; 5] = [
    "How many {a} are there in the image?",
    "Count the number of {a} in this image.",
    "What is the number of {a} visible in the image?",
    "How many {a} can be seen in this remote sensing image?",
    "Give the count of {a} in the image.",
];
const MODALITY: [&str; 5] = [
    "What is the modality of this image?",
    "Which imaging modality was used to capture this image?",
    "What type of sensor image is this?",
    "Identify the modality of this remote sensing image.",
    "Which kind of image is this?",
];
const RESOLUTION: [&str; 5] = [
    "What is the spatial resolution of this image in meters per pixel?",
    "What is the ground sample distance of this image (m/pixel)?",
    "Estimate the resolution of this image in meters per pixel.",
    "How many meters does one pixel of this image cover?",
    "What is the spatial resolution of this remote sensing image?",
];
const GEOMETRY: [&str; 5] = [
    "What are the length and width of the {a} in meters?",
    "Measure the length and width of the {a}.",
    "How long and how wide is the {a}?",
    "Give the length and width of the {a} in the image.",
    "What is the size of the {a} (length and width in meters)?",
];
const VECTORIZE: [&str; 5] = [
    "Vectorize the buildings in this image.",
    "Outline every building in the image as a polygon.",
    "Give the polygon vertices of each building in the image.",
    "Extract the building footprints in this image as vertex lists.",
    "List the contour of each building in the image.",
];
const MULTILABEL: [&str; 5] = [
    "Which of the following land cover classes appear in the image: {a}?",
    "Select all classes present in the image from: {a}.",
    "What land cover types does this image contain? Choose from {a}.",
    "List the classes from {a} that are present in the image.",
    "Which of these labels apply to the image: {a}?",
];

fn phrase<R: Rng>(pool: &[&str], a: &str, rng: &mut R) -> String {
    pool[rng.gen_range(0..pool.len())].replace("{a}", a)
}

pub(super) fn sample(image_id: &str, task: TaskName, question: String, answer: String, choices: Option<Vec<String>>, seed: u64, categories: Vec<String>) -> InstructionSample {
    InstructionSample {
        sample_id: String::new(),
        image_id: image_id.to_string(),
        task_id: task.task_id(),
        task_name: task,
        question,
        answer,
        kind: SampleKind::Plain,
        choices,
        provenance: Provenance {
            categories,
            ..Provenance::new(GENERATOR, seed)
        },
    }
}

/// Lettered options for short lists, a plain list otherwise.
pub(super) fn with_options(question: &str, choices: &[String]) -> String {
    if choices.len() <= 26 {
        render_choices(question, choices)
    } else {
        format!("{question} Options: {}.", choices.join(", "))
    }
}

/// Instance count of one present category, drawn uniformly.
pub fn gen_counting<R: Rng>(image: &AnnotatedImage, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    let counts = image.category_counts();
    let cats: Vec<(&str, usize)> = counts.into_iter().collect();
    if cats.is_empty() {
        return None;
    }
    let (cat, n) = cats[rng.gen_range(0..cats.len())];
    let q = phrase(&COUNTING, cat, rng);
    Some(sample(&image.image_id, TaskName::Counting, q, n.to_string(), None, seed, vec![cat.to_string()]))
}

pub fn gen_modality<R: Rng>(image: &AnnotatedImage, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    if image.modality == Modality::Unknown {
        return None;
    }
    let mut choices: Vec<String> = Modality::KNOWN.iter().map(|m| m.as_str().to_string()).collect();
    choices.shuffle(rng);
    let q = with_options(&phrase(&MODALITY, "", rng), &choices);
    Some(sample(&image.image_id, TaskName::Modality, q, image.modality.as_str().to_string(), Some(choices), seed, Vec::new()))
}

/// Ground sample distance rendered with two decimals.
pub fn render_resolution(gsd: f64) -> String {
    format!("{gsd:.2}")
}

pub fn gen_resolution<R: Rng>(image: &AnnotatedImage, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    let gsd = image.gsd?;
    let q = phrase(&RESOLUTION, "", rng);
    Some(sample(&image.image_id, TaskName::Resolution, q, render_resolution(gsd), None, seed, Vec::new()))
}

pub fn render_dims(length: f64, width: f64) -> String {
    format!("length {length:.1} m, width {width:.1} m")
}

/// Length and width of an instance whose category occurs once in the image
/// and whose footprint is a quadrilateral.
pub fn gen_geometric<R: Rng>(image: &AnnotatedImage, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    let gsd = image.gsd?;
    let counts = image.category_counts();
    let candidates: Vec<_> = image
        .instances
        .iter()
        .filter(|i| counts.get(i.category.as_str()) == Some(&1) && i.footprint.len() == 4 && !i.is_difficult())
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let inst = candidates[rng.gen_range(0..candidates.len())];
    let (l, w) = obb_dims(inst.footprint.vertices(), gsd).ok()?;
    let q = phrase(&GEOMETRY, &inst.category, rng);
    Some(sample(&image.image_id, TaskName::Geometry, q, render_dims(l, w), None, seed, vec![inst.category.clone()]))
}

pub fn gen_vectorize<R: Rng>(image: &AnnotatedImage, building: &str, scale: u32, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    let rings: Vec<_> = image.instances_of(building).map(|i| scale_polygon(&i.footprint, image.width, image.height, scale)).collect();
    if rings.is_empty() {
        return None;
    }
    let q = format!("{} Use integer coordinates in a 0-{} frame.", phrase(&VECTORIZE, "", rng), scale - 1);
    Some(sample(&image.image_id, TaskName::Vectorize, q, render_rings(&rings), None, seed, vec![building.to_string()]))
}

pub fn render_labels(labels: &BTreeSet<String>) -> String {
    labels.iter().cloned().collect::<Vec<_>>().join(", ")
}

/// Scene labels as a sorted, comma-separated list; the question names the
/// permitted vocabulary.
pub fn gen_multilabel<R: Rng>(image: &AnnotatedImage, vocabulary: &BTreeSet<String>, seed: u64, rng: &mut R) -> Option<InstructionSample> {
    if image.scene_labels.is_empty() {
        return None;
    }
    let q = phrase(&MULTILABEL, &render_labels(vocabulary), rng);
    Some(sample(&image.image_id, TaskName::Multilabel, q, render_labels(&image.scene_labels), None, seed, Vec::new()))
}
