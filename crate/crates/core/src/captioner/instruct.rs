//! Instruction-dialogue dataset: a caption per image, then a multi-turn
//! conversation or a reasoning dialogue grounded on caption and boxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::ImagePayload;
use super::client::{ClientError, LlmClient};
use super::dialogue::{caption_image, gen_dialogue, DialogueMode, DialogueOutcome, InstanceSummary, Turn};
use crate::ingest::AnnotatedImage;
use crate::seeding::stable_hash;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InstructConfig {
    pub seed: u64,
    /// Images to caption; capped at the corpus size.
    pub images: usize,
    /// Conversation : reasoning ratio.
    pub ratio: (usize, usize),
}

impl Default for InstructConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            images: 30_000,
            ratio: (26, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub record_id: String,
    pub image_id: String,
    pub mode: DialogueMode,
    pub caption: String,
    pub turns: Vec<Turn>,
    pub transcripts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub image_id: String,
    pub mode: DialogueMode,
    pub reason: String,
    pub transcripts: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructReport {
    pub requested: usize,
    pub conversation: usize,
    pub reasoning: usize,
    pub rejected: Vec<Rejection>,
}

/// Number of conversation dialogues among `n`, by the configured ratio.
pub fn conversation_count(n: usize, ratio: (usize, usize)) -> usize {
    let total = ratio.0 + ratio.1;
    if total == 0 {
        return n;
    }
    (n * ratio.0 + total / 2) / total
}

pub fn resolution_text(gsd: Option<f64>) -> String {
    gsd.map_or_else(|| "unknown".to_string(), |g| format!("{g:.2} m/pixel"))
}

pub fn summarize_instances(image: &AnnotatedImage) -> Vec<InstanceSummary> {
    image
        .instances
        .iter()
        .map(|i| {
            let b = i.bbox();
            InstanceSummary {
                category: i.category.clone(),
                bbox: [b.x_min, b.y_min, b.x_max, b.y_max],
            }
        })
        .collect()
}

/// Picks images by seeded hash order and assigns modes so the output
/// follows the ratio exactly (up to rounding).
pub fn plan(images: &[AnnotatedImage], config: &InstructConfig) -> Vec<(usize, DialogueMode)> {
    let seed = config.seed.to_string();
    let mut order: Vec<(u64, usize)> = images
        .iter()
        .enumerate()
        .map(|(i, img)| (stable_hash(&["instruct", &seed, &img.image_id]), i))
        .collect();
    order.sort_unstable();
    let n = config.images.min(images.len());
    let conv = conversation_count(n, config.ratio);
    order
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(rank, (_, i))| (i, if rank < conv { DialogueMode::Conversation } else { DialogueMode::Reasoning }))
        .collect()
}

/// Runs the pipeline in parallel. Output order follows the plan, so results
/// do not depend on thread scheduling. Transport failures abort the run;
/// malformed dialogues are reported as rejections.
pub fn generate_instruct(
    images: &[AnnotatedImage],
    client: &LlmClient,
    config: &InstructConfig,
    load_image: &(dyn Fn(&AnnotatedImage) -> ImagePayload + Sync),
) -> Result<(Vec<DialogueRecord>, InstructReport), ClientError> {
    let planned = plan(images, config);
    let outcomes: Vec<_> = planned
        .par_iter()
        .map(|&(i, mode)| {
            let img = &images[i];
            let payload = load_image(img);
            let caption = caption_image(client, &payload, img.modality.as_str(), &resolution_text(img.gsd))?;
            let outcome = gen_dialogue(client, &caption.response, &summarize_instances(img), (img.width, img.height), mode)?;
            Ok::<_, ClientError>((img, mode, caption, outcome))
        })
        .collect::<Result<_, _>>()?;

    let mut report = InstructReport {
        requested: planned.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for (img, mode, caption, outcome) in outcomes {
        match outcome {
            DialogueOutcome::Accepted { turns, transcripts } => {
                match mode {
                    DialogueMode::Conversation => report.conversation += 1,
                    DialogueMode::Reasoning => report.reasoning += 1,
                }
                let mut all = vec![caption.request_id];
                all.extend(transcripts);
                records.push(DialogueRecord {
                    record_id: format!("versad-{:06}", records.len()),
                    image_id: img.image_id.clone(),
                    mode,
                    caption: caption.response,
                    turns,
                    transcripts: all,
                });
            }
            DialogueOutcome::Rejected { reason, transcripts } => report.rejected.push(Rejection {
                image_id: img.image_id.clone(),
                mode,
                reason,
                transcripts,
            }),
        }
    }
    Ok((records, report))
}
