//! Dataset assembly: test streams draw first from the whole corpus, train
//! streams from the images test did not use, so the splits never share an
//! image.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{HnstConfig, TaskTargets};
use super::negative::{NegativeContext, SkipReason, Strategy, StrategySchedule};
use super::tasks::{gen_abs_position, gen_color, gen_presence, gen_rel_position, relative_pair, Captioning, ColorExclusion, GenFailure, GenResult};
use crate::captioner::{ClientError, LlmClient, LlmTranscript};
use crate::ingest::{build_cooccurrence, AnnotatedImage, Modality};
use crate::io::{write_atomic, write_jsonl};
use crate::sample::{InstructionSample, SampleKind, TaskName};
use crate::seeding::{sample_rng, stable_hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HnstSplit {
    Train,
    Test,
}

impl HnstSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            HnstSplit::Train => "train",
            HnstSplit::Test => "test",
        }
    }
}

/// One (task, kind) target within a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    PresenceYes,
    PresenceNo,
    ColorFactual,
    ColorDeceptiveEx,
    ColorDeceptivePan,
    AbsoluteFactual,
    AbsoluteDeceptive,
    RelativeFactual,
    RelativeDeceptive,
}

impl Stream {
    pub const ALL: [Stream; 9] = [
        Stream::PresenceYes,
        Stream::PresenceNo,
        Stream::ColorFactual,
        Stream::ColorDeceptiveEx,
        Stream::ColorDeceptivePan,
        Stream::AbsoluteFactual,
        Stream::AbsoluteDeceptive,
        Stream::RelativeFactual,
        Stream::RelativeDeceptive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stream::PresenceYes => "presence_yes",
            Stream::PresenceNo => "presence_no",
            Stream::ColorFactual => "color_factual",
            Stream::ColorDeceptiveEx => "color_deceptive_ex",
            Stream::ColorDeceptivePan => "color_deceptive_pan",
            Stream::AbsoluteFactual => "absolute_position_factual",
            Stream::AbsoluteDeceptive => "absolute_position_deceptive",
            Stream::RelativeFactual => "relative_position_factual",
            Stream::RelativeDeceptive => "relative_position_deceptive",
        }
    }

    pub fn task(self) -> TaskName {
        match self {
            Stream::PresenceYes | Stream::PresenceNo => TaskName::Presence,
            Stream::ColorFactual | Stream::ColorDeceptiveEx | Stream::ColorDeceptivePan => TaskName::Color,
            Stream::AbsoluteFactual | Stream::AbsoluteDeceptive => TaskName::AbsolutePosition,
            Stream::RelativeFactual | Stream::RelativeDeceptive => TaskName::RelativePosition,
        }
    }

    pub fn kind(self) -> SampleKind {
        match self {
            Stream::PresenceYes | Stream::PresenceNo => SampleKind::Plain,
            Stream::ColorFactual | Stream::AbsoluteFactual | Stream::RelativeFactual => SampleKind::Factual,
            Stream::ColorDeceptivePan => SampleKind::DeceptivePan,
            _ => SampleKind::DeceptiveEx,
        }
    }

    fn uses_strategy(self) -> bool {
        matches!(
            self,
            Stream::PresenceNo | Stream::ColorDeceptiveEx | Stream::AbsoluteDeceptive | Stream::RelativeDeceptive
        )
    }

    pub fn target(self, t: &TaskTargets) -> usize {
        match self {
            Stream::PresenceYes => t.presence - t.presence / 2,
            Stream::PresenceNo => t.presence / 2,
            Stream::ColorFactual => t.color_factual,
            Stream::ColorDeceptiveEx => t.color_deceptive_ex,
            Stream::ColorDeceptivePan => t.color_deceptive_pan,
            Stream::AbsoluteFactual => t.absolute_factual,
            Stream::AbsoluteDeceptive => t.absolute_deceptive,
            Stream::RelativeFactual => t.relative_factual,
            Stream::RelativeDeceptive => t.relative_deceptive,
        }
    }

    /// Cheap structural filter; anything passing may still be skipped.
    fn eligible(self, image: &AnnotatedImage) -> bool {
        match self {
            Stream::PresenceYes => !image.instances.is_empty(),
            Stream::ColorFactual => image.modality == Modality::Optical && image.sole_instance().is_some(),
            Stream::ColorDeceptiveEx => image.modality != Modality::Panchromatic,
            Stream::ColorDeceptivePan => image.modality == Modality::Panchromatic && !image.instances.is_empty(),
            Stream::AbsoluteFactual => image.sole_instance().is_some(),
            Stream::RelativeFactual => relative_pair(image).is_some(),
            Stream::PresenceNo | Stream::AbsoluteDeceptive | Stream::RelativeDeceptive => true,
        }
    }

    fn generate(self, image: &AnnotatedImage, strategy: Strategy, ctx: &NegativeContext, cap: Option<&Captioning>, seed: u64) -> GenResult {
        let si = Strategy::ALL.iter().position(|s| *s == strategy).expect("listed") as u64;
        let rng = &mut sample_rng(seed, &image.image_id, self.as_str(), si);
        match self {
            Stream::PresenceYes => gen_presence(image, true, strategy, ctx, seed, rng),
            Stream::PresenceNo => gen_presence(image, false, strategy, ctx, seed, rng),
            Stream::ColorFactual | Stream::ColorDeceptiveEx | Stream::ColorDeceptivePan => gen_color(image, self.kind(), cap, strategy, ctx, seed, rng),
            Stream::AbsoluteFactual => gen_abs_position(image, true, strategy, ctx, seed, rng),
            Stream::AbsoluteDeceptive => gen_abs_position(image, false, strategy, ctx, seed, rng),
            Stream::RelativeFactual => gen_rel_position(image, true, strategy, ctx, seed, rng),
            Stream::RelativeDeceptive => gen_rel_position(image, false, strategy, ctx, seed, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamReport {
    pub split: HnstSplit,
    pub stream: Stream,
    pub task: TaskName,
    pub kind: SampleKind,
    pub target: usize,
    pub available: usize,
    pub produced: usize,
    pub examined: usize,
    pub strategies: BTreeMap<Strategy, usize>,
    pub skips: BTreeMap<SkipReason, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub split: HnstSplit,
    pub stream: Stream,
    pub target: usize,
    pub available: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HnstError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("corpus cannot meet the targets:\n{}", format_shortfalls(.0))]
    Shortfall(Vec<Shortfall>),
    #[error(transparent)]
    Captioner(#[from] ClientError),
}

pub fn format_shortfalls(list: &[Shortfall]) -> String {
    let mut out = format!("{:<6} {:<30} {:>8} {:>9}", "split", "stream", "target", "available");
    for s in list {
        out.push_str(&format!("\n{:<6} {:<30} {:>8} {:>9}", s.split.as_str(), s.stream.as_str(), s.target, s.available));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub seed: u64,
    /// Proportional scale applied to every target (1 when all were met).
    pub scale: f64,
    pub corpus_images: usize,
    pub train_images: usize,
    pub test_images: usize,
    pub streams: Vec<StreamReport>,
    pub exclusions: Vec<ColorExclusion>,
    pub warnings: Vec<String>,
}

impl GenerationReport {
    /// Produced count per (split, task, kind).
    pub fn counts(&self) -> BTreeMap<(HnstSplit, TaskName, SampleKind), usize> {
        let mut m = BTreeMap::new();
        for s in &self.streams {
            *m.entry((s.split, s.task, s.kind)).or_default() += s.produced;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnstDataset {
    pub train: Vec<InstructionSample>,
    pub test: Vec<InstructionSample>,
    pub report: GenerationReport,
}

struct StreamRun {
    samples: Vec<InstructionSample>,
    report: StreamReport,
    exclusions: Vec<ColorExclusion>,
}

struct Build<'a> {
    config: &'a HnstConfig,
    ctx: NegativeContext,
    captioning: Option<&'a Captioning<'a>>,
}

impl Build<'_> {
    fn run_stream(&self, split: HnstSplit, stream: Stream, pool: &[&AnnotatedImage], target: usize) -> Result<StreamRun, ClientError> {
        let seed = self.config.seed;
        let seed_s = seed.to_string();
        let mut cands: Vec<(u64, &AnnotatedImage)> = pool
            .iter()
            .filter(|i| stream.eligible(i))
            .map(|&i| (stable_hash(&[&seed_s, split.as_str(), stream.as_str(), &i.image_id]), i))
            .collect();
        cands.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.image_id.cmp(&b.1.image_id)));

        let mut report = StreamReport {
            split,
            stream,
            task: stream.task(),
            kind: stream.kind(),
            target,
            available: 0,
            produced: 0,
            examined: 0,
            strategies: BTreeMap::new(),
            skips: BTreeMap::new(),
        };
        let mut samples = Vec::new();
        let mut exclusions = Vec::new();
        let mut schedule = StrategySchedule::new(self.config.strategy_mix);
        let mut want = schedule.next_strategy();
        let variants: &[Strategy] = if stream.uses_strategy() { &Strategy::ALL } else { &[Strategy::Random] };
        let mut pos = 0;
        while samples.len() < target && pos < cands.len() {
            let need = target - samples.len();
            let end = (pos + need + need / 8 + 16).min(cands.len());
            let results: Vec<Vec<GenResult>> = cands[pos..end]
                .par_iter()
                .map(|(_, img)| variants.iter().map(|&s| stream.generate(img, s, &self.ctx, self.captioning, seed)).collect())
                .collect();
            for mut variants_out in results {
                if samples.len() == target {
                    break;
                }
                pos += 1;
                report.examined += 1;
                let slot = if stream.uses_strategy() { Strategy::ALL.iter().position(|s| *s == want).expect("listed") } else { 0 };
                match variants_out.swap_remove(slot) {
                    Ok(mut s) => {
                        s.sample_id = format!("{}-{}-{:05}", split.as_str(), stream.as_str(), samples.len());
                        if stream.uses_strategy() {
                            *report.strategies.entry(want).or_default() += 1;
                            want = schedule.next_strategy();
                        }
                        samples.push(s);
                    }
                    Err(GenFailure::Skip(r)) => *report.skips.entry(r).or_default() += 1,
                    Err(GenFailure::Excluded(e)) => {
                        *report.skips.entry(SkipReason::ColorInconsistent).or_default() += 1;
                        exclusions.push(e);
                    }
                    Err(GenFailure::Captioner(e)) => return Err(e),
                }
            }
        }
        report.available = samples.len();
        report.produced = samples.len();
        Ok(StreamRun { samples, report, exclusions })
    }
}

fn scale_target(target: usize, scale: f64) -> usize {
    if scale >= 1.0 {
        target
    } else {
        (target as f64 * scale + 1e-9).floor() as usize
    }
}

/// Generates both splits. Output is a pure function of the corpus, the
/// configuration and the captioner's answers; thread scheduling does not
/// affect it.
pub fn build_hnstd(corpus: &[AnnotatedImage], config: &HnstConfig, captioning: Option<&Captioning>) -> Result<HnstDataset, HnstError> {
    config.validate().map_err(HnstError::Config)?;
    let build = Build {
        config,
        ctx: NegativeContext::new(build_cooccurrence(corpus), config.popular_fraction),
        captioning,
    };
    let all: Vec<&AnnotatedImage> = corpus.iter().collect();
    let mut runs: Vec<StreamRun> = Vec::new();
    for stream in Stream::ALL {
        runs.push(build.run_stream(HnstSplit::Test, stream, &all, stream.target(&config.test))?);
    }
    let test_ids: BTreeSet<&str> = runs.iter().flat_map(|r| r.samples.iter().map(|s| s.image_id.as_str())).collect();
    let train_pool: Vec<&AnnotatedImage> = all.iter().copied().filter(|i| !test_ids.contains(i.image_id.as_str())).collect();
    for stream in Stream::ALL {
        runs.push(build.run_stream(HnstSplit::Train, stream, &train_pool, stream.target(&config.train))?);
    }

    let scale = runs
        .iter()
        .filter(|r| r.report.target > 0)
        .map(|r| r.report.available as f64 / r.report.target as f64)
        .fold(1.0f64, f64::min);
    let mut warnings = Vec::new();
    if scale < 1.0 {
        let shortfalls: Vec<Shortfall> = runs
            .iter()
            .filter(|r| r.report.available < r.report.target)
            .map(|r| Shortfall {
                split: r.report.split,
                stream: r.report.stream,
                target: r.report.target,
                available: r.report.available,
            })
            .collect();
        if scale < config.min_scale {
            return Err(HnstError::Shortfall(shortfalls));
        }
        let msg = format!("corpus too small for the targets; all targets scaled by {scale:.4}");
        log::warn!("{msg}");
        warnings.push(msg);
        for r in &mut runs {
            let keep = scale_target(r.report.target, scale);
            r.samples.truncate(keep);
            r.report.produced = r.samples.len();
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut streams = Vec::new();
    let mut exclusions = Vec::new();
    for r in runs {
        match r.report.split {
            HnstSplit::Train => train.extend(r.samples),
            HnstSplit::Test => test.extend(r.samples),
        }
        streams.push(r.report);
        exclusions.extend(r.exclusions);
    }
    let images = |v: &[InstructionSample]| v.iter().map(|s| s.image_id.as_str()).collect::<BTreeSet<_>>().len();
    let report = GenerationReport {
        seed: config.seed,
        scale,
        corpus_images: corpus.len(),
        train_images: images(&train),
        test_images: images(&test),
        streams,
        exclusions,
        warnings,
    };
    Ok(HnstDataset { train, test, report })
}

/// Transcripts referenced by samples or exclusions, ordered by id.
pub fn referenced_transcripts(dataset: &HnstDataset, client: &LlmClient) -> Vec<LlmTranscript> {
    let ids: BTreeSet<&str> = dataset
        .train
        .iter()
        .chain(&dataset.test)
        .flat_map(|s| s.provenance.transcripts.iter())
        .chain(dataset.report.exclusions.iter().flat_map(|e| e.transcripts.iter()))
        .map(String::as_str)
        .collect();
    ids.into_iter().filter_map(|id| client.transcript(id)).collect()
}

/// Writes `train.jsonl`, `test.jsonl`, `report.json` and, when a client is
/// given, `transcripts.jsonl`, each atomically.
pub fn write_hnstd(dir: &Path, dataset: &HnstDataset, client: Option<&LlmClient>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("train.jsonl"), &dataset.train)?;
    write_jsonl(&dir.join("test.jsonl"), &dataset.test)?;
    let mut report = serde_json::to_vec_pretty(&dataset.report)?;
    report.push(b'\n');
    write_atomic(&dir.join("report.json"), &report)?;
    if let Some(c) = client {
        write_jsonl(&dir.join("transcripts.jsonl"), &referenced_transcripts(dataset, c))?;
    }
    Ok(())
}
