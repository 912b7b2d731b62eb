use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convert::{
    convert_grounding, convert_vqa, duplication_plan, gen_scene, read_grounding, read_scene, read_vqa, GroundingRecord, SceneChoices, SceneDataset,
    VqaRecord,
};
use super::tasks::{gen_counting, gen_geometric, gen_modality, gen_multilabel, gen_resolution, gen_vectorize};
use crate::ingest::{AnnotatedImage, ConverterFormat, DatasetManifest};
use crate::io::{write_atomic, write_jsonl};
use crate::sample::{InstructionSample, TaskName};
use crate::seeding::{sample_rng, stable_hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariousTargets {
    pub counting: usize,
    pub modality: usize,
    pub resolution: usize,
    pub geometry: usize,
    pub vectorize: usize,
    pub multilabel: usize,
    pub scene: usize,
    pub vqa: usize,
    pub grounding: usize,
}

impl Default for VariousTargets {
    fn default() -> Self {
        Self {
            counting: 7000,
            modality: 400,
            resolution: 3000,
            geometry: 3000,
            vectorize: 10_000,
            multilabel: 2000,
            scene: 14_045,
            vqa: 10_000,
            grounding: 27_000,
        }
    }
}

impl VariousTargets {
    pub fn get(&self, task: TaskName) -> usize {
        match task {
            TaskName::Counting => self.counting,
            TaskName::Modality => self.modality,
            TaskName::Resolution => self.resolution,
            TaskName::Geometry => self.geometry,
            TaskName::Vectorize => self.vectorize,
            TaskName::Multilabel => self.multilabel,
            TaskName::Scene => self.scene,
            TaskName::Vqa => self.vqa,
            TaskName::Grounding => self.grounding,
            _ => 0,
        }
    }
}

pub const VARIOUS_TASKS: [TaskName; 9] = [
    TaskName::Counting,
    TaskName::Modality,
    TaskName::Resolution,
    TaskName::Geometry,
    TaskName::Vectorize,
    TaskName::Multilabel,
    TaskName::Scene,
    TaskName::Vqa,
    TaskName::Grounding,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariousConfig {
    pub seed: u64,
    pub targets: VariousTargets,
    /// Grounding and vectorizing coordinates span `0..coordinate_scale`.
    pub coordinate_scale: u32,
    pub scene_choices: SceneChoices,
    /// Repeat grounding records to reach the target.
    pub duplicate_grounding: bool,
    pub building_category: String,
    /// Treat any shortfall as an error instead of producing fewer samples.
    pub strict: bool,
}

impl Default for VariousConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            targets: VariousTargets::default(),
            coordinate_scale: 1000,
            scene_choices: SceneChoices::All,
            duplicate_grounding: true,
            building_category: "building".into(),
            strict: false,
        }
    }
}

impl VariousConfig {
    pub fn paper(seed: u64) -> Self {
        Self {
            seed,
            strict: true,
            ..Self::default()
        }
    }
}

/// Records read by the passthrough converters plus per-source label sets.
#[derive(Debug, Clone, Default)]
pub struct VariousSources {
    pub vqa: Vec<VqaRecord>,
    pub grounding: Vec<GroundingRecord>,
    pub scene: Option<SceneDataset>,
    /// Multi-label vocabulary per corpus source name.
    pub vocabularies: BTreeMap<String, BTreeSet<String>>,
}

impl VariousSources {
    /// Reads every converter file listed in `manifest`. Vocabularies come
    /// from the declared source labels.
    pub fn from_manifest(manifest: &DatasetManifest) -> std::io::Result<Self> {
        let mut out = Self::default();
        for c in &manifest.converters {
            match c.format {
                ConverterFormat::RsvqaJsonl => out.vqa.extend(read_vqa(&c.path)?),
                ConverterFormat::DiorRsvgJsonl => out.grounding.extend(read_grounding(&c.path)?),
                ConverterFormat::SceneJson => out.scene = Some(read_scene(&c.path)?),
            }
        }
        for s in &manifest.sources {
            let labels = s.labels.iter().map(|l| s.map_label(l)).collect();
            out.vocabularies.insert(s.name.clone(), labels);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskName,
    pub target: usize,
    pub available: usize,
    pub produced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariousReport {
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariousDataset {
    pub samples: Vec<InstructionSample>,
    pub report: VariousReport,
}

#[derive(Debug, thiserror::Error)]
pub enum VariousError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sources cannot meet the targets:\n{}", format_task_shortfalls(.0))]
    Shortfall(Vec<TaskReport>),
}

pub fn format_task_shortfalls(list: &[TaskReport]) -> String {
    let mut out = format!("{:<12} {:>8} {:>9}", "task", "target", "available");
    for t in list {
        out.push_str(&format!("\n{:<12} {:>8} {:>9}", t.task.as_str(), t.target, t.available));
    }
    out
}

fn hash_order<'a, T>(items: &'a [T], seed: u64, task: TaskName, id: impl Fn(&T) -> &str) -> Vec<&'a T> {
    let s = seed.to_string();
    let mut keyed: Vec<(u64, usize)> = items.iter().enumerate().map(|(i, x)| (stable_hash(&[&s, task.as_str(), id(x)]), i)).collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| &items[i]).collect()
}

fn image_task(corpus: &[AnnotatedImage], sources: &VariousSources, config: &VariousConfig, task: TaskName) -> Vec<InstructionSample> {
    let fallback: BTreeSet<String> = corpus.iter().flat_map(|i| i.scene_labels.iter().cloned()).collect();
    let ordered = hash_order(corpus, config.seed, task, |i| &i.image_id);
    ordered
        .par_iter()
        .filter_map(|img| {
            let rng = &mut sample_rng(config.seed, &img.image_id, task.as_str(), 0);
            let seed = config.seed;
            match task {
                TaskName::Counting => gen_counting(img, seed, rng),
                TaskName::Modality => gen_modality(img, seed, rng),
                TaskName::Resolution => gen_resolution(img, seed, rng),
                TaskName::Geometry => gen_geometric(img, seed, rng),
                TaskName::Vectorize => gen_vectorize(img, &config.building_category, config.coordinate_scale, seed, rng),
                TaskName::Multilabel => gen_multilabel(img, sources.vocabularies.get(&img.source).unwrap_or(&fallback), seed, rng),
                _ => None,
            }
        })
        .collect()
}

/// Generates every task from the corpus and the converter sources. Samples
/// are grouped by task in a fixed order; within a task they follow a seeded
/// hash order, so the output does not depend on scheduling.
pub fn build_various(corpus: &[AnnotatedImage], sources: &VariousSources, config: &VariousConfig) -> Result<VariousDataset, VariousError> {
    if config.coordinate_scale < 2 {
        return Err(VariousError::Config("coordinate scale must be at least 2".into()));
    }
    let mut samples = Vec::new();
    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    for task in VARIOUS_TASKS {
        let target = config.targets.get(task);
        let mut produced: Vec<InstructionSample> = match task {
            TaskName::Scene => match &sources.scene {
                Some(ds) => hash_order(&ds.images, config.seed, task, |r| &r.image_id)
                    .into_iter()
                    .filter_map(|r| gen_scene(r, &ds.classes, config.scene_choices, config.seed, &mut sample_rng(config.seed, &r.image_id, "scene", 0)))
                    .collect(),
                None => Vec::new(),
            },
            TaskName::Vqa => {
                let keyed: Vec<(usize, &VqaRecord)> = sources.vqa.iter().enumerate().collect();
                let s = config.seed.to_string();
                let mut keyed: Vec<(u64, usize)> = keyed
                    .iter()
                    .map(|(i, r)| (stable_hash(&[&s, "vqa", &r.image_id, &r.question, &i.to_string()]), *i))
                    .collect();
                keyed.sort_unstable();
                keyed.into_iter().map(|(_, i)| convert_vqa(&sources.vqa[i], config.seed)).collect()
            }
            TaskName::Grounding => {
                let plan = duplication_plan(sources.grounding.len(), target, config.duplicate_grounding);
                let mut clamped = 0;
                let out: Vec<_> = plan
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let r = &sources.grounding[i];
                        let copy = (k / sources.grounding.len()) as u64;
                        let (s, c) = convert_grounding(r, config.coordinate_scale, config.seed, &mut sample_rng(config.seed, &r.image_id, "grounding", copy));
                        clamped += usize::from(c && copy == 0);
                        s
                    })
                    .collect();
                if clamped > 0 {
                    let msg = format!("{clamped} grounding boxes extended outside their image and were clamped");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                out
            }
            _ => image_task(corpus, sources, config, task),
        };
        let available = produced.len();
        produced.truncate(target);
        for (i, s) in produced.iter_mut().enumerate() {
            s.sample_id = format!("{}-{i:05}", task.as_str());
        }
        tasks.push(TaskReport {
            task,
            target,
            available,
            produced: produced.len(),
        });
        samples.extend(produced);
    }
    let short: Vec<TaskReport> = tasks.iter().filter(|t| t.produced < t.target).cloned().collect();
    if !short.is_empty() {
        if config.strict {
            return Err(VariousError::Shortfall(short));
        }
        for t in &short {
            let msg = format!("{}: produced {} of {}", t.task, t.produced, t.target);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(VariousDataset {
        samples,
        report: VariousReport {
            seed: config.seed,
            tasks,
            warnings,
        },
    })
}

pub fn write_various(dir: &Path, dataset: &VariousDataset) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("various.jsonl"), &dataset.samples)?;
    let mut report = serde_json::to_vec_pretty(&dataset.report)?;
    report.push(b'\n');
    write_atomic(&dir.join("report.json"), &report)
}
