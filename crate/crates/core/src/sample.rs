//! The instruction record shared by every generator and the scorer.

use serde::{Deserialize, Serialize};

/// Prompt tag marking which family a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    #[serde(rename = "IDK")]
    Idk,
    #[serde(rename = "VQA")]
    Vqa,
    #[serde(rename = "VG")]
    Vg,
    #[serde(rename = "CLS")]
    Cls,
    #[serde(rename = "IT")]
    It,
}

impl TaskId {
    pub fn tag(self) -> &'static str {
        match self {
            TaskId::Idk => "{IDK}",
            TaskId::Vqa => "{VQA}",
            TaskId::Vg => "{VG}",
            TaskId::Cls => "{CLS}",
            TaskId::It => "{IT}",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    Presence,
    Color,
    AbsolutePosition,
    RelativePosition,
    Counting,
    Modality,
    Resolution,
    Geometry,
    Vectorize,
    Multilabel,
    Scene,
    Vqa,
    Grounding,
}

impl TaskName {
    pub const ALL: [TaskName; 13] = [
        TaskName::Presence,
        TaskName::Color,
        TaskName::AbsolutePosition,
        TaskName::RelativePosition,
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

    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::Presence => "presence",
            TaskName::Color => "color",
            TaskName::AbsolutePosition => "absolute_position",
            TaskName::RelativePosition => "relative_position",
            TaskName::Counting => "counting",
            TaskName::Modality => "modality",
            TaskName::Resolution => "resolution",
            TaskName::Geometry => "geometry",
            TaskName::Vectorize => "vectorize",
            TaskName::Multilabel => "multilabel",
            TaskName::Scene => "scene",
            TaskName::Vqa => "vqa",
            TaskName::Grounding => "grounding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn task_id(self) -> TaskId {
        match self {
            TaskName::Presence | TaskName::Color | TaskName::AbsolutePosition | TaskName::RelativePosition => TaskId::Idk,
            TaskName::Scene => TaskId::Cls,
            TaskName::Vqa => TaskId::Vqa,
            TaskName::Grounding => TaskId::Vg,
            _ => TaskId::It,
        }
    }
}

impl std::fmt::Display for TaskName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Factual,
    DeceptiveEx,
    DeceptivePan,
    Plain,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Factual => "factual",
            SampleKind::DeceptiveEx => "deceptive_ex",
            SampleKind::DeceptivePan => "deceptive_pan",
            SampleKind::Plain => "plain",
        }
    }

    pub fn is_deceptive(self) -> bool {
        matches!(self, SampleKind::DeceptiveEx | SampleKind::DeceptivePan)
    }
}

impl std::fmt::Display for SampleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    /// Absent-category strategy for deceptive and negative samples.
    #[serde(default)]
    pub strategy: Option<String>,
    /// Categories the question refers to, subject first.
    #[serde(default)]
    pub categories: Vec<String>,
    /// Transcript ids of the LLM calls the answer depends on.
    #[serde(default)]
    pub transcripts: Vec<String>,
}

impl Provenance {
    pub fn new(generator: &str, seed: u64) -> Self {
        Self {
            generator: generator.to_string(),
            seed,
            strategy: None,
            categories: Vec::new(),
            transcripts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionSample {
    pub sample_id: String,
    pub image_id: String,
    pub task_id: TaskId,
    pub task_name: TaskName,
    pub question: String,
    pub answer: String,
    pub kind: SampleKind,
    pub choices: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl InstructionSample {
    /// The text shown to a model: task tag followed by the question.
    pub fn prompt(&self) -> String {
        format!("{} {}", self.task_id.tag(), self.question)
    }

    /// Record-level invariants that need no corpus access.
    pub fn check(&self) -> Result<(), String> {
        if self.task_id != self.task_name.task_id() {
            return Err(format!("{}: task id {:?} does not match {}", self.sample_id, self.task_id, self.task_name));
        }
        if let Some(choices) = &self.choices {
            if !choices.contains(&self.answer) {
                return Err(format!("{}: answer not among choices", self.sample_id));
            }
            let mut sorted = choices.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != choices.len() {
                return Err(format!("{}: duplicate choices", self.sample_id));
            }
        }
        Ok(())
    }
}

/// Letter label for a choice position: A, B, C, ...
pub fn option_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// Appends lettered options to a question.
pub fn render_choices(question: &str, choices: &[String]) -> String {
    let opts: Vec<String> = choices.iter().enumerate().map(|(i, c)| format!("({}) {c}", option_letter(i))).collect();
    format!("{question} Options: {}", opts.join(" "))
}
