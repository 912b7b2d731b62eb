//! Scoring a prediction file against a generated dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sample::{InstructionSample, SampleKind, TaskName};
use crate::variousgen::coords::{parse_box, parse_rings};

use super::judge::Judge;
use super::metrics::{acc_eq1, acc_eq2, box_iou, example_f1, label_set, matched_ciou, numbers, ratio};
use super::normalize::{canonical, first_color, normalize_answer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    #[serde(alias = "output", alias = "text")]
    pub prediction: String,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("duplicate prediction for {0}")]
    Duplicate(String),
    #[error("prediction for unknown sample {0}")]
    Unknown(String),
    #[error("duplicate sample id {0} in dataset")]
    DuplicateSample(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| EvalError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// Error charged for a missing or unparseable numeric answer. `None`
    /// charges `|gold|`, the error of answering zero.
    pub mae_penalty: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            mae_penalty: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Correct,
    Wrong,
    Missing,
    Unparseable,
    /// The judge could not be reached; the sample is left out of every
    /// aggregate and the report is flagged incomplete.
    Unscored,
    /// Scored by a continuous metric; see `score`.
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub sample_id: String,
    pub task: TaskName,
    pub kind: SampleKind,
    pub status: Status,
    /// 1/0 for matching tasks, the absolute error for numeric tasks, the
    /// IoU, C-IoU or F1 otherwise.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub n: usize,
    pub correct: usize,
    pub acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: TaskName,
    pub metric: String,
    pub n: usize,
    pub missing: usize,
    pub unparseable: usize,
    pub unscored: usize,
    pub value: Option<f64>,
    /// Matching components keyed `fact`, `dec`, `dec_ex`, `dec_pan` or `all`.
    pub components: BTreeMap<String, Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub judge: String,
    pub samples: usize,
    pub predictions: usize,
    pub warnings: Vec<String>,
    /// Samples without a prediction (scored as wrong).
    pub missing: usize,
    /// Samples the judge could not score (left out of aggregates).
    pub unscored: usize,
    /// Set when any sample is missing or unscored.
    pub incomplete: bool,
    pub tasks: Vec<TaskScore>,
    pub verdicts: Vec<Verdict>,
}

impl ScoreReport {
    pub fn task(&self, task: TaskName) -> Option<&TaskScore> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>6} {:>8} {:>9}  components", "task", "n", "metric", "value");
        for t in &self.tasks {
            let value = t.value.map_or("-".to_string(), |v| format!("{v:.4}"));
            let comps: Vec<String> = t
                .components
                .iter()
                .map(|(k, c)| format!("{k}={}", c.acc.map_or("-".to_string(), |a| format!("{a:.4}"))))
                .collect();
            let _ = writeln!(s, "{:<18} {:>6} {:>8} {:>9}  {}", t.task.as_str(), t.n, t.metric, value, comps.join(" "));
        }
        let _ = writeln!(
            s,
            "samples {}  predictions {}  missing {}  unscored {}  incomplete {}",
            self.samples,
            self.predictions,
            self.missing,
            self.unscored,
            self.incomplete
        );
        s
    }
}

fn metric_of(task: TaskName) -> &'static str {
    match task {
        TaskName::AbsolutePosition | TaskName::RelativePosition => "eq1",
        TaskName::Color => "eq2",
        TaskName::Counting | TaskName::Resolution | TaskName::Geometry => "mae",
        TaskName::Grounding => "acc@iou",
        TaskName::Vectorize => "ciou",
        TaskName::Multilabel => "f1",
        _ => "acc",
    }
}

fn is_yes_no(s: &str) -> bool {
    matches!(canonical(s).as_str(), "yes" | "no")
}

fn matches_gold(sample: &InstructionSample, prediction: &str) -> bool {
    let yn = is_yes_no(&sample.answer);
    let choices = sample.choices.as_deref();
    let gold = normalize_answer(&sample.answer, choices, yn);
    if normalize_answer(prediction, choices, yn) == gold {
        return true;
    }
    // free-form color: the first color named
    sample.task_name == TaskName::Color && choices.is_none() && first_color(prediction).is_some_and(|c| Some(c) == first_color(&sample.answer))
}

fn first_number(text: &str) -> Option<f64> {
    numbers(text).into_iter().next()
}

fn numeric_error(sample: &InstructionSample, prediction: Option<&str>, penalty: Option<f64>) -> (Status, f64) {
    let gold = numbers(&sample.answer);
    let charge = |g: &[f64]| match penalty {
        Some(p) => p,
        None => g.iter().map(|v| v.abs()).sum::<f64>() / g.len().max(1) as f64,
    };
    let Some(pred) = prediction else {
        return (Status::Missing, charge(&gold));
    };
    if sample.task_name == TaskName::Geometry {
        let p = numbers(pred);
        if p.len() < 2 || gold.len() < 2 {
            return (Status::Unparseable, charge(&gold));
        }
        return (Status::Scored, ((p[0] - gold[0]).abs() + (p[1] - gold[1]).abs()) / 2.0);
    }
    match (first_number(pred), gold.first()) {
        (Some(p), Some(g)) => (Status::Scored, (p - g).abs()),
        _ => (Status::Unparseable, charge(&gold)),
    }
}

fn score_sample(sample: &InstructionSample, prediction: Option<&str>, judge: &dyn Judge, config: &EvalConfig) -> Verdict {
    let verdict = |status, score| Verdict {
        sample_id: sample.sample_id.clone(),
        task: sample.task_name,
        kind: sample.kind,
        status,
        score,
    };
    let binary = |ok: bool| verdict(if ok { Status::Correct } else { Status::Wrong }, Some(if ok { 1.0 } else { 0.0 }));
    match sample.task_name {
        TaskName::Counting | TaskName::Resolution | TaskName::Geometry => {
            let (status, err) = numeric_error(sample, prediction, config.mae_penalty);
            return verdict(status, Some(err));
        }
        _ => {}
    }
    let Some(pred) = prediction else {
        return verdict(Status::Missing, Some(0.0));
    };
    match sample.task_name {
        TaskName::Color if sample.kind.is_deceptive() => match judge.declines(sample, pred) {
            Ok(ok) => binary(ok),
            Err(e) => {
                log::warn!("{}: judge failed: {e}", sample.sample_id);
                verdict(Status::Unscored, None)
            }
        },
        TaskName::Grounding => match (parse_box(pred), parse_box(&sample.answer)) {
            (Some(p), Some(g)) => {
                let v = box_iou(g, p);
                verdict(if v >= config.iou_threshold { Status::Correct } else { Status::Wrong }, Some(v))
            }
            _ => verdict(Status::Unparseable, Some(0.0)),
        },
        TaskName::Vectorize => match (parse_rings(pred), parse_rings(&sample.answer)) {
            (Ok(p), Ok(g)) if pred.contains('{') || g.is_empty() => verdict(Status::Scored, Some(matched_ciou(&g, &p))),
            _ => verdict(Status::Unparseable, Some(0.0)),
        },
        TaskName::Multilabel => verdict(Status::Scored, Some(example_f1(&label_set(&sample.answer), &label_set(pred)))),
        _ => binary(matches_gold(sample, pred)),
    }
}

fn component(verdicts: &[&Verdict], keep: impl Fn(&Verdict) -> bool) -> Component {
    let group: Vec<_> = verdicts.iter().filter(|v| keep(v) && v.status != Status::Unscored).collect();
    let correct = group.iter().filter(|v| v.status == Status::Correct).count();
    Component {
        n: group.len(),
        correct,
        acc: ratio(correct, group.len()),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Eq1 or Eq2 over whichever components are present.
fn aggregate(task: TaskName, c: &BTreeMap<String, Component>) -> Option<f64> {
    let acc = |k: &str| c.get(k).and_then(|c| c.acc);
    match task {
        TaskName::AbsolutePosition | TaskName::RelativePosition => match (acc("fact"), acc("dec")) {
            (Some(f), Some(d)) => Some(acc_eq1(f, d).expect("accuracies are ratios")),
            (f, d) => f.or(d),
        },
        TaskName::Color => {
            let dec = match (acc("dec_ex"), acc("dec_pan")) {
                (Some(e), Some(p)) => Some((e + p) / 2.0),
                (e, p) => e.or(p),
            };
            match (acc("fact"), acc("dec_ex"), acc("dec_pan")) {
                (Some(f), Some(e), Some(p)) => Some(acc_eq2(f, e, p).expect("accuracies are ratios")),
                (f, _, _) => match (f, dec) {
                    (Some(f), Some(d)) => Some((f + d) / 2.0),
                    (f, d) => f.or(d),
                },
            }
        }
        _ => acc("all"),
    }
}

fn task_score(task: TaskName, verdicts: &[&Verdict]) -> TaskScore {
    let count = |s: Status| verdicts.iter().filter(|v| v.status == s).count();
    let mut components = BTreeMap::new();
    let metric = metric_of(task);
    let scored = || verdicts.iter().filter(|v| v.status != Status::Unscored).filter_map(|v| v.score);
    let value = match metric {
        "eq1" | "eq2" => {
            components.insert("fact".into(), component(verdicts, |v| v.kind == SampleKind::Factual));
            if metric == "eq1" {
                components.insert("dec".into(), component(verdicts, |v| v.kind.is_deceptive()));
            } else {
                components.insert("dec_ex".into(), component(verdicts, |v| v.kind == SampleKind::DeceptiveEx));
                components.insert("dec_pan".into(), component(verdicts, |v| v.kind == SampleKind::DeceptivePan));
            }
            components.retain(|_, c| c.n > 0);
            aggregate(task, &components)
        }
        "acc" | "acc@iou" => {
            components.insert("all".into(), component(verdicts, |_| true));
            aggregate(task, &components)
        }
        _ => mean(scored()),
    };
    TaskScore {
        task,
        metric: metric.to_string(),
        n: verdicts.len(),
        missing: count(Status::Missing),
        unparseable: count(Status::Unparseable),
        unscored: count(Status::Unscored),
        value,
        components,
    }
}

/// Scores every sample of `dataset`. Predictions join on `sample_id`;
/// unknown or repeated ids are rejected, missing ones count against the
/// model and are reported as warnings.
pub fn evaluate_run(
    dataset: &[InstructionSample],
    predictions: &[PredictionRecord],
    judge: &dyn Judge,
    config: &EvalConfig,
) -> Result<ScoreReport, EvalError> {
    let mut ids = BTreeSet::new();
    for s in dataset {
        if !ids.insert(s.sample_id.as_str()) {
            return Err(EvalError::DuplicateSample(s.sample_id.clone()));
        }
    }
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for p in predictions {
        if !ids.contains(p.sample_id.as_str()) {
            return Err(EvalError::Unknown(p.sample_id.clone()));
        }
        if by_id.insert(&p.sample_id, &p.prediction).is_some() {
            return Err(EvalError::Duplicate(p.sample_id.clone()));
        }
    }
    let verdicts: Vec<Verdict> = dataset
        .par_iter()
        .map(|s| score_sample(s, by_id.get(s.sample_id.as_str()).copied(), judge, config))
        .collect();
    let mut groups: BTreeMap<TaskName, Vec<&Verdict>> = BTreeMap::new();
    for v in &verdicts {
        groups.entry(v.task).or_default().push(v);
    }
    let tasks: Vec<TaskScore> = groups.iter().map(|(t, vs)| task_score(*t, vs)).collect();
    let mut warnings = Vec::new();
    let missing: usize = tasks.iter().map(|t| t.missing).sum();
    if missing > 0 {
        warnings.push(format!("{missing} sample(s) have no prediction and are counted wrong"));
    }
    let unparseable: usize = tasks.iter().map(|t| t.unparseable).sum();
    if unparseable > 0 {
        warnings.push(format!("{unparseable} prediction(s) could not be parsed and are charged the maximal error"));
    }
    let unscored: usize = tasks.iter().map(|t| t.unscored).sum();
    if unscored > 0 {
        warnings.push(format!("{unscored} sample(s) could not be judged; their task scores are incomplete"));
    }
    Ok(ScoreReport {
        judge: judge.name().to_string(),
        samples: dataset.len(),
        predictions: predictions.len(),
        warnings,
        missing,
        unscored,
        incomplete: missing + unscored > 0,
        tasks,
        verdicts,
    })
}

/// Gold answers as a prediction file.
pub fn gold_predictions(dataset: &[InstructionSample]) -> Vec<PredictionRecord> {
    dataset
        .iter()
        .map(|s| PredictionRecord {
            sample_id: s.sample_id.clone(),
            prediction: s.answer.clone(),
        })
        .collect()
}
