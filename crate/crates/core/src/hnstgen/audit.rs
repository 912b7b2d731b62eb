//! Post-hoc audit that re-derives every checkable answer from the corpus
//! with arithmetic of its own, sharing no code with the generators.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::{Float, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::phrasing::NONE_OPTION;
use crate::ingest::{AnnotatedImage, Modality, ObjectInstance};
use crate::sample::{InstructionSample, SampleKind, TaskName};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    pub deceptive_ex: usize,
    pub deceptive_ex_sound: usize,
    pub deceptive_pan: usize,
    pub deceptive_pan_sound: usize,
    pub presence: usize,
    pub presence_sound: usize,
    pub factual_region: usize,
    pub factual_region_agree: usize,
    pub factual_direction: usize,
    pub factual_direction_agree: usize,
    pub factual_color: usize,
    pub factual_color_agree: usize,
    pub choice_questions: usize,
    pub choice_sound: usize,
    pub shared_images: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const REGION_NAMES: [[&str; 3]; 3] = [
    ["top left corner", "top side", "top right corner"],
    ["left side", "center", "right side"],
    ["bottom left corner", "bottom side", "bottom right corner"],
];

/// Counter-clockwise from east in 45 degree sectors.
const SECTOR_NAMES: [&str; 8] = [
    "right",
    "top right corner",
    "above",
    "top left corner",
    "left",
    "bottom left corner",
    "below",
    "bottom right corner",
];

type Q = Ratio<i128>;

/// The exact value of a float as a ratio of integers.
fn exact(v: f64) -> Q {
    let (mantissa, exp, sign) = v.integer_decode();
    let m = i128::from(sign) * i128::from(mantissa);
    if exp >= 0 {
        Q::from_integer(m << exp.min(60))
    } else {
        Q::new(m, 1i128 << (-exp).min(120))
    }
}

fn center_exact(inst: &ObjectInstance) -> (Q, Q) {
    let xs: Vec<Q> = inst.footprint.vertices().iter().map(|p| exact(p.x)).collect();
    let ys: Vec<Q> = inst.footprint.vertices().iter().map(|p| exact(p.y)).collect();
    let mid = |v: &[Q]| (v.iter().min().expect("vertices").clone() + v.iter().max().expect("vertices").clone()) / Q::from_integer(2);
    (mid(&xs), mid(&ys))
}

fn third(v: &Q, extent: u32) -> usize {
    let cell = (v * Q::from_integer(3) / Q::from_integer(i128::from(extent))).floor().to_integer();
    cell.clamp(0, 2) as usize
}

fn region_of(inst: &ObjectInstance, image: &AnnotatedImage) -> &'static str {
    let (cx, cy) = center_exact(inst);
    REGION_NAMES[third(&cy, image.height)][third(&cx, image.width)]
}

fn direction_of(subject: &ObjectInstance, reference: &ObjectInstance) -> Option<&'static str> {
    let (sx, sy) = center_exact(subject);
    let (rx, ry) = center_exact(reference);
    let dx = (sx - rx).to_f64()?;
    let up = (ry - sy).to_f64()?;
    if dx == 0.0 && up == 0.0 {
        return None;
    }
    let deg = up.atan2(dx).to_degrees();
    let sector = ((deg + 22.5).rem_euclid(360.0) / 45.0).floor() as usize % 8;
    Some(SECTOR_NAMES[sector])
}

fn first_color(text: &str) -> Option<String> {
    const COLORS: [&str; 14] = [
        "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white", "gray", "silver", "beige", "cyan",
    ];
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .map(|t| if t == "grey" { "gray" } else { t })
        .find(|t| COLORS.contains(t))
        .map(str::to_string)
}

/// Checks both splits against the corpus. `transcripts` maps transcript ids
/// to raw model responses; without it factual colors are not checked.
pub fn audit_hnstd(
    train: &[InstructionSample],
    test: &[InstructionSample],
    corpus: &[AnnotatedImage],
    transcripts: Option<&BTreeMap<String, String>>,
) -> AuditReport {
    let by_id: BTreeMap<&str, &AnnotatedImage> = corpus.iter().map(|i| (i.image_id.as_str(), i)).collect();
    let mut r = AuditReport::default();

    let train_imgs: BTreeSet<&str> = train.iter().map(|s| s.image_id.as_str()).collect();
    let test_imgs: BTreeSet<&str> = test.iter().map(|s| s.image_id.as_str()).collect();
    r.shared_images = train_imgs.intersection(&test_imgs).count();
    if r.shared_images > 0 {
        r.violations.push(format!("{} images appear in both splits", r.shared_images));
    }

    for s in train.iter().chain(test) {
        r.samples += 1;
        let fail = |r: &mut AuditReport, why: &str| r.violations.push(format!("{}: {why}", s.sample_id));
        let Some(image) = by_id.get(s.image_id.as_str()).copied() else {
            fail(&mut r, "image not in corpus");
            continue;
        };
        let present: BTreeSet<&str> = image.instances.iter().map(|i| i.category.as_str()).collect();
        let cats = &s.provenance.categories;
        if cats.iter().any(|c| !s.question.contains(c.as_str())) {
            fail(&mut r, "question does not name its recorded category");
        }

        if let Some(choices) = &s.choices {
            r.choice_questions += 1;
            let distinct: BTreeSet<&String> = choices.iter().collect();
            if choices.len() == 5 && distinct.len() == 5 && choices.contains(&s.answer) && choices.iter().any(|c| c == NONE_OPTION) {
                r.choice_sound += 1;
            } else {
                fail(&mut r, "choices are not five distinct options with the answer and the nonexistence option");
            }
        }

        match (s.task_name, s.kind) {
            (TaskName::Presence, _) => {
                r.presence += 1;
                let ok = match (s.answer.as_str(), cats.as_slice()) {
                    ("Yes", [c]) => present.contains(c.as_str()),
                    ("No", [c]) => !present.contains(c.as_str()),
                    _ => false,
                };
                if ok {
                    r.presence_sound += 1;
                } else {
                    fail(&mut r, "presence answer contradicts the annotations");
                }
            }
            (task, SampleKind::DeceptiveEx) => {
                r.deceptive_ex += 1;
                let absent_ok = match task {
                    TaskName::RelativePosition => cats.len() == 2 && cats.iter().any(|c| !present.contains(c.as_str())),
                    _ => cats.len() == 1 && !present.contains(cats[0].as_str()),
                };
                let answer_ok = match task {
                    TaskName::Color => s.answer.contains("There is no"),
                    _ => s.answer == NONE_OPTION,
                };
                if absent_ok && answer_ok {
                    r.deceptive_ex_sound += 1;
                } else {
                    fail(&mut r, "deceptive question refers to a present object");
                }
            }
            (_, SampleKind::DeceptivePan) => {
                r.deceptive_pan += 1;
                if image.modality == Modality::Panchromatic && s.answer.contains("panchromatic") {
                    r.deceptive_pan_sound += 1;
                } else {
                    fail(&mut r, "panchromatic refusal on a non-panchromatic image");
                }
            }
            (TaskName::AbsolutePosition, SampleKind::Factual) => {
                r.factual_region += 1;
                match image.instances.as_slice() {
                    [only] if cats.first() == Some(&only.category) && region_of(only, image) == s.answer => r.factual_region_agree += 1,
                    _ => fail(&mut r, "region answer not reproduced"),
                }
            }
            (TaskName::RelativePosition, SampleKind::Factual) => {
                r.factual_direction += 1;
                let find = |c: &String| {
                    let mut it = image.instances.iter().filter(|i| &i.category == c);
                    match (it.next(), it.next()) {
                        (Some(i), None) => Some(i),
                        _ => None,
                    }
                };
                let derived = match cats.as_slice() {
                    [a, b] => find(a).zip(find(b)).and_then(|(a, b)| direction_of(a, b)),
                    _ => None,
                };
                if derived == Some(s.answer.as_str()) {
                    r.factual_direction_agree += 1;
                } else {
                    fail(&mut r, "direction answer not reproduced");
                }
            }
            (TaskName::Color, SampleKind::Factual) => {
                let Some(log) = transcripts else { continue };
                r.factual_color += 1;
                let answers: Vec<Option<String>> = s.provenance.transcripts.iter().map(|id| log.get(id).and_then(|t| first_color(t))).collect();
                if answers.len() == 2 && answers.iter().all(|a| a.as_deref() == Some(s.answer.as_str())) {
                    r.factual_color_agree += 1;
                } else {
                    fail(&mut r, "color answer not backed by two agreeing transcripts");
                }
            }
            _ => {}
        }
    }
    r
}
