//! Per-image sample generators. Each is a pure function of the image, the
//! corpus statistics and the rng it is handed; the color generator also
//! consults the captioner.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::negative::{select_absent_category, NegativeContext, SkipReason, Strategy};
use super::phrasing::{self, NONE_OPTION};
use crate::captioner::{extract_color, ClientError, ColorOutcome, ImagePayload, LlmClient};
use crate::geometry::{enlarge_box, nine_region, relative_direction, DirectionName, RegionName, DEFAULT_ENLARGE_FACTOR};
use crate::ingest::{AnnotatedImage, Modality, ObjectInstance};
use crate::sample::{render_choices, InstructionSample, Provenance, SampleKind, TaskName};

pub const GENERATOR: &str = "hnstgen";

/// Access to the multimodal model for factual color answers.
pub struct Captioning<'a> {
    pub client: &'a LlmClient,
    pub load_image: &'a (dyn Fn(&AnnotatedImage) -> ImagePayload + Sync),
}

/// A two-query color disagreement that kept an image out of the factual pool.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ColorExclusion {
    pub image_id: String,
    pub category: String,
    pub first: Option<String>,
    pub second: Option<String>,
    pub transcripts: [String; 2],
}

#[derive(Debug)]
pub enum GenFailure {
    Skip(SkipReason),
    Excluded(ColorExclusion),
    Captioner(ClientError),
}

impl From<SkipReason> for GenFailure {
    fn from(r: SkipReason) -> Self {
        GenFailure::Skip(r)
    }
}

pub type GenResult = Result<InstructionSample, GenFailure>;

struct Draft<'a> {
    image: &'a AnnotatedImage,
    task: TaskName,
    kind: SampleKind,
    seed: u64,
    strategy: Option<Strategy>,
    categories: Vec<String>,
    transcripts: Vec<String>,
}

impl Draft<'_> {
    fn finish(self, question: String, answer: String, choices: Option<Vec<String>>) -> InstructionSample {
        let question = match &choices {
            Some(c) => render_choices(&question, c),
            None => question,
        };
        InstructionSample {
            sample_id: String::new(),
            image_id: self.image.image_id.clone(),
            task_id: self.task.task_id(),
            task_name: self.task,
            question,
            answer,
            kind: self.kind,
            choices,
            provenance: Provenance {
                generator: GENERATOR.to_string(),
                seed: self.seed,
                strategy: self.strategy.map(|s| s.as_str().to_string()),
                categories: self.categories,
                transcripts: self.transcripts,
            },
        }
    }
}

fn pick<'a, R: Rng>(items: &[&'a str], rng: &mut R) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

/// Correct option plus three distractors and the nonexistence option, or
/// four distractors and the nonexistence option when `correct` is `None`.
fn five_choices<R: Rng>(pool: &[&str], correct: Option<&str>, rng: &mut R) -> Vec<String> {
    let others: Vec<&str> = pool.iter().copied().filter(|p| Some(*p) != correct).collect();
    let k = if correct.is_some() { 3 } else { 4 };
    let mut choices: Vec<String> = others.choose_multiple(rng, k).map(|s| s.to_string()).collect();
    if let Some(c) = correct {
        choices.push(c.to_string());
    }
    choices.push(NONE_OPTION.to_string());
    choices.shuffle(rng);
    choices
}

fn region_names() -> Vec<&'static str> {
    RegionName::ALL.iter().map(|r| r.as_str()).collect()
}

fn direction_names() -> Vec<&'static str> {
    DirectionName::ALL.iter().map(|d| d.as_str()).collect()
}

/// Yes/no presence question. A negative draw asks about an absent category
/// chosen by `strategy`.
pub fn gen_presence<R: Rng>(image: &AnnotatedImage, positive: bool, strategy: Strategy, ctx: &NegativeContext, seed: u64, rng: &mut R) -> GenResult {
    let present = image.categories();
    let (category, answer, strategy) = if positive {
        if present.is_empty() {
            return Err(SkipReason::Ineligible.into());
        }
        let cats: Vec<&str> = present.iter().copied().collect();
        (pick(&cats, rng).to_string(), "Yes", None)
    } else {
        (select_absent_category(&present, strategy, ctx, rng)?, "No", Some(strategy))
    };
    let question = phrasing::phrase(&phrasing::PRESENCE, &category, "", rng);
    Ok(Draft {
        image,
        task: TaskName::Presence,
        kind: SampleKind::Plain,
        seed,
        strategy,
        categories: vec![category],
        transcripts: Vec::new(),
    }
    .finish(question, answer.to_string(), None))
}

/// Open-ended color question.
///
/// Factual: the image's only instance, optical imagery, and two agreeing
/// model answers. DeceptiveEx: an absent category on non-panchromatic
/// imagery. DeceptivePan: a present category on panchromatic imagery.
pub fn gen_color<R: Rng>(
    image: &AnnotatedImage,
    kind: SampleKind,
    captioning: Option<&Captioning>,
    strategy: Strategy,
    ctx: &NegativeContext,
    seed: u64,
    rng: &mut R,
) -> GenResult {
    let present = image.categories();
    let mut draft = Draft {
        image,
        task: TaskName::Color,
        kind,
        seed,
        strategy: None,
        categories: Vec::new(),
        transcripts: Vec::new(),
    };
    let (category, answer) = match kind {
        SampleKind::Factual => {
            let (Some(inst), Modality::Optical, Some(cap)) = (image.sole_instance(), image.modality, captioning) else {
                return Err(SkipReason::Ineligible.into());
            };
            let (w, h) = (f64::from(image.width), f64::from(image.height));
            let crop = enlarge_box(&inst.bbox(), DEFAULT_ENLARGE_FACTOR, w, h).map_err(|_| SkipReason::Ineligible)?;
            let outcome = extract_color(cap.client, &(cap.load_image)(image), crop, &inst.category).map_err(GenFailure::Captioner)?;
            match outcome {
                ColorOutcome::Accepted { color, transcripts } => {
                    draft.transcripts = transcripts.to_vec();
                    (inst.category.clone(), color)
                }
                ColorOutcome::Inconsistent { first, second, transcripts } => {
                    return Err(GenFailure::Excluded(ColorExclusion {
                        image_id: image.image_id.clone(),
                        category: inst.category.clone(),
                        first,
                        second,
                        transcripts,
                    }))
                }
            }
        }
        SampleKind::DeceptiveEx => {
            if image.modality == Modality::Panchromatic {
                return Err(SkipReason::Ineligible.into());
            }
            let c = select_absent_category(&present, strategy, ctx, rng)?;
            draft.strategy = Some(strategy);
            let a = phrasing::refusal_absent(&c);
            (c, a)
        }
        SampleKind::DeceptivePan => {
            if image.modality != Modality::Panchromatic || present.is_empty() {
                return Err(SkipReason::Ineligible.into());
            }
            let cats: Vec<&str> = present.iter().copied().collect();
            let c = pick(&cats, rng).to_string();
            let a = phrasing::refusal_panchromatic(&c);
            (c, a)
        }
        SampleKind::Plain => return Err(SkipReason::Ineligible.into()),
    };
    let question = phrasing::phrase(&phrasing::COLOR, &category, "", rng);
    draft.categories = vec![category];
    Ok(draft.finish(question, answer, None))
}

/// Nine-region single-choice question.
pub fn gen_abs_position<R: Rng>(image: &AnnotatedImage, factual: bool, strategy: Strategy, ctx: &NegativeContext, seed: u64, rng: &mut R) -> GenResult {
    let regions = region_names();
    let (category, correct, strategy) = if factual {
        let inst = image.sole_instance().ok_or(SkipReason::Ineligible)?;
        let region = nine_region(&inst.bbox(), f64::from(image.width), f64::from(image.height)).map_err(|_| SkipReason::Ineligible)?;
        (inst.category.clone(), Some(region.as_str()), None)
    } else {
        (select_absent_category(&image.categories(), strategy, ctx, rng)?, None, Some(strategy))
    };
    let question = phrasing::phrase(&phrasing::ABSOLUTE, &category, "", rng);
    let choices = five_choices(&regions, correct, rng);
    let kind = if factual { SampleKind::Factual } else { SampleKind::DeceptiveEx };
    Ok(Draft {
        image,
        task: TaskName::AbsolutePosition,
        kind,
        seed,
        strategy,
        categories: vec![category],
        transcripts: Vec::new(),
    }
    .finish(question, correct.unwrap_or(NONE_OPTION).to_string(), Some(choices)))
}

/// The two single-instance objects of an image with exactly two categories.
pub fn relative_pair(image: &AnnotatedImage) -> Option<(&ObjectInstance, &ObjectInstance)> {
    match image.instances.as_slice() {
        [a, b] if a.category != b.category && !a.is_difficult() && !b.is_difficult() => Some((a, b)),
        _ => None,
    }
}

/// Relative-direction single-choice question. Deceptive questions name one
/// or two absent categories, evenly split.
pub fn gen_rel_position<R: Rng>(image: &AnnotatedImage, factual: bool, strategy: Strategy, ctx: &NegativeContext, seed: u64, rng: &mut R) -> GenResult {
    let directions = direction_names();
    let (subject, reference, correct, strategy) = if factual {
        let (mut a, mut b) = relative_pair(image).ok_or(SkipReason::Ineligible)?;
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut a, &mut b);
        }
        let dir = relative_direction(a.bbox().centroid(), b.bbox().centroid()).map_err(|_| SkipReason::CoLocated)?;
        (a.category.clone(), b.category.clone(), Some(dir.as_str()), None)
    } else {
        let present = image.categories();
        let both_absent = rng.gen_bool(0.5) || present.is_empty();
        let first = select_absent_category(&present, strategy, ctx, rng)?;
        let (s, r) = if both_absent {
            let mut excluded: BTreeSet<&str> = present.clone();
            excluded.insert(&first);
            let second = select_absent_category(&excluded, strategy, ctx, rng)?;
            (first, second)
        } else {
            let cats: Vec<&str> = present.iter().copied().collect();
            let other = pick(&cats, rng).to_string();
            if rng.gen_bool(0.5) {
                (first, other)
            } else {
                (other, first)
            }
        };
        (s, r, None, Some(strategy))
    };
    let question = phrasing::phrase(&phrasing::RELATIVE, &subject, &reference, rng);
    let choices = five_choices(&directions, correct, rng);
    let kind = if factual { SampleKind::Factual } else { SampleKind::DeceptiveEx };
    Ok(Draft {
        image,
        task: TaskName::RelativePosition,
        kind,
        seed,
        strategy,
        categories: vec![subject, reference],
        transcripts: Vec::new(),
    }
    .finish(question, correct.unwrap_or(NONE_OPTION).to_string(), Some(choices)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::captioner::{MockBackend, MockFixtures};
    use crate::geometry::Polygon;
    use crate::ingest::{build_cooccurrence, ImageMeta};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn inst(cat: &str, x: f64, y: f64) -> ObjectInstance {
        ObjectInstance {
            category: cat.into(),
            footprint: Polygon::from_coords(&[(x - 5.0, y - 5.0), (x + 5.0, y - 5.0), (x + 5.0, y + 5.0), (x - 5.0, y + 5.0)]).unwrap(),
            difficulty: None,
        }
    }

    fn img(id: &str, modality: Modality, instances: Vec<ObjectInstance>) -> AnnotatedImage {
        let mut m = ImageMeta::new(id, 300, 300);
        m.modality = modality;
        m.into_image(instances)
    }

    fn ctx() -> NegativeContext {
        let corpus = vec![
            img("a", Modality::Optical, vec![inst("ship", 10.0, 10.0), inst("harbor", 50.0, 50.0)]),
            img("b", Modality::Optical, vec![inst("plane", 10.0, 10.0)]),
        ];
        NegativeContext::new(build_cooccurrence(&corpus), 0.2)
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn presence_yes_and_forced_no() {
        let image = img("x", Modality::Optical, vec![inst("ship", 150.0, 150.0), inst("harbor", 20.0, 20.0)]);
        let yes = gen_presence(&image, true, Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(yes.answer, "Yes");
        assert!(image.has_category(&yes.provenance.categories[0]));
        let no = gen_presence(&image, false, Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(no.answer, "No");
        assert_eq!(no.provenance.categories, ["plane"]);
        assert!(no.question.contains("plane"));
        assert_eq!(no.kind, SampleKind::Plain);
    }

    #[test]
    fn abs_center_factual() {
        let image = img("x", Modality::Optical, vec![inst("ship", 150.0, 150.0)]);
        let s = gen_abs_position(&image, true, Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(s.answer, "center");
        let choices = s.choices.as_ref().unwrap();
        assert_eq!(choices.len(), 5);
        assert!(choices.contains(&NONE_OPTION.to_string()));
        s.check().unwrap();
        assert!(s.prompt().starts_with("{IDK} "));
    }

    #[test]
    fn abs_deceptive_answers_none() {
        let image = img("x", Modality::Optical, vec![inst("ship", 150.0, 150.0)]);
        let s = gen_abs_position(&image, false, Strategy::Adversarial, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(s.answer, NONE_OPTION);
        assert_eq!(s.kind, SampleKind::DeceptiveEx);
        assert!(!image.has_category(&s.provenance.categories[0]));
        s.check().unwrap();
    }

    #[test]
    fn rel_right_and_antisymmetric() {
        let image = img("x", Modality::Optical, vec![inst("ship", 200.0, 100.0), inst("harbor", 100.0, 100.0)]);
        let mut seen = BTreeSet::new();
        for seed in 0..40 {
            let s = gen_rel_position(&image, true, Strategy::Random, &ctx(), 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let want = if s.provenance.categories[0] == "ship" { "right" } else { "left" };
            assert_eq!(s.answer, want);
            seen.insert(s.answer.clone());
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn rel_deceptive_names_an_absent_category() {
        let image = img("x", Modality::Optical, vec![inst("ship", 200.0, 100.0)]);
        for seed in 0..40 {
            let s = gen_rel_position(&image, false, Strategy::Random, &ctx(), 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(s.answer, NONE_OPTION);
            assert!(s.provenance.categories.iter().any(|c| !image.has_category(c)));
            assert_ne!(s.provenance.categories[0], s.provenance.categories[1]);
        }
    }

    #[test]
    fn color_paths() {
        let mut f = MockFixtures::default();
        f.colors.insert("tank".into(), ("red".into(), "red".into()));
        f.colors.insert("odd".into(), ("red".into(), "orange".into()));
        let client = LlmClient::mock(Arc::new(MockBackend::new(f)));
        let loader = |i: &AnnotatedImage| ImagePayload::reference(i.image_id.clone());
        let cap = Captioning { client: &client, load_image: &loader };

        let tank = img("tank", Modality::Optical, vec![inst("storage tank", 100.0, 100.0)]);
        let s = gen_color(&tank, SampleKind::Factual, Some(&cap), Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(s.answer, "red");
        assert_eq!(s.provenance.transcripts.len(), 2);

        let odd = img("odd", Modality::Optical, vec![inst("ship", 100.0, 100.0)]);
        assert!(matches!(
            gen_color(&odd, SampleKind::Factual, Some(&cap), Strategy::Random, &ctx(), 1, &mut rng()),
            Err(GenFailure::Excluded(_))
        ));

        let pan = img("pan", Modality::Panchromatic, vec![inst("plane", 100.0, 100.0)]);
        let s = gen_color(&pan, SampleKind::DeceptivePan, None, Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert_eq!(s.answer, phrasing::refusal_panchromatic("plane"));

        let s = gen_color(&tank, SampleKind::DeceptiveEx, None, Strategy::Random, &ctx(), 1, &mut rng()).unwrap();
        assert!(!tank.has_category(&s.provenance.categories[0]));
        assert!(s.answer.starts_with("There is no "));
    }
}
