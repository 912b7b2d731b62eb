use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use hnstkit::captioner::{ImagePayload, LlmClient, MockBackend};
use hnstkit::geometry::Polygon;
use hnstkit::hnstgen::{
    audit_hnstd, build_hnstd, gen_abs_position, gen_rel_position, select_absent_category, write_hnstd, Captioning, HnstConfig, HnstError, HnstSplit,
    NegativeContext, Strategy, TaskTargets,
};
use hnstkit::ingest::{build_cooccurrence, AnnotatedImage, ImageMeta, ObjectInstance};
use hnstkit::sample::{SampleKind, TaskName};
use hnstkit::synth::synth_object_images;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loader(i: &AnnotatedImage) -> ImagePayload {
    ImagePayload::reference(i.image_id.clone())
}

fn small_targets(scale: usize) -> TaskTargets {
    TaskTargets {
        presence: 10 * scale,
        color_factual: 8 * scale,
        color_deceptive_ex: 4 * scale,
        color_deceptive_pan: scale,
        absolute_factual: 8 * scale,
        absolute_deceptive: 4 * scale,
        relative_factual: 8 * scale,
        relative_deceptive: 4 * scale,
    }
}

fn small_config(seed: u64) -> HnstConfig {
    HnstConfig {
        seed,
        train: small_targets(20),
        test: small_targets(2),
        ..HnstConfig::default()
    }
}

#[test]
fn paper_preset_counts_on_synthetic_corpus() {
    let corpus = synth_object_images(1, 24_000, 800);
    let client = LlmClient::mock(Arc::new(MockBackend::default()));
    let cap = Captioning { client: &client, load_image: &loader };
    let ds = build_hnstd(&corpus, &HnstConfig::paper(7), Some(&cap)).unwrap();
    let counts = ds.report.counts();
    let c = |split, task, kind| counts.get(&(split, task, kind)).copied().unwrap_or(0);
    use HnstSplit::*;
    let expect = [
        (Train, TaskName::Presence, SampleKind::Plain, 8000),
        (Train, TaskName::Color, SampleKind::Factual, 8000),
        (Train, TaskName::Color, SampleKind::DeceptiveEx, 4000),
        (Train, TaskName::Color, SampleKind::DeceptivePan, 1000),
        (Train, TaskName::AbsolutePosition, SampleKind::Factual, 8000),
        (Train, TaskName::AbsolutePosition, SampleKind::DeceptiveEx, 4000),
        (Train, TaskName::RelativePosition, SampleKind::Factual, 8000),
        (Train, TaskName::RelativePosition, SampleKind::DeceptiveEx, 4000),
        (Test, TaskName::Presence, SampleKind::Plain, 242),
        (Test, TaskName::Color, SampleKind::Factual, 200),
        (Test, TaskName::Color, SampleKind::DeceptiveEx, 300),
        (Test, TaskName::Color, SampleKind::DeceptivePan, 100),
        (Test, TaskName::AbsolutePosition, SampleKind::Factual, 100),
        (Test, TaskName::AbsolutePosition, SampleKind::DeceptiveEx, 300),
        (Test, TaskName::RelativePosition, SampleKind::Factual, 100),
        (Test, TaskName::RelativePosition, SampleKind::DeceptiveEx, 300),
    ];
    for (split, task, kind, n) in expect {
        assert_eq!(c(split, task, kind), n, "{split:?} {task} {kind}");
    }
    let yes = ds.train.iter().filter(|s| s.task_name == TaskName::Presence && s.answer == "Yes").count();
    assert_eq!(yes, 4000);
    let yes_test = ds.test.iter().filter(|s| s.task_name == TaskName::Presence && s.answer == "Yes").count();
    assert_eq!(yes_test, 121);

    let transcripts: BTreeMap<String, String> = client.transcripts().into_iter().map(|t| (t.request_id, t.response)).collect();
    let audit = audit_hnstd(&ds.train, &ds.test, &corpus, Some(&transcripts));
    assert!(audit.is_clean(), "{:?}", &audit.violations[..audit.violations.len().min(5)]);
    assert_eq!(audit.factual_color, 8200);
    assert!(!ds.report.exclusions.is_empty());
}

#[test]
fn output_independent_of_thread_count() {
    let corpus = synth_object_images(2, 3000, 800);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let client = LlmClient::mock(Arc::new(MockBackend::default()));
            let cap = Captioning { client: &client, load_image: &loader };
            let ds = build_hnstd(&corpus, &small_config(5), Some(&cap)).unwrap();
            let dir = tempfile::tempdir().unwrap();
            write_hnstd(dir.path(), &ds, Some(&client)).unwrap();
            ["train.jsonl", "test.jsonl", "report.json", "transcripts.jsonl"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
        })
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn zero_targets_give_an_empty_dataset() {
    let corpus = synth_object_images(2, 50, 800);
    let config = HnstConfig {
        train: TaskTargets::default(),
        test: TaskTargets::default(),
        ..HnstConfig::default()
    };
    let ds = build_hnstd(&corpus, &config, None).unwrap();
    assert!(ds.train.is_empty() && ds.test.is_empty());
    assert_eq!(ds.report.scale, 1.0);
}

#[test]
fn strict_config_lists_shortfalls() {
    let corpus = synth_object_images(2, 200, 800);
    let client = LlmClient::mock(Arc::new(MockBackend::default()));
    let cap = Captioning { client: &client, load_image: &loader };
    match build_hnstd(&corpus, &HnstConfig::paper(1), Some(&cap)) {
        Err(HnstError::Shortfall(list)) => {
            assert!(!list.is_empty());
            let msg = HnstError::Shortfall(list).to_string();
            assert!(msg.contains("color_factual"));
        }
        other => panic!("expected shortfall, got {:?}", other.map(|d| d.report.scale)),
    }
}

#[test]
fn downscaling_is_proportional() {
    let corpus = synth_object_images(2, 200, 800);
    let client = LlmClient::mock(Arc::new(MockBackend::default()));
    let cap = Captioning { client: &client, load_image: &loader };
    let ds = build_hnstd(&corpus, &small_config(3), Some(&cap)).unwrap();
    let scale = ds.report.scale;
    assert!(scale < 1.0 && scale > 0.0);
    assert!(!ds.report.warnings.is_empty());
    for s in &ds.report.streams {
        assert_eq!(s.produced, (s.target as f64 * scale + 1e-9).floor() as usize, "{:?}", s.stream);
    }
}

#[test]
fn strategy_mix_is_exact_thirds() {
    let corpus = synth_object_images(4, 3000, 800);
    let ds = build_hnstd(
        &corpus,
        &HnstConfig {
            train: TaskTargets {
                absolute_deceptive: 900,
                ..TaskTargets::default()
            },
            test: TaskTargets::default(),
            ..HnstConfig::default()
        },
        None,
    )
    .unwrap();
    let mut by: BTreeMap<String, usize> = BTreeMap::new();
    for s in &ds.train {
        *by.entry(s.provenance.strategy.clone().unwrap()).or_default() += 1;
    }
    assert_eq!(by.values().copied().collect::<Vec<_>>(), vec![300, 300, 300]);
}

fn square(cat: &str, cx: f64, cy: f64) -> ObjectInstance {
    ObjectInstance {
        category: cat.into(),
        footprint: Polygon::from_coords(&[(cx - 4.0, cy - 4.0), (cx + 4.0, cy - 4.0), (cx + 4.0, cy + 4.0), (cx - 4.0, cy + 4.0)]).unwrap(),
        difficulty: None,
    }
}

#[test]
fn ten_thousand_choice_sets_are_distinct() {
    let corpus = synth_object_images(6, 400, 800);
    let ctx = NegativeContext::new(build_cooccurrence(&corpus), 0.2);
    let mut n = 0;
    for i in 0..10_000u64 {
        let img = &corpus[(i as usize) % corpus.len()];
        let rng = &mut ChaCha8Rng::seed_from_u64(i);
        let factual = i % 2 == 0;
        let s = if i % 4 < 2 {
            gen_abs_position(img, factual, Strategy::ALL[(i % 3) as usize], &ctx, 0, rng)
        } else {
            gen_rel_position(img, factual, Strategy::ALL[(i % 3) as usize], &ctx, 0, rng)
        };
        if let Ok(s) = s {
            let c = s.choices.as_ref().unwrap();
            assert_eq!(c.len(), 5);
            assert_eq!(c.iter().collect::<BTreeSet<_>>().len(), 5);
            assert!(c.contains(&s.answer));
            n += 1;
        }
    }
    assert!(n > 5000);
}

#[test]
fn swapping_subject_and_reference_flips_direction() {
    let ctx = NegativeContext::new(build_cooccurrence(&[]), 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..500 {
        let (ax, ay) = (rng.gen_range(10..790) as f64, rng.gen_range(10..790) as f64);
        let (bx, by) = (rng.gen_range(10..790) as f64 + 0.5, rng.gen_range(10..790) as f64);
        let img = ImageMeta::new(format!("p{k}"), 800, 800).into_image(vec![square("ship", ax, ay), square("harbor", bx, by)]);
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for seed in 0..16 {
            let s = gen_rel_position(&img, true, Strategy::Random, &ctx, 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            seen.insert(s.provenance.categories[0].clone(), s.answer);
        }
        if let (Some(a), Some(b)) = (seen.get("ship"), seen.get("harbor")) {
            let da = hnstkit::geometry::DirectionName::ALL.iter().find(|d| d.as_str() == a).unwrap();
            assert_eq!(da.opposite().as_str(), b);
        }
    }
}

/// Brute force over every absent category, scoring by direct counting of
/// images where both categories appear.
fn brute_adversarial(corpus: &[AnnotatedImage], present: &BTreeSet<&str>) -> Option<String> {
    let vocab: BTreeSet<&str> = corpus.iter().flat_map(|i| i.instances.iter().map(|o| o.category.as_str())).collect();
    let mut best: Option<(u64, &str)> = None;
    for c in vocab.iter().filter(|c| !present.contains(*c)) {
        let mut score = 0u64;
        for p in present {
            score += corpus.iter().filter(|i| i.has_category(c) && i.has_category(p)).count() as u64;
        }
        match best {
            Some((s, _)) if s >= score => {}
            _ => best = Some((score, c)),
        }
    }
    best.map(|(_, c)| c.to_string())
}

#[test]
fn adversarial_matches_brute_force_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for corpus_no in 0..100 {
        let n_cat = rng.gen_range(2..=10);
        let cats: Vec<String> = (0..n_cat).map(|i| format!("c{i}")).collect();
        let corpus: Vec<AnnotatedImage> = (0..rng.gen_range(1..=50))
            .map(|i| {
                let k = rng.gen_range(1..=n_cat.min(4));
                let inst = (0..k).map(|_| square(&cats[rng.gen_range(0..n_cat)], 50.0, 50.0)).collect();
                ImageMeta::new(format!("{corpus_no}-{i}"), 100, 100).into_image(inst)
            })
            .collect();
        let ctx = NegativeContext::new(build_cooccurrence(&corpus), 0.2);
        for img in &corpus {
            let present = img.categories();
            let got = select_absent_category(&present, Strategy::Adversarial, &ctx, &mut rng).ok();
            assert_eq!(got, brute_adversarial(&corpus, &present), "corpus {corpus_no}");
        }
    }
}
