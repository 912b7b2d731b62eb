//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use hnstkit::captioner::LlmTranscript;
use hnstkit::evalharness::{acc_eq1, acc_eq2, ScoreReport};
use hnstkit::geometry::{ciou, iou, Polygon};
use hnstkit::hnstgen::{audit_hnstd, select_absent_category, NegativeContext, Strategy};
use hnstkit::ingest::{build_cooccurrence, load_manifest, resolve_corpus, AnnotatedImage, ImageMeta, ObjectInstance};
use hnstkit::io::read_jsonl;
use hnstkit::qareview::{overall_accuracy, percent_floor, PieceVerdict, ReviewSession};
use hnstkit::sample::{InstructionSample, SampleKind, TaskName};
use hnstkit::Rational;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hnstkit"))
}

fn run(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("hnstkit {} exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

// ---------------------------------------------------------------- formulas

fn color_aggregate() -> Check {
    let v = acc_eq2(0.8150f64, 0.9333, 0.9300).map_err(|e| e.to_string())?;
    ensure((v - 0.873325).abs() < 1e-9, || format!("got {v}"))?;
    let r = |n: i64| Rational::new(n, 10_000);
    let exact = acc_eq2(r(8150), r(9333), r(9300)).map_err(|e| e.to_string())?;
    ensure(exact == Rational::new(873_325, 1_000_000), || format!("exact {exact}"))?;
    Ok(format!("{v:.6}"))
}

fn position_aggregate() -> Check {
    let v = acc_eq1(0.7679f64, 0.9067).map_err(|e| e.to_string())?;
    ensure((v - 0.8373).abs() < 1e-9, || format!("got {v}"))?;
    let exact = acc_eq1(Rational::new(7679, 10_000), Rational::new(9067, 10_000)).map_err(|e| e.to_string())?;
    ensure(exact == Rational::new(8373, 10_000), || format!("exact {exact}"))?;
    Ok(format!("{v:.4}"))
}

fn qa_statistic(work: &Path) -> Check {
    // 73 / 10 / 17 sentences of 100, 22 of 40 partial pieces accurate
    let v = overall_accuracy(73, 10, 17, 22, 40).ok_or("undefined")?;
    ensure(v == Ratio::new(8235, 10_000), || format!("exact {v}"))?;
    ensure(percent_floor(v, 1) == "82.3%", || percent_floor(v, 1))?;
    let store = work.join("qa");
    run(&["qa", "demo", "--store", p(&store)])?;
    let json: serde_json::Value = serde_json::from_str(&run(&["qa", "report", "--store", p(&store), "--session", "demo", "--json"])?).map_err(|e| e.to_string())?;
    let frac = |k: &str| json[k].as_f64().unwrap_or(f64::NAN);
    ensure(
        (frac("ca_fraction") - 0.73).abs() < 1e-12 && (frac("ci_fraction") - 0.10).abs() < 1e-12 && (frac("pa_fraction") - 0.17).abs() < 1e-12,
        || format!("fractions {json}"),
    )?;
    ensure((frac("piece_accuracy") - 0.55).abs() < 1e-12, || format!("p {}", json["piece_accuracy"]))?;
    ensure((frac("overall") - 0.8235).abs() < 1e-12, || format!("overall {}", json["overall"]))?;
    ensure(json["display"] == "82.3%" && json["percent"] == "82.35%", || format!("display {} / {}", json["display"], json["percent"]))?;
    Ok("0.8235 (82.35%), displayed 82.3%".into())
}

// ---------------------------------------------------------------- dataset shape

struct Generated {
    corpus_dir: PathBuf,
    hnst: PathBuf,
    various: PathBuf,
}

fn count(samples: &[InstructionSample]) -> BTreeMap<(TaskName, SampleKind), usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry((s.task_name, s.kind)).or_insert(0) += 1;
    }
    m
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .map(|d| {
            d.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

fn hnst_dataset_shape(work: &Path, out: &mut Option<Generated>) -> Check {
    let corpus_dir = work.join("corpus");
    run(&["synth-corpus", "--out", p(&corpus_dir), "--seed", "1"])?;
    let manifest = corpus_dir.join("manifest.toml");
    let (a, b) = (work.join("hnst-a"), work.join("hnst-b"));
    for dir in [&a, &b] {
        run(&["generate", "hnst", "--manifest", p(&manifest), "--out", p(dir), "--seed", "7", "--preset", "paper"])?;
    }
    let (fa, fb) = (read_dir_bytes(&a), read_dir_bytes(&b));
    ensure(!fa.is_empty() && fa == fb, || "two runs with the same seed differ".into())?;

    let corpus = resolve_corpus(&load_manifest(&manifest).map_err(|e| e.to_string())?);
    let objects = corpus.images.iter().filter(|i| i.source == "synthetic-objects").count();
    ensure(objects >= 20_000, || format!("only {objects} annotated object images"))?;

    let train: Vec<InstructionSample> = read_jsonl(&a.join("train.jsonl")).map_err(|e| e.to_string())?;
    let test: Vec<InstructionSample> = read_jsonl(&a.join("test.jsonl")).map_err(|e| e.to_string())?;
    use SampleKind::*;
    use TaskName::*;
    let expect_train = [
        ((Presence, Plain), 8000),
        ((Color, Factual), 8000),
        ((Color, DeceptiveEx), 4000),
        ((Color, DeceptivePan), 1000),
        ((AbsolutePosition, Factual), 8000),
        ((AbsolutePosition, DeceptiveEx), 4000),
        ((RelativePosition, Factual), 8000),
        ((RelativePosition, DeceptiveEx), 4000),
    ];
    let expect_test = [
        ((Presence, Plain), 242),
        ((Color, Factual), 200),
        ((Color, DeceptiveEx), 300),
        ((Color, DeceptivePan), 100),
        ((AbsolutePosition, Factual), 100),
        ((AbsolutePosition, DeceptiveEx), 300),
        ((RelativePosition, Factual), 100),
        ((RelativePosition, DeceptiveEx), 300),
    ];
    for (split, samples, expect) in [("train", &train, expect_train), ("test", &test, expect_test)] {
        let got = count(samples);
        let want: BTreeMap<_, _> = expect.into_iter().collect();
        ensure(got == want, || format!("{split} counts {got:?}"))?;
    }
    let tr: BTreeSet<&str> = train.iter().map(|s| s.image_id.as_str()).collect();
    let te: BTreeSet<&str> = test.iter().map(|s| s.image_id.as_str()).collect();
    ensure(tr.is_disjoint(&te), || "train and test share images".into())?;

    let various = work.join("various");
    run(&["generate", "various", "--manifest", p(&manifest), "--out", p(&various), "--seed", "7", "--preset", "paper"])?;
    *out = Some(Generated {
        corpus_dir,
        hnst: a,
        various,
    });
    Ok(format!("{} train / {} test samples, {objects} corpus images, byte-identical reruns", train.len(), test.len()))
}

fn honesty_audit(g: &Generated) -> Check {
    let start = Instant::now();
    let corpus = resolve_corpus(&load_manifest(&g.corpus_dir.join("manifest.toml")).map_err(|e| e.to_string())?);
    let train: Vec<InstructionSample> = read_jsonl(&g.hnst.join("train.jsonl")).map_err(|e| e.to_string())?;
    let test: Vec<InstructionSample> = read_jsonl(&g.hnst.join("test.jsonl")).map_err(|e| e.to_string())?;
    let transcripts: Vec<LlmTranscript> = read_jsonl(&g.hnst.join("transcripts.jsonl")).map_err(|e| e.to_string())?;
    let map: BTreeMap<String, String> = transcripts.into_iter().map(|t| (t.request_id, t.response)).collect();
    let r = audit_hnstd(&train, &test, &corpus.images, Some(&map));
    ensure(r.is_clean(), || format!("{} violations, first: {:?}", r.violations.len(), r.violations.first()))?;
    ensure(r.deceptive_ex > 0 && r.deceptive_ex == r.deceptive_ex_sound, || format!("deceptive_ex {}/{}", r.deceptive_ex_sound, r.deceptive_ex))?;
    ensure(r.factual_region > 0 && r.factual_region == r.factual_region_agree, || format!("region {}/{}", r.factual_region_agree, r.factual_region))?;
    ensure(r.factual_direction > 0 && r.factual_direction == r.factual_direction_agree, || {
        format!("direction {}/{}", r.factual_direction_agree, r.factual_direction)
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs * 50_000.0 / r.samples as f64 <= 60.0, || format!("too slow: {secs:.1}s for {} samples", r.samples))?;
    Ok(format!(
        "{} deceptive_ex absent, {} regions and {} directions re-derived, {} samples",
        r.deceptive_ex, r.factual_region, r.factual_direction, r.samples
    ))
}

// ---------------------------------------------------------------- geometry

const GRID: usize = 2048;

/// Pixel-center rasterization on a GRID x GRID lattice over the unit square,
/// evaluated row by row from even-odd crossing intervals.
fn row_intervals(poly: &[(f64, f64)], y: f64) -> Vec<(f64, f64)> {
    let mut xs = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a.1 <= y && y < b.1) || (b.1 <= y && y < a.1) {
            xs.push(a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0], c[1])).collect()
}

fn centers_in(a: f64, b: f64) -> i64 {
    let n = GRID as f64;
    let first = |x: f64| ((x * n - 0.5).ceil()).clamp(0.0, n) as i64;
    (first(b) - first(a)).max(0)
}

fn raster_areas(p: &[(f64, f64)], q: &[(f64, f64)]) -> (f64, f64, f64) {
    let (mut ap, mut aq, mut both) = (0i64, 0i64, 0i64);
    for r in 0..GRID {
        let y = (r as f64 + 0.5) / GRID as f64;
        let ip = row_intervals(p, y);
        let iq = row_intervals(q, y);
        ap += ip.iter().map(|&(a, b)| centers_in(a, b)).sum::<i64>();
        aq += iq.iter().map(|&(a, b)| centers_in(a, b)).sum::<i64>();
        for &(a0, a1) in &ip {
            for &(b0, b1) in &iq {
                let (lo, hi) = (a0.max(b0), a1.min(b1));
                if lo < hi {
                    both += centers_in(lo, hi);
                }
            }
        }
    }
    let cell = 1.0 / (GRID * GRID) as f64;
    (ap as f64 * cell, aq as f64 * cell, both as f64 * cell)
}

/// Star-shaped around `c` with every angular gap below pi, hence simple.
/// Centers stay in [0.3, 0.7] so the ring never leaves the unit square.
fn star(rng: &mut ChaCha8Rng, c: (f64, f64)) -> Vec<(f64, f64)> {
    let k = rng.gen_range(3..=12);
    let step = std::f64::consts::TAU / k as f64;
    (0..k)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(0.0..0.5)) * step;
            let r = rng.gen_range(0.08..0.3);
            (c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .collect()
}

fn geometry_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut overlapping = 0;
    for pair in 0..200 {
        let c = (rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7));
        let a = star(&mut rng, c);
        let d = ((c.0 + rng.gen_range(-0.2..0.2)).clamp(0.3, 0.7), (c.1 + rng.gen_range(-0.2..0.2)).clamp(0.3, 0.7));
        let b = star(&mut rng, d);
        let (pa, pb) = (Polygon::from_coords(&a).map_err(|e| e.to_string())?, Polygon::from_coords(&b).map_err(|e| e.to_string())?);
        let (ra, rb, rboth) = raster_areas(&a, &b);
        let raster_iou = if ra + rb - rboth > 0.0 { rboth / (ra + rb - rboth) } else { 0.0 };
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let raster_ciou = raster_iou * (1.0 - (na - nb).abs() / (na + nb));
        ensure(pa.is_simple() && pb.is_simple(), || format!("pair {pair}: generator produced a non-simple ring"))?;
        let (gi, gc) = (iou(&pa, &pb), ciou(&pa, &pb));
        let err = (gi - raster_iou).abs().max((gc - raster_ciou).abs());
        ensure(err <= 1e-3, || format!("pair {pair}: iou {gi} vs {raster_iou}, ciou {gc} vs {raster_ciou}"))?;
        ensure(ciou(&pa, &pa) == 1.0, || format!("pair {pair}: self C-IoU {}", ciou(&pa, &pa)))?;
        worst = worst.max(err);
        overlapping += usize::from(rboth > 0.0);
    }
    ensure(overlapping >= 150, || format!("only {overlapping} overlapping pairs"))?;
    let square = Polygon::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]).map_err(|e| e.to_string())?;
    let split = Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (2.0, 2.0), (1.0, 2.0), (0.0, 2.0), (0.0, 1.0)])
        .map_err(|e| e.to_string())?;
    let v = ciou(&split, &square);
    ensure((v - 2.0f64 / 3.0).abs() < 1e-9, || format!("4-vs-8 square gives {v}"))?;
    let exact = ciou(&split.map(to_rational), &square.map(to_rational));
    ensure(exact == Rational::new(2, 3), || format!("exact 4-vs-8 square gives {exact}"))?;
    Ok(format!("200 pairs ({overlapping} overlapping), max |err| {worst:.2e}; 4-vs-8 square = 2/3"))
}

fn to_rational(pt: hnstkit::geometry::Point<f64>) -> hnstkit::geometry::Point<Rational> {
    hnstkit::geometry::Point::new(Rational::from_integer(pt.x as i64), Rational::from_integer(pt.y as i64))
}

// ---------------------------------------------------------------- adversarial sampler

fn unit_square(cat: &str) -> ObjectInstance {
    ObjectInstance {
        category: cat.into(),
        footprint: Polygon::from_coords(&[(10.0, 10.0), (20.0, 10.0), (20.0, 20.0), (10.0, 20.0)]).expect("square"),
        difficulty: None,
    }
}

/// Counts co-occurrence straight from the images and takes the argmax.
fn brute_adversarial(corpus: &[AnnotatedImage], present: &BTreeSet<&str>) -> Option<String> {
    let all: BTreeSet<&str> = corpus.iter().flat_map(|i| i.instances.iter().map(|x| x.category.as_str())).collect();
    let mut best: Option<(u64, &str)> = None;
    for c in all.difference(present) {
        let score: u64 = corpus
            .iter()
            .filter(|img| img.has_category(c))
            .map(|img| present.iter().filter(|q| img.has_category(q)).count() as u64)
            .sum();
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, c));
        }
    }
    best.map(|(_, c)| c.to_string())
}

fn adversarial_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    for n in 0..100 {
        let n_cat = rng.gen_range(2..=10);
        let cats: Vec<String> = (0..n_cat).map(|i| format!("cat{i}")).collect();
        let corpus: Vec<AnnotatedImage> = (0..rng.gen_range(1..=50))
            .map(|i| {
                let k = rng.gen_range(1..=n_cat.min(5));
                let inst = (0..k).map(|_| unit_square(&cats[rng.gen_range(0..n_cat)])).collect();
                ImageMeta::new(format!("{n}-{i}"), 100, 100).into_image(inst)
            })
            .collect();
        let ctx = NegativeContext::new(build_cooccurrence(&corpus), 0.2);
        for img in &corpus {
            let present = img.categories();
            let got = select_absent_category(&present, Strategy::Adversarial, &ctx, &mut rng).ok();
            let want = brute_adversarial(&corpus, &present);
            ensure(got == want, || format!("corpus {n}, image {}: {got:?} vs {want:?}", img.image_id))?;
            checked += 1;
        }
    }
    ensure(start.elapsed() <= Duration::from_secs(10), || format!("took {:?}", start.elapsed()))?;
    Ok(format!("{checked} selections over 100 corpora"))
}

// ---------------------------------------------------------------- evaluation

fn gold_file(datasets: &[PathBuf], out: &Path) -> Result<(), String> {
    let mut text = String::new();
    for d in datasets {
        for s in read_jsonl::<InstructionSample>(d).map_err(|e| e.to_string())? {
            text.push_str(&serde_json::json!({"sample_id": s.sample_id, "prediction": s.answer}).to_string());
            text.push('\n');
        }
    }
    std::fs::write(out, text).map_err(|e| e.to_string())
}

fn evaluation_round_trip(work: &Path, g: &Generated) -> Check {
    let start = Instant::now();
    let sets = [
        vec![g.hnst.join("train.jsonl")],
        vec![g.hnst.join("test.jsonl")],
        vec![g.various.join("various.jsonl")],
    ];
    let mut tasks_seen = BTreeSet::new();
    let mut samples = 0;
    for (k, set) in sets.iter().enumerate() {
        let preds = work.join(format!("gold-{k}.jsonl"));
        gold_file(set, &preds)?;
        let out = work.join(format!("score-{k}"));
        let mut args = vec!["evaluate", "--judge", "mock", "--predictions", p(&preds), "--out", p(&out), "--dataset"];
        args.extend(set.iter().map(|x| p(x)));
        run(&args)?;
        let report: ScoreReport = serde_json::from_slice(&std::fs::read(out.join("score.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(!report.incomplete && report.missing == 0, || format!("set {k} incomplete"))?;
        for t in &report.tasks {
            let want = if t.metric == "mae" { 0.0 } else { 1.0 };
            ensure(t.value == Some(want), || format!("{} {} = {:?}", t.task, t.metric, t.value))?;
            ensure(t.unparseable == 0, || format!("{}: {} unparseable gold answers", t.task, t.unparseable))?;
            tasks_seen.insert(t.task);
        }
        samples += report.samples;
    }
    ensure(tasks_seen.len() == TaskName::ALL.len(), || format!("only {} task kinds scored", tasks_seen.len()))?;
    ensure(start.elapsed() <= Duration::from_secs(60), || format!("took {:?}", start.elapsed()))?;
    Ok(format!("{samples} samples over {} tasks: Acc 1, MAE 0, Acc@0.5 1, C-IoU 1, F1 1", tasks_seen.len()))
}

// ---------------------------------------------------------------- crash consistency

struct Service {
    child: Child,
    base: String,
}

fn start_service(store: &Path) -> Result<Service, String> {
    let mut child = bin()
        .args(["qa", "serve", "--store", p(store), "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().ok_or("no stdout")?).read_line(&mut line).map_err(|e| e.to_string())?;
    let base = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner {line:?}"))?.to_string();
    Ok(Service { child, base })
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(3))).http_status_as_error(false).build().into()
}

fn crash_consistency(work: &Path) -> Check {
    let start = Instant::now();
    let store = work.join("crash-store");
    let captions = work.join("captions.jsonl");
    let text: String = (0..400)
        .map(|i| {
            serde_json::json!({"image": format!("img-{i}.png"), "caption": format!("Scene {i} has a road. It shows {} houses. A river runs south.", i % 9)})
                .to_string()
                + "\n"
        })
        .collect();
    std::fs::write(&captions, text).map_err(|e| e.to_string())?;
    run(&["qa", "new", "--store", p(&store), "--captions", p(&captions), "--id", "crash", "--n", "315", "--seed", "5"])?;

    let session: ReviewSession = serde_json::from_slice(&std::fs::read(store.join("crash.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let targets: Vec<(usize, usize)> = session.pairs.iter().enumerate().flat_map(|(p, pr)| (0..pr.sentences.len()).map(move |s| (p, s))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    // last acknowledged verdict per sentence, and the one attempted after it, if any
    let mut acked: BTreeMap<(usize, usize), PieceVerdict> = BTreeMap::new();
    let mut max_acked_revision = 0u64;
    let mut total_acks = 0usize;
    let mut cursor = 0usize;
    for cycle in 0..20 {
        let svc = start_service(&store)?;
        let kill_after = Duration::from_millis(rng.gen_range(20..200));
        let base = svc.base.clone();
        let mut child = svc.child;
        let killer = std::thread::spawn(move || {
            std::thread::sleep(kill_after);
            let _ = child.kill();
            let _ = child.wait();
        });
        let agent = agent();
        // the attempt that was interrupted; every loop exit happens right after one is sent
        let mut in_flight;
        loop {
            let (pi, si) = targets[cursor % targets.len()];
            let verdict = if (cursor / targets.len() + cycle) % 2 == 0 { "accurate" } else { "inaccurate" };
            in_flight = Some(((pi, si), verdict));
            let body = serde_json::json!({"pair": pi, "sentence": si, "piece": 0, "verdict": verdict});
            let resp = agent.post(&format!("{base}/api/sessions/crash/verdict")).send_json(&body);
            let Ok(mut resp) = resp else { break };
            if resp.status() != 200 {
                break;
            }
            let Ok(state) = resp.body_mut().read_json::<serde_json::Value>() else { break };
            let rev = state["revision"].as_u64().ok_or("acknowledgement without revision")?;
            acked.insert((pi, si), PieceVerdict::parse(verdict).expect("known verdict"));
            max_acked_revision = max_acked_revision.max(rev);
            total_acks += 1;
            cursor += 1;
        }
        killer.join().map_err(|_| "killer thread panicked")?;

        // restart and compare with what was acknowledged
        let svc = start_service(&store)?;
        let state: ReviewSession = agent
            .get(&format!("{}/api/sessions/crash", svc.base))
            .call()
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        let mut child = svc.child;
        let _ = child.kill();
        let _ = child.wait();
        ensure(state.revision >= max_acked_revision, || format!("cycle {cycle}: revision {} < acknowledged {max_acked_revision}", state.revision))?;
        for (&(pi, si), &v) in &acked {
            let stored = state.pairs[pi].sentences[si].pieces[0].verdict;
            let pending = in_flight.is_some_and(|(t, _)| t == (pi, si));
            ensure(stored == v || pending, || format!("cycle {cycle}: pair {pi} sentence {si} lost acknowledged verdict {v:?} (found {stored:?})"))?;
        }
        // an unacknowledged write may or may not have landed; adopt whatever is on disk
        if let Some(((pi, si), _)) = in_flight {
            acked.insert((pi, si), state.pairs[pi].sentences[si].pieces[0].verdict);
            max_acked_revision = max_acked_revision.max(state.revision);
            cursor += 1;
        }
    }
    ensure(total_acks >= 20, || format!("only {total_acks} acknowledgements over 20 cycles"))?;
    ensure(start.elapsed() <= Duration::from_secs(120), || format!("took {:?}", start.elapsed()))?;
    Ok(format!("20 kill/restart cycles, {total_acks} acknowledged verdicts intact"))
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let work = tmp.path();
    let mut results: Vec<(&str, Check, Duration)> = Vec::new();
    let mut record = |name: &'static str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        match &outcome {
            Ok(detail) => println!("PASS  {name:<28} {detail} [{:.1}s]", elapsed.as_secs_f64()),
            Err(why) => println!("FAIL  {name:<28} {why} [{:.1}s]", elapsed.as_secs_f64()),
        }
        results.push((name, outcome, elapsed));
    };
    let mut generated = None;
    record("color-aggregate", &mut color_aggregate);
    record("position-aggregate", &mut position_aggregate);
    record("qa-statistic", &mut || qa_statistic(work));
    record("hnst-dataset-shape", &mut || hnst_dataset_shape(work, &mut generated));
    let g = generated.as_ref();
    record("honesty-audit", &mut || g.ok_or_else(|| "no dataset: hnst-dataset-shape failed".to_string()).and_then(honesty_audit));
    record("geometry-oracle", &mut geometry_oracle);
    record("adversarial-oracle", &mut adversarial_oracle);
    record("evaluation-round-trip", &mut || {
        g.ok_or_else(|| "no dataset: hnst-dataset-shape failed".to_string()).and_then(|g| evaluation_round_trip(work, g))
    });
    record("crash-consistency", &mut || crash_consistency(work));
    let failed = results.iter().filter(|r| r.1.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
