//! Seeded synthetic corpora for tests, benchmarks and offline runs. The mix
//! of image kinds is chosen so that the default size covers every target of
//! `--preset paper`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Polygon};
use crate::ingest::{serialize_dota, AnnotatedImage, CocoAnnotation, CocoCategory, CocoDocument, CocoImage, ImageMeta, Modality, ObjectInstance, Segmentation};
use crate::io::write_atomic;
use crate::seeding::sample_rng;
use crate::variousgen::{GroundingRecord, SceneDataset, SceneImage, VqaRecord};

pub const OBJECT_CATEGORIES: [&str; 15] = [
    "plane",
    "ship",
    "storage tank",
    "baseball diamond",
    "tennis court",
    "basketball court",
    "ground track field",
    "harbor",
    "bridge",
    "large vehicle",
    "small vehicle",
    "helicopter",
    "roundabout",
    "soccer ball field",
    "swimming pool",
];

pub const LAND_COVER: [&str; 8] = ["agriculture", "barren", "forest", "industrial", "meadow", "road", "urban", "water"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Object-annotated images (oriented boxes).
    pub images: usize,
    pub image_size: u32,
    /// Building-polygon images.
    pub buildings: usize,
    pub multilabel: usize,
    pub vqa: usize,
    pub grounding: usize,
    pub scene: usize,
    pub scene_classes: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            images: 24_000,
            image_size: 800,
            buildings: 10_000,
            multilabel: 2000,
            vqa: 10_000,
            grounding: 13_500,
            scene: 14_045,
            scene_classes: 45,
        }
    }
}

impl SynthConfig {
    /// Object images only, enough for the honest-instruction preset.
    pub fn objects_only(seed: u64, images: usize) -> Self {
        Self {
            seed,
            images,
            buildings: 0,
            multilabel: 0,
            vqa: 0,
            grounding: 0,
            scene: 0,
            ..Self::default()
        }
    }
}

fn weighted_category<R: Rng>(rng: &mut R) -> &'static str {
    // Zipf-like: earlier names are more frequent.
    let weights: Vec<f64> = (0..OBJECT_CATEGORIES.len()).map(|i| 1.0 / (i as f64 + 2.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x <= 0.0 {
            return OBJECT_CATEGORIES[i];
        }
    }
    OBJECT_CATEGORIES[OBJECT_CATEGORIES.len() - 1]
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Rotated rectangle centered at `(cx, cy)`, vertices rounded to 0.1 px.
pub fn rotated_rect(cx: f64, cy: f64, length: f64, width: f64, angle: f64) -> Polygon<f64> {
    let (s, c) = angle.sin_cos();
    let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
    Polygon::new(
        corners
            .iter()
            .map(|&(u, v)| Point::new(round1(cx + u * length * c - v * width * s), round1(cy + u * length * s + v * width * c)))
            .collect(),
    )
    .expect("four vertices")
}

fn object<R: Rng>(rng: &mut R, category: &str, size: f64, center: Option<(f64, f64)>) -> ObjectInstance {
    let margin = 60.0;
    let (cx, cy) = center.unwrap_or_else(|| (rng.gen_range(margin..size - margin), rng.gen_range(margin..size - margin)));
    let length = rng.gen_range(12.0..80.0);
    let width = length * rng.gen_range(0.3..1.0);
    ObjectInstance {
        category: category.to_string(),
        footprint: rotated_rect(cx, cy, length, width, rng.gen_range(0.0..std::f64::consts::PI)),
        difficulty: None,
    }
}

fn optical_like<R: Rng>(rng: &mut R) -> Modality {
    match rng.gen_range(0..20) {
        0..=13 => Modality::Optical,
        14..=16 => Modality::Sar,
        _ => Modality::Infrared,
    }
}

/// One object image. Kind shares: 45% one object on optical imagery, 7%
/// panchromatic, 38% two objects of different categories, 10% clutter.
pub fn synth_object_image(seed: u64, index: usize, size: u32) -> AnnotatedImage {
    let id = format!("synth-{index:06}");
    let rng = &mut sample_rng(seed, &id, "synth", 0);
    let s = f64::from(size);
    let mut meta = ImageMeta::new(id.clone(), size, size);
    meta.source = "synthetic-objects".into();
    meta.gsd = Some((rng.gen_range(0.1..2.0f64) * 1000.0).round() / 1000.0);
    let roll = rng.gen_range(0..100);
    let pair = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a = weighted_category(rng);
        let mut b = weighted_category(rng);
        while b == a {
            b = weighted_category(rng);
        }
        let ca = (rng.gen_range(60.0..s - 60.0), rng.gen_range(60.0..s - 60.0));
        let mut cb = ca;
        while (cb.0 - ca.0).abs() + (cb.1 - ca.1).abs() < 40.0 {
            cb = (rng.gen_range(60.0..s - 60.0), rng.gen_range(60.0..s - 60.0));
        }
        vec![object(rng, a, s, Some(ca)), object(rng, b, s, Some(cb))]
    };
    let instances = match roll {
        0..=44 => {
            meta.modality = Modality::Optical;
            let c = weighted_category(rng);
            vec![object(rng, c, s, None)]
        }
        45..=51 => {
            meta.modality = Modality::Panchromatic;
            if roll % 2 == 0 {
                let c = weighted_category(rng);
                vec![object(rng, c, s, None)]
            } else {
                pair(rng)
            }
        }
        52..=89 => {
            meta.modality = optical_like(rng);
            pair(rng)
        }
        _ => {
            meta.modality = Modality::Optical;
            let n = rng.gen_range(3..=8);
            let cats: Vec<&str> = (0..rng.gen_range(2..=4)).map(|_| weighted_category(rng)).collect();
            (0..n)
                .map(|_| {
                    let c = *cats.choose(rng).expect("non-empty");
                    let mut o = object(rng, c, s, None);
                    if rng.gen_range(0..10) == 0 {
                        o.difficulty = Some(1);
                    }
                    o
                })
                .collect()
        }
    };
    meta.into_image(instances)
}

pub fn synth_object_images(seed: u64, count: usize, size: u32) -> Vec<AnnotatedImage> {
    (0..count).into_par_iter().map(|i| synth_object_image(seed, i, size)).collect()
}

fn building_ring<R: Rng>(rng: &mut R, x: f64, y: f64, cell: f64) -> Vec<f64> {
    let w = rng.gen_range(cell * 0.3..cell * 0.8);
    let h = rng.gen_range(cell * 0.3..cell * 0.8);
    let r = |v: f64| v.round();
    if rng.gen_bool(0.3) {
        // L-shaped footprint
        let (w2, h2) = (r(w / 2.0), r(h / 2.0));
        vec![x, y, r(x + w), y, r(x + w), r(y + h2), r(x + w2), r(y + h2), r(x + w2), r(y + h), x, r(y + h)]
    } else {
        vec![x, y, r(x + w), y, r(x + w), r(y + h), x, r(y + h)]
    }
}

pub fn synth_buildings(seed: u64, count: usize) -> CocoDocument {
    let mut images = Vec::with_capacity(count);
    let mut annotations = Vec::new();
    for i in 0..count {
        let id = 1_000_000 + i as u64;
        let rng = &mut sample_rng(seed, &id.to_string(), "synth-buildings", 0);
        images.push(CocoImage {
            id,
            file_name: format!("{id}.png"),
            width: 300,
            height: 300,
        });
        let mut cells: Vec<(u32, u32)> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
        cells.shuffle(rng);
        for &(r, c) in cells.iter().take(rng.gen_range(1..=6)) {
            let (x, y) = (f64::from(c) * 100.0 + rng.gen_range(2.0..15.0f64).round(), f64::from(r) * 100.0 + rng.gen_range(2.0..15.0f64).round());
            annotations.push(CocoAnnotation {
                id: Some(annotations.len() as u64 + 1),
                image_id: id,
                segmentation: Segmentation::Rings(vec![building_ring(rng, x, y, 100.0)]),
                category_id: 1,
            });
        }
    }
    CocoDocument {
        images,
        annotations,
        categories: vec![CocoCategory { id: 1, name: "building".into() }],
    }
}

pub fn scene_classes(n: usize) -> Vec<String> {
    const BASE: [&str; 15] = [
        "airport", "beach", "bridge", "church", "desert", "farmland", "forest", "harbor", "island", "lake", "meadow", "mountain", "railway", "river", "stadium",
    ];
    (0..n).map(|i| if i < BASE.len() { BASE[i].to_string() } else { format!("{} area {}", BASE[i % BASE.len()], i / BASE.len()) }).collect()
}

/// Writes a complete corpus under `dir` and returns the manifest path.
pub fn write_synth_corpus(dir: &Path, config: &SynthConfig) -> io::Result<PathBuf> {
    let seed = config.seed;
    let objects_dir = dir.join("objects");
    fs::create_dir_all(&objects_dir)?;
    synth_object_images(seed, config.images, config.image_size)
        .par_iter()
        .try_for_each(|img| fs::write(objects_dir.join(format!("{}.txt", img.image_id)), serialize_dota(img)))?;

    let labels: Vec<String> = OBJECT_CATEGORIES.iter().map(|c| format!("{c:?}")).collect();
    let mut manifest = format!(
        "name = \"synthetic\"\nsplit = \"train\"\n\n[[sources]]\nname = \"synthetic-objects\"\nformat = \"dota-obb\"\npath = \"objects\"\nimage_size = [{0}, {0}]\nmodality = \"optical\"\nlabels = [{1}]\n",
        config.image_size,
        labels.join(", ")
    );
    if config.buildings > 0 {
        let doc = synth_buildings(seed, config.buildings);
        write_atomic(&dir.join("buildings.json"), &serde_json::to_vec(&doc)?)?;
        manifest.push_str("\n[[sources]]\nname = \"synthetic-buildings\"\nformat = \"coco-polygons\"\npath = \"buildings.json\"\nmodality = \"optical\"\ngsd = 0.3\nlabels = [\"building\"]\n");
    }
    if config.multilabel > 0 {
        let mut out = String::new();
        for i in 0..config.multilabel {
            let id = format!("ml-{i:05}");
            let rng = &mut sample_rng(seed, &id, "synth-multilabel", 0);
            let k = rng.gen_range(1..=4);
            let mut labels: Vec<&str> = LAND_COVER.choose_multiple(rng, k).copied().collect();
            labels.sort();
            let rec = serde_json::json!({"image_id": id, "width": 512, "height": 512, "modality": "optical", "gsd": 4.0, "labels": labels});
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        write_atomic(&dir.join("multilabel.jsonl"), out.as_bytes())?;
        let vocab: Vec<String> = LAND_COVER.iter().map(|l| format!("{l:?}")).collect();
        manifest.push_str(&format!(
            "\n[[sources]]\nname = \"synthetic-landcover\"\nformat = \"multilabel-jsonl\"\npath = \"multilabel.jsonl\"\nlabels = [{}]\n",
            vocab.join(", ")
        ));
    }
    if config.vqa > 0 {
        let recs: Vec<VqaRecord> = (0..config.vqa)
            .map(|i| {
                let id = format!("lr-{:05}", i / 10);
                let rng = &mut sample_rng(seed, &id, "synth-vqa", i as u64);
                let thing = *["road", "building", "water area", "farmland"].choose(rng).expect("non-empty");
                if rng.gen_bool(0.5) {
                    VqaRecord {
                        image_id: id,
                        question: format!("Is there a {thing} in the image?"),
                        answer: if rng.gen_bool(0.5) { "yes" } else { "no" }.into(),
                        kind: Some("presence".into()),
                    }
                } else {
                    VqaRecord {
                        image_id: id,
                        question: format!("Is the number of {thing}s greater than the number of trees?"),
                        answer: if rng.gen_bool(0.5) { "yes" } else { "no" }.into(),
                        kind: Some("comp".into()),
                    }
                }
            })
            .collect();
        crate::io::write_jsonl(&dir.join("vqa.jsonl"), &recs)?;
        manifest.push_str("\n[[converters]]\nname = \"synthetic-vqa\"\nformat = \"rsvqa-jsonl\"\npath = \"vqa.jsonl\"\n");
    }
    if config.grounding > 0 {
        let recs: Vec<GroundingRecord> = (0..config.grounding)
            .map(|i| {
                let id = format!("vg-{i:05}");
                let rng = &mut sample_rng(seed, &id, "synth-grounding", 0);
                let (x, y) = (rng.gen_range(0.0..600.0f64).round(), rng.gen_range(0.0..600.0f64).round());
                let (w, h) = (rng.gen_range(20.0..200.0f64).round(), rng.gen_range(20.0..200.0f64).round());
                let color = *["white", "gray", "red", "blue"].choose(rng).expect("non-empty");
                GroundingRecord {
                    image_id: id,
                    width: 800,
                    height: 800,
                    expression: format!("the {color} {}", weighted_category(rng)),
                    bbox: [x, y, x + w, y + h],
                }
            })
            .collect();
        crate::io::write_jsonl(&dir.join("grounding.jsonl"), &recs)?;
        manifest.push_str("\n[[converters]]\nname = \"synthetic-grounding\"\nformat = \"dior-rsvg-jsonl\"\npath = \"grounding.jsonl\"\n");
    }
    if config.scene > 0 {
        let classes = scene_classes(config.scene_classes.max(2));
        let images = (0..config.scene)
            .map(|i| {
                let id = format!("sc-{i:05}");
                let rng = &mut sample_rng(seed, &id, "synth-scene", 0);
                let label = classes.choose(rng).expect("non-empty").clone();
                SceneImage { image_id: id, label }
            })
            .collect();
        write_atomic(&dir.join("scene.json"), &serde_json::to_vec(&SceneDataset { classes, images })?)?;
        manifest.push_str("\n[[converters]]\nname = \"synthetic-scene\"\nformat = \"scene-json\"\npath = \"scene.json\"\n");
    }
    let path = dir.join("manifest.toml");
    write_atomic(&path, manifest.as_bytes())?;
    Ok(path)
}
