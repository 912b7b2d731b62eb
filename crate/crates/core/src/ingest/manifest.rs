//! Corpus manifests: which annotation sources make up a corpus and how to
//! read them.
//!
//! A manifest is a TOML document:
//!
//! ```toml
//! name = "hnst-train"
//! split = "train"                 # train | val | test
//!
//! [[sources]]
//! name = "DOTA-v2"
//! format = "dota-obb"             # dota-obb | coco-polygons | multilabel-jsonl
//! path = "dota/labelTxt"          # file or directory, relative to the manifest
//! images = "dota/images"          # optional, used to build image uris
//! metadata = "dota/meta.csv"      # optional: image_id,width,height,modality,gsd
//! image_size = [1024, 1024]       # optional default size
//! modality = "optical"            # default for images that do not state one
//! gsd = 0.5                       # default ground sample distance (m/px)
//! labels = ["ship", "plane"]      # declared label set, non-empty
//! [sources.label_map]             # optional, applied after normalization
//! "small-vehicle" = "vehicle"
//!
//! [[converters]]                  # passthrough sources for VariousRS tasks
//! name = "RSVQA-LR"
//! format = "rsvqa-jsonl"          # rsvqa-jsonl | dior-rsvg-jsonl | scene-json
//! path = "rsvqa/train.jsonl"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::coco::{parse_coco_str, CocoDefaults};
use super::dota::parse_dota;
use super::model::{normalize_label, AnnotatedImage, ImageMeta, Modality};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    Parse(String),
    #[error("unknown format tag {tag:?} in source {source_name:?}")]
    UnknownFormat { tag: String, source_name: String },
    #[error("source {0:?} declares an empty label set")]
    EmptyLabelSet(String),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormat {
    #[serde(rename = "dota-obb")]
    DotaObb,
    #[serde(rename = "coco-polygons")]
    CocoPolygons,
    #[serde(rename = "multilabel-jsonl")]
    MultilabelJsonl,
}

impl SourceFormat {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "dota-obb" => Some(Self::DotaObb),
            "coco-polygons" => Some(Self::CocoPolygons),
            "multilabel-jsonl" => Some(Self::MultilabelJsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConverterFormat {
    #[serde(rename = "rsvqa-jsonl")]
    RsvqaJsonl,
    #[serde(rename = "dior-rsvg-jsonl")]
    DiorRsvgJsonl,
    #[serde(rename = "scene-json")]
    SceneJson,
}

impl ConverterFormat {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "rsvqa-jsonl" => Some(Self::RsvqaJsonl),
            "dior-rsvg-jsonl" => Some(Self::DiorRsvgJsonl),
            "scene-json" => Some(Self::SceneJson),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawManifest {
    name: String,
    #[serde(default)]
    split: Split,
    #[serde(default)]
    sources: Vec<RawSource>,
    #[serde(default)]
    converters: Vec<RawConverter>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    name: String,
    format: String,
    path: String,
    images: Option<String>,
    metadata: Option<String>,
    image_size: Option<[u32; 2]>,
    modality: Option<String>,
    gsd: Option<f64>,
    #[serde(default)]
    labels: Vec<String>,
    #[serde(default)]
    label_map: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConverter {
    name: String,
    format: String,
    path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceDescriptor {
    pub name: String,
    pub format: SourceFormat,
    pub path: PathBuf,
    pub images: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub image_size: Option<[u32; 2]>,
    pub modality: Modality,
    pub gsd: Option<f64>,
    pub labels: BTreeSet<String>,
    pub label_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverterDescriptor {
    pub name: String,
    pub format: ConverterFormat,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub name: String,
    pub split: Split,
    pub sources: Vec<SourceDescriptor>,
    pub converters: Vec<ConverterDescriptor>,
}

impl DatasetManifest {
    /// Every declared label across sources, after mapping.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.sources
            .iter()
            .filter(|s| s.format != SourceFormat::MultilabelJsonl)
            .flat_map(|s| s.labels.iter().map(|l| s.map_label(l)))
            .collect()
    }

    pub fn scene_vocabulary(&self) -> BTreeSet<String> {
        self.sources
            .iter()
            .filter(|s| s.format == SourceFormat::MultilabelJsonl)
            .flat_map(|s| s.labels.iter().cloned())
            .collect()
    }
}

impl SourceDescriptor {
    pub fn map_label(&self, raw: &str) -> String {
        let n = normalize_label(raw);
        self.label_map.get(&n).cloned().unwrap_or(n)
    }
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DatasetManifest, ManifestError> {
    let raw: RawManifest = toml::from_str(text).map_err(|e| ManifestError::Parse(e.to_string()))?;
    if raw.name.trim().is_empty() {
        return Err(ManifestError::Invalid("corpus name is empty".into()));
    }
    let resolve = |p: &str| base_dir.join(p);
    let mut sources = Vec::with_capacity(raw.sources.len());
    for s in raw.sources {
        let format = SourceFormat::parse(&s.format).ok_or_else(|| ManifestError::UnknownFormat {
            tag: s.format.clone(),
            source_name: s.name.clone(),
        })?;
        if s.labels.is_empty() {
            return Err(ManifestError::EmptyLabelSet(s.name));
        }
        let modality = match &s.modality {
            Some(m) => Modality::parse(m).ok_or_else(|| ManifestError::Invalid(format!("source {:?}: unknown modality {m:?}", s.name)))?,
            None => Modality::Unknown,
        };
        if let Some(g) = s.gsd {
            if !(g > 0.0) {
                return Err(ManifestError::Invalid(format!("source {:?}: gsd must be positive", s.name)));
            }
        }
        let label_map = s.label_map.iter().map(|(k, v)| (normalize_label(k), normalize_label(v))).collect();
        sources.push(SourceDescriptor {
            format,
            path: resolve(&s.path),
            images: s.images.as_deref().map(resolve),
            metadata: s.metadata.as_deref().map(resolve),
            image_size: s.image_size,
            modality,
            gsd: s.gsd,
            labels: s.labels.iter().map(|l| normalize_label(l)).collect(),
            label_map,
            name: s.name,
        });
    }
    let mut converters = Vec::with_capacity(raw.converters.len());
    for c in raw.converters {
        let format = ConverterFormat::parse(&c.format).ok_or_else(|| ManifestError::UnknownFormat {
            tag: c.format.clone(),
            source_name: c.name.clone(),
        })?;
        converters.push(ConverterDescriptor {
            name: c.name,
            format,
            path: resolve(&c.path),
        });
    }
    Ok(DatasetManifest {
        name: raw.name,
        split: raw.split,
        sources,
        converters,
    })
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SourceReport {
    pub name: String,
    pub files: usize,
    pub images: usize,
    pub clamped_instances: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ResolvedCorpus {
    /// Sorted by image id.
    pub images: Vec<AnnotatedImage>,
    pub reports: Vec<SourceReport>,
}

impl ResolvedCorpus {
    pub fn error_count(&self) -> usize {
        self.reports.iter().map(|r| r.errors.len()).sum()
    }
}

#[derive(Debug, Deserialize)]
struct MetaRow {
    image_id: String,
    width: Option<u32>,
    height: Option<u32>,
    #[serde(default)]
    modality: Option<String>,
    #[serde(default)]
    gsd: Option<f64>,
}

fn read_metadata(path: &Path) -> Result<BTreeMap<String, MetaRow>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<MetaRow>() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        out.insert(row.image_id.clone(), row);
    }
    Ok(out)
}

fn list_files(path: &Path, ext: &str) -> std::io::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn finish(src: &SourceDescriptor, mut img: AnnotatedImage, report: &mut SourceReport) -> Option<AnnotatedImage> {
    for inst in &mut img.instances {
        inst.category = src.map_label(&inst.category);
    }
    report.clamped_instances += img.clamp_footprints();
    match img.validate() {
        Ok(()) => Some(img),
        Err(e) => {
            report.errors.push(e);
            None
        }
    }
}

fn load_dota(src: &SourceDescriptor, report: &mut SourceReport) -> Vec<AnnotatedImage> {
    let files = match list_files(&src.path, "txt") {
        Ok(f) => f,
        Err(e) => {
            report.errors.push(format!("{}: {e}", src.path.display()));
            return Vec::new();
        }
    };
    let metadata = match &src.metadata {
        Some(p) => match read_metadata(p) {
            Ok(m) => m,
            Err(e) => {
                report.errors.push(e);
                BTreeMap::new()
            }
        },
        None => BTreeMap::new(),
    };
    report.files = files.len();
    let parsed: Vec<(Option<AnnotatedImage>, Vec<String>)> = files
        .par_iter()
        .map(|file| {
            let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let row = metadata.get(&stem);
            let size = row
                .and_then(|r| r.width.zip(r.height))
                .map(|(w, h)| [w, h])
                .or(src.image_size);
            let Some([w, h]) = size else {
                return (None, vec![format!("{}: no image size in metadata or source default", file.display())]);
            };
            let text = match fs::read_to_string(file) {
                Ok(t) => t,
                Err(e) => return (None, vec![format!("{}: {e}", file.display())]),
            };
            let mut meta = ImageMeta::new(stem.clone(), w, h);
            meta.source = src.name.clone();
            meta.uri = match &src.images {
                Some(dir) => dir.join(format!("{stem}.png")).to_string_lossy().into_owned(),
                None => stem.clone(),
            };
            meta.modality = row.and_then(|r| r.modality.as_deref()).and_then(Modality::parse).unwrap_or(src.modality);
            meta.gsd = row.and_then(|r| r.gsd).or(src.gsd);
            let parsed = parse_dota(&text, meta);
            // the header's imagesource must not rename the corpus source
            let mut image = parsed.image;
            image.source = src.name.clone();
            let errs = parsed.errors.iter().map(|e| format!("{}: {e}", file.display())).collect();
            (Some(image), errs)
        })
        .collect();
    let mut out = Vec::with_capacity(parsed.len());
    for (img, errs) in parsed {
        report.errors.extend(errs);
        if let Some(img) = img.and_then(|i| finish(src, i, report)) {
            out.push(img);
        }
    }
    out
}

fn load_coco(src: &SourceDescriptor, report: &mut SourceReport) -> Vec<AnnotatedImage> {
    report.files = 1;
    let text = match fs::read_to_string(&src.path) {
        Ok(t) => t,
        Err(e) => {
            report.errors.push(format!("{}: {e}", src.path.display()));
            return Vec::new();
        }
    };
    let defaults = CocoDefaults {
        modality: src.modality,
        gsd: src.gsd,
        source: src.name.clone(),
        uri_prefix: src.images.as_ref().map(|d| format!("{}/", d.display())).unwrap_or_default(),
    };
    match parse_coco_str(&text, &defaults) {
        Ok(p) => {
            report.errors.extend(p.rejections.iter().map(|r| format!("annotation {} (image {}): {}", r.annotation, r.image_id, r.reason)));
            p.images.into_iter().filter_map(|i| finish(src, i, report)).collect()
        }
        Err(e) => {
            report.errors.push(format!("{}: {e}", src.path.display()));
            Vec::new()
        }
    }
}

#[derive(Debug, Deserialize)]
struct MultilabelRecord {
    image_id: String,
    width: u32,
    height: u32,
    #[serde(default)]
    uri: Option<String>,
    #[serde(default)]
    modality: Option<String>,
    #[serde(default)]
    gsd: Option<f64>,
    labels: Vec<String>,
}

fn load_multilabel(src: &SourceDescriptor, report: &mut SourceReport) -> Vec<AnnotatedImage> {
    report.files = 1;
    let text = match fs::read_to_string(&src.path) {
        Ok(t) => t,
        Err(e) => {
            report.errors.push(format!("{}: {e}", src.path.display()));
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: MultilabelRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                report.errors.push(format!("{}:{}: {e}", src.path.display(), i + 1));
                continue;
            }
        };
        let mut meta = ImageMeta::new(rec.image_id.clone(), rec.width, rec.height);
        meta.uri = rec.uri.unwrap_or(rec.image_id);
        meta.source = src.name.clone();
        meta.modality = rec.modality.as_deref().and_then(Modality::parse).unwrap_or(src.modality);
        meta.gsd = rec.gsd.or(src.gsd);
        let mut img = meta.into_image(Vec::new());
        img.scene_labels = rec.labels.iter().map(|l| src.map_label(l)).collect();
        let outside: Vec<_> = img.scene_labels.iter().filter(|l| !src.labels.contains(*l)).cloned().collect();
        if !outside.is_empty() {
            report.errors.push(format!("{}: labels outside the declared set: {outside:?}", img.image_id));
            continue;
        }
        if let Some(img) = finish(src, img, report) {
            out.push(img);
        }
    }
    out
}

/// Loads every annotation source. Per-source problems are collected in the
/// reports; duplicate image ids keep the first occurrence.
pub fn resolve_corpus(manifest: &DatasetManifest) -> ResolvedCorpus {
    let mut images = Vec::new();
    let mut reports = Vec::new();
    let mut seen = BTreeSet::new();
    for src in &manifest.sources {
        let mut report = SourceReport {
            name: src.name.clone(),
            ..Default::default()
        };
        let loaded = match src.format {
            SourceFormat::DotaObb => load_dota(src, &mut report),
            SourceFormat::CocoPolygons => load_coco(src, &mut report),
            SourceFormat::MultilabelJsonl => load_multilabel(src, &mut report),
        };
        for img in loaded {
            if seen.insert(img.image_id.clone()) {
                report.images += 1;
                images.push(img);
            } else {
                report.errors.push(format!("duplicate image id {}", img.image_id));
            }
        }
        reports.push(report);
    }
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    ResolvedCorpus { images, reports }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, text: &str) {
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    }

    #[test]
    fn dota_source_with_two_files() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "labels/a.txt", "0 0 10 0 10 10 0 10 ship 0\n");
        write(dir.path(), "labels/b.txt", "0 0 10 0 10 10 0 10 plane 0\n");
        write(
            dir.path(),
            "m.toml",
            "name = \"t\"\n[[sources]]\nname = \"DOTA\"\nformat = \"dota-obb\"\npath = \"labels\"\nimage_size = [100, 100]\nmodality = \"sar\"\nlabels = [\"ship\", \"plane\"]\n",
        );
        let m = load_manifest(&dir.path().join("m.toml")).unwrap();
        let c = resolve_corpus(&m);
        assert_eq!(c.images.len(), 2);
        assert!(c.images.iter().all(|i| i.modality == Modality::Sar));
        assert_eq!(c.error_count(), 0);
    }

    #[test]
    fn misspelled_tag_is_fatal() {
        let err = parse_manifest(
            "name = \"t\"\n[[sources]]\nname = \"DOTA\"\nformat = \"dota-ob\"\npath = \"x\"\nlabels = [\"ship\"]\n",
            Path::new("."),
        )
        .unwrap_err();
        assert!(err.to_string().contains("dota-ob"), "{err}");
    }

    #[test]
    fn empty_label_set_is_fatal() {
        let err = parse_manifest("name = \"t\"\n[[sources]]\nname = \"D\"\nformat = \"dota-obb\"\npath = \"x\"\nlabels = []\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ManifestError::EmptyLabelSet(_)));
    }

    #[test]
    fn unreadable_source_is_recorded_and_others_load() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ok/a.txt", "0 0 10 0 10 10 0 10 ship 0\n");
        let text = "name = \"t\"\n\
            [[sources]]\nname = \"missing\"\nformat = \"coco-polygons\"\npath = \"nope.json\"\nlabels = [\"building\"]\n\
            [[sources]]\nname = \"ok\"\nformat = \"dota-obb\"\npath = \"ok\"\nimage_size = [50, 50]\nlabels = [\"ship\"]\n";
        let m = parse_manifest(text, dir.path()).unwrap();
        let c = resolve_corpus(&m);
        assert_eq!(c.images.len(), 1);
        assert_eq!(c.reports[0].errors.len(), 1);
        assert!(c.reports[1].errors.is_empty());
    }

    #[test]
    fn metadata_and_label_map() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "l/p1.txt", "gsd:0.25\n-5 0 10 0 10 10 -5 10 Small-Vehicle 0\n");
        write(dir.path(), "l/p2.txt", "0 0 10 0 10 10 0 10 ship 0\n");
        write(dir.path(), "meta.csv", "image_id,width,height,modality,gsd\np1,64,48,panchromatic,\np2,32,32,,0.8\n");
        let text = "name = \"t\"\n[[sources]]\nname = \"D\"\nformat = \"dota-obb\"\npath = \"l\"\nmetadata = \"meta.csv\"\nmodality = \"optical\"\nlabels = [\"ship\", \"small-vehicle\"]\n[sources.label_map]\n\"small-vehicle\" = \"vehicle\"\n";
        let m = parse_manifest(text, dir.path()).unwrap();
        assert!(m.vocabulary().contains("vehicle"));
        let c = resolve_corpus(&m);
        let p1 = &c.images[0];
        assert_eq!((p1.width, p1.height, p1.modality, p1.gsd), (64, 48, Modality::Panchromatic, Some(0.25)));
        assert_eq!(p1.instances[0].category, "vehicle");
        assert_eq!(p1.instances[0].bbox().x_min, 0.0);
        assert_eq!(c.reports[0].clamped_instances, 1);
        let p2 = &c.images[1];
        assert_eq!((p2.modality, p2.gsd), (Modality::Optical, Some(0.8)));
    }

    #[test]
    fn multilabel_source() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "ml.jsonl",
            "{\"image_id\":\"g1\",\"width\":100,\"height\":100,\"labels\":[\"Water\",\"forest\"]}\n{\"image_id\":\"g2\",\"width\":100,\"height\":100,\"labels\":[\"lava\"]}\n",
        );
        let text = "name = \"t\"\n[[sources]]\nname = \"DeepGlobe\"\nformat = \"multilabel-jsonl\"\npath = \"ml.jsonl\"\nlabels = [\"water\", \"forest\", \"urban\"]\n";
        let c = resolve_corpus(&parse_manifest(text, dir.path()).unwrap());
        assert_eq!(c.images.len(), 1);
        assert_eq!(c.images[0].scene_labels.iter().cloned().collect::<Vec<_>>(), ["forest", "water"]);
        assert_eq!(c.error_count(), 1);
    }
}
