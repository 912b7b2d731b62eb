//! COCO-style polygon documents (building footprints).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{normalize_label, AnnotatedImage, ImageMeta, Modality, ObjectInstance};
use crate::geometry::{Point, Polygon};

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoAnnotation {
    #[serde(default)]
    pub id: Option<u64>,
    pub image_id: u64,
    pub segmentation: Segmentation,
    pub category_id: u64,
}

/// Either COCO's list of rings or a single flat vertex list.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Segmentation {
    Rings(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// Position of the annotation in the document.
    pub annotation: usize,
    pub image_id: u64,
    pub reason: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum CocoError {
    #[error("annotations reference unknown image ids: {0:?}")]
    UnknownImageIds(Vec<u64>),
    #[error("duplicate image id {0}")]
    DuplicateImageId(u64),
    #[error("malformed document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub struct CocoParse {
    pub images: Vec<AnnotatedImage>,
    pub rejections: Vec<Rejection>,
}

/// Defaults applied to every image of a document.
#[derive(Debug, Clone)]
pub struct CocoDefaults {
    pub modality: Modality,
    pub gsd: Option<f64>,
    pub source: String,
    pub uri_prefix: String,
}

impl Default for CocoDefaults {
    fn default() -> Self {
        Self {
            modality: Modality::Unknown,
            gsd: None,
            source: String::new(),
            uri_prefix: String::new(),
        }
    }
}

fn ring_to_polygon(flat: &[f64]) -> Result<Polygon<f64>, String> {
    if flat.len() % 2 != 0 {
        return Err(format!("odd vertex list ({} values)", flat.len()));
    }
    if flat.len() < 6 {
        return Err(format!("polygon has fewer than 3 vertices ({} values)", flat.len()));
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    let pts = flat.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
    Polygon::new(pts).map_err(|e| e.to_string())
}

pub fn parse_coco_str(text: &str, defaults: &CocoDefaults) -> Result<CocoParse, CocoError> {
    let doc: CocoDocument = serde_json::from_str(text).map_err(|e| CocoError::Malformed(e.to_string()))?;
    parse_coco_polygons(&doc, defaults)
}

/// Groups polygons under their images. Images keep document order.
pub fn parse_coco_polygons(doc: &CocoDocument, defaults: &CocoDefaults) -> Result<CocoParse, CocoError> {
    let mut index = BTreeMap::new();
    for (i, img) in doc.images.iter().enumerate() {
        if index.insert(img.id, i).is_some() {
            return Err(CocoError::DuplicateImageId(img.id));
        }
    }
    let unknown: BTreeSet<u64> = doc
        .annotations
        .iter()
        .map(|a| a.image_id)
        .filter(|id| !index.contains_key(id))
        .collect();
    if !unknown.is_empty() {
        return Err(CocoError::UnknownImageIds(unknown.into_iter().collect()));
    }
    let names: BTreeMap<u64, String> = doc.categories.iter().map(|c| (c.id, normalize_label(&c.name))).collect();

    let mut grouped: Vec<Vec<ObjectInstance>> = vec![Vec::new(); doc.images.len()];
    let mut rejections = Vec::new();
    for (ai, ann) in doc.annotations.iter().enumerate() {
        let category = names.get(&ann.category_id).cloned().unwrap_or_else(|| format!("category {}", ann.category_id));
        let rings: Vec<&[f64]> = match &ann.segmentation {
            Segmentation::Rings(r) => r.iter().map(Vec::as_slice).collect(),
            Segmentation::Flat(f) => vec![f.as_slice()],
        };
        for ring in rings {
            match ring_to_polygon(ring) {
                Ok(footprint) => grouped[index[&ann.image_id]].push(ObjectInstance {
                    category: category.clone(),
                    footprint,
                    difficulty: None,
                }),
                Err(reason) => rejections.push(Rejection {
                    annotation: ai,
                    image_id: ann.image_id,
                    reason,
                }),
            }
        }
    }

    let images = doc
        .images
        .iter()
        .zip(grouped)
        .map(|(img, instances)| {
            let mut meta = ImageMeta::new(img.id.to_string(), img.width, img.height);
            meta.uri = format!("{}{}", defaults.uri_prefix, img.file_name);
            meta.modality = defaults.modality;
            meta.gsd = defaults.gsd;
            meta.source = defaults.source.clone();
            meta.into_image(instances)
        })
        .collect();
    Ok(CocoParse { images, rejections })
}
