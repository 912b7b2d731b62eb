use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Point, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Optical,
    Panchromatic,
    Sar,
    Infrared,
    Unknown,
}

impl Modality {
    /// The four concrete modalities, in the order used for answer choices.
    pub const KNOWN: [Modality; 4] = [Modality::Optical, Modality::Panchromatic, Modality::Sar, Modality::Infrared];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Optical => "optical",
            Modality::Panchromatic => "panchromatic",
            Modality::Sar => "sar",
            Modality::Infrared => "infrared",
            Modality::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "optical" | "rgb" => Some(Modality::Optical),
            "panchromatic" | "pan" | "gray" | "grey" => Some(Modality::Panchromatic),
            "sar" => Some(Modality::Sar),
            "infrared" | "ir" => Some(Modality::Infrared),
            "unknown" => Some(Modality::Unknown),
            _ => None,
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lowercases and collapses runs of whitespace to one space.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    pub footprint: Polygon<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<u32>,
}

impl ObjectInstance {
    pub fn bbox(&self) -> BBox<f64> {
        BBox::from_points(self.footprint.vertices()).expect("polygon has vertices")
    }

    /// Difficult instances count toward presence and co-occurrence but never
    /// serve as the single subject of a question.
    pub fn is_difficult(&self) -> bool {
        self.difficulty.is_some_and(|d| d >= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub uri: String,
    pub width: u32,
    pub height: u32,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub scene_labels: BTreeSet<String>,
    pub instances: Vec<ObjectInstance>,
    pub source: String,
}

impl AnnotatedImage {
    pub fn categories(&self) -> BTreeSet<&str> {
        self.instances.iter().map(|i| i.category.as_str()).collect()
    }

    pub fn category_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for i in &self.instances {
            *m.entry(i.category.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.instances.iter().any(|i| i.category == category)
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.instances.iter().filter(move |i| i.category == category)
    }

    /// The only instance, when the image holds exactly one and it is not
    /// flagged difficult.
    pub fn sole_instance(&self) -> Option<&ObjectInstance> {
        match self.instances.as_slice() {
            [only] if !only.is_difficult() => Some(only),
            _ => None,
        }
    }

    /// Clamps every footprint into the image frame. Returns how many
    /// instances were touched.
    pub fn clamp_footprints(&mut self) -> usize {
        let (w, h) = (self.width as f64, self.height as f64);
        let mut touched = 0;
        for inst in &mut self.instances {
            let inside = inst.footprint.vertices().iter().all(|p| p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h);
            if inside {
                continue;
            }
            touched += 1;
            inst.footprint = inst.footprint.map(|p| Point::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h)));
        }
        if touched > 0 {
            log::debug!("{}: clamped {touched} footprint(s) to {}x{}", self.image_id, self.width, self.height);
        }
        touched
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err(format!("{}: zero image dimension", self.image_id));
        }
        if let Some(g) = self.gsd {
            if !(g > 0.0) {
                return Err(format!("{}: gsd must be positive", self.image_id));
            }
        }
        if let Some(bad) = self.instances.iter().find(|i| i.category.is_empty()) {
            return Err(format!("{}: instance with empty category ({:?})", self.image_id, bad.footprint));
        }
        Ok(())
    }
}

/// Image-level metadata supplied alongside an annotation file.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub image_id: String,
    pub uri: String,
    pub width: u32,
    pub height: u32,
    pub modality: Modality,
    pub gsd: Option<f64>,
    pub source: String,
}

impl ImageMeta {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        let image_id = image_id.into();
        Self {
            uri: image_id.clone(),
            image_id,
            width,
            height,
            modality: Modality::Unknown,
            gsd: None,
            source: String::new(),
        }
    }

    pub fn into_image(self, instances: Vec<ObjectInstance>) -> AnnotatedImage {
        AnnotatedImage {
            image_id: self.image_id,
            uri: self.uri,
            width: self.width,
            height: self.height,
            modality: self.modality,
            gsd: self.gsd,
            scene_labels: BTreeSet::new(),
            instances,
            source: self.source,
        }
    }
}
