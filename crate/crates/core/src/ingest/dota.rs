//! DOTA-style oriented box annotations.
//!
//! One object per line: `x1 y1 x2 y2 x3 y3 x4 y4 category [difficulty]`.
//! Optional `key:value` header lines (`imagesource`, `gsd`, `modality`) may
//! precede the objects.

use std::fmt::Write as _;

use serde::Serialize;

use super::model::{normalize_label, AnnotatedImage, ImageMeta, Modality, ObjectInstance};
use crate::geometry::{Point, Polygon};

const HEADER_KEYS: [&str; 3] = ["imagesource", "gsd", "modality"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct DotaParse {
    pub image: AnnotatedImage,
    pub errors: Vec<LineError>,
}

fn parse_header(key: &str, value: &str, meta: &mut ImageMeta) -> Result<(), String> {
    let value = value.trim();
    match key {
        "imagesource" => {
            if meta.source.is_empty() && !value.is_empty() {
                meta.source = value.to_string();
            }
            Ok(())
        }
        "gsd" => {
            if value.is_empty() || value.eq_ignore_ascii_case("null") || value.eq_ignore_ascii_case("none") {
                return Ok(());
            }
            let g: f64 = value.parse().map_err(|_| format!("bad gsd value {value:?}"))?;
            if !(g > 0.0) || !g.is_finite() {
                return Err(format!("gsd must be positive, got {value}"));
            }
            meta.gsd = Some(g);
            Ok(())
        }
        "modality" => {
            meta.modality = Modality::parse(value).ok_or_else(|| format!("unknown modality {value:?}"))?;
            Ok(())
        }
        _ => unreachable!("filtered by HEADER_KEYS"),
    }
}

fn parse_object(line: &str) -> Result<ObjectInstance, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let numeric = tokens.iter().take_while(|t| t.parse::<f64>().is_ok()).count();
    if numeric != 8 {
        return Err(format!("expected 8 coordinates, found {numeric}"));
    }
    let mut coords = [0f64; 8];
    for (slot, tok) in coords.iter_mut().zip(&tokens) {
        let v: f64 = tok.parse().expect("counted as numeric");
        if !v.is_finite() {
            return Err(format!("non-finite coordinate {tok:?}"));
        }
        *slot = v;
    }
    let rest = &tokens[8..];
    let (label_tokens, difficulty) = match rest.split_last() {
        None => return Err("missing category".into()),
        Some((last, init)) if !init.is_empty() => match last.parse::<u32>() {
            Ok(d) => (init, Some(d)),
            Err(_) => (rest, None),
        },
        Some(_) => (rest, None),
    };
    let category = normalize_label(&label_tokens.join(" "));
    if category.is_empty() {
        return Err("missing category".into());
    }
    let vertices = coords.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
    let footprint = Polygon::new(vertices).map_err(|e| e.to_string())?;
    if !footprint.is_simple() {
        return Err("self-intersecting footprint".into());
    }
    Ok(ObjectInstance { category, footprint, difficulty })
}

/// Parses one annotation file. Bad lines are returned as errors next to the
/// image built from the good ones.
pub fn parse_dota(text: &str, meta: ImageMeta) -> DotaParse {
    let mut meta = meta;
    let mut instances = Vec::new();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim().to_ascii_lowercase();
            if HEADER_KEYS.contains(&key.as_str()) {
                if let Err(message) = parse_header(&key, value, &mut meta) {
                    errors.push(LineError { line: idx + 1, message });
                }
                continue;
            }
        }
        match parse_object(line) {
            Ok(inst) => instances.push(inst),
            Err(message) => errors.push(LineError { line: idx + 1, message }),
        }
    }
    DotaParse {
        image: meta.into_image(instances),
        errors,
    }
}

/// Writes an image back out in the same format. Coordinates use the shortest
/// round-trip float rendering, so parsing the output reproduces them exactly.
pub fn serialize_dota(image: &AnnotatedImage) -> String {
    let mut out = String::new();
    if !image.source.is_empty() {
        let _ = writeln!(out, "imagesource:{}", image.source);
    }
    if let Some(g) = image.gsd {
        let _ = writeln!(out, "gsd:{g}");
    }
    if image.modality != Modality::Unknown {
        let _ = writeln!(out, "modality:{}", image.modality);
    }
    for inst in &image.instances {
        for p in inst.footprint.vertices() {
            let _ = write!(out, "{} {} ", p.x, p.y);
        }
        out.push_str(&inst.category);
        if let Some(d) = inst.difficulty {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    out
}
