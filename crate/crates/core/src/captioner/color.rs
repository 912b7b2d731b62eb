//! Double-query color extraction: two differently worded prompts on the
//! same enlarged crop, accepted only when both answers agree.

use std::collections::BTreeMap;
use std::io::Cursor;

use serde::{Deserialize, Serialize};

use super::backend::{ImagePayload, COLOR_LEXICON};
use super::client::{ClientError, LlmClient};
use crate::geometry::BBox;

/// Lowercase, strip punctuation, return the first lexicon color.
/// "grey" is folded into "gray".
pub fn normalize_color(raw: &str) -> Option<String> {
    let cleaned: String = raw
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c.to_ascii_lowercase() } else { ' ' })
        .collect();
    cleaned.split_whitespace().find_map(|tok| {
        let tok = if tok == "grey" { "gray" } else { tok };
        COLOR_LEXICON.contains(&tok).then(|| tok.to_string())
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorOutcome {
    Accepted {
        color: String,
        transcripts: [String; 2],
    },
    Inconsistent {
        first: Option<String>,
        second: Option<String>,
        transcripts: [String; 2],
    },
}

impl ColorOutcome {
    pub fn accepted(&self) -> Option<&str> {
        match self {
            ColorOutcome::Accepted { color, .. } => Some(color),
            ColorOutcome::Inconsistent { .. } => None,
        }
    }

    pub fn transcripts(&self) -> &[String; 2] {
        match self {
            ColorOutcome::Accepted { transcripts, .. } | ColorOutcome::Inconsistent { transcripts, .. } => transcripts,
        }
    }
}

/// Crops encoded image bytes to `region`, re-encoded as PNG. `None` when the
/// bytes are absent or not a decodable image.
pub fn crop_image(bytes: &[u8], region: &BBox<f64>) -> Option<Vec<u8>> {
    if bytes.is_empty() {
        return None;
    }
    let img = image::load_from_memory(bytes).ok()?;
    let x = region.x_min.max(0.0).floor() as u32;
    let y = region.y_min.max(0.0).floor() as u32;
    let w = (region.x_max.ceil() as u32).min(img.width()).saturating_sub(x);
    let h = (region.y_max.ceil() as u32).min(img.height()).saturating_sub(y);
    if w == 0 || h == 0 {
        return None;
    }
    let mut out = Vec::new();
    img.crop_imm(x, y, w, h).write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png).ok()?;
    Some(out)
}

/// Queries the object color twice on the crop `region` of `image`.
pub fn extract_color(client: &LlmClient, image: &ImagePayload, region: BBox<f64>, category: &str) -> Result<ColorOutcome, ClientError> {
    let payload = ImagePayload {
        id: image.id.clone(),
        bytes: crop_image(&image.bytes, &region).unwrap_or_else(|| image.bytes.clone()),
        crop: Some(region),
    };
    let bindings = BTreeMap::from([("category", category.to_string())]);
    let a = client.call_named("color_a", &bindings, Some(&payload))?;
    let b = client.call_named("color_b", &bindings, Some(&payload))?;
    let first = normalize_color(&a.response);
    let second = normalize_color(&b.response);
    let transcripts = [a.request_id, b.request_id];
    Ok(match (first, second) {
        (Some(x), Some(y)) if x == y => ColorOutcome::Accepted { color: x, transcripts },
        (first, second) => ColorOutcome::Inconsistent { first, second, transcripts },
    })
}
