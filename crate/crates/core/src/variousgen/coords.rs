//! Integer coordinate frame shared by grounding and vectorizing answers.
//! A pixel coordinate `v` in an image of extent `e` maps to
//! `floor(v * scale / e)`, clamped to `0..scale`.

use crate::geometry::{BBox, Point, Polygon};

pub fn scale_coord(v: f64, extent: u32, scale: u32) -> u32 {
    let s = (v * f64::from(scale) / f64::from(extent)).floor();
    s.clamp(0.0, f64::from(scale.saturating_sub(1))) as u32
}

/// Pixel coordinate at the lower edge of a scaled cell.
pub fn unscale_coord(v: f64, extent: u32, scale: u32) -> f64 {
    v * f64::from(extent) / f64::from(scale)
}

pub fn render_box(b: &BBox<f64>, width: u32, height: u32, scale: u32) -> String {
    format!(
        "[{},{},{},{}]",
        scale_coord(b.x_min, width, scale),
        scale_coord(b.y_min, height, scale),
        scale_coord(b.x_max, width, scale),
        scale_coord(b.y_max, height, scale)
    )
}

/// First `[x1,y1,x2,y2]` group in `text`, spaces allowed.
pub fn parse_box(text: &str) -> Option<[f64; 4]> {
    let start = text.find('[')?;
    let end = start + text[start..].find(']')?;
    let nums: Vec<f64> = text[start + 1..end].split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    <[f64; 4]>::try_from(nums).ok()
}

pub type ScaledRing = Vec<(u32, u32)>;

pub fn scale_polygon(p: &Polygon<f64>, width: u32, height: u32, scale: u32) -> ScaledRing {
    p.vertices().iter().map(|v| (scale_coord(v.x, width, scale), scale_coord(v.y, height, scale))).collect()
}

/// The vertex with the smallest (y, x): buildings are listed in this order.
fn top_left(ring: &ScaledRing) -> (u32, u32) {
    ring.iter().map(|&(x, y)| (y, x)).min().unwrap_or((u32::MAX, u32::MAX))
}

/// `{(x1,y1),(x2,y2),...}` per building, buildings separated by `, ` and
/// sorted by their top-left-most vertex.
pub fn render_rings(rings: &[ScaledRing]) -> String {
    let mut sorted: Vec<&ScaledRing> = rings.iter().collect();
    sorted.sort_by_key(|r| (top_left(r), (*r).clone()));
    sorted
        .iter()
        .map(|r| format!("{{{}}}", r.iter().map(|(x, y)| format!("({x},{y})")).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn sort_rings(rings: &mut [ScaledRing]) {
    rings.sort_by_key(|r| (top_left(r), r.clone()));
}

/// Every `{...}` group of `(x,y)` pairs. Groups that do not parse are
/// returned as `Err` so the scorer can tally them.
pub fn parse_rings(text: &str) -> Result<Vec<Vec<(f64, f64)>>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}').ok_or("unterminated vertex list")? + open;
        let body = &rest[open + 1..close];
        let mut ring = Vec::new();
        let mut b = body;
        while let Some(p) = b.find('(') {
            let q = b[p..].find(')').ok_or("unterminated vertex")? + p;
            let (x, y) = b[p + 1..q].split_once(',').ok_or("vertex without comma")?;
            let x: f64 = x.trim().parse().map_err(|_| format!("bad coordinate {x:?}"))?;
            let y: f64 = y.trim().parse().map_err(|_| format!("bad coordinate {y:?}"))?;
            ring.push((x, y));
            b = &b[q + 1..];
        }
        out.push(ring);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

pub fn ring_to_polygon(ring: &[(f64, f64)]) -> Option<Polygon<f64>> {
    Polygon::new(ring.iter().map(|&(x, y)| Point::new(x, y)).collect()).ok()
}
