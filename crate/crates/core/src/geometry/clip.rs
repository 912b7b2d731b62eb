//! Polygon intersection areas.
//!
//! Convex pairs are clipped directly with Sutherland–Hodgman. For any other
//! pair of simple polygons the intersection area is computed from signed fan
//! triangulations: with apex `v0`, the indicator of a counter-clockwise
//! simple polygon equals
//! the sum of its fan triangles' indicators weighted by their orientation sign
//! (almost everywhere), so
//!
//! `|A ∩ B| = Σ_i Σ_j sign(Tᵢ)·sign(Uⱼ)·|Tᵢ ∩ Uⱼ|`
//!
//! where every term is a convex/convex clip. The result is exact for exact
//! scalars and needs no special handling of degenerate configurations.

use super::{Point, Polygon};
use crate::Scalar;

fn ccw<T: Scalar>(p: &Polygon<T>) -> Polygon<T> {
    if p.signed_area2() < T::zero() {
        p.reversed()
    } else {
        p.clone()
    }
}

/// Clips `subject` against the convex counter-clockwise ring `clip`.
fn clip_convex<T: Scalar>(subject: &[Point<T>], clip: &[Point<T>]) -> Vec<Point<T>> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let edge = clip[(i + 1) % n].sub(a);
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let p = input[j];
            let q = input[(j + 1) % m];
            let dp = edge.cross(p.sub(a));
            let dq = edge.cross(q.sub(a));
            let p_in = dp >= T::zero();
            let q_in = dq >= T::zero();
            if p_in {
                output.push(p);
            }
            if p_in != q_in {
                let t = dp / (dp - dq);
                output.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    output
}

fn ring_area<T: Scalar>(ring: &[Point<T>]) -> T {
    if ring.len() < 3 {
        return T::zero();
    }
    let n = ring.len();
    let twice = (0..n).fold(T::zero(), |acc, i| acc + ring[i].cross(ring[(i + 1) % n]));
    twice.abs() / T::two()
}

fn convex_intersection_area<T: Scalar>(a: &Polygon<T>, b: &Polygon<T>) -> T {
    let a = ccw(a);
    let b = ccw(b);
    ring_area(&clip_convex(a.vertices(), b.vertices()))
}

/// Fan triangles of a ring as (counter-clockwise triangle, orientation sign).
fn signed_fan<T: Scalar>(p: &Polygon<T>) -> Vec<([Point<T>; 3], bool)> {
    let v = p.vertices();
    let apex = v[0];
    (1..v.len() - 1)
        .filter_map(|i| {
            let (b, c) = (v[i], v[i + 1]);
            let s = b.sub(apex).cross(c.sub(apex));
            if s > T::zero() {
                Some(([apex, b, c], true))
            } else if s < T::zero() {
                Some(([apex, c, b], false))
            } else {
                None
            }
        })
        .collect()
}

fn fan_intersection_area<T: Scalar>(a: &Polygon<T>, b: &Polygon<T>) -> T {
    let fa = signed_fan(&ccw(a));
    let fb = signed_fan(&ccw(b));
    let mut total = T::zero();
    for (ta, sa) in &fa {
        for (tb, sb) in &fb {
            let area = ring_area(&clip_convex(ta, tb));
            if sa == sb {
                total = total + area;
            } else {
                total = total - area;
            }
        }
    }
    total.max_of(T::zero())
}

/// Area of `a ∩ b` for simple polygons.
pub fn intersection_area<T: Scalar>(a: &Polygon<T>, b: &Polygon<T>) -> T {
    if a.is_convex() && b.is_convex() {
        convex_intersection_area(a, b)
    } else {
        fan_intersection_area(a, b)
    }
}

/// Intersection over union; 0 for disjoint or doubly degenerate inputs.
pub fn iou<T: Scalar>(a: &Polygon<T>, b: &Polygon<T>) -> T {
    // clipping a ring against itself can lose an ulp
    if a.vertices() == b.vertices() && a.area() > T::zero() {
        return T::one();
    }
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).clamp_to(T::zero(), T::one())
}

/// Vertex count after dropping consecutive duplicates, wrap-around included.
pub fn vertex_complexity<T: Scalar>(p: &Polygon<T>) -> usize {
    let v = p.vertices();
    let mut kept: Vec<Point<T>> = Vec::with_capacity(v.len());
    for &q in v {
        if kept.last() != Some(&q) {
            kept.push(q);
        }
    }
    while kept.len() > 1 && kept.first() == kept.last() {
        kept.pop();
    }
    kept.len()
}

/// Complexity-aware IoU: IoU scaled by `1 - |N_pred - N_gold| / (N_pred + N_gold)`.
pub fn ciou<T: Scalar>(pred: &Polygon<T>, gold: &Polygon<T>) -> T {
    let base = iou(pred, gold);
    let np = vertex_complexity(pred);
    let ng = vertex_complexity(gold);
    let diff = T::from_usize_exact(np.abs_diff(ng));
    let sum = T::from_usize_exact(np + ng);
    base * (T::one() - diff / sum)
}
