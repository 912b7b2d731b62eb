use serde::{Deserialize, Serialize};

use super::{GeometryError, Point, Polygon};
use crate::Scalar;

/// Factor applied to object boxes before cropping for color queries.
pub const DEFAULT_ENLARGE_FACTOR: f64 = 1.2;

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

impl<T: Scalar> BBox<T> {
    /// Builds a box from two corners in any order.
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self {
            x_min: x0.min_of(x1),
            y_min: y0.min_of(y1),
            x_max: x0.max_of(x1),
            y_max: y0.max_of(y1),
        }
    }

    pub fn from_points(points: &[Point<T>]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Self::new(first.x, first.y, first.x, first.y);
        for p in &points[1..] {
            b.x_min = b.x_min.min_of(p.x);
            b.y_min = b.y_min.min_of(p.y);
            b.x_max = b.x_max.max_of(p.x);
            b.y_max = b.y_max.max_of(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> Point<T> {
        Point::new((self.x_min + self.x_max) / T::two(), (self.y_min + self.y_max) / T::two())
    }

    pub fn clamp(&self, width: T, height: T) -> Self {
        Self {
            x_min: self.x_min.clamp_to(T::zero(), width),
            y_min: self.y_min.clamp_to(T::zero(), height),
            x_max: self.x_max.clamp_to(T::zero(), width),
            y_max: self.y_max.clamp_to(T::zero(), height),
        }
    }

    /// Closed-form IoU for two axis-aligned boxes.
    pub fn iou(&self, other: &Self) -> T {
        let ix = (self.x_max.min_of(other.x_max) - self.x_min.max_of(other.x_min)).max_of(T::zero());
        let iy = (self.y_max.min_of(other.y_max) - self.y_min.max_of(other.y_min)).max_of(T::zero());
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= T::zero() {
            T::zero()
        } else {
            inter / union
        }
    }

    /// Counter-clockwise ring (in a y-up frame) of the four corners.
    pub fn to_polygon(&self) -> Polygon<T> {
        Polygon::new(vec![
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ])
        .expect("four corners")
    }
}

impl<T: Scalar> From<BBox<T>> for Polygon<T> {
    fn from(b: BBox<T>) -> Self {
        b.to_polygon()
    }
}

/// Scales a box about its center and clamps it to the image.
pub fn enlarge_box<T: Scalar>(b: &BBox<T>, factor: T, width: T, height: T) -> Result<BBox<T>, GeometryError> {
    if factor < T::one() {
        return Err(GeometryError::FactorBelowOne);
    }
    let c = b.centroid();
    let half_w = b.width() * factor / T::two();
    let half_h = b.height() * factor / T::two();
    Ok(BBox::new(c.x - half_w, c.y - half_h, c.x + half_w, c.y + half_h).clamp(width, height))
}
