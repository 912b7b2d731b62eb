use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub(crate) fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub(crate) fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }
}

/// A closed ring of at least three vertices. The closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon<T> {
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        Ok(Self { vertices })
    }

    pub fn from_coords(coords: &[(T, T)]) -> Result<Self, GeometryError> {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub(crate) fn edges(&self) -> impl Iterator<Item = (Point<T>, Point<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Twice the signed area; positive for counter-clockwise rings in a
    /// y-up frame.
    pub fn signed_area2(&self) -> T {
        self.edges().fold(T::zero(), |acc, (a, b)| acc + a.cross(b))
    }

    pub fn area(&self) -> T {
        self.signed_area2().abs() / T::two()
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        let mut sign = 0i8;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let turn = b.sub(a).cross(c.sub(b));
            let s = if turn > T::zero() {
                1
            } else if turn < T::zero() {
                -1
            } else {
                0
            };
            if s != 0 {
                if sign != 0 && s != sign {
                    return false;
                }
                sign = s;
            }
        }
        true
    }

    /// True when no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_touch(edges[i], edges[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Axis-aligned bounds as (min, max) corners.
    pub fn bounds(&self) -> (Point<T>, Point<T>) {
        let first = self.vertices[0];
        self.vertices.iter().skip(1).fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min_of(p.x), lo.y.min_of(p.y)),
                Point::new(hi.x.max_of(p.x), hi.y.max_of(p.y)),
            )
        })
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(Point<T>) -> Point<U>) -> Polygon<U> {
        Polygon {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
        }
    }
}

fn orient<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> i8 {
    let v = b.sub(a).cross(c.sub(a));
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

fn on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    p.x >= a.x.min_of(b.x) && p.x <= a.x.max_of(b.x) && p.y >= a.y.min_of(b.y) && p.y <= a.y.max_of(b.y)
}

fn segments_touch<T: Scalar>(s: (Point<T>, Point<T>), t: (Point<T>, Point<T>)) -> bool {
    let (p1, p2) = s;
    let (q1, q2) = t;
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}

/// Shoelace area of a vertex ring.
pub fn polygon_area<T: Scalar>(footprint: &[Point<T>]) -> Result<T, GeometryError> {
    if footprint.len() < 3 {
        return Err(GeometryError::TooFewVertices(footprint.len()));
    }
    let n = footprint.len();
    let twice = (0..n).fold(T::zero(), |acc, i| acc + footprint[i].cross(footprint[(i + 1) % n]));
    Ok(twice.abs() / T::two())
}

/// Physical (length, width) in meters of a rotated 4-vertex box.
///
/// Opposite edges are averaged so that slightly skewed annotations still
/// yield one value per side; the longer side is reported as length.
pub fn obb_dims<T: Scalar + Float>(footprint: &[Point<T>], gsd: T) -> Result<(T, T), GeometryError> {
    if footprint.len() != 4 {
        return Err(GeometryError::NotQuadrilateral(footprint.len()));
    }
    if !(gsd > T::zero()) {
        return Err(GeometryError::NonPositiveGsd);
    }
    let edge = |i: usize| {
        let d = footprint[(i + 1) % 4].sub(footprint[i]);
        d.x.hypot(d.y)
    };
    let two = <T as Scalar>::two();
    let a = (edge(0) + edge(2)) / two;
    let b = (edge(1) + edge(3)) / two;
    let (long, short) = if a >= b { (a, b) } else { (b, a) };
    Ok((long * gsd, short * gsd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn square() -> Vec<Point<f64>> {
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)]
    }

    #[test]
    fn unit_square_area() {
        assert_eq!(polygon_area(&square()).unwrap(), 1.0);
    }

    #[test]
    fn clockwise_square_area() {
        let mut cw = square();
        cw.reverse();
        assert_eq!(polygon_area(&cw).unwrap(), 1.0);
    }

    #[test]
    fn triangle_area() {
        let tri = [Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(0.0, 3.0)];
        assert_eq!(polygon_area(&tri).unwrap(), 6.0);
    }

    #[test]
    fn rational_area_is_exact() {
        let r = |n| Rational::from_integer(n);
        let tri = [Point::new(r(0), r(0)), Point::new(r(1), r(0)), Point::new(r(0), r(1))];
        assert_eq!(polygon_area(&tri).unwrap(), Rational::new(1, 2));
    }

    #[test]
    fn too_few_vertices() {
        let two = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert_eq!(polygon_area(&two), Err(GeometryError::TooFewVertices(2)));
        assert!(Polygon::new(two.to_vec()).is_err());
    }

    #[test]
    fn convexity_and_simplicity() {
        let sq = Polygon::new(square()).unwrap();
        assert!(sq.is_convex());
        assert!(sq.is_simple());
        let l_shape = Polygon::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]).unwrap();
        assert!(!l_shape.is_convex());
        assert!(l_shape.is_simple());
        let bowtie = Polygon::from_coords(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn obb_axis_aligned() {
        let b = [Point::new(0.0, 0.0), Point::new(100.0, 0.0), Point::new(100.0, 40.0), Point::new(0.0, 40.0)];
        assert_eq!(obb_dims(&b, 0.5).unwrap(), (50.0, 20.0));
        let s = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(10.0, 10.0), Point::new(0.0, 10.0)];
        assert_eq!(obb_dims(&s, 1.0).unwrap(), (10.0, 10.0));
    }

    #[test]
    fn obb_rotated_37_degrees() {
        let (s, c) = 37f64.to_radians().sin_cos();
        let rot = |x: f64, y: f64| Point::new(500.0 + x * c - y * s, 500.0 + x * s + y * c);
        let b = [rot(-50.0, -20.0), rot(50.0, -20.0), rot(50.0, 20.0), rot(-50.0, 20.0)];
        let (l, w) = obb_dims(&b, 0.5).unwrap();
        assert!((l - 50.0).abs() / 50.0 < 1e-6);
        assert!((w - 20.0).abs() / 20.0 < 1e-6);
    }

    #[test]
    fn obb_errors() {
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(obb_dims(&tri, 1.0), Err(GeometryError::NotQuadrilateral(3)));
        let s = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        assert_eq!(obb_dims(&s, 0.0), Err(GeometryError::NonPositiveGsd));
    }
}
