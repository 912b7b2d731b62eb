use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};
use crate::Scalar;

/// Compass octant of a subject relative to a reference, screen-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DirectionName {
    #[serde(rename = "above")]
    Above,
    #[serde(rename = "top right corner")]
    TopRightCorner,
    #[serde(rename = "right")]
    Right,
    #[serde(rename = "bottom right corner")]
    BottomRightCorner,
    #[serde(rename = "below")]
    Below,
    #[serde(rename = "bottom left corner")]
    BottomLeftCorner,
    #[serde(rename = "left")]
    Left,
    #[serde(rename = "top left corner")]
    TopLeftCorner,
}

impl DirectionName {
    /// Clockwise from "above".
    pub const ALL: [DirectionName; 8] = [
        DirectionName::Above,
        DirectionName::TopRightCorner,
        DirectionName::Right,
        DirectionName::BottomRightCorner,
        DirectionName::Below,
        DirectionName::BottomLeftCorner,
        DirectionName::Left,
        DirectionName::TopLeftCorner,
    ];

    pub fn opposite(self) -> Self {
        let i = Self::ALL.iter().position(|&d| d == self).expect("listed");
        Self::ALL[(i + 4) % 8]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionName::Above => "above",
            DirectionName::TopRightCorner => "top right corner",
            DirectionName::Right => "right",
            DirectionName::BottomRightCorner => "bottom right corner",
            DirectionName::Below => "below",
            DirectionName::BottomLeftCorner => "bottom left corner",
            DirectionName::Left => "left",
            DirectionName::TopLeftCorner => "top left corner",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl std::fmt::Display for DirectionName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Octant for an offset in the upper half-plane (`dy > 0`, or `dy == 0` and
/// `dx > 0`), with y pointing up. Each 45° sector includes its clockwise
/// boundary and excludes its counter-clockwise one.
fn upper_octant<T: Float>(dx: T, dy: T, t: T) -> DirectionName {
    if dx > T::zero() {
        if dy < t * dx {
            DirectionName::Right
        } else if dx > t * dy {
            DirectionName::TopRightCorner
        } else {
            DirectionName::Above
        }
    } else {
        let ax = -dx;
        if ax < t * dy {
            DirectionName::Above
        } else if dy > t * ax {
            DirectionName::TopLeftCorner
        } else {
            DirectionName::Left
        }
    }
}

/// Where `subject` lies relative to `reference`, in screen coordinates
/// (y grows downward).
///
/// The lower half-plane is resolved by reflecting through the origin and
/// taking the opposite octant, which makes `dir(a, b) == dir(b, a).opposite()`
/// hold exactly, boundaries included.
pub fn relative_direction<T: Scalar + Float>(
    subject: Point<T>,
    reference: Point<T>,
) -> Result<DirectionName, GeometryError> {
    let dx = subject.x - reference.x;
    let dy = reference.y - subject.y;
    if dx == T::zero() && dy == T::zero() {
        return Err(GeometryError::CoLocated);
    }
    let t = T::from(std::f64::consts::FRAC_PI_8.tan()).expect("float constant");
    let upper = dy > T::zero() || (dy == T::zero() && dx > T::zero());
    Ok(if upper {
        upper_octant(dx, dy, t)
    } else {
        upper_octant(-dx, -dy, t).opposite()
    })
}
