use serde::{Deserialize, Serialize};

use super::{BBox, GeometryError};
use crate::Scalar;

/// One cell of the 3×3 grid laid over an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionName {
    #[serde(rename = "top left corner")]
    TopLeftCorner,
    #[serde(rename = "top side")]
    TopSide,
    #[serde(rename = "top right corner")]
    TopRightCorner,
    #[serde(rename = "left side")]
    LeftSide,
    #[serde(rename = "center")]
    Center,
    #[serde(rename = "right side")]
    RightSide,
    #[serde(rename = "bottom left corner")]
    BottomLeftCorner,
    #[serde(rename = "bottom side")]
    BottomSide,
    #[serde(rename = "bottom right corner")]
    BottomRightCorner,
}

impl RegionName {
    /// Row-major order, top-left first.
    pub const ALL: [RegionName; 9] = [
        RegionName::TopLeftCorner,
        RegionName::TopSide,
        RegionName::TopRightCorner,
        RegionName::LeftSide,
        RegionName::Center,
        RegionName::RightSide,
        RegionName::BottomLeftCorner,
        RegionName::BottomSide,
        RegionName::BottomRightCorner,
    ];

    pub fn from_cell(row: usize, col: usize) -> Self {
        Self::ALL[row * 3 + col]
    }

    pub fn cell(self) -> (usize, usize) {
        let i = Self::ALL.iter().position(|&r| r == self).expect("listed");
        (i / 3, i % 3)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionName::TopLeftCorner => "top left corner",
            RegionName::TopSide => "top side",
            RegionName::TopRightCorner => "top right corner",
            RegionName::LeftSide => "left side",
            RegionName::Center => "center",
            RegionName::RightSide => "right side",
            RegionName::BottomLeftCorner => "bottom left corner",
            RegionName::BottomSide => "bottom side",
            RegionName::BottomRightCorner => "bottom right corner",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl std::fmt::Display for RegionName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index of the third of `[0, extent]` holding `v`, half-open with the last
/// third closed. Compares `3v` against multiples of `extent`, so it is exact.
fn third<T: Scalar>(v: T, extent: T) -> usize {
    let three_v = v * T::from_usize_exact(3);
    if three_v < extent {
        0
    } else if three_v < extent * T::two() {
        1
    } else {
        2
    }
}

/// Grid cell holding the centroid of `instance_box`.
pub fn nine_region<T: Scalar>(instance_box: &BBox<T>, width: T, height: T) -> Result<RegionName, GeometryError> {
    if !(width > T::zero()) || !(height > T::zero()) {
        return Err(GeometryError::ZeroAreaImage);
    }
    let c = instance_box.centroid();
    Ok(RegionName::from_cell(third(c.y, height), third(c.x, width)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64) -> BBox<f64> {
        BBox::new(x, y, x, y)
    }

    #[test]
    fn named_examples() {
        assert_eq!(nine_region(&at(150.0, 150.0), 300.0, 300.0).unwrap(), RegionName::Center);
        assert_eq!(nine_region(&at(10.0, 10.0), 300.0, 300.0).unwrap(), RegionName::TopLeftCorner);
        assert_eq!(nine_region(&at(290.0, 150.0), 300.0, 300.0).unwrap(), RegionName::RightSide);
    }

    #[test]
    fn boundaries_go_to_the_higher_cell_and_last_cell_is_closed() {
        assert_eq!(nine_region(&at(100.0, 0.0), 300.0, 300.0).unwrap(), RegionName::TopSide);
        assert_eq!(nine_region(&at(200.0, 200.0), 300.0, 300.0).unwrap(), RegionName::BottomRightCorner);
        assert_eq!(nine_region(&at(300.0, 300.0), 300.0, 300.0).unwrap(), RegionName::BottomRightCorner);
        assert_eq!(nine_region(&at(0.0, 299.9), 300.0, 300.0).unwrap(), RegionName::BottomLeftCorner);
    }

    #[test]
    fn zero_area_image() {
        assert_eq!(nine_region(&at(0.0, 0.0), 0.0, 10.0), Err(GeometryError::ZeroAreaImage));
    }

    #[test]
    fn names_round_trip() {
        for r in RegionName::ALL {
            assert_eq!(RegionName::parse(r.as_str()), Some(r));
            let (row, col) = r.cell();
            assert_eq!(RegionName::from_cell(row, col), r);
        }
    }
}
