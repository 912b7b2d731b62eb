//! Spatial computations: polygon metrics, grid regions, compass directions,
//! box manipulation and physical dimensions of oriented boxes.
//!
//! Everything here is pure. Types are generic over [`Scalar`](crate::Scalar);
//! the crate root exports `f64` aliases.

mod bbox;
mod clip;
mod direction;
mod polygon;
mod region;

pub use bbox::{enlarge_box, BBox, DEFAULT_ENLARGE_FACTOR};
pub use clip::{ciou, intersection_area, iou, vertex_complexity};
pub use direction::{relative_direction, DirectionName};
pub use polygon::{obb_dims, polygon_area, Point, Polygon};
pub use region::{nine_region, RegionName};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("image has zero area")]
    ZeroAreaImage,
    #[error("subject and reference are co-located")]
    CoLocated,
    #[error("enlargement factor must be >= 1")]
    FactorBelowOne,
    #[error("expected a 4-vertex footprint, got {0} vertices")]
    NotQuadrilateral(usize),
    #[error("ground sample distance must be positive")]
    NonPositiveGsd,
}
