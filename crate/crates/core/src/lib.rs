pub mod captioner;
pub mod evalharness;
pub mod geometry;
pub mod hnstgen;
pub mod ingest;
pub mod qareview;
pub mod io;
pub mod sample;
mod scalar;
pub mod seeding;
pub mod synth;
pub mod variousgen;

pub use scalar::{Rational, Scalar};

pub type Point = geometry::Point<f64>;
pub type Polygon = geometry::Polygon<f64>;
pub type BBox = geometry::BBox<f64>;
