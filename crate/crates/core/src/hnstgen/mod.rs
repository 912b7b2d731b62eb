//! Honest-instruction dataset: presence, color, absolute and relative
//! position questions, with deceptive variants about objects that are not
//! in the image or colors that a panchromatic image cannot show.

mod audit;
mod build;
mod config;
mod negative;
pub mod phrasing;
mod tasks;

pub use audit::{audit_hnstd, AuditReport};
pub use build::{
    build_hnstd, format_shortfalls, referenced_transcripts, write_hnstd, GenerationReport, HnstDataset, HnstError, HnstSplit, Shortfall, Stream,
    StreamReport,
};
pub use config::{HnstConfig, TaskTargets};
pub use negative::{select_absent_category, NegativeContext, SkipReason, Strategy, StrategySchedule};
pub use tasks::{gen_abs_position, gen_color, gen_presence, gen_rel_position, relative_pair, Captioning, ColorExclusion, GenFailure, GenResult, GENERATOR};
