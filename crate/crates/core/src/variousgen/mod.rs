//! Task suite for image attributes, counting, measurement, building
//! vectorizing and multi-label classification, plus passthrough conversion
//! of existing question-answering, grounding and scene datasets.

mod build;
mod convert;
pub mod coords;
mod tasks;

pub use build::{
    build_various, format_task_shortfalls, write_various, TaskReport, VariousConfig, VariousDataset, VariousError, VariousReport, VariousSources,
    VariousTargets, VARIOUS_TASKS,
};
pub use convert::{
    convert_grounding, convert_vqa, duplication_plan, gen_scene, read_grounding, read_scene, read_vqa, GroundingRecord, SceneChoices, SceneDataset,
    SceneImage, VqaRecord,
};
pub use tasks::{
    gen_counting, gen_geometric, gen_modality, gen_multilabel, gen_resolution, gen_vectorize, render_dims, render_labels, render_resolution, GENERATOR,
};
