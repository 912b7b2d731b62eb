//! Annotation sources and the normalized corpus model.

mod coco;
mod cooccur;
mod dota;
mod manifest;
mod model;

pub use coco::{
    parse_coco_polygons, parse_coco_str, CocoAnnotation, CocoCategory, CocoDefaults, CocoDocument, CocoError, CocoImage, CocoParse, Rejection, Segmentation,
};
pub use cooccur::{build_cooccurrence, build_cooccurrence_with_vocabulary, CoOccurrenceMatrix};
pub use dota::{parse_dota, serialize_dota, DotaParse, LineError};
pub use manifest::{
    load_manifest, parse_manifest, resolve_corpus, ConverterDescriptor, ConverterFormat, DatasetManifest, ManifestError,
    ResolvedCorpus, SourceDescriptor, SourceFormat, SourceReport, Split,
};
pub use model::{normalize_label, AnnotatedImage, ImageMeta, Modality, ObjectInstance};
