//! Construction and evaluation of a figure-captioning corpus that pairs
//! SciCap figures with paper metadata and caption-masked in-text mentions.
//!
//! The pipeline runs `ingest` → `align` (caption masking) → `textprep`
//! (windows, packing, normalization) → `imageprep` → `jsonl`; `metrics` and
//! `eval` score prediction files against the result.

pub mod align;
pub mod error;
pub mod eval;
pub mod imageprep;
pub mod ingest;
pub mod jsonl;
pub mod metrics;
pub mod pipeline;
pub mod record;
pub mod textprep;

pub use error::{Error, Result};
pub use record::{CaptionVariant, FigureId, FigureRecord, PaperMetadata, TrainingExample};
