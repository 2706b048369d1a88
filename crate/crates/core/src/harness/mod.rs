//! Dataset ingestion, synthetic corpora, batch evaluation and report output.

pub mod batch;
pub mod ingest;
pub mod report;
pub mod synth;

pub use batch::{run_batch, BatchOptions, FullProvider, RunReport, Variant};
pub use ingest::{ingest, ingest_methods, DatasetRecord, Ingested, Layout, Manifest};
pub use report::{emit_report, Formats};
pub use synth::{generate_synthetic, Corruption, ShapeKind, SyntheticSpec};
