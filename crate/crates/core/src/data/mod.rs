//! Synthetic data generators, CSV ingestion and a dataset cache.

mod cache;
mod generate;
mod ingest;

pub use cache::{read_dataset_csv, write_dataset_csv, TabularRow};
pub use generate::{generate, ExampleId, GeneratedData, GeneratorSpec};
pub use ingest::{ingest_csv, Ingested, LabelRule, TabularSource};
