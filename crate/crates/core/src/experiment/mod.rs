//! End-to-end experiments: data, reference posterior, sharded runs for each
//! shard count, combination and L2 evaluation.

mod config;
mod output;
mod run;

pub use config::{ExperimentConfig, SCHEMA_VERSION};
pub use output::{emit_density_grids, write_outputs, write_table_csv};
pub use run::{
    run_experiment, CellResult, CellStatus, ExperimentRun, KArtifacts, Reference, ResultTable, RunMetadata, ShardSeeds,
};
