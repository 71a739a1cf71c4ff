//! Library side of the `fairkm` binary: CSV ingestion, run execution, report
//! emission, and the synthetic-data generator. Kept as a library so the
//! integration tests can drive everything without spawning processes.

pub mod error;
pub mod ingest;
pub mod report;
pub mod run;
pub mod synth;

pub use error::CliError;
pub use ingest::{ingest_csv, Ingested};
pub use run::{execute, parse_k_spec, Algo, RunSpec};
pub use synth::{gen_synthetic, SynthParams};
