//! IO, experiment harness and CLI support for the chacha online AutoML
//! engine: VW/CSV ingestion, synthetic streams, run traces, baselines and
//! scoring.

pub mod harness;
pub mod ingest;
pub mod synth;
pub mod trace;
