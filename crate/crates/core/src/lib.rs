//! ATC voice-data pipeline: segment records, text normalization, lattice
//! biasing, language and entity scoring, metrics, data selection and the
//! block-graph job runner.

pub mod boost;
pub mod eld;
pub mod lattice;
pub mod metrics;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod quality;
pub mod signal;
pub mod synth;
pub mod textnorm;
pub mod understand;
