//! Pipeline orchestration behind the `densefp` binary: synthesize prints,
//! extract descriptors, enroll, search and evaluate.

mod commands;
mod config;
mod pipeline;
mod store;

pub use commands::{cmd_enroll, cmd_eval, cmd_extract, cmd_search, cmd_synth, synth_id, Outcome};
pub use config::{Enhancement, PoseSource, ProtocolSpec, RunConfig, VariantSpec};
pub use pipeline::{baseline_pose, describe_at_pose, prepare, LoadedEnhancement, MIN_INPUT_SIDE};
pub use store::{decode_store, encode_store, read_store, write_store, STORE_MAGIC};
