//! File formats, parallel rollouts, time-space diagrams and the
//! `railsched` command-line front end for `railsched-core`.

pub mod checkpoint;
pub mod formats;
pub mod inputs;
pub mod rollout;
pub mod runs;
pub mod svg;
pub mod training;

pub use railsched_core as core;
