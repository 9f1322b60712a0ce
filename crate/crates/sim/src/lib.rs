//! Benchmark harness around `aforce-core`: configs, tasks, policies and a
//! deterministic episode runner with CSV/JSON output.

pub mod config;
pub mod env;
pub mod experiment;
pub mod output;
pub mod policy;
pub mod rng;
pub mod runner;
pub mod space;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{run_episode, EpisodeRecord, Recording};
pub use space::SpaceSpec;
