#![allow(dead_code)]

use std::path::PathBuf;

use aforce_sim::ExperimentConfig;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).expect("shipped config loads")
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
