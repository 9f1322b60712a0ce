//! Artifact files: episode CSVs, summary JSON, comparison tables, learning
//! curves, the echoed config and a manifest with SHA-256 digests.
//!
//! Every file is a pure function of its inputs; nothing time-dependent is
//! written, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::env::OBSERVATION_COLUMNS;
use crate::policy::{CemResult, GenerationStats};
use crate::runner::{safety_stats, EpisodeRecord, SafetyStats, Totals};

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

pub type Result<T> = std::result::Result<T, OutputError>;

const AXES: [&str; 6] = ["x", "y", "z", "rx", "ry", "rz"];

fn axis_columns(prefix: &str, linear: &str, angular: &str) -> Vec<String> {
    AXES.iter()
        .enumerate()
        .map(|(i, a)| format!("{prefix}_{a}_{}", if i < 3 { linear } else { angular }))
        .collect()
}

/// Header of the control-rate CSV.
pub fn control_columns() -> Vec<String> {
    let mut h = vec!["t_s".to_string()];
    h.extend(axis_columns("tau", "N", "Nm"));
    h.extend(axis_columns("qdot", "m/s", "rad/s"));
    h.extend(axis_columns("e", "m", "rad"));
    h.extend(axis_columns("xdot", "m/s", "rad/s"));
    h.extend(axis_columns("K", "N/m", "Nm/rad"));
    h.extend(axis_columns("Fff", "N", "Nm"));
    h.extend(axis_columns("wrench", "N", "Nm"));
    h.extend(["xref_x_m", "xref_y_m", "xref_z_m", "xref_qw", "xref_qx", "xref_qy", "xref_qz"].map(String::from));
    h
}

/// Header of the policy-rate CSV.
pub fn policy_columns() -> Vec<String> {
    let mut h: Vec<String> = ["xd_x_m", "xd_y_m", "xd_z_m", "xd_qw", "xd_qx", "xd_qy", "xd_qz"].map(String::from).to_vec();
    h.extend(axis_columns("Kd", "N/m", "Nm/rad"));
    h.extend(axis_columns("Fd", "N", "Nm"));
    h.extend(OBSERVATION_COLUMNS.iter().map(|c| format!("obs_{c}")));
    h.extend(["reward", "penalty", "markers_removed", "done", "success"].map(String::from));
    h
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// File-name stem for an episode.
pub fn episode_stem(record: &EpisodeRecord) -> String {
    format!("{}_{}_seed{}", record.space.replace('+', "-"), record.task, record.seed)
}

/// Collects artifacts in one directory and remembers them for the manifest.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| OutputError {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Artifact names written so far, in write order.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|source| OutputError { path: path.clone(), source })?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    fn put_csv(&mut self, name: &str, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<PathBuf> {
        let path = self.path(name);
        let err = |source: io::Error| OutputError { path: path.clone(), source };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| err(e.into()))?;
        for row in rows {
            w.write_record(&row).map_err(|e| err(e.into()))?;
        }
        let bytes = w.into_inner().map_err(|e| err(e.into_error()))?;
        self.put(name, &bytes)
    }

    fn put_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| OutputError {
            path: self.path(name),
            source: e.into(),
        })?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    /// Writes `<stem>_control.csv` (every `decimation`-th control tick,
    /// starting with the first) and `<stem>_policy.csv`.
    pub fn write_episode(&mut self, record: &EpisodeRecord, decimation: usize) -> Result<(PathBuf, PathBuf)> {
        let stem = episode_stem(record);
        let s = &record.control;
        let step = decimation.max(1);
        let control = (0..s.len()).step_by(step).map(|i| {
            let mut row = vec![fmt(s.t[i])];
            for series in [&s.tau, &s.q_dot, &s.e, &s.x_dot, &s.stiffness, &s.feedforward, &s.wrench] {
                row.extend(series[i].iter().map(|v| fmt(*v)));
            }
            row.extend(s.setpoint[i].iter().map(|v| fmt(*v)));
            row
        });
        let control_path = self.put_csv(&format!("{stem}_control.csv"), &control_columns(), control)?;

        let policy = record.policy.iter().map(|p| {
            let mut row: Vec<String> = p.action.x_d.to_array().iter().map(|v| fmt(*v)).collect();
            match &p.action.k_d {
                Some(k) => row.extend(k.iter().map(|v| fmt(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.extend(p.action.f_d.to_vector().iter().map(|v| fmt(*v)));
            row.extend(p.observation.to_row().iter().map(|v| fmt(*v)));
            let o = &p.outcome;
            row.extend([fmt(o.reward), fmt(o.penalty), o.markers_removed.to_string(), o.done.to_string(), o.success.to_string()]);
            row
        });
        let policy_path = self.put_csv(&format!("{stem}_policy.csv"), &policy_columns(), policy)?;
        Ok((control_path, policy_path))
    }

    /// `summary.json`: totals per (action space, task, seed) and penalty
    /// statistics per action space.
    pub fn write_summary(&mut self, records: &[EpisodeRecord]) -> Result<PathBuf> {
        self.put_json("summary.json", &Summary::new(records))
    }

    /// `comparison.csv` and `comparison.txt`.
    pub fn write_comparison(&mut self, rows: &[ComparisonRow]) -> Result<(PathBuf, PathBuf)> {
        let header: Vec<String> = COMPARISON_COLUMNS.iter().map(|c| c.to_string()).collect();
        let csv_path = self.put_csv("comparison.csv", &header, rows.iter().map(ComparisonRow::cells))?;
        let txt_path = self.put("comparison.txt", comparison_text(rows).as_bytes())?;
        Ok((csv_path, txt_path))
    }

    /// `<stem>_curve.csv`; header only when the curve is empty.
    pub fn write_curve(&mut self, stem: &str, curve: &[GenerationStats]) -> Result<PathBuf> {
        let header: Vec<String> = ["generation", "mean_return", "max_return", "elite_return", "env_steps"]
            .map(String::from)
            .to_vec();
        let rows = curve.iter().map(|g| {
            vec![
                g.generation.to_string(),
                fmt(g.mean_return),
                fmt(g.max_return),
                fmt(g.elite_return),
                g.env_steps.to_string(),
            ]
        });
        self.put_csv(&format!("{stem}_curve.csv"), &header, rows)
    }

    /// `<stem>_best.json`: best and final-mean parameters of a CEM run.
    pub fn write_best(&mut self, stem: &str, space: &str, seed: u64, result: &CemResult) -> Result<PathBuf> {
        let best = BestParams {
            action_space: space.to_string(),
            seed,
            best_return: result.best_return.is_finite().then_some(result.best_return),
            best: result.best.iter().copied().collect(),
            mean: result.mean.iter().copied().collect(),
            env_steps: result.env_steps(),
            steps_to_first_success: result.steps_to_first_success(),
            penalty_fraction: result.penalty_fraction(),
        };
        self.put_json(&format!("{stem}_best.json"), &best)
    }

    /// `config.toml`: the effective configuration.
    pub fn write_config(&mut self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let text = cfg.to_toml();
        self.put("config.toml", text.as_bytes())
    }

    /// `manifest.json` listing every artifact written before it with its
    /// SHA-256, the config digest and the tool version.
    pub fn write_manifest(&mut self, cfg: &ExperimentConfig, tool: &str, version: &str) -> Result<PathBuf> {
        let config_text = cfg.to_toml();
        let mut files = BTreeMap::new();
        for name in &self.files {
            let path = self.path(name);
            let bytes = fs::read(&path).map_err(|source| OutputError { path: path.clone(), source })?;
            files.insert(name.clone(), sha256_hex(&bytes));
        }
        let manifest = Manifest {
            tool: tool.to_string(),
            version: version.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            files,
        };
        self.put_json("manifest.json", &manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestParams {
    pub action_space: String,
    pub seed: u64,
    pub best_return: Option<f64>,
    pub best: Vec<f64>,
    pub mean: Vec<f64>,
    pub env_steps: usize,
    pub steps_to_first_success: Option<usize>,
    pub penalty_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub action_space: String,
    pub task: String,
    pub seed: u64,
    #[serde(flatten)]
    pub totals: Totals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub episodes: Vec<EpisodeSummary>,
    pub safety: BTreeMap<String, SafetyStats>,
}

impl Summary {
    pub fn new(records: &[EpisodeRecord]) -> Self {
        let episodes = records
            .iter()
            .map(|r| EpisodeSummary {
                action_space: r.space.clone(),
                task: r.task.clone(),
                seed: r.seed,
                totals: r.totals.clone(),
            })
            .collect();
        let mut by_space: BTreeMap<String, Vec<EpisodeRecord>> = BTreeMap::new();
        for r in records {
            by_space.entry(r.space.clone()).or_default().push(r.clone());
        }
        let safety = by_space
            .into_iter()
            .filter_map(|(k, v)| safety_stats(&v).map(|s| (k, s)))
            .collect();
        Self { episodes, safety }
    }
}

pub const COMPARISON_COLUMNS: [&str; 10] = [
    "action_space",
    "episodes",
    "energy_J",
    "energy_per_action_J",
    "tracking_error",
    "markers_removed",
    "successes",
    "success",
    "penalty_episode_fraction",
    "mean_penalty",
];

/// Means over the seeds of one action space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub action_space: String,
    pub episodes: usize,
    pub energy: f64,
    pub energy_per_action: f64,
    pub tracking_error: f64,
    pub markers_removed: f64,
    pub successes: usize,
    /// Every episode succeeded.
    pub success: bool,
    pub penalty_episode_fraction: f64,
    pub mean_penalty: f64,
}

impl ComparisonRow {
    /// `None` for an empty cell.
    pub fn from_records(space: &str, records: &[EpisodeRecord]) -> Option<Self> {
        let stats = safety_stats(records)?;
        let n = records.len() as f64;
        let mean = |f: fn(&Totals) -> f64| records.iter().map(|r| f(&r.totals)).sum::<f64>() / n;
        let successes = records.iter().filter(|r| r.totals.success).count();
        Some(Self {
            action_space: space.to_string(),
            episodes: records.len(),
            energy: mean(|t| t.energy),
            energy_per_action: mean(|t| t.energy_per_action),
            tracking_error: mean(|t| t.tracking_error),
            markers_removed: mean(|t| t.markers_removed as f64),
            successes,
            success: successes == records.len(),
            penalty_episode_fraction: stats.penalty_episode_fraction,
            mean_penalty: stats.mean_penalty,
        })
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.action_space.clone(),
            self.episodes.to_string(),
            fmt(self.energy),
            fmt(self.energy_per_action),
            fmt(self.tracking_error),
            fmt(self.markers_removed),
            self.successes.to_string(),
            self.success.to_string(),
            fmt(self.penalty_episode_fraction),
            fmt(self.mean_penalty),
        ]
    }
}

/// Fixed-width table for the terminal.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>4} {:>10} {:>10} {:>9} {:>8} {:>7} {:>9} {:>10}",
        "space", "n", "energy J", "J/action", "tracking", "markers", "success", "pen frac", "mean pen"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>4} {:>10.3} {:>10.4} {:>9.4} {:>8.2} {:>7} {:>9.3} {:>10.4}",
            r.action_space,
            r.episodes,
            r.energy,
            r.energy_per_action,
            r.tracking_error,
            r.markers_removed,
            format!("{}/{}", r.successes, r.episodes),
            r.penalty_episode_fraction,
            r.mean_penalty
        );
    }
    s
}
