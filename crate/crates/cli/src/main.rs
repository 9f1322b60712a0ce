//! `aforce`: run, compare and train adaptive force-impedance experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aforce_sim::experiment::{run_cell, train};
use aforce_sim::output::{comparison_text, ArtifactWriter, ComparisonRow, OutputError};
use aforce_sim::{ConfigError, EpisodeRecord, ExperimentConfig, Recording, SpaceSpec};

const TOOL: &str = "aforce";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "aforce", version, about = "Adaptive force-impedance control benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the first listed action space over the configured seeds.
    Run(Common),
    /// Run every listed action space over the same seeds and tabulate.
    Compare(Common),
    /// Train the waypoint policy with CEM for every action space and seed.
    Train(Common),
    /// Check a config and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `runner.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this seed only.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with code 3 if any episode fails.
    #[arg(long)]
    strict: bool,
    /// Write control-rate CSVs without decimation.
    #[arg(long)]
    full_rate_logs: bool,
}

enum Failure {
    Config(String),
    Io(String),
    Strict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Strict(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Strict(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Loaded config with command-line overrides applied.
struct Setup {
    cfg: ExperimentConfig,
    out: PathBuf,
    spaces: Vec<SpaceSpec>,
    strict: bool,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.runner.seeds = vec![seed];
    }
    if c.full_rate_logs {
        cfg.runner.full_rate_logs = true;
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.runner.output_dir));
    cfg.runner.output_dir = out.display().to_string();
    cfg.validate().map_err(|v| Failure::Config(ConfigError::Invalid(v).to_string()))?;
    let spaces = cfg
        .runner
        .action_spaces
        .iter()
        .map(|n| SpaceSpec::parse(n).ok_or_else(|| Failure::Config(format!("unknown action space `{n}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Setup {
        cfg,
        out,
        spaces,
        strict: c.strict,
    })
}

fn decimation(cfg: &ExperimentConfig) -> usize {
    if cfg.runner.full_rate_logs {
        1
    } else {
        cfg.runner.decimation
    }
}

fn strict_check(s: &Setup, records: &[EpisodeRecord]) -> Result<(), Failure> {
    if !s.strict {
        return Ok(());
    }
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| r.totals.failure.as_ref().map(|f| format!("{} seed {}: {f}", r.space, r.seed)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Strict(format!("{} failed episode(s):\n  {}", failed.len(), failed.join("\n  "))))
    }
}

fn write_episodes(w: &mut ArtifactWriter, cfg: &ExperimentConfig, records: &[EpisodeRecord]) -> Result<(), Failure> {
    for r in records {
        w.write_episode(r, decimation(cfg))?;
    }
    w.write_summary(records)?;
    Ok(())
}

fn finish(w: &mut ArtifactWriter, cfg: &ExperimentConfig) -> Result<(), Failure> {
    w.write_config(cfg)?;
    w.write_manifest(cfg, TOOL, VERSION)?;
    Ok(())
}

fn cmd_run(c: &Common) -> Result<(), Failure> {
    let s = setup(c)?;
    let space = &s.spaces[0];
    if s.spaces.len() > 1 {
        eprintln!("run: using the first action space `{}`; use `compare` for all of them", space.name);
    }
    let records = run_cell(&s.cfg, space, &s.cfg.runner.seeds, Recording::Full);
    let mut w = ArtifactWriter::create(&s.out)?;
    write_episodes(&mut w, &s.cfg, &records)?;
    finish(&mut w, &s.cfg)?;
    for r in &records {
        let t = &r.totals;
        println!(
            "{} seed {}: energy {:.3} J, tracking {:.4}, reward {:.3}, markers {}/{}, success {}{}",
            r.space,
            r.seed,
            t.energy,
            t.tracking_error,
            t.reward,
            t.markers_removed,
            t.markers_total,
            t.success,
            t.failure.as_ref().map(|f| format!(", failed: {f}")).unwrap_or_default()
        );
    }
    println!("wrote {}", s.out.display());
    strict_check(&s, &records)
}

fn cmd_compare(c: &Common) -> Result<(), Failure> {
    let s = setup(c)?;
    if s.spaces.len() < 2 {
        return Err(Failure::Config(format!(
            "compare needs at least 2 entries in runner.action_spaces, got {}",
            s.spaces.len()
        )));
    }
    let mut all = Vec::new();
    let mut rows = Vec::new();
    for space in &s.spaces {
        let records = run_cell(&s.cfg, space, &s.cfg.runner.seeds, Recording::Full);
        rows.extend(ComparisonRow::from_records(&space.name, &records));
        all.extend(records);
    }
    let mut w = ArtifactWriter::create(&s.out)?;
    write_episodes(&mut w, &s.cfg, &all)?;
    w.write_comparison(&rows)?;
    finish(&mut w, &s.cfg)?;
    print!("{}", comparison_text(&rows));
    println!("wrote {}", s.out.display());
    strict_check(&s, &all)
}

fn cmd_train(c: &Common) -> Result<(), Failure> {
    let s = setup(c)?;
    let mut w = ArtifactWriter::create(&s.out)?;
    let mut budget = 0;
    for space in &s.spaces {
        for &seed in &s.cfg.runner.seeds {
            let result = train(&s.cfg, space, seed);
            let stem = format!("{}_{}_seed{seed}", space.name.replace('+', "-"), s.cfg.task.kind.label());
            w.write_curve(&stem, &result.curve)?;
            w.write_best(&stem, &space.name, seed, &result)?;
            let steps = result.env_steps();
            budget += steps;
            let first = result
                .steps_to_first_success()
                .map_or_else(|| "never".to_string(), |v| v.to_string());
            println!(
                "{} seed {seed}: best return {:.3}, env steps {steps}, first success at {first}, penalty fraction {:.3}",
                space.name,
                result.best_return,
                result.penalty_fraction()
            );
        }
    }
    finish(&mut w, &s.cfg)?;
    println!("env steps consumed: {budget}");
    println!("wrote {}", s.out.display());
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<(), Failure> {
    ExperimentConfig::load(config)?;
    println!("{}: ok", config.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Compare(c) => cmd_compare(c),
        Command::Train(c) => cmd_train(c),
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
