//! Command-line front end: one JSON config per run, artifacts written to an
//! output directory.
//!
//! Every command writes `<command>.csv` (`experiment,param,observable,value`),
//! `summary.json` and `<command>.svg`, plus command-specific files.

mod commands;
pub mod config;
pub mod plot;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::principles::Report;

pub use commands::ekeland_instance;
pub use config::{load_config, parse_config, ExperimentConfig};
pub use plot::{emit_plot, PlotStyle, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration; `path` names the offending field.
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Violation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Violation(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Cones,
    Eta,
    Capacity,
    DetectCompleteness,
    Ekeland,
    Verify,
    Theta,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Solve,
        Command::Cones,
        Command::Eta,
        Command::Capacity,
        Command::DetectCompleteness,
        Command::Ekeland,
        Command::Verify,
        Command::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Cones => "cones",
            Command::Eta => "eta",
            Command::Capacity => "capacity",
            Command::DetectCompleteness => "detect-completeness",
            Command::Ekeland => "ekeland",
            Command::Verify => "verify",
            Command::Theta => "theta",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Files produced by a command, in the order they were written.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

pub(crate) struct Output<'a> {
    dir: &'a Path,
    artifacts: Artifacts,
}

impl Output<'_> {
    pub(crate) fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.artifacts.files.push(path);
        Ok(())
    }

    /// Report CSV, summary JSON and the plot.
    fn finish(&mut self, command: Command, report: &Report, plot: &str) -> Result<(), CliError> {
        self.write(&format!("{}.csv", command.name()), &report.csv())?;
        self.write("summary.json", &report.summary_text())?;
        self.write(&format!("{}.svg", command.name()), plot)
    }
}

/// What a command produced before any verdict is applied.
pub(crate) struct Outcome {
    pub report: Report,
    pub plot: String,
    /// Set when a checked principle fails; turned into exit code 4.
    pub violation: Option<String>,
    /// Set when a solve did not converge; turned into exit code 3.
    pub stalled: Option<String>,
}

/// Loads the config, runs `command` and writes its artifacts into `out`.
/// `seed` overrides the seed from the config.
pub fn run(command: Command, config_path: &Path, out: &Path, seed: Option<u64>) -> Result<Artifacts, CliError> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_config(command, &cfg, base, out)
}

/// As [`run`], for an already parsed config; relative paths resolve against `base`.
pub fn run_config(command: Command, cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Artifacts, CliError> {
    // validate and compute everything before touching the output directory
    let mut pending = Vec::new();
    let outcome = commands::execute(command, cfg, base, &mut pending)?;
    std::fs::create_dir_all(out)?;
    let mut output = Output {
        dir: out,
        artifacts: Artifacts::default(),
    };
    for (name, content) in &pending {
        output.write(name, content)?;
    }
    output.finish(command, &outcome.report, &outcome.plot)?;
    if let Some(msg) = outcome.stalled {
        return Err(CliError::NonConvergence(msg));
    }
    if let Some(msg) = outcome.violation {
        return Err(CliError::Violation(msg));
    }
    Ok(output.artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let v = config::invalid("space.h", "must be positive");
        assert_eq!(v.exit_code(), 2);
        assert_eq!(v.to_string(), "space.h: must be positive");
        assert_eq!(CliError::NonConvergence(String::new()).exit_code(), 3);
        assert_eq!(CliError::Violation(String::new()).exit_code(), 4);
    }

    #[test]
    fn command_names_match_the_value_parser() {
        use clap::ValueEnum;
        for c in Command::ALL {
            assert_eq!(c.to_possible_value().unwrap().get_name(), c.name());
        }
    }
}
