//! Command-line front end: configuration loading, subcommand dispatch and
//! output serialization.

pub mod commands;
pub mod config;
pub mod emit;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use emit::{Dataset, Format};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "endiff", version, about = "Electron-diffracted nanoparticle interference simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file, or the name of a bundled preset.
    #[arg(long, global = true, default_value = "case_study")]
    pub config: String,

    /// Override one key, e.g. `--set "evolution.t=0.5 talbot"`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Number of grid points; overrides `grid.points`.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<u32>,

    /// Carpet end time in Talbot times; overrides `carpet.t_max`.
    #[arg(long = "t-max", global = true, value_name = "MULTIPLE_OF_TALBOT")]
    pub t_max: Option<f64>,

    /// Record the generation time in JSON sidecars.
    #[arg(long, global = true)]
    pub timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    #[value(name = "csv+json")]
    CsvJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Quantum and classical fringe pattern at one time.
    Fringes,
    /// Time-resolved quantum and classical carpets.
    Carpet,
    /// Classical shadow pattern and Talbot coefficients.
    Classical,
    /// Fringe visibility under grating misalignment.
    Misalign,
    /// Macroscopicity of the exclusion bound.
    Macro,
    /// Probability of detecting the Bragg-filtered electron.
    DetectProb,
    /// Talbot times and free-fall distances.
    Table,
    /// Order-of-magnitude systematic effects.
    Systematics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fringes => "fringes",
            Command::Carpet => "carpet",
            Command::Classical => "classical",
            Command::Misalign => "misalign",
            Command::Macro => "macro",
            Command::DetectProb => "detect-prob",
            Command::Table => "table",
            Command::Systematics => "systematics",
        }
    }

    pub fn execute(self, cfg: &RunConfig) -> Result<commands::Run, CliError> {
        match self {
            Command::Fringes => commands::fringes(cfg),
            Command::Carpet => commands::carpet_run(cfg),
            Command::Classical => commands::classical(cfg),
            Command::Misalign => commands::misalign(cfg),
            Command::Macro => commands::macroscopicity(cfg),
            Command::DetectProb => commands::detect_prob(cfg),
            Command::Table => commands::table(cfg),
            Command::Systematics => commands::systematics(cfg),
        }
    }
}

impl Cli {
    /// Configuration after the file, `--set` overrides and shortcut flags.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        for o in &self.overrides {
            cfg.set(o)?;
        }
        if let Some(n) = self.grid {
            cfg.set(&format!("grid.points={n}"))?;
        }
        if let Some(t) = self.t_max {
            cfg.set(&format!("carpet.t_max={} talbot", config::fmt_number(t)))?;
        }
        Ok(cfg)
    }

    pub fn run(&self, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
        let cfg = self.config()?;
        let run = self.command.execute(&cfg)?;
        let format = match self.format {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::CsvJson => Format::CsvJson,
        };
        let timestamp = self
            .timestamp
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let written = emit::emit(&self.out, &run.datasets, format, self.command.name(), &cfg, &run.summary, timestamp)?;
        for w in &run.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        let _ = writeln!(stdout, "{} -> {}", run.line, files.join(", "));
        Ok(())
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match cli.run(stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
