//! The `trio-eval` command-line tool.
//!
//! Exit status: 0 on success (evaluator failure modes included), 1 on data
//! errors with `{"error": kind, "message": ...}` on standard error, 2 on
//! usage errors.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evaluators::DecodeHint;
use crate::forward::{materialize_stream, minimal_stream_size, sample_stream, TruthFile};
use crate::harness::{
    profile_failures, scatter_distance_correlation, write_profile, write_scatter, OutputFormat, ProfileConfig,
};
use crate::numerics::{Mode, Rational};
use crate::report::{diagnostics_report, evaluation_report, projection_report, synth_report, version_info};
use crate::sketch::{ingest_decisions, DecisionSketch, SketchFile};
use crate::variety::ProjectionSettings;

pub const MODE_ENV: &str = "TRIOEVAL_MODE";

#[derive(Debug, Parser)]
#[command(
    name = "trio-eval",
    about = "Evaluate three binary classifiers from their unlabeled decision sketch",
    disable_version_flag = true
)]
struct Cli {
    /// Print algorithm identifiers (PRNG, report schema versions) and exit.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct ModeArgs {
    /// Exact rational arithmetic.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Binary64 floating point.
    #[arg(long)]
    float: bool,
    /// Default mode when neither flag is given.
    #[arg(long = "mode", env = MODE_ENV, default_value = "exact", hide = true)]
    default_mode: Mode,
}

impl ModeArgs {
    fn mode(&self) -> Mode {
        if self.exact {
            Mode::Exact
        } else if self.float {
            Mode::Float
        } else {
            self.default_mode
        }
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// csv or jsonl.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a sketch from a decisions CSV (columns c1,c2,c3, optional truth).
    Sketch {
        /// CSV file, or - for standard input.
        decisions: PathBuf,
    },
    /// Evaluate a sketch: majority voting, independent evaluator, diagnostics.
    Eval {
        sketch: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        /// Keep one variety point: majority-competent or prevalence-near=X.
        #[arg(long)]
        decode: Option<DecodeHint>,
    },
    /// Frequencies (and, in exact mode, the smallest sketch) of a ground truth.
    Synth {
        truth: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Decisions CSV with truth column generated from a ground truth.
    Stream {
        truth: PathBuf,
        /// Number of items; defaults to the smallest exact stream size.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw items at random instead of materializing the exact statistics.
        #[arg(long)]
        sample: bool,
    },
    /// Distance from a point to the containing variety of a sketch.
    Project {
        sketch: PathBuf,
        point: PathBuf,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 40)]
        refinements: usize,
    },
    /// Agreement-equation diagnostics for a sketch.
    Diagnose {
        sketch: PathBuf,
        /// Ground truth for stream correctness rates.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Failure-mode profile by test size.
    Profile(ExperimentArgs),
    /// Distance vs. realized correlation scatter.
    Scatter(ExperimentArgs),
}

/// Runs the tool and returns the exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    if cli.version {
        let _ = writeln!(stdout, "{}", pretty(&version_info()));
        return 0;
    }
    let Some(command) = cli.command else {
        let _ = writeln!(stderr, "error: a subcommand is required (try --help)");
        return 2;
    };
    match execute(command, stdin, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let payload = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            let _ = writeln!(stderr, "{payload}");
            1
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn read_input(path: &PathBuf, stdin: &mut dyn Read) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Reads a sketch file, or the `sketch` member of a `synth` report.
fn read_sketch(path: &PathBuf, stdin: &mut dyn Read) -> Result<DecisionSketch> {
    let text = read_input(path, stdin)?;
    let value: Value = serde_json::from_str(&text)?;
    let file: SketchFile = match value.get("sketch") {
        Some(Value::Null) => return Err(Error::Format("synth report carries no sketch (float mode)".into())),
        Some(inner) => serde_json::from_value(inner.clone())?,
        None => serde_json::from_value(value)?,
    };
    DecisionSketch::from_file(&file)
}

fn read_truth(path: &PathBuf, stdin: &mut dyn Read) -> Result<TruthFile> {
    TruthFile::from_json(&read_input(path, stdin)?)
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<()> {
    writeln!(out, "{}", pretty(v))?;
    Ok(())
}

fn execute(command: Command, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sketch { decisions } => {
            let text = read_input(&decisions, stdin)?;
            let (sketch, _) = ingest_decisions(text.as_bytes())?;
            writeln!(stdout, "{}", sketch.to_json())?;
        }
        Command::Eval { sketch, mode, decode } => {
            let sketch = read_sketch(&sketch, stdin)?;
            let report = match mode.mode() {
                Mode::Exact => evaluation_report::<Rational>(&sketch, decode.as_ref())?,
                Mode::Float => evaluation_report::<f64>(&sketch, decode.as_ref())?,
            };
            emit(stdout, &report)?;
        }
        Command::Synth { truth, mode } => {
            let truth = read_truth(&truth, stdin)?;
            let report = match mode.mode() {
                Mode::Exact => {
                    let (p, c) = truth.parse::<Rational>()?;
                    synth_report(&p, &c)?
                }
                Mode::Float => {
                    let (p, c) = truth.parse::<f64>()?;
                    synth_report(&p, &c)?
                }
            };
            emit(stdout, &report)?;
        }
        Command::Stream { truth, n, seed, sample } => {
            let (p, c) = read_truth(&truth, stdin)?.parse::<Rational>()?;
            let stream = if sample {
                let n = n.ok_or_else(|| Error::InvalidConfig("--sample requires --n".into()))?;
                sample_stream(&p, &c, n, seed)?
            } else {
                let n = match n {
                    Some(n) => n,
                    None => {
                        let m = minimal_stream_size(&p, &c)?;
                        u64::try_from(&m)
                            .map_err(|_| Error::InvalidConfig(format!("smallest exact stream size {m} is too large")))?
                    }
                };
                materialize_stream(&p, &c, n, seed)?
            };
            stream.write_csv(&mut *stdout)?;
        }
        Command::Project {
            sketch,
            point,
            grid,
            refinements,
        } => {
            let sketch = read_sketch(&sketch, stdin)?;
            let truth = read_truth(&point, stdin)?;
            let (pf, _) = truth.parse::<f64>()?;
            let exact = truth.parse::<Rational>().ok().map(|(p, _)| p);
            let report = projection_report(&pf, exact.as_ref(), &sketch, ProjectionSettings { grid, refinements })?;
            emit(stdout, &report)?;
        }
        Command::Diagnose { sketch, truth, mode } => {
            let sketch = read_sketch(&sketch, stdin)?;
            let truth = truth.map(|t| read_truth(&t, stdin)).transpose()?;
            let report = match mode.mode() {
                Mode::Exact => {
                    let t = truth.map(|t| t.parse::<Rational>()).transpose()?;
                    diagnostics_report(&sketch, t.as_ref().map(|(p, c)| (p, c)))?
                }
                Mode::Float => {
                    let t = truth.map(|t| t.parse::<f64>()).transpose()?;
                    diagnostics_report(&sketch, t.as_ref().map(|(p, c)| (p, c)))?
                }
            };
            emit(stdout, &report)?;
        }
        Command::Profile(args) => {
            let config = ProfileConfig::from_json(&read_input(&args.config, stdin)?)?;
            let records = profile_failures(&config, args.jobs)?;
            write_profile(&records, &config, args.format, stdout)?;
        }
        Command::Scatter(args) => {
            let config = ProfileConfig::from_json(&read_input(&args.config, stdin)?)?;
            let records = scatter_distance_correlation(&config, args.jobs)?;
            write_scatter(&records, &config, args.format, stdout)?;
        }
    }
    Ok(())
}
