//! Command-line driver. Every subcommand prints a one-line JSON summary on
//! stdout; failures print a JSON error record on stderr and exit nonzero.

mod commands;
mod config;

pub use commands::{
    gen_scene, load_views, metrics, mine_pairs, pipeline, prepare_cloud, project, read_embeddings, read_projections,
    segment, train, view_file, DepthFormatArg, GenSceneArgs, MetricRecord, MetricsArgs, MinePairsArgs, PipelineArgs,
    ProjectArgs, SegmentArgs, TrainArgs,
};
pub use config::{
    read_seeded_config, GraphParams, ImageFormat, PipelineConfig, SceneConfig, SeededSceneConfig,
};

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "geoset", version, about = "Geometric consistency sets and set-level contrastive pre-training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic scene and render depth along a camera sweep.
    GenScene(GenSceneArgs),
    /// Over-segment a point cloud into geometric consistency sets.
    Segment(SegmentArgs),
    /// Project sets into posed views.
    Project(ProjectArgs),
    /// Find overlapping view pairs.
    MinePairs(MinePairsArgs),
    /// Two-stage contrastive training of per-pixel embeddings.
    Train(TrainArgs),
    /// Coding rate, set cosine similarity and PCA images of embeddings.
    Metrics(MetricsArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

pub fn run(command: &Command) -> Result<Value> {
    match command {
        Command::GenScene(a) => gen_scene(a),
        Command::Segment(a) => segment(a),
        Command::Project(a) => project(a),
        Command::MinePairs(a) => mine_pairs(a),
        Command::Train(a) => train(a),
        Command::Metrics(a) => metrics(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

/// `{"error": {"kind", "message", "path"?, "offset"?}}`.
pub fn error_record(err: &Error) -> Value {
    let mut rec = json!({ "kind": err.kind(), "message": err.to_string() });
    if let Some(p) = err.path() {
        rec["path"] = json!(p.display().to_string());
    }
    if let Some(o) = err.offset() {
        rec["offset"] = json!(o);
    }
    json!({ "error": rec })
}

/// Parses arguments, runs the command and reports the result.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(summary) => {
            // A closed stdout is not worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let _ = writeln!(std::io::stderr().lock(), "{}", error_record(&err));
            ExitCode::FAILURE
        }
    }
}
