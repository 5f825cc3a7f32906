//! `detbound` command-line front end.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Parser)]
#[command(name = "detbound", version, about = "Detection evaluation, upper-bound AP and error diagnosis")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "DETBOUND_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate detections against ground truth (12 COCO-style metrics)
    Eval(EvalArgs),
    /// Upper-bound AP from classifier predictions on ground-truth boxes
    Upperbound(UpperboundArgs),
    /// Sample boxes around each target at a minimum IOU
    SampleBoxes(SampleArgs),
    /// Four-stage error diagnosis
    Diagnose(DiagnoseArgs),
    /// Generate a dataset variant (white_bg, noise_bg, crop, blur, vflip, ...)
    Transform(TransformArgs),
    /// Export object and context crops for classifier training
    ExportCrops(ExportCropsArgs),
    /// Box distribution map, or predicted minus ground-truth difference map
    Boxmap(BoxmapArgs),
    /// Convert detection masks to boxes or to compressed RLE
    MaskConvert(MaskConvertArgs),
    /// Check ground truth (and optionally detections and predictions)
    Validate(ValidateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let body = move || match cli.command {
        Command::Eval(a) => eval(a),
        Command::Upperbound(a) => upperbound(a),
        Command::SampleBoxes(a) => sample_boxes(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Transform(a) => transform(a),
        Command::ExportCrops(a) => export_crops(a),
        Command::Boxmap(a) => boxmap(a),
        Command::MaskConvert(a) => mask_convert(a),
        Command::Validate(a) => validate(a),
    };
    match cli.threads {
        Some(0) => anyhow::bail!("--threads must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(body),
        None => body(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(1)
        }
    }
}
