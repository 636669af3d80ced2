use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hemiface::analysis::{score_frame, FrameStatus};
use hemiface::ingest::decode_image;
use hemiface::report::{render_svg, write_csv, write_json};
use hemiface::source::{read_sidecar, run_detector};
use hemiface::{
    load_manifest, run_pipeline, AnalysisConfig, AnalysisReport, BaselineChoice, BaselineEstimator,
    ConfigEcho, LandmarkSource, RunOptions, TiltParams,
};

#[derive(Parser)]
#[command(
    name = "hemiface",
    version,
    about = "Hemifacial asymmetry over video frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every frame of a clip and report the asymmetry time series.
    Analyze(AnalyzeArgs),
    /// Score one neutral still image; the result can be passed to `analyze --baseline`.
    Baseline(BaselineArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// JSON-lines landmark sidecar.
    #[arg(long, group = "source")]
    landmarks: Option<PathBuf>,
    /// Detector command: frame paths on stdin, landmark records on stdout.
    #[arg(long, group = "source")]
    detector_cmd: Option<String>,
}

impl SourceArgs {
    fn source(&self) -> LandmarkSource {
        match (&self.landmarks, &self.detector_cmd) {
            (Some(p), _) => LandmarkSource::Sidecar(p.clone()),
            (None, Some(cmd)) => LandmarkSource::Detector(cmd.clone()),
            (None, None) => unreachable!("clap requires one landmark source"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Midpoint,
    Median,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Frame manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    /// Roll, in degrees, beyond which a face is discarded.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    tilt_threshold: f64,
    /// External baseline percentage; overrides the estimator.
    #[arg(long, allow_negative_numbers = true)]
    baseline: Option<f64>,
    #[arg(long, value_enum, default_value = "midpoint")]
    baseline_estimator: Estimator,
    /// Percentage points below baseline that count as a dip.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    delta: f64,
    /// Shortest dip, in consecutive frames.
    #[arg(long, default_value_t = 3)]
    min_frames: usize,
    /// Scores at or above this percentage are congruent.
    #[arg(long, default_value_t = 75.0, allow_negative_numbers = true)]
    congruence_threshold: f64,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Directory for per-frame composite layouts.
    #[arg(long)]
    debug_frames: Option<PathBuf>,
    /// Worker threads (default: all cores; 1 runs sequentially).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Still image of the subject in a neutral state.
    image: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    tilt_threshold: f64,
}

/// Distinguishes bad inputs (exit 1) from failures of our own (exit 2).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hemiface::Error>() {
        Some(e) if !e.is_input_error() => 2,
        Some(_) => 1,
        None if err.downcast_ref::<InputError>().is_some() => 1,
        None => 2,
    }
}

/// Marks CLI-level input problems that did not come from the library.
#[derive(Debug)]
struct InputError;

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid input")
    }
}

impl std::error::Error for InputError {}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let config = AnalysisConfig {
        tilt: TiltParams::with_threshold(args.tilt_threshold),
        baseline: match args.baseline {
            Some(v) => BaselineChoice::External(v),
            None => BaselineChoice::Estimate(match args.baseline_estimator {
                Estimator::Midpoint => BaselineEstimator::Midpoint,
                Estimator::Median => BaselineEstimator::Median,
            }),
        },
        delta_pct: args.delta,
        min_frames: args.min_frames,
        congruence_threshold_pct: args.congruence_threshold,
        ..AnalysisConfig::default()
    };
    config.validate()?;
    let manifest = load_manifest(&args.manifest)?;
    let source = args.source.source();
    let options = RunOptions {
        jobs: args.jobs.map(|j| j as usize),
        debug_dir: args.debug_frames.clone(),
    };
    let series = run_pipeline(&manifest, &source, &config, &options)?;
    let report = AnalysisReport::new(
        series,
        ConfigEcho {
            manifest: args.manifest.display().to_string(),
            landmarks: source,
            analysis: config,
        },
    );
    if let Some(path) = &args.out_csv {
        write_csv(&report.series, path)?;
    }
    if let Some(path) = &args.out_json {
        write_json(&report, path)?;
    }
    if let Some(path) = &args.out_svg {
        render_svg(&report.series, path)?;
    }
    println!("{}", report.summary.one_line());
    Ok(())
}

fn baseline(args: &BaselineArgs) -> anyhow::Result<()> {
    let tilt = TiltParams::with_threshold(args.tilt_threshold);
    tilt.validate()?;
    let image = decode_image(&args.image, 0)?;
    let records = match args.source.source() {
        LandmarkSource::Sidecar(path) => read_sidecar(&path)?,
        LandmarkSource::Detector(cmd) => run_detector(&cmd, &[args.image.clone()])?,
    };
    let [(_, face)] = <[_; 1]>::try_from(records).map_err(|r: Vec<_>| {
        anyhow!(InputError).context(format!(
            "expected one landmark record for the still, found {}",
            r.len()
        ))
    })?;
    let config = AnalysisConfig {
        tilt,
        ..AnalysisConfig::default()
    };
    let outcome = score_frame(&image, &face, &config);
    match outcome.status {
        FrameStatus::Scored => {
            println!("baseline={:.6}", outcome.ssid_raw * 100.0);
            Ok(())
        }
        status => Err(anyhow!(InputError).context(format!(
            "{}: no usable face ({})",
            args.image.display(),
            status.as_str()
        ))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Baseline(args) => baseline(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
