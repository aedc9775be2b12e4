use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use vice_cli::commands::{evaluate, render, sweep, synth, track};
use vice_cli::config::{split_list, ConfigFile, Settings};
use vice_cli::server::{serve, ServerConfig, DEFAULT_LEASE};
use vice_cli::CliError;
use vice_core::depth::DepthMode;
use vice_core::ingestion::synth::{NoiseSpec, SynthSpec, TrajectorySpec};

#[derive(Parser)]
#[command(name = "vice", version, about = "Evaluate ego-pose estimates by tracking keypoints in image space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track reference points through every selected pose source.
    Track(PipelineArgs),
    /// Compare tracks with annotations and poses with ground truth.
    Evaluate(PipelineArgs),
    /// Draw annotations and tracks onto the frames.
    Render {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Frame range `start:end` (end exclusive), in retained frames.
        #[arg(long)]
        frames: Option<String>,
    },
    /// Pixel error as a function of the time offset applied to one source.
    SweepOffset {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Offsets in seconds, `start:end:step` (end inclusive).
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Source to sweep; defaults to the first estimate.
        #[arg(long)]
        source: Option<String>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic sequence with exact annotations.
    Synth(SynthArgs),
    /// Host annotation sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat TOML config; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    tracks_dir: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated pose sources (default: all).
    #[arg(long)]
    sources: Option<String>,
    /// Comma-separated depth modes: floor, zmap, sensor.
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    clip_seconds: Option<f64>,
    /// Seconds added to frame times when reading estimated poses.
    #[arg(long, allow_hyphen_values = true)]
    time_offset: Option<f64>,
    /// absolute or relative.
    #[arg(long)]
    estimate_convention: Option<String>,
    /// annotations, random or fixed.
    #[arg(long)]
    initializer: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random reference points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    roe_stride: Option<usize>,
    /// Report orientation errors in degrees.
    #[arg(long)]
    degrees: bool,
    /// default or colorblind.
    #[arg(long)]
    palette: Option<String>,
}

impl PipelineArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            dataset: self.dataset.clone(),
            dataset_name: self.dataset_name.clone(),
            sequence: self.sequence.clone(),
            annotations: self.annotations.clone(),
            tracks_dir: self.tracks_dir.clone(),
            output: self.output.clone(),
            sources: self.sources.as_deref().map(split_list),
            depth_modes: self.depth.as_deref().map(split_list),
            fps: self.fps,
            clip_seconds: self.clip_seconds,
            time_offset: self.time_offset,
            estimate_convention: self.estimate_convention.clone(),
            initializer: self.initializer.clone(),
            seed: self.seed,
            points: self.points,
            fixed_pixels: None,
            roe_stride: self.roe_stride,
            degrees: self.degrees.then_some(true),
            palette: self.palette.clone(),
        };
        Settings::resolve(&file, &flags)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 10.0)]
    fps: f64,
    /// Pose samples per second; frame times must lie on the pose grid.
    #[arg(long, default_value_t = 10.0)]
    pose_rate: f64,
    #[arg(long, default_value_t = 8)]
    landmarks: usize,
    /// On-board rotation noise per pose step, rad.
    #[arg(long, default_value_t = 0.001)]
    sigma_rot: f64,
    /// On-board translation noise per pose step, m.
    #[arg(long, default_value_t = 0.002)]
    sigma_trans: f64,
    /// The on-board stream stamps the pose of time t as t + offset, s.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    time_offset: f64,
    /// Rotation vector `x,y,z` (rad) applied to the written extrinsic.
    #[arg(long, allow_hyphen_values = true)]
    extrinsic_rot: Option<String>,
    /// Translation `x,y,z` (m) applied to the written extrinsic.
    #[arg(long, allow_hyphen_values = true)]
    extrinsic_trans: Option<String>,
    /// Skip rendering the PNG frames.
    #[arg(long)]
    no_images: bool,
}

fn parse_vector(text: Option<&str>, name: &str) -> Result<Vector3<f64>, CliError> {
    let Some(text) = text else { return Ok(Vector3::zeros()) };
    let v: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("--{name} expects x,y,z, got {text:?}")))?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(CliError::config(format!("--{name} expects x,y,z, got {text:?}"))),
    }
}

impl SynthArgs {
    fn spec(&self) -> Result<SynthSpec, CliError> {
        let perturbation = if self.extrinsic_rot.is_some() || self.extrinsic_trans.is_some() {
            Some((
                parse_vector(self.extrinsic_rot.as_deref(), "extrinsic-rot")?,
                parse_vector(self.extrinsic_trans.as_deref(), "extrinsic-trans")?,
            ))
        } else {
            None
        };
        let mut spec = SynthSpec {
            seed: self.seed,
            trajectory: TrajectorySpec { frames: self.frames, fps: self.fps, pose_rate_hz: self.pose_rate, ..Default::default() },
            noise: NoiseSpec {
                sigma_rot: self.sigma_rot,
                sigma_trans: self.sigma_trans,
                time_offset_s: self.time_offset,
                extrinsic_perturbation: perturbation,
            },
            ..Default::default()
        };
        spec.scene.landmarks = self.landmarks;
        Ok(spec)
    }
}

#[derive(Args)]
struct ServeArgs {
    /// A sequence directory or a directory of sequences.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Depth mode whose tracks are offered as overlays.
    #[arg(long, default_value = "floor")]
    depth: String,
    /// Require `Authorization: Bearer <token>`.
    #[arg(long, env = "VICE_TOKEN")]
    token: Option<String>,
    /// Seconds a writer keeps a session after its last change.
    #[arg(long, default_value_t = DEFAULT_LEASE.as_secs())]
    lease_seconds: u64,
}

fn parse_frames(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::config(format!("--frames expects start:end, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let (a, b) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if b < a {
        return Err(bad());
    }
    Ok((a, b))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Track(args) => {
            for line in track::run(&args.settings()?)? {
                println!("{line}");
            }
        }
        Command::Evaluate(args) => print!("{}", evaluate::run(&args.settings()?)?),
        Command::Render { pipeline, frames } => {
            let range = frames.as_deref().map(parse_frames).transpose()?;
            for line in render::run(&pipeline.settings()?, range)? {
                println!("{line}");
            }
        }
        Command::SweepOffset { pipeline, range, source, out } => {
            let settings = pipeline.settings()?;
            let offsets = sweep::parse_range(&range)?;
            let mode = settings.depth_modes[0];
            let rows = sweep::sweep(&settings, source.as_deref(), mode, &offsets)?;
            let csv = sweep::to_csv(&rows);
            match out {
                Some(path) => std::fs::write(&path, &csv).map_err(|e| CliError::io(&path, e))?,
                None => print!("{csv}"),
            }
            let best = sweep::best(&rows).expect("sweep returns a tracked offset");
            eprintln!("best_offset_s={} rmse2d_px={}", best.offset, best.rmse2d.unwrap());
        }
        Command::Synth(args) => {
            for line in synth::run(&args.spec()?, &args.out, !args.no_images)? {
                println!("{line}");
            }
        }
        Command::Serve(args) => {
            let depth_mode = args.depth.parse::<DepthMode>().map_err(CliError::config)?;
            let config = ServerConfig {
                root: args.dataset,
                depth_mode,
                token: args.token,
                lease: Duration::from_secs(args.lease_seconds),
            };
            serve(&config, &args.addr)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}
