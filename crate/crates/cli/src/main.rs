use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use lidar_mot::dataset_io::{
    load_ground_truth, load_sequence, read_tracks, tracks_by_frame, write_tracks, GROUND_TRUTH_FILE,
};
use lidar_mot::detection::{detect, preprocess_frame};
use lidar_mot::synth::{generate, SynthConfig};
use lidar_mot_cli::bench::{format_bench, run_bench, BenchOptions};
use lidar_mot_cli::config::{load_config, to_pretty_json};
use lidar_mot_cli::plot::{render_frame, write_svg, FrameView};
use lidar_mot_cli::run::{evaluate_records, format_track_summary, run_track, write_frame_csv};
use lidar_mot_cli::{CliError, CliResult, PipelineConfig, EXIT_USAGE};
use serde::Serialize;

const TRACKS_FILE: &str = "tracks.jsonl";

/// LiDAR multi-object tracking: detect, track, evaluate, visualize.
#[derive(Parser)]
#[command(name = "lidar-mot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOpts {
    /// JSON configuration file; missing keys take defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
    /// Override the random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and track objects in a sequence; writes a tracks file.
    Track {
        #[arg(required_unless_present = "print_config")]
        dataset: Option<PathBuf>,
        /// Tracks file to write [default: <DATASET>/tracks.jsonl].
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Detection worker threads [default: available cores]; 1 is fully serial.
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        opts: ConfigOpts,
    },
    /// Score a tracks file against ground truth; prints MOTA as JSON.
    Eval {
        /// Ground-truth file, or a dataset directory containing gt.jsonl.
        #[arg(required_unless_present = "print_config")]
        gt: Option<PathBuf>,
        #[arg(required_unless_present = "print_config")]
        tracks: Option<PathBuf>,
        /// Per-frame CSV of counts.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigOpts,
    },
    /// Generate a synthetic sequence with exact ground truth.
    Synth {
        #[arg(required_unless_present = "print_config")]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigOpts,
    },
    /// Render one bird's-eye-view SVG per frame.
    Plot {
        #[arg(required_unless_present = "print_config")]
        dataset: Option<PathBuf>,
        #[arg(required_unless_present = "print_config")]
        tracks: Option<PathBuf>,
        /// Output directory [default: <DATASET>/plots].
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Half-width of the view around the ego, meters.
        #[arg(long, default_value_t = 40.0)]
        extent: f64,
        #[command(flatten)]
        opts: ConfigOpts,
    },
    /// Time each pipeline stage and compare indexed with brute-force clustering.
    Bench {
        #[arg(required_unless_present = "print_config")]
        dataset: Option<PathBuf>,
        /// Points in the clustering comparison cloud (full-resolution, thinned).
        #[arg(long)]
        cluster_points: Option<usize>,
        /// Timing repeats for the clustering comparison.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        opts: ConfigOpts,
    },
}

fn pipeline_config(opts: &ConfigOpts) -> CliResult<PipelineConfig> {
    let mut cfg: PipelineConfig = load_config(opts.config.as_deref())?;
    if let Some(seed) = opts.seed {
        cfg.preprocess.rng_seed = seed;
    }
    cfg.validate()
        .map_err(|e| CliError::usage(e).context_config(opts))?;
    Ok(cfg)
}

trait ConfigContext {
    fn context_config(self, opts: &ConfigOpts) -> Self;
}

impl ConfigContext for CliError {
    fn context_config(self, opts: &ConfigOpts) -> Self {
        match &opts.config {
            Some(p) => CliError {
                code: self.code,
                error: self
                    .error
                    .context(format!("invalid config {}", p.display())),
            },
            None => self,
        }
    }
}

/// Prints `cfg` and reports whether the command should stop there.
fn maybe_print<T: Serialize>(opts: &ConfigOpts, cfg: &T) -> bool {
    if opts.print_config {
        print!("{}", to_pretty_json(cfg));
    }
    opts.print_config
}

fn required(p: Option<PathBuf>) -> PathBuf {
    p.expect("clap enforces required positionals")
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Track {
            dataset,
            output,
            workers,
            opts,
        } => {
            let cfg = pipeline_config(&opts)?;
            if maybe_print(&opts, &cfg) {
                return Ok(());
            }
            let dataset = required(dataset);
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let seq = load_sequence(&dataset)?;
            let run = run_track(&seq, &cfg, workers)?;
            let output = output.unwrap_or_else(|| dataset.join(TRACKS_FILE));
            write_tracks(&output, &run.records)?;
            print!("{}", format_track_summary(&run));
            println!("tracks written to {}", output.display());
        }
        Command::Eval {
            gt,
            tracks,
            output,
            opts,
        } => {
            let cfg = pipeline_config(&opts)?;
            if maybe_print(&opts, &cfg) {
                return Ok(());
            }
            let gt = required(gt);
            let gt_file = if gt.is_dir() {
                gt.join(GROUND_TRUTH_FILE)
            } else {
                gt
            };
            let truth = load_ground_truth(&gt_file)?;
            let records = read_tracks(required(tracks))?;
            let (result, frames) = evaluate_records(&truth, &records, cfg.match_distance)?;
            println!(
                "{}",
                serde_json::to_string(&result)
                    .context("serialize result")
                    .map_err(CliError::data)?
            );
            if let Some(path) = output {
                write_frame_csv(&path, &frames)?;
            }
        }
        Command::Synth { out, opts } => {
            let mut cfg: SynthConfig = load_config(opts.config.as_deref())?;
            if let Some(seed) = opts.seed {
                cfg.rng_seed = seed;
            }
            cfg.validate()
                .map_err(|e| CliError::usage(e).context_config(&opts))?;
            if maybe_print(&opts, &cfg) {
                return Ok(());
            }
            let out = required(out);
            let scene = generate(&cfg, &out)?;
            println!(
                "wrote {} frames with {} cars to {}",
                scene.sequence.frames.len(),
                scene.cars.len(),
                out.display()
            );
        }
        Command::Plot {
            dataset,
            tracks,
            output,
            extent,
            opts,
        } => {
            let cfg = pipeline_config(&opts)?;
            if maybe_print(&opts, &cfg) {
                return Ok(());
            }
            if !(extent > 0.0) || !extent.is_finite() {
                return Err(CliError::usage(anyhow!(
                    "--extent must be > 0, got {extent}"
                )));
            }
            let dataset = required(dataset);
            let seq = load_sequence(&dataset)?;
            let records = read_tracks(required(tracks))?;
            let by_frame = tracks_by_frame(&records);
            let out_dir = output.unwrap_or_else(|| dataset.join("plots"));
            create_dir(&out_dir)?;
            let detector = cfg.detector();
            for f in &seq.frames {
                let points = preprocess_frame(f, &seq.calibration, &seq.drivable, &cfg.preprocess)?
                    .transformed(&f.ego_pose)
                    .points;
                let detections = detect(f, &seq.calibration, &seq.drivable, &detector)?;
                let view = FrameView {
                    index: f.index,
                    ego_pose: &f.ego_pose,
                    points: &points,
                    detections: &detections,
                    tracks: by_frame.get(&f.index).map_or(&[][..], Vec::as_slice),
                };
                write_svg(
                    &out_dir,
                    f.index,
                    &render_frame(&view, &seq.drivable, extent),
                )?;
            }
            println!("wrote {} plots to {}", seq.frames.len(), out_dir.display());
        }
        Command::Bench {
            dataset,
            cluster_points,
            repeats,
            json,
            opts,
        } => {
            let cfg = pipeline_config(&opts)?;
            if maybe_print(&opts, &cfg) {
                return Ok(());
            }
            let seq = load_sequence(required(dataset))?;
            let report = run_bench(
                &seq,
                &cfg,
                &BenchOptions {
                    cluster_points,
                    repeats,
                },
            )?;
            if json {
                println!("{}", to_pretty_json(&report).trim_end());
            } else {
                print!("{}", format_bench(&report));
            }
        }
    }
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(CliError::data)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
