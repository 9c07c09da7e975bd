use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use mot3d::bench::run_bench;
use mot3d::config::{load_config, preset};
use mot3d::io_kitti::{self, BoxConvention};
use mot3d::noise_model::DEFAULT_MATCH_DISTANCE;
use mot3d::pipeline::{calibrate_files, eval_files, track_files, OutputFrame};
use mot3d::simulator::{self, generate, parse_scenario, SCENARIO_NAMES};
use mot3d::TrackerConfig;

mod plot;

#[derive(Parser)]
#[command(name = "mot3d", version, about = "Online 3D multi-object tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the detector localization noise from detections and labels.
    Calibrate(CalibrateArgs),
    /// Track one sequence.
    Track(TrackArgs),
    /// Score a result file against labels.
    Eval(EvalArgs),
    /// Write a synthetic scenario as detection, label and pose files.
    Simulate(SimulateArgs),
    /// Measure single-threaded tracking throughput.
    Bench(BenchArgs),
    /// Render columns of a CSV file as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct FormatArgs {
    /// Box z in text files is the bottom face instead of the center.
    #[arg(long)]
    z_bottom: bool,
}

impl FormatArgs {
    fn convention(&self) -> BoxConvention {
        BoxConvention {
            z_is_bottom: self.z_bottom,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detector preset used when no config file is given.
    #[arg(long, default_value = "virconv")]
    detector: String,
}

impl ConfigArgs {
    fn load(&self) -> Result<TrackerConfig> {
        match &self.config {
            Some(path) => load_config(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(preset(&self.detector)?.tracker_config()),
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Measure deviations in the world frame.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Name stored with the fitted model.
    #[arg(long, default_value = "detector")]
    detector: String,
    /// Largest center distance of a detection/label pair, meters.
    #[arg(long, default_value_t = DEFAULT_MATCH_DISTANCE)]
    max_distance: f64,
    /// Write the `[noise]` table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    poses: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    emit_unconfirmed: bool,
    /// Drop the detector-noise term from the filter.
    #[arg(long)]
    disable_dt: bool,
    /// Confirm every trajectory at birth; the gate becomes a plain threshold.
    #[arg(long)]
    disable_validity: bool,
    /// Write results in world coordinates instead of sensor coordinates.
    #[arg(long)]
    world_frame: bool,
    /// Write the run summary as JSON.
    #[arg(long)]
    metrics_json: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Minimum bird's-eye-view IoU of a match.
    #[arg(long, default_value_t = mot3d::eval::DEFAULT_MATCH_THRESHOLD)]
    threshold: f64,
    /// Write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write per-frame counts as CSV.
    #[arg(long)]
    per_frame_csv: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "spec")]
    scenario: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, conflicts_with = "scenario")]
    detections: Option<PathBuf>,
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Generate the input from a built-in scenario.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Per-frame step latency of the median repetition.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Columns to draw; defaults to every column after the first.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let model = calibrate_files(
        &a.detections,
        &a.labels,
        a.poses.as_deref(),
        &a.detector,
        a.max_distance,
        a.format.convention(),
    )?;
    #[derive(serde::Serialize)]
    struct Doc {
        noise: mot3d::noise_model::NoiseModelFile,
    }
    let text = toml::to_string(&Doc {
        noise: model.to_file(),
    })?;
    match a.out {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn track(a: TrackArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    cfg.tracker.emit_unconfirmed |= a.emit_unconfirmed;
    if a.disable_dt {
        cfg.filter.use_detection_noise = false;
    }
    if a.disable_validity {
        cfg.validity.enabled = false;
    }
    let frame = if a.world_frame {
        OutputFrame::World
    } else {
        OutputFrame::Sensor
    };
    let summary = track_files(
        &a.detections,
        a.poses.as_deref(),
        &cfg,
        &a.out,
        frame,
        a.format.convention(),
    )?;
    println!(
        "frames={} born={} pruned={} confirmed={} fps={:.0}",
        summary.frames, summary.born, summary.pruned, summary.confirmed, summary.fps
    );
    if let Some(path) = a.metrics_json {
        write_json(&path, &summary)?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let report = eval_files(&a.results, &a.labels, a.threshold, a.format.convention())?;
    print!("{}", report.to_table());
    println!("(HOTA here is sqrt(DetA x AssA), not the official HOTA)");
    print!("{}", report.to_key_values());
    if let Some(path) = a.json {
        write_json(&path, &report)?;
    }
    if let Some(path) = a.per_frame_csv {
        let mut w = csv::Writer::from_path(&path)?;
        for row in &report.per_frame {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = match (&a.scenario, &a.spec) {
        (Some(name), _) => simulator::scenario(name, 0).with_context(|| {
            format!("unknown scenario {name:?}; known: {}", SCENARIO_NAMES.join(", "))
        })?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_scenario(&text)?
        }
        (None, None) => bail!("pass --scenario NAME or --spec FILE"),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let gen = generate(&spec)?;
    fs::create_dir_all(&a.out)?;
    let conv = a.format.convention();
    io_kitti::write_detections(a.out.join("detections.txt"), &gen.detections, conv)?;
    io_kitti::write_labels(a.out.join("labels.txt"), &gen.labels, conv)?;
    io_kitti::write_poses(a.out.join("poses.txt"), &gen.poses)?;
    fs::write(a.out.join("scenario.toml"), toml::to_string(&spec)?)?;
    println!(
        "{}: {} frames, {} detections, {} labels -> {}",
        spec.name,
        gen.detections.len(),
        gen.detections.iter().map(Vec::len).sum::<usize>(),
        gen.labels.iter().map(Vec::len).sum::<usize>(),
        a.out.display()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let t0 = Instant::now();
    let (detections, poses) = match (&a.detections, &a.scenario) {
        (Some(path), _) => {
            let dets = io_kitti::read_detections(path, a.format.convention())?;
            let poses = a.poses.as_deref().map(io_kitti::read_poses).transpose()?;
            (dets, poses)
        }
        (None, Some(name)) => {
            let spec = simulator::scenario(name, a.seed)
                .with_context(|| format!("unknown scenario {name:?}"))?;
            let gen = generate(&spec)?;
            (gen.detections, Some(gen.poses))
        }
        (None, None) => bail!("pass --detections FILE or --scenario NAME"),
    };
    let io_seconds = t0.elapsed().as_secs_f64();
    info!("loaded {} frames in {io_seconds:.3} s", detections.len());
    let (mut report, _) = run_bench(&detections, poses.as_deref(), &cfg, a.repetitions)?;
    report.io_seconds = Some(io_seconds);
    print!("{}", report.to_key_values());
    if let Some(path) = a.json {
        write_json(&path, &report)?;
    }
    if let Some(path) = a.csv {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["frame", "step_us"])?;
        for (f, us) in report.per_frame_us.iter().enumerate() {
            w.write_record([f.to_string(), us.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate(a) => calibrate(a),
        Command::Track(a) => track(a),
        Command::Eval(a) => eval(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot::render(&a.csv, &a.columns, a.title.as_deref(), &a.out),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
