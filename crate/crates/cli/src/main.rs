//! `rainspray`: generate, inspect and render rainy-highway LiDAR datasets.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O or data error.

mod overrides;
mod render;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rainspray::dataset::{generate, stats, DatasetStats};
use rainspray::lidar::LidarModel;
use rainspray::scene::ScenarioConfig;
use rainspray::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "rainspray", version, about = "Rainy-highway LiDAR simulator with tire spray")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for ray casting (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Scenario config (JSON). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set weather.rain_rate_mm_per_h=45`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Scenario seed; shorthand for `--set rng_seed=N`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario and write the dataset.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Summarize a dataset directory.
    Stats {
        dataset: PathBuf,
    },
    /// Dump the beam elevation table as CSV.
    BeamPattern {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render a top-down SVG of one frame plus PNG raster previews.
    Render {
        dataset: PathBuf,
        #[arg(short, long, default_value_t = 0)]
        frame: u64,
        #[arg(short, long)]
        out: PathBuf,
        /// Half-width of the view in metres.
        #[arg(long, default_value_t = 40.0)]
        extent: f64,
    },
    /// Check a config without running anything.
    ValidateConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

enum Failure {
    Usage(String),
    Sim(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Sim(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Sim(e) if e.is_validation() => 1,
            Failure::Sim(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Sim(e) => e.to_string(),
        }
    }

    fn field(&self) -> Option<&str> {
        match self {
            Failure::Sim(Error::Config(c)) => Some(&c.field),
            _ => None,
        }
    }
}

/// Config document after overrides, and the validated config.
fn load_config(args: &ConfigArgs) -> Result<(Value, ScenarioConfig), Failure> {
    let mut doc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Sim(Error::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            serde_json::from_str(&text).map_err(|e| Failure::Sim(Error::ConfigParse(e.to_string())))?
        }
        None => json!({}),
    };
    for o in &args.overrides {
        overrides::apply(&mut doc, o).map_err(Failure::Usage)?;
    }
    if let Some(seed) = args.seed {
        overrides::apply(&mut doc, &format!("rng_seed={seed}")).map_err(Failure::Usage)?;
    }
    let config = ScenarioConfig::from_value(doc.clone())?;
    Ok((doc, config))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn beam_csv(model: &LidarModel) -> String {
    let mut s = String::from("channel,elevation_deg\n");
    for ch in 0..model.channels as usize {
        s.push_str(&format!("{ch},{}\n", model.elevation(ch).to_degrees()));
    }
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| {
        Failure::Sim(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn print_stats(s: &DatasetStats) {
    println!("frames: {} read / {} in manifest (complete: {})", s.frames_read, s.manifest_frames, s.manifest_complete);
    println!("points: {}", s.total_points);
    for (class, n) in &s.class_counts {
        println!("  {class:<8} {n}");
    }
    println!("spray fraction: {:.6}", s.spray_fraction);
    for (class, h) in &s.intensity_histograms {
        match h.fine.mode() {
            Some((lo, hi)) => println!("  {class:<8} intensity mode (fine) [{lo:.4}, {hi:.4})"),
            None => println!("  {class:<8} intensity mode (fine) n/a"),
        }
    }
    for (w, n) in &s.frames_per_weather_class {
        println!("weather {w}: {n} frame(s)");
    }
    for c in &s.corrupt {
        println!("corrupt: {c}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Generate { config, out } => {
            let (doc, config) = load_config(&config)?;
            let manifest = generate(&config, Some(&doc), &out)?;
            if cli.json {
                print_json(&json!({
                    "out": out,
                    "frame_count": manifest.frame_count,
                    "complete": manifest.complete,
                    "rng_seed": manifest.rng_seed,
                }));
            } else {
                println!("wrote {} frame(s) to {}", manifest.frame_count, out.display());
            }
        }
        Command::Stats { dataset } => {
            let s = stats(&dataset)?;
            if cli.json {
                print_json(&serde_json::to_value(&s).expect("stats serialize"));
            } else {
                print_stats(&s);
            }
        }
        Command::BeamPattern { config, out } => {
            let (_, config) = load_config(&config)?;
            let csv = beam_csv(&config.lidar);
            match out {
                Some(path) => write_file(&path, csv.as_bytes())?,
                None => {
                    let _ = std::io::stdout().write_all(csv.as_bytes());
                }
            }
        }
        Command::Render {
            dataset,
            frame,
            out,
            extent,
        } => {
            if extent.is_nan() || extent <= 0.0 {
                return Err(Failure::Usage("--extent must be > 0".into()));
            }
            let opts = render::RenderOptions {
                extent_m: extent,
                ..render::RenderOptions::default()
            };
            let files = render::render_frame(&dataset, frame, &out, &opts)?;
            if cli.json {
                print_json(&json!({ "files": files }));
            } else {
                for f in files {
                    println!("{}", f.display());
                }
            }
        }
        Command::ValidateConfig { config } => {
            load_config(&config)?;
            if cli.json {
                print_json(&json!({ "valid": true }));
            } else {
                println!("config is valid");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .init();

    let json_mode = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            if json_mode {
                print_json(&json!({
                    "error": f.message(),
                    "field": f.field(),
                    "exit_code": f.exit_code(),
                }));
            }
            ExitCode::from(f.exit_code())
        }
    }
}
