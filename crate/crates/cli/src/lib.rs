//! Command-line front end for the `lczmap` pipeline.

pub mod config;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use lczmap::lczparams::{ExtractOptions, Scheme};
use lczmap::lczrules::DEFAULT_MIN_SAMPLES;
use lczmap::{Error, Result};

use config::{PartialConfig, PipelineConfig, ThresholdSource};
use stages::{PipelineInputs, SynthOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lczmap", version, about = "Rule-based Local Climate Zone mapping")]
struct Cli {
    /// Cap on worker threads (1 = reference sequential behavior).
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// JSON file with pipeline settings; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pipeline_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Flags that overlay the shared pipeline settings.
#[derive(Args, Debug, Default, Clone)]
struct Shared {
    #[arg(long)]
    patch_pixels: Option<usize>,
    #[arg(long)]
    min_valid: Option<f64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// table1, table2, fit, or a thresholds CSV path.
    #[arg(long)]
    thresholds: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize a point cloud into min/max/mean/std/count grids.
    Rasterize {
        #[arg(long)]
        input: PathBuf,
        /// xll,yll,ncols,nrows
        #[arg(long)]
        extent: String,
        #[arg(long)]
        out_prefix: String,
        #[arg(long)]
        cellsize: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Derive a noisy land-cover mask from rasterized statistics.
    Label {
        #[arg(long)]
        stats_prefix: String,
        /// Labeling rules JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract per-patch parameter vectors.
    Params {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        elev: PathBuf,
        /// labels.csv or an LCZ raster (.asc).
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Fit per-class intervals (mean ± 2 std) from labeled params.
    Fit {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        /// Optional JSON summary of the fit.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Classify patches against a threshold table.
    Classify {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Score predictions against ground-truth labels.
    Evaluate {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON copy of the report (default: alongside --out).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Threshold table, used to flag labeled classes it lacks.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Render the LCZ map and print the accuracy table.
    Report {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 8)]
        scale: u32,
    },
    /// Generate a synthetic scene with planted parameters.
    Synth {
        /// table1, table2, or a thresholds CSV path.
        #[arg(long)]
        table: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4, 5, 6, 8, 10])]
        classes: Vec<u8>,
        #[arg(long, default_value_t = 5)]
        per_class: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        patch_pixels: Option<usize>,
        #[arg(long)]
        cellsize: Option<f64>,
        /// Also write points.xyz at this many points per m².
        #[arg(long)]
        point_density: Option<f64>,
    },
    /// params -> fit (optional) -> classify -> evaluate -> report.
    Pipeline {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        elev: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        #[arg(long, default_value_t = 8)]
        scale: u32,
        #[command(flatten)]
        shared: Shared,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

impl Shared {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            patch_pixels: self.patch_pixels,
            min_valid: self.min_valid,
            scheme: self.scheme,
            thresholds: self.thresholds.clone(),
            ..Default::default()
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let base = match &cli.pipeline_config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.map_or(0, usize::from))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, base))
}

fn extract_options(cfg: &PipelineConfig) -> ExtractOptions {
    ExtractOptions {
        patch_pixels: cfg.patch_pixels,
        min_valid: cfg.min_valid,
    }
}

fn dispatch(command: Command, base: PartialConfig) -> Result<()> {
    match command {
        Command::Rasterize {
            input,
            extent,
            out_prefix,
            cellsize,
            radius,
        } => {
            let cfg = base
                .overlay(PartialConfig {
                    cellsize,
                    radius,
                    ..Default::default()
                })
                .resolve()?;
            let header = stages::parse_extent(&extent, cfg.cellsize)?;
            stages::rasterize(&input, &header, cfg.radius, &out_prefix).map(|_| ())
        }
        Command::Label {
            stats_prefix,
            config,
            out,
        } => stages::label(&stats_prefix, config.as_deref(), &out),
        Command::Params {
            mask,
            elev,
            labels,
            out,
            shared,
        } => {
            let cfg = base.overlay(shared.partial()).resolve()?;
            stages::params(
                &mask,
                &elev,
                cfg.scheme,
                labels.as_deref(),
                &extract_options(&cfg),
                &out,
            )
        }
        Command::Fit {
            params,
            out,
            min_samples,
            summary,
        } => stages::fit(&params, min_samples, &out, summary.as_deref()),
        Command::Classify { params, out, shared } => {
            let cfg = base.overlay(shared.partial()).resolve()?;
            stages::classify(&params, &cfg.threshold_source()?, &out)
        }
        Command::Evaluate {
            preds,
            out,
            json,
            thresholds,
        } => {
            let source = thresholds.map(|t| t.parse::<ThresholdSource>()).transpose()?;
            let json = json.unwrap_or_else(|| out.with_extension("json"));
            stages::evaluate(&preds, source.as_ref(), &out, &json)
        }
        Command::Report {
            preds,
            eval,
            map,
            scale,
        } => stages::render(&preds, eval.as_deref(), &map, scale),
        Command::Synth {
            table,
            classes,
            per_class,
            seed,
            out_dir,
            patch_pixels,
            cellsize,
            point_density,
        } => {
            let cfg = base
                .overlay(PartialConfig {
                    thresholds: table,
                    seed,
                    patch_pixels,
                    cellsize,
                    ..Default::default()
                })
                .resolve()?;
            let source = cfg.threshold_source()?;
            stages::synth(
                &SynthOptions {
                    table: &source,
                    classes: &classes,
                    per_class,
                    seed: cfg.seed,
                    patch_pixels: cfg.patch_pixels,
                    cellsize: cfg.cellsize,
                    point_density,
                },
                &out_dir,
            )?;
            cfg.write_json(&out_dir.join("config.json"))
        }
        Command::Pipeline {
            mask,
            elev,
            labels,
            out_dir,
            min_samples,
            scale,
            shared,
        } => {
            let cfg = base.overlay(shared.partial()).resolve()?;
            let inputs = PipelineInputs {
                mask: &mask,
                elev: &elev,
                labels: labels.as_deref(),
                scheme: cfg.scheme,
                thresholds: cfg.threshold_source()?,
                extract: extract_options(&cfg),
                min_samples,
                scale,
            };
            stages::pipeline(&inputs, &out_dir)?;
            cfg.write_json(&out_dir.join("config.json"))
        }
    }
}

/// Convenience for tests: run with string arguments.
pub fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("lczmap").chain(args.iter().copied()))
}
