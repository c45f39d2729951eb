use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pmt_core::shapes::{render, Placement, Shape};
use pmt_core::{build_map, ChannelOrder, Grid, PmtParams, RMaxMode, SpectrumKind};
use pmt_opp::formats::{encode_f32, encode_lptm, encode_pgm, read_image, write_atomic};
use pmt_opp::pipeline::{run_pipeline, PipelineConfig, Scenario, SourceSpec};
use pmt_opp::ssri_match::{match_images, PmtEngine};
use pmt_opp::OppError;
use serde::Serialize;

const EXIT_NO_MATCH: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "opp", version, about = "Polar Mellin transform pre-processor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert one image to its PMT (PGM or F32 output, chosen by extension).
    Pmt {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Run the capture/transform/pack/display pipeline and print timings as JSON.
    Bench(BenchArgs),
    /// Match a query image against a reference and print the result as JSON.
    Match {
        reference: PathBuf,
        query: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
        /// Below this re-registration confidence the pair is reported as a
        /// no-match (exit 2).
        #[arg(long, default_value_t = 0.75)]
        min_confidence: f64,
    },
    /// Draw a synthetic test shape as PGM.
    Gen {
        output: PathBuf,
        #[arg(long, default_value = "triangle")]
        shape: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Degrees; positive turns clockwise on screen.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rotation: f64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Translation applied before scaling and rotation, in pixels.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        dx: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        dy: f64,
    },
    /// Write the remap table in LPTM format.
    MapDump {
        output: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
        #[command(flatten)]
        plane: PlaneArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct TransformArgs {
    #[arg(long, default_value_t = 1920)]
    rho_size: usize,
    #[arg(long, default_value_t = 1080)]
    theta_size: usize,
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    /// DC-block radius in Fourier-plane pixels.
    #[arg(long, default_value_t = 4.0)]
    rdc: f64,
    #[arg(long, value_enum, default_value_t = RMax::Inscribed)]
    rmax: RMax,
    #[arg(long, value_enum, default_value_t = Kind::Magnitude)]
    kind: Kind,
}

impl TransformArgs {
    fn params(&self, width: usize, height: usize) -> PmtParams {
        PmtParams::new(width, height)
            .with_output(self.rho_size, self.theta_size)
            .with_radii(self.r0, self.rdc)
            .with_r_max_mode(match self.rmax {
                RMax::Inscribed => RMaxMode::Inscribed,
                RMax::Corner => RMaxMode::Corner,
            })
    }

    fn kind(&self) -> SpectrumKind {
        match self.kind {
            Kind::Magnitude => SpectrumKind::Magnitude,
            Kind::Intensity => SpectrumKind::Intensity,
        }
    }
}

/// Size of the Fourier plane (the camera frame).
#[derive(Args, Debug, Clone)]
struct PlaneArgs {
    #[arg(long, default_value_t = 1920)]
    width: usize,
    #[arg(long, default_value_t = 1080)]
    height: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    transform: TransformArgs,
    #[command(flatten)]
    plane: PlaneArgs,
    #[arg(long, default_value_t = 166.0)]
    rgb_fps: f64,
    #[arg(long, default_value_t = 701)]
    capture_latency_us: u64,
    #[arg(long, default_value_t = 10_000)]
    frames: u64,
    #[arg(long, value_enum, default_value_t = Order::Rgb)]
    channel_order: Order,
    /// Transform threads; defaults to the hardware thread count.
    #[arg(long)]
    workers: Option<usize>,
    /// Largest tolerated fraction of frames over budget.
    #[arg(long, default_value_t = 0.01)]
    miss_threshold: f64,
    /// Input image as `shape[,scale[,rotation]]`; repeat to cycle several.
    #[arg(long = "scenario")]
    scenarios: Vec<Scenario>,
    /// Replay every PGM/F32 image in this directory once instead.
    #[arg(long, conflicts_with = "scenarios")]
    input_dir: Option<PathBuf>,
    /// Save the first packed RGB frames here as PPM.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3, requires = "dump_dir")]
    dump_frames: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RMax {
    Inscribed,
    Corner,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Magnitude,
    Intensity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    Rgb,
    Bgr,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Pmt {
            input,
            output,
            transform,
        } => cmd_pmt(&input, &output, &transform),
        Command::Bench(args) => cmd_bench(&args),
        Command::Match {
            reference,
            query,
            transform,
            min_confidence,
        } => cmd_match(&reference, &query, &transform, min_confidence),
        Command::Gen {
            output,
            shape,
            scale,
            rotation,
            size,
            dx,
            dy,
        } => {
            let placement = Placement {
                scale,
                rotation_deg: rotation,
                dx,
                dy,
            };
            cmd_gen(&shape, &placement, size, &output)
        }
        Command::MapDump {
            output,
            transform,
            plane,
        } => {
            let table = build_map(&transform.params(plane.width, plane.height))?;
            write_atomic(&output, &encode_lptm(&table))?;
            Ok(0)
        }
    }
}

fn cmd_pmt(input: &Path, output: &Path, t: &TransformArgs) -> anyhow::Result<u8> {
    let image = read_image(input)?;
    let engine = PmtEngine::new(&t.params(image.width(), image.height()), t.kind())?;
    let out = engine.transform(&image)?;
    let bytes = match output.extension().and_then(|e| e.to_str()) {
        Some("f32") => encode_f32(&out.map(|&v| v as f32)),
        Some("pgm") => encode_pgm(&normalize8(&out)),
        _ => bail!("{}: output must end in .pgm or .f32", output.display()),
    };
    write_atomic(output, &bytes)?;
    Ok(0)
}

fn normalize8(g: &Grid<f64>) -> Grid<u8> {
    let max = g.data().iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Grid::new(g.width(), g.height());
    }
    g.map(|&v| (v.max(0.0) / max * 255.0 + 0.5).floor() as u8)
}

fn cmd_bench(a: &BenchArgs) -> anyhow::Result<u8> {
    let params = a.transform.params(a.plane.width, a.plane.height);
    let mut config = PipelineConfig {
        kind: a.transform.kind(),
        capture_latency: Duration::from_micros(a.capture_latency_us),
        rgb_fps: a.rgb_fps,
        channel_order: match a.channel_order {
            Order::Rgb => ChannelOrder::Rgb,
            Order::Bgr => ChannelOrder::Bgr,
        },
        frames: a.frames,
        dump: a.dump_dir.clone().map(|d| (d, a.dump_frames)),
        ..PipelineConfig::default()
    };
    if let Some(w) = a.workers {
        config.workers = w;
    }
    if let Some(dir) = &a.input_dir {
        config.source = SourceSpec::Directory(dir.clone());
    } else if !a.scenarios.is_empty() {
        config.source = SourceSpec::Synthetic(a.scenarios.clone());
    }
    if let Some((dir, _)) = &config.dump {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }

    let report = match run_pipeline(&config, &params) {
        Ok(r) => r,
        Err(OppError::Exhausted {
            completed,
            requested,
            report,
        }) => {
            eprintln!("warning: source ran out after {completed} of {requested} frames");
            *report
        }
        Err(e) => return Err(e.into()),
    };
    println!("{}", report.to_json());
    if report.miss_rate() > a.miss_threshold {
        eprintln!(
            "deadline-miss rate {:.4} exceeds threshold {}",
            report.miss_rate(),
            a.miss_threshold
        );
        return Ok(1);
    }
    Ok(0)
}

#[derive(Serialize)]
struct MatchJson {
    scale_a: f64,
    rotation_phi_rad: f64,
    /// `rotation_phi_rad` or that plus pi, whichever re-registered better.
    resolved_phi_rad: f64,
    ambiguous: bool,
    confidence: f64,
    pmt_confidence: f64,
    dx: f64,
    dy: f64,
    matched: bool,
}

fn cmd_match(
    reference: &Path,
    query: &Path,
    t: &TransformArgs,
    min_confidence: f64,
) -> anyhow::Result<u8> {
    let r = read_image(reference)?;
    let q = read_image(query)?;
    if r.dims() != q.dims() {
        bail!(
            "size mismatch: {} is {}x{}, {} is {}x{}",
            reference.display(),
            r.width(),
            r.height(),
            query.display(),
            q.width(),
            q.height()
        );
    }
    let engine = PmtEngine::new(&t.params(r.width(), r.height()), t.kind())?;
    let (json, matched) = match match_images(&r, &q, &engine) {
        Ok(m) => {
            let confidence = m.registration.confidence;
            let matched = confidence >= min_confidence;
            (
                MatchJson {
                    scale_a: m.result.scale_a,
                    rotation_phi_rad: m.result.rotation_phi,
                    resolved_phi_rad: m
                        .registration
                        .rotation_phi
                        .rem_euclid(2.0 * std::f64::consts::PI),
                    ambiguous: m.result.ambiguous,
                    confidence,
                    pmt_confidence: m.result.confidence,
                    dx: m.registration.dx,
                    dy: m.registration.dy,
                    matched,
                },
                matched,
            )
        }
        Err(pmt_core::Error::NoMatch) | Err(pmt_core::Error::InvalidScale(_)) => (
            MatchJson {
                scale_a: f64::NAN,
                rotation_phi_rad: f64::NAN,
                resolved_phi_rad: f64::NAN,
                ambiguous: false,
                confidence: 0.0,
                pmt_confidence: 0.0,
                dx: 0.0,
                dy: 0.0,
                matched: false,
            },
            false,
        ),
        Err(e) => return Err(e.into()),
    };
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(if matched { 0 } else { EXIT_NO_MATCH })
}

fn cmd_gen(shape: &str, placement: &Placement, size: usize, output: &Path) -> anyhow::Result<u8> {
    let Ok(shape) = shape.parse::<Shape>() else {
        let names: Vec<_> = Shape::ALL.iter().map(|s| s.name()).collect();
        bail!(
            "unknown shape {shape:?}; valid shapes: {}",
            names.join(", ")
        );
    };
    if size < 32 {
        bail!("size must be at least 32, got {size}");
    }
    write_atomic(output, &encode_pgm(&render(shape, placement, size, size)))?;
    Ok(0)
}
