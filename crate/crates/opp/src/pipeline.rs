//! Staggered capture / transform / pack / display schedule.
//!
//! Four threads hand frames along by ownership:
//!
//! ```text
//! capture --(rendezvous)--> transform --(1 slot)--> pack --(1 slot)--> display
//! ```
//!
//! The capture-to-transform hand-off is a rendezvous, so frame `n` is
//! captured while frame `n - 1` is transformed and neither side moves on
//! until both are done. The display is a rate-limited sink that shows one
//! RGB frame (three transforms) per `1 / rgb_fps` and works on its own
//! clock: a frame starts at the later of its arrival and the end of the
//! previous frame.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc::{channel, sync_channel, Receiver, Sender, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use pmt_core::packing::{pack_planes_into, unpack_planes};
use pmt_core::shapes::{render, Placement, Shape};
use pmt_core::{build_map, ChannelOrder, Error, Grid, PmtParams, SpectrumKind};
use serde::Serialize;

use crate::error::{OppError, Result};
use crate::formats::{encode_ppm, read_image, write_atomic};
use crate::ft_engine::capture;
use crate::lpt::apply_lpt_into;

pub const FRAMES_PER_RGB: usize = 3;

/// A hand-off to the display counts as back-pressure once it waits longer
/// than one RGB period plus `1 / BACKPRESSURE_SLACK_DIV` of a period.
pub const BACKPRESSURE_SLACK_DIV: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Mono8,
    Rgb24,
}

impl Depth {
    pub fn bytes_per_pixel(self) -> usize {
        match self {
            Depth::Mono8 => 1,
            Depth::Rgb24 => 3,
        }
    }
}

/// The unit that moves through the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub depth: Depth,
    pub bytes: Vec<u8>,
    pub sequence: u64,
    pub timestamp: Instant,
}

impl Frame {
    pub fn mono(grid: Grid<u8>, sequence: u64, timestamp: Instant) -> Self {
        let (width, height) = grid.dims();
        Frame {
            width,
            height,
            depth: Depth::Mono8,
            bytes: grid.into_vec(),
            sequence,
            timestamp,
        }
    }

    /// A mono frame's pixels as a grid.
    pub fn into_grid(self) -> pmt_core::Result<Grid<u8>> {
        if self.depth != Depth::Mono8 {
            return Err(Error::InvalidInput(
                "RGB frame where mono was expected".into(),
            ));
        }
        Grid::from_vec(self.width, self.height, self.bytes)
    }
}

/// Interleave three consecutive mono frames into one RGB frame.
pub fn pack_rgb(
    triple: &[Frame; 3],
    order: ChannelOrder,
    sequence: u64,
) -> pmt_core::Result<Frame> {
    let [a, b, c] = triple;
    for f in triple {
        if f.depth != Depth::Mono8 {
            return Err(Error::InvalidInput("pack_rgb needs mono frames".into()));
        }
        if (f.width, f.height) != (a.width, a.height) {
            return Err(Error::InvalidInput(format!(
                "frame sizes differ: {}x{} vs {}x{}",
                a.width, a.height, f.width, f.height
            )));
        }
    }
    if b.sequence != a.sequence + 1 || c.sequence != b.sequence + 1 {
        return Err(Error::InvalidInput(format!(
            "sequence numbers {}, {}, {} are not consecutive",
            a.sequence, b.sequence, c.sequence
        )));
    }
    let mut bytes = vec![0; 3 * a.bytes.len()];
    interleave([&a.bytes, &b.bytes, &c.bytes], order, &mut bytes)?;
    Ok(Frame {
        width: a.width,
        height: a.height,
        depth: Depth::Rgb24,
        bytes,
        sequence,
        timestamp: Instant::now(),
    })
}

/// [`pack_planes_into`] with the widest vector unit the CPU offers.
fn interleave(planes: [&[u8]; 3], order: ChannelOrder, out: &mut [u8]) -> pmt_core::Result<()> {
    #[cfg(target_arch = "x86_64")]
    {
        #[target_feature(enable = "avx2")]
        fn avx2(planes: [&[u8]; 3], order: ChannelOrder, out: &mut [u8]) -> pmt_core::Result<()> {
            pack_planes_into(planes, order, out)
        }
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { avx2(planes, order, out) };
        }
    }
    pack_planes_into(planes, order, out)
}

/// Recover the three planes of an RGB frame in triple order.
pub fn unpack_rgb(frame: &Frame, order: ChannelOrder) -> pmt_core::Result<[Grid<u8>; 3]> {
    if frame.depth != Depth::Rgb24 {
        return Err(Error::InvalidInput("unpack_rgb needs an RGB frame".into()));
    }
    let [a, b, c] = unpack_planes(&frame.bytes, order)?;
    let g = |v| Grid::from_vec(frame.width, frame.height, v);
    Ok([g(a)?, g(b)?, g(c)?])
}

/// One generated input image: a shape drawn at a scale and rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub shape: Shape,
    pub placement: Placement,
}

impl FromStr for Scenario {
    type Err = String;

    /// `shape[,scale[,rotation_deg]]`, e.g. `triangle,1.5,30`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split(',');
        let name = parts.next().unwrap_or_default().trim();
        let shape = name.parse::<Shape>().map_err(|_| {
            let names: Vec<_> = Shape::ALL.iter().map(|s| s.name()).collect();
            format!("unknown shape {name:?}; valid shapes: {}", names.join(", "))
        })?;
        let mut num = |what: &str, default: f64| match parts.next() {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("bad {what} {v:?}")),
        };
        let placement = Placement {
            scale: num("scale", 1.0)?,
            rotation_deg: num("rotation", 0.0)?,
            ..Placement::default()
        };
        if parts.next().is_some() {
            return Err(format!("too many fields in scenario {s:?}"));
        }
        Ok(Scenario { shape, placement })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    /// Generated images, cycled forever.
    Synthetic(Vec<Scenario>),
    /// Every `.pgm` / `.f32` file in a directory, in name order, once.
    Directory(PathBuf),
}

impl Default for SourceSpec {
    /// Three views of the triangle, as in a typical RGB triple.
    fn default() -> Self {
        let view = |scale, rotation_deg| Scenario {
            shape: Shape::Triangle,
            placement: Placement {
                scale,
                rotation_deg,
                ..Placement::default()
            },
        };
        SourceSpec::Synthetic(vec![view(1.0, 0.0), view(1.5, 30.0), view(0.75, -45.0)])
    }
}

/// Stand-in for the focal plane array: replays precomputed 8-bit spectra,
/// taking `capture_latency` per frame to model readout and DMA.
#[derive(Debug)]
pub struct FrameSource {
    spectra: Vec<Grid<u8>>,
    cycle: bool,
    next: usize,
    sequence: u64,
    capture_latency: Duration,
}

impl FrameSource {
    /// Number of distinct frames.
    pub fn distinct_frames(&self) -> usize {
        self.spectra.len()
    }

    /// Whether the frames repeat forever.
    pub fn is_cyclic(&self) -> bool {
        self.cycle
    }

    /// Capture the next frame into `buf`, reusing its allocation.
    pub fn next_into(&mut self, mut buf: Vec<u8>) -> Option<Frame> {
        let start = Instant::now();
        if self.spectra.is_empty() || (!self.cycle && self.next >= self.spectra.len()) {
            return None;
        }
        buf.clear();
        buf.extend_from_slice(self.spectra[self.next % self.spectra.len()].data());
        let bytes = buf;
        let (width, height) = self.spectra[0].dims();
        self.next += 1;
        let frame = Frame {
            width,
            height,
            depth: Depth::Mono8,
            bytes,
            sequence: self.sequence,
            timestamp: start,
        };
        self.sequence += 1;
        sleep_until(start + self.capture_latency);
        Some(frame)
    }
}

impl Iterator for FrameSource {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        self.next_into(Vec::new())
    }
}

/// Build the frame source for `spec`: every image is rendered or loaded at
/// the Fourier-plane size in `params`, transformed, and captured as an
/// 8-bit DC-blocked spectrum up front.
pub fn synthetic_source(
    spec: &SourceSpec,
    params: &PmtParams,
    kind: SpectrumKind,
    capture_latency: Duration,
) -> Result<FrameSource> {
    let (w, h) = (params.in_width, params.in_height);
    let (images, cycle) = match spec {
        SourceSpec::Synthetic(scenarios) => {
            if scenarios.is_empty() {
                return Err(OppError::Source("no scenarios given".into()));
            }
            let imgs = scenarios
                .iter()
                .map(|s| render(s.shape, &s.placement, w, h).map(|&v| v as f64))
                .collect::<Vec<_>>();
            (imgs, true)
        }
        SourceSpec::Directory(dir) => (load_directory(dir, w, h)?, false),
    };
    let spectra = images
        .iter()
        .map(|img| capture(img, kind, params.r_dc))
        .collect::<pmt_core::Result<Vec<_>>>()?;
    Ok(FrameSource {
        spectra,
        cycle,
        next: 0,
        sequence: 0,
        capture_latency,
    })
}

fn load_directory(dir: &Path, w: usize, h: usize) -> Result<Vec<Grid<f64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| OppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("pgm") | Some("f32")
                )
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let img = read_image(&p)?;
            if img.dims() != (w, h) {
                return Err(OppError::Source(format!(
                    "{}: image is {}x{}, pipeline expects {w}x{h}",
                    p.display(),
                    img.width(),
                    img.height()
                )));
            }
            Ok(img)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub source: SourceSpec,
    pub kind: SpectrumKind,
    /// Simulated readout + DMA time per captured frame.
    pub capture_latency: Duration,
    /// Display rate in RGB frames per second; three mono frames each.
    pub rgb_fps: f64,
    pub channel_order: ChannelOrder,
    /// Threads for the transform.
    pub workers: usize,
    pub frames: u64,
    /// Test hook: the transform stage takes at least this long.
    pub min_transform_time: Option<Duration>,
    /// Write the first `n` packed frames as PPM into this directory.
    pub dump: Option<(PathBuf, usize)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: SourceSpec::default(),
            kind: SpectrumKind::Magnitude,
            capture_latency: Duration::from_micros(701),
            rgb_fps: 166.0,
            channel_order: ChannelOrder::Rgb,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            frames: 10_000,
            min_transform_time: None,
            dump: None,
        }
    }
}

impl PipelineConfig {
    /// Display time of one RGB frame.
    pub fn rgb_period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.rgb_fps)
    }

    /// Per mono frame budget, `1 / (3 * rgb_fps)`.
    pub fn frame_budget(&self) -> Duration {
        Duration::from_secs_f64(1.0 / (FRAMES_PER_RGB as f64 * self.rgb_fps))
    }

    fn validate(&self) -> Result<()> {
        if !(self.rgb_fps.is_finite() && self.rgb_fps > 0.0) {
            return Err(Error::InvalidParams(format!(
                "rgb_fps must be positive, got {}",
                self.rgb_fps
            ))
            .into());
        }
        if self.workers == 0 {
            return Err(Error::InvalidParams("workers must be at least 1".into()).into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageStats {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
    pub samples: usize,
}

impl StageStats {
    pub fn from_samples(samples: &[Duration]) -> Self {
        if samples.is_empty() {
            return StageStats::default();
        }
        let mut us: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        us.sort_by(f64::total_cmp);
        let rank = |q: f64| us[((q * us.len() as f64).ceil() as usize).clamp(1, us.len()) - 1];
        StageStats {
            mean_us: us.iter().sum::<f64>() / us.len() as f64,
            p50_us: rank(0.50),
            p99_us: rank(0.99),
            max_us: us[us.len() - 1],
            samples: us.len(),
        }
    }
}

/// Start and end of one frame's capture and transform, in microseconds
/// from the start of the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSpan {
    pub sequence: u64,
    pub capture: (f64, f64),
    pub transform: (f64, f64),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TimingReport {
    pub t_cap: StageStats,
    pub t_lpt: StageStats,
    pub t_pack: StageStats,
    pub t_dis: StageStats,
    pub mono_fps: f64,
    pub rgb_fps: f64,
    pub deadline_misses: u64,
    pub frames: u64,
    pub rgb_frames: u64,
    pub valid_entries: usize,
    pub dc_cols: usize,
    pub workers: usize,
    /// Display frames that waited on the upstream stages.
    pub display_stalls: u64,
    /// Pack hand-offs that blocked for more than one RGB period.
    pub backpressure_events: u64,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub samples: StageSamples,
    #[serde(skip)]
    pub spans: Vec<FrameSpan>,
    /// RGB sequence numbers in display order.
    #[serde(skip)]
    pub displayed: Vec<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct StageSamples {
    pub cap: Vec<Duration>,
    pub lpt: Vec<Duration>,
    pub pack: Vec<Duration>,
    pub dis: Vec<Duration>,
}

impl TimingReport {
    /// Mean time per mono frame over the display span.
    pub fn mono_period(&self) -> Option<Duration> {
        (self.mono_fps > 0.0).then(|| Duration::from_secs_f64(1.0 / self.mono_fps))
    }

    pub fn miss_rate(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.deadline_misses as f64 / self.frames as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Captured {
    frame: Frame,
    t_cap: Duration,
    span: (Instant, Instant),
}

struct Packed {
    frame: Frame,
    channels: usize,
    ready: Instant,
}

/// Run the schedule for `config.frames` mono frames.
///
/// Running out of source frames early returns [`OppError::Exhausted`]
/// carrying the report for what was completed.
pub fn run_pipeline(config: &PipelineConfig, params: &PmtParams) -> Result<TimingReport> {
    config.validate()?;
    let table = build_map(params)?;
    let mut report = TimingReport {
        valid_entries: table.valid_count(),
        dc_cols: table.dc_cols(),
        workers: config.workers,
        ..TimingReport::default()
    };
    if config.frames == 0 {
        return Ok(report);
    }

    let source = synthetic_source(&config.source, params, config.kind, config.capture_latency)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| OppError::Source(format!("thread pool: {e}")))?;
    let budget = config.frame_budget();
    let period = config.rgb_period();
    let requested = config.frames;

    let (cap_tx, cap_rx) = sync_channel::<Captured>(0);
    let (lpt_tx, lpt_rx) = sync_channel::<Frame>(1);
    let (pack_tx, pack_rx) = sync_channel::<Packed>(1);
    // spent buffers flow back upstream so steady state allocates nothing
    let (cap_free_tx, cap_free_rx) = channel::<Vec<u8>>();
    let (lpt_free_tx, lpt_free_rx) = channel::<Vec<u8>>();
    let (rgb_free_tx, rgb_free_rx) = channel::<Vec<u8>>();

    let t0 = Instant::now();
    let (cap_samples, lpt_out, pack_out, dis_out) = thread::scope(|s| {
        let capture = s.spawn(move || run_capture(source, requested, cap_tx, cap_free_rx));
        let transform = s.spawn(|| {
            let stage = TransformStage {
                table: &table,
                pool: &pool,
                budget,
                min_time: config.min_transform_time,
                t0,
            };
            stage.run(cap_rx, lpt_tx, cap_free_tx, lpt_free_rx)
        });
        let pack = s.spawn(|| {
            run_pack(
                lpt_rx,
                pack_tx,
                config.channel_order,
                period,
                lpt_free_tx,
                rgb_free_rx,
            )
        });
        let display = s.spawn(|| run_display(pack_rx, period, config.dump.as_ref(), rgb_free_tx));
        (
            capture.join().expect("capture thread"),
            transform.join().expect("transform thread"),
            pack.join().expect("pack thread"),
            display.join().expect("display thread"),
        )
    });
    let (lpt_samples, spans, mut missed) = lpt_out?;
    let pack = pack_out?;
    let display = dis_out?;

    // a stalled hand-off to the display delays all three frames of that triple
    for &seq in &pack.blocked {
        for k in 0..FRAMES_PER_RGB {
            if let Some(m) = missed.get_mut(seq as usize * FRAMES_PER_RGB + k) {
                *m = true;
            }
        }
    }

    let frames = lpt_samples.len() as u64;
    report.frames = frames;
    report.rgb_frames = display.shown.len() as u64;
    report.deadline_misses = missed.iter().filter(|&&m| m).count() as u64;
    report.backpressure_events = pack.blocked.len() as u64;
    report.display_stalls = display.stalls;
    report.wall_seconds = display.wall_end.map_or(0.0, |e| (e - t0).as_secs_f64());
    if let Some(span) = display.span.filter(|d| !d.is_zero()) {
        report.mono_fps = frames as f64 / span.as_secs_f64();
        report.rgb_fps = report.mono_fps / FRAMES_PER_RGB as f64;
    }
    report.t_cap = StageStats::from_samples(&cap_samples);
    report.t_lpt = StageStats::from_samples(&lpt_samples);
    report.t_pack = StageStats::from_samples(&pack.samples);
    report.t_dis = StageStats::from_samples(&display.t_dis);
    report.samples = StageSamples {
        cap: cap_samples,
        lpt: lpt_samples,
        pack: pack.samples,
        dis: display.t_dis,
    };
    report.spans = spans;
    report.displayed = display.shown;

    if frames < requested {
        return Err(OppError::Exhausted {
            completed: frames,
            requested,
            report: Box::new(report),
        });
    }
    Ok(report)
}

fn run_capture(
    mut source: FrameSource,
    requested: u64,
    tx: SyncSender<Captured>,
    free: Receiver<Vec<u8>>,
) -> Vec<Duration> {
    let mut samples = Vec::with_capacity(requested.min(1 << 20) as usize);
    for _ in 0..requested {
        let start = Instant::now();
        let buf = free.try_recv().unwrap_or_default();
        let Some(frame) = source.next_into(buf) else {
            break;
        };
        let end = Instant::now();
        let t_cap = end - start;
        samples.push(t_cap);
        if tx
            .send(Captured {
                frame,
                t_cap,
                span: (start, end),
            })
            .is_err()
        {
            break;
        }
    }
    samples
}

struct TransformStage<'a> {
    table: &'a pmt_core::RemapTable,
    pool: &'a rayon::ThreadPool,
    budget: Duration,
    min_time: Option<Duration>,
    t0: Instant,
}

type TransformOut = (Vec<Duration>, Vec<FrameSpan>, Vec<bool>);

impl TransformStage<'_> {
    fn run(
        &self,
        rx: Receiver<Captured>,
        tx: SyncSender<Frame>,
        spent_inputs: Sender<Vec<u8>>,
        free: Receiver<Vec<u8>>,
    ) -> Result<TransformOut> {
        let us = |t: Instant| (t - self.t0).as_secs_f64() * 1e6;
        let (rho, theta) = (self.table.rho_size(), self.table.theta_size());
        let mut samples = Vec::new();
        let mut spans = Vec::new();
        let mut missed = Vec::new();
        for cap in rx {
            let start = Instant::now();
            let sequence = cap.frame.sequence;
            let input = cap.frame.into_grid()?;
            let mut out = match free.try_recv() {
                Ok(buf) if buf.len() == rho * theta => Grid::from_vec(rho, theta, buf)?,
                _ => Grid::new(rho, theta),
            };
            self.pool
                .install(|| apply_lpt_into(self.table, &input, &mut out))?;
            let _ = spent_inputs.send(input.into_vec());
            if let Some(min) = self.min_time {
                sleep_until(start + min);
            }
            let end = Instant::now();
            let t_lpt = end - start;
            samples.push(t_lpt);
            missed.push(cap.t_cap > self.budget || t_lpt > self.budget);
            spans.push(FrameSpan {
                sequence,
                capture: (us(cap.span.0), us(cap.span.1)),
                transform: (us(start), us(end)),
            });
            if tx.send(Frame::mono(out, sequence, end)).is_err() {
                break;
            }
        }
        Ok((samples, spans, missed))
    }
}

struct PackOut {
    samples: Vec<Duration>,
    /// RGB sequence numbers whose hand-off to the display blocked for more
    /// than one period.
    blocked: Vec<u64>,
}

fn run_pack(
    rx: Receiver<Frame>,
    tx: SyncSender<Packed>,
    order: ChannelOrder,
    period: Duration,
    spent_planes: Sender<Vec<u8>>,
    free: Receiver<Vec<u8>>,
) -> Result<PackOut> {
    let mut out = PackOut {
        samples: Vec::new(),
        blocked: Vec::new(),
    };
    let mut pending: Vec<Frame> = Vec::with_capacity(FRAMES_PER_RGB);
    let mut rgb_seq = 0u64;
    let mut rx = rx.into_iter();
    loop {
        let next = rx.next();
        let done = next.is_none();
        if let Some(f) = next {
            pending.push(f);
        }
        let full = pending.len() == FRAMES_PER_RGB;
        if !(full || (done && !pending.is_empty())) {
            if done {
                break;
            }
            continue;
        }

        let start = Instant::now();
        let channels = pending.len();
        let (w, h, seq0) = (pending[0].width, pending[0].height, pending[0].sequence);
        // a short final triple leaves its unused channels dark
        while pending.len() < FRAMES_PER_RGB {
            let seq = seq0 + pending.len() as u64;
            pending.push(Frame::mono(Grid::new(w, h), seq, start));
        }
        let mut bytes = match free.try_recv() {
            Ok(buf) if buf.len() == 3 * w * h => buf,
            _ => vec![0; 3 * w * h],
        };
        interleave(
            [&pending[0].bytes, &pending[1].bytes, &pending[2].bytes],
            order,
            &mut bytes,
        )?;
        for f in pending.drain(..).take(channels) {
            let _ = spent_planes.send(f.bytes);
        }
        let packed_at = Instant::now();
        out.samples.push(packed_at - start);
        let frame = Frame {
            width: w,
            height: h,
            depth: Depth::Rgb24,
            bytes,
            sequence: rgb_seq,
            timestamp: packed_at,
        };
        if tx
            .send(Packed {
                frame,
                channels,
                ready: packed_at,
            })
            .is_err()
        {
            break;
        }
        // a display that keeps pace makes this wait up to one period by
        // design; the slack absorbs sleep overshoot
        if packed_at.elapsed() > period + period / BACKPRESSURE_SLACK_DIV {
            out.blocked.push(rgb_seq);
        }
        rgb_seq += 1;
        if done {
            break;
        }
    }
    Ok(out)
}

struct DisplayOut {
    t_dis: Vec<Duration>,
    shown: Vec<u64>,
    stalls: u64,
    /// First display start to scheduled end of the last display.
    span: Option<Duration>,
    wall_end: Option<Instant>,
}

fn run_display(
    rx: Receiver<Packed>,
    period: Duration,
    dump: Option<&(PathBuf, usize)>,
    spent: Sender<Vec<u8>>,
) -> Result<DisplayOut> {
    let mut out = DisplayOut {
        t_dis: Vec::new(),
        shown: Vec::new(),
        stalls: 0,
        span: None,
        wall_end: None,
    };
    let mut first: Option<Instant> = None;
    let mut prev_end: Option<Instant> = None;
    for p in rx {
        let start = match prev_end {
            None => p.ready,
            Some(end) if p.ready > end => {
                out.stalls += 1;
                p.ready
            }
            Some(end) => end,
        };
        first.get_or_insert(start);
        // a partial triple only occupies its filled channel slots
        let busy = period.mul_f64(p.channels as f64 / FRAMES_PER_RGB as f64);
        let end = start + busy;

        if let Some((dir, limit)) = dump {
            if (p.frame.sequence as usize) < *limit {
                let bytes = encode_ppm(p.frame.width, p.frame.height, &p.frame.bytes);
                write_atomic(dir.join(format!("rgb_{:06}.ppm", p.frame.sequence)), &bytes)?;
            }
        }
        sleep_until(end);
        let woke = Instant::now();
        out.t_dis.push(woke.saturating_duration_since(start));
        out.shown.push(p.frame.sequence);
        let _ = spent.send(p.frame.bytes);
        prev_end = Some(end);
        out.wall_end = Some(woke);
    }
    if let (Some(first), Some(end)) = (first, prev_end) {
        out.span = Some(end - first);
    }
    Ok(out)
}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}
