use std::time::Duration;

use pmt_core::shapes::{render, Placement, Shape};
use pmt_core::{ChannelOrder, Grid, PmtParams, SpectrumKind};
use pmt_opp::formats::{decode_ppm, encode_pgm};
use pmt_opp::pipeline::{
    pack_rgb, run_pipeline, synthetic_source, unpack_rgb, Frame, PipelineConfig, Scenario,
    SourceSpec, FRAMES_PER_RGB,
};
use pmt_opp::OppError;
use proptest::prelude::*;

fn small() -> PmtParams {
    PmtParams::new(128, 128).with_output(128, 90)
}

fn config(frames: u64) -> PipelineConfig {
    PipelineConfig {
        frames,
        workers: 1,
        ..PipelineConfig::default()
    }
}

fn mean(xs: &[Duration]) -> f64 {
    xs.iter().map(Duration::as_secs_f64).sum::<f64>() / xs.len() as f64
}

#[test]
fn zero_frames_is_an_empty_report() {
    let r = run_pipeline(&config(0), &small()).unwrap();
    assert_eq!((r.frames, r.rgb_frames, r.deadline_misses), (0, 0, 0));
    assert_eq!(
        (
            r.t_cap.samples,
            r.t_lpt.samples,
            r.t_pack.samples,
            r.t_dis.samples
        ),
        (0, 0, 0, 0)
    );
    assert!(r.valid_entries > 0);
}

#[test]
fn frames_arrive_in_order_and_none_are_lost() {
    let r = run_pipeline(&config(50), &small()).unwrap();
    assert_eq!(r.frames, 50);
    assert_eq!(r.t_lpt.samples, 50);
    // 16 full triples and one with two channels
    assert_eq!(r.rgb_frames, 17);
    assert_eq!(r.displayed, (0..17).collect::<Vec<u64>>());
    let seqs: Vec<u64> = r.spans.iter().map(|s| s.sequence).collect();
    assert_eq!(seqs, (0..50).collect::<Vec<u64>>());
    assert!((r.mono_fps - FRAMES_PER_RGB as f64 * r.rgb_fps).abs() < 1e-9);
}

#[test]
fn capture_of_each_frame_overlaps_transform_of_the_previous() {
    let cfg = PipelineConfig {
        capture_latency: Duration::from_millis(2),
        min_transform_time: Some(Duration::from_millis(2)),
        ..config(40)
    };
    let r = run_pipeline(&cfg, &small()).unwrap();
    for pair in r.spans.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let overlap = prev.transform.1.min(cur.capture.1) - prev.transform.0.max(cur.capture.0);
        assert!(
            overlap > 0.0,
            "frame {} capture {:?} vs transform {:?}",
            cur.sequence,
            cur.capture,
            prev.transform
        );
        // the barrier: frame n is not transformed before it is captured
        assert!(cur.transform.0 >= cur.capture.1);
    }
}

#[test]
fn throughput_follows_the_slowest_stage() {
    let cfg = PipelineConfig {
        min_transform_time: Some(Duration::from_millis(4)),
        ..config(1000)
    };
    let r = run_pipeline(&cfg, &small()).unwrap();
    let period = 1.0 / r.mono_fps;
    let slowest = mean(&r.samples.cap)
        .max(mean(&r.samples.lpt))
        .max(mean(&r.samples.dis) / FRAMES_PER_RGB as f64);
    assert!(
        (period / slowest - 1.0).abs() <= 0.05,
        "period {period} vs slowest stage {slowest}"
    );
}

#[test]
fn display_bounds_throughput_when_upstream_is_fast() {
    let cfg = PipelineConfig {
        capture_latency: Duration::ZERO,
        rgb_fps: 50.0,
        ..config(150)
    };
    let r = run_pipeline(&cfg, &small()).unwrap();
    assert!((r.mono_fps / 150.0 - 1.0).abs() < 0.05, "{}", r.mono_fps);
    assert_eq!(r.deadline_misses, 0);
}

#[test]
fn slow_transform_misses_every_deadline() {
    let cfg = PipelineConfig {
        min_transform_time: Some(Duration::from_millis(10)),
        ..config(100)
    };
    let r = run_pipeline(&cfg, &small()).unwrap();
    assert_eq!(r.deadline_misses, 100);
    assert!((r.mono_fps - 100.0).abs() < 10.0, "{}", r.mono_fps);
}

#[test]
fn source_timestamps_respect_capture_latency() {
    let lat = Duration::from_micros(701);
    let src = synthetic_source(
        &SourceSpec::default(),
        &small(),
        SpectrumKind::Magnitude,
        lat,
    )
    .unwrap();
    let frames: Vec<Frame> = src.take(20).collect();
    for w in frames.windows(2) {
        assert!(w[1].timestamp - w[0].timestamp >= lat);
        assert_eq!(w[1].sequence, w[0].sequence + 1);
    }
}

#[test]
fn synthetic_frames_are_deterministic() {
    let spec = SourceSpec::Synthetic(vec!["triangle,1,0".parse::<Scenario>().unwrap()]);
    let a = synthetic_source(&spec, &small(), SpectrumKind::Magnitude, Duration::ZERO).unwrap();
    let b = synthetic_source(&spec, &small(), SpectrumKind::Magnitude, Duration::ZERO).unwrap();
    let (fa, fb): (Vec<_>, Vec<_>) = (a.take(3).collect(), b.take(3).collect());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.bytes, y.bytes);
    }
    // one scenario cycles: every frame is the same spectrum
    assert_eq!(fa[0].bytes, fa[2].bytes);
    assert_eq!(fa[0].bytes[64 * 128 + 64], 0, "DC is blocked");
}

#[test]
fn directory_replay_yields_each_file_once() {
    let dir = tempfile::tempdir().unwrap();
    for k in 0..4 {
        let img = render(Shape::ALL[k], &Placement::default(), 128, 128);
        std::fs::write(dir.path().join(format!("img{k}.pgm")), encode_pgm(&img)).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "skipped").unwrap();
    let spec = SourceSpec::Directory(dir.path().to_owned());
    let src = synthetic_source(&spec, &small(), SpectrumKind::Magnitude, Duration::ZERO).unwrap();
    assert_eq!((src.distinct_frames(), src.is_cyclic()), (4, false));
    assert_eq!(src.count(), 4);

    let cfg = PipelineConfig {
        source: spec,
        ..config(10)
    };
    match run_pipeline(&cfg, &small()) {
        Err(OppError::Exhausted {
            completed,
            requested,
            report,
        }) => {
            assert_eq!((completed, requested), (4, 10));
            assert_eq!(report.frames, 4);
            assert_eq!(report.rgb_frames, 2);
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
}

#[test]
fn unreadable_replay_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.pgm"), b"P5\n128 128\n255\n\x01\x02").unwrap();
    let spec = SourceSpec::Directory(dir.path().to_owned());
    let err =
        synthetic_source(&spec, &small(), SpectrumKind::Magnitude, Duration::ZERO).unwrap_err();
    assert!(err.to_string().contains("bad.pgm"), "{err}");
}

#[test]
fn report_json_has_the_documented_keys() {
    let r = run_pipeline(&config(9), &small()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for stage in ["t_cap", "t_lpt", "t_pack", "t_dis"] {
        for k in ["mean_us", "p50_us", "p99_us", "max_us", "samples"] {
            assert!(v[stage][k].is_number(), "{stage}.{k}");
        }
    }
    for k in ["mono_fps", "rgb_fps", "deadline_misses", "frames"] {
        assert!(v[k].is_number(), "{k}");
    }
    assert_eq!(v["frames"], 9);
}

#[test]
fn dumped_frames_put_the_first_transform_in_blue_for_bgr() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SourceSpec::Synthetic(vec![
        "ring".parse().unwrap(),
        "cross".parse().unwrap(),
        "star".parse().unwrap(),
    ]);
    let cfg = PipelineConfig {
        source: spec.clone(),
        channel_order: ChannelOrder::Bgr,
        dump: Some((dir.path().to_owned(), 1)),
        ..config(3)
    };
    let params = small();
    run_pipeline(&cfg, &params).unwrap();
    let (w, h, rgb) =
        decode_ppm(&std::fs::read(dir.path().join("rgb_000000.ppm")).unwrap()).unwrap();
    assert_eq!((w, h), (128, 90));

    let table = pmt_core::build_map(&params).unwrap();
    let src = synthetic_source(&spec, &params, SpectrumKind::Magnitude, Duration::ZERO).unwrap();
    let lpts: Vec<Vec<u8>> = src
        .take(3)
        .map(|f| {
            pmt_core::apply_lpt(&table, &f.into_grid().unwrap())
                .unwrap()
                .into_vec()
        })
        .collect();
    let blue: Vec<u8> = rgb.chunks_exact(3).map(|p| p[2]).collect();
    let red: Vec<u8> = rgb.chunks_exact(3).map(|p| p[0]).collect();
    assert_eq!(blue, lpts[0]);
    assert_eq!(red, lpts[2]);
}

#[test]
fn bad_rates_are_rejected() {
    for fps in [0.0, -1.0, f64::NAN] {
        let cfg = PipelineConfig {
            rgb_fps: fps,
            ..config(3)
        };
        assert!(run_pipeline(&cfg, &small()).is_err());
    }
}

fn mono(v: Vec<u8>, w: usize, h: usize, seq: u64) -> Frame {
    Frame::mono(
        Grid::from_vec(w, h, v).unwrap(),
        seq,
        std::time::Instant::now(),
    )
}

proptest! {
    #[test]
    fn pack_then_unpack_is_identity(
        (w, h, planes) in (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), proptest::collection::vec(proptest::collection::vec(any::<u8>(), w * h), 3))
        }),
        bgr in any::<bool>(),
        seq0 in 0u64..1000,
    ) {
        let order = if bgr { ChannelOrder::Bgr } else { ChannelOrder::Rgb };
        let triple = [
            mono(planes[0].clone(), w, h, seq0),
            mono(planes[1].clone(), w, h, seq0 + 1),
            mono(planes[2].clone(), w, h, seq0 + 2),
        ];
        let packed = pack_rgb(&triple, order, 0).unwrap();
        prop_assert_eq!(packed.bytes.len(), 3 * w * h);
        let back = unpack_rgb(&packed, order).unwrap();
        for k in 0..3 {
            prop_assert_eq!(back[k].data(), &planes[k][..]);
        }
    }
}
