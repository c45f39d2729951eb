use pmt_core::shapes::{render, Placement, Shape};
use pmt_core::{build_map, peak_to_scale_rotation, Grid, PmtParams, SpectrumKind};
use pmt_opp::ssri_match::{
    correlate, equalize_columns, match_images, pmt, register_and_locate, translation_surface,
    PmtEngine,
};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn noise(w: usize, h: usize, seed: u64) -> Grid<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    Grid::from_fn(w, h, |_, _| rng.gen_range(0.0..1.0))
}

fn shape(n: usize, s: Shape, scale: f64, rot: f64, d: (f64, f64)) -> Grid<f64> {
    let p = Placement {
        scale,
        rotation_deg: rot,
        dx: d.0,
        dy: d.1,
    };
    render(s, &p, n, n).map(|&v| v as f64)
}

/// Brute-force zero-mean NCC at one lag; `circular_rows` wraps the row lag.
fn ncc_at(a: &Grid<f64>, b: &Grid<f64>, dx: isize, dy: isize, circular_rows: bool) -> f64 {
    let (w, h) = a.dims();
    let mean = |g: &Grid<f64>| g.data().iter().sum::<f64>() / g.data().len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let norm = |g: &Grid<f64>, m: f64| {
        g.data()
            .iter()
            .map(|v| (v - m) * (v - m))
            .sum::<f64>()
            .sqrt()
    };
    let mut acc = 0.0;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (bx, mut by) = (x + dx, y + dy);
            if circular_rows {
                by = by.rem_euclid(h as isize);
            }
            if (0..w as isize).contains(&bx) && (0..h as isize).contains(&by) {
                acc += (a[(x as usize, y as usize)] - ma) * (b[(bx as usize, by as usize)] - mb);
            }
        }
    }
    acc / (norm(a, ma) * norm(b, mb))
}

#[test]
fn pmt_surface_equals_exhaustive_lag_search() {
    let a = noise(64, 64, 1);
    let b = Grid::from_fn(64, 64, |x, y| {
        a[((x + 61) % 64, (y + 28) % 64)] + 0.1 * ((x * y) % 5) as f64
    });
    let s = correlate(&a, &b).unwrap();
    for d_theta in 0..64isize {
        for d_rho in -63..=63isize {
            let want = ncc_at(&a, &b, d_rho, d_theta, true);
            let got = s.at(d_rho, d_theta).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "lag ({d_rho}, {d_theta}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn circular_row_shift_gives_theta_lag() {
    let a = noise(64, 360, 2);
    let b = Grid::from_fn(64, 360, |x, y| a[(x, (y + 360 - 100) % 360)]);
    let s = correlate(&a, &b).unwrap();
    assert_eq!((s.peak().d_rho, s.peak().d_theta), (0, 100));
    assert!((s.peak().value - 1.0).abs() < 1e-9);
}

#[test]
fn zero_filled_column_shift_gives_rho_lag() {
    let a = noise(256, 64, 3);
    let b = Grid::from_fn(256, 64, |x, y| if x >= 50 { a[(x - 50, y)] } else { 0.0 });
    let s = correlate(&a, &b).unwrap();
    assert_eq!((s.peak().d_rho, s.peak().d_theta), (50, 0));
}

#[test]
fn translation_surface_equals_exhaustive_lag_search() {
    let a = noise(24, 20, 4);
    let b = noise(24, 20, 5);
    let s = translation_surface(&a, &b).unwrap();
    for dy in -19..=19isize {
        for dx in -23..=23isize {
            let got = s[((dx + 23) as usize, (dy + 19) as usize)];
            assert!((got - ncc_at(&a, &b, dx, dy, false)).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swapping_arguments_negates_the_peak(seed in any::<u64>(), dr in -20isize..20, dt in 0usize..48) {
        let (w, h) = (48, 48);
        let a = noise(w, h, seed);
        let b = Grid::from_fn(w, h, |x, y| {
            let sx = x as isize - dr;
            if (0..w as isize).contains(&sx) { a[(sx as usize, (y + h - dt) % h)] } else { 0.5 }
        });
        let ab = correlate(&a, &b).unwrap().peak();
        let ba = correlate(&b, &a).unwrap().peak();
        prop_assert_eq!(ab.d_rho, -ba.d_rho);
        prop_assert_eq!(ab.d_theta, (h - ba.d_theta) % h);
    }

    #[test]
    fn equalization_commutes_with_shifts(seed in any::<u64>(), dr in 0usize..16, dt in 0usize..32) {
        let (w, h) = (40, 32);
        let a = noise(w, h, seed);
        let shift = |g: &Grid<f64>| Grid::from_fn(w, h, |x, y| if x >= dr { g[(x - dr, (y + h - dt) % h)] } else { 0.0 });
        let lhs = equalize_columns(&shift(&a));
        let rhs = shift(&equalize_columns(&a));
        for (p, q) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }
}

#[test]
fn equalized_columns_are_standardized() {
    let e = equalize_columns(&noise(16, 50, 6));
    for x in 0..16 {
        let col: Vec<f64> = (0..50).map(|y| e[(x, y)]).collect();
        let mean = col.iter().sum::<f64>() / 50.0;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9);
    }
    let flat = equalize_columns(&Grid::filled(8, 8, 3.0));
    assert!(flat.data().iter().all(|&v| v == 0.0));
}

#[test]
fn pmt_of_constant_image_is_near_zero() {
    let p = PmtParams::new(64, 64).with_output(64, 90);
    let out = pmt(&Grid::filled(64, 64, 7.0), &p, SpectrumKind::Magnitude).unwrap();
    let dc = 7.0 * 64.0 * 64.0;
    assert!(out.data().iter().all(|&v| v.abs() < 1e-9 * dc));
}

#[test]
fn pmt_is_deterministic() {
    let p = PmtParams::new(96, 80).with_output(100, 120);
    let img = noise(96, 80, 7);
    let a = pmt(&img, &p, SpectrumKind::Magnitude).unwrap();
    assert_eq!(a, pmt(&img, &p, SpectrumKind::Magnitude).unwrap());
}

#[test]
fn scaled_scene_shifts_the_signature_by_log_scale_columns() {
    let n = 256;
    let engine = PmtEngine::new(
        &PmtParams::new(n, n).with_output(512, 360),
        SpectrumKind::Magnitude,
    )
    .unwrap();
    let step = engine.table().rho_step();
    let r = engine
        .signature(&shape(n, Shape::Scene, 1.0, 0.0, (0.0, 0.0)))
        .unwrap();
    for a in [1.25f64, 1.5, 2.0] {
        let q = engine
            .signature(&shape(n, Shape::Scene, a, 0.0, (0.0, 0.0)))
            .unwrap();
        let s = correlate(&q, &r).unwrap();
        let want = a.ln() / step;
        assert!(
            (s.peak().d_rho as f64 - want).abs() <= 1.5,
            "a={a}: {} vs {want:.2}",
            s.peak().d_rho
        );
    }
}

#[test]
fn quarter_turn_is_a_quarter_of_the_theta_axis() {
    let n = 128;
    let img = shape(n, Shape::Ell, 1.0, 0.0, (0.0, 0.0));
    // exact 90 degree turn of the pixel grid about the center pixel
    let c = (n / 2) as isize;
    let rot = Grid::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as isize - c, y as isize - c);
        let (sx, sy) = (c + dy, c - dx);
        if (0..n as isize).contains(&sx) && (0..n as isize).contains(&sy) {
            img[(sx as usize, sy as usize)]
        } else {
            0.0
        }
    });
    let engine = PmtEngine::new(
        &PmtParams::new(n, n).with_output(256, 360),
        SpectrumKind::Magnitude,
    )
    .unwrap();
    let s = correlate(
        &engine.transform(&rot).unwrap(),
        &engine.transform(&img).unwrap(),
    )
    .unwrap();
    let lag = s.peak().d_theta % 180;
    assert!((lag as isize - 90).abs() <= 1, "lag {lag}");
}

#[test]
fn register_recovers_pure_translation_exactly() {
    let r = noise(64, 64, 8);
    // query = reference moved by (7, -3), zero-filled
    let q = Grid::from_fn(64, 64, |x, y| {
        let (sx, sy) = (x as isize - 7, y as isize + 3);
        if (0..64).contains(&sx) && (0..64).contains(&sy) {
            r[(sx as usize, sy as usize)]
        } else {
            0.0
        }
    });
    let identity = pmt_core::MatchResult {
        scale_a: 1.0,
        rotation_phi: 0.0,
        ambiguous: false,
        confidence: 1.0,
        translation: None,
    };
    let reg = register_and_locate(&q, &r, &identity).unwrap();
    assert_eq!((reg.dx, reg.dy), (7.0, -3.0));
    // and the winner is the exhaustive maximum
    let best = (-63..=63)
        .flat_map(|dy| (-63..=63).map(move |dx| (dx, dy)))
        .max_by(|a, b| ncc_at(&r, &q, a.0, a.1, false).total_cmp(&ncc_at(&r, &q, b.0, b.1, false)))
        .unwrap();
    assert_eq!(best, (7, -3));
}

#[test]
fn register_tries_the_half_turn_twin_when_ambiguous() {
    let n = 128;
    let r = shape(n, Shape::Ell, 1.0, 0.0, (0.0, 0.0));
    let q = shape(n, Shape::Ell, 1.0, 200.0, (0.0, 0.0));
    let m = pmt_core::MatchResult {
        scale_a: 1.0,
        rotation_phi: 20f64.to_radians(),
        ambiguous: true,
        confidence: 1.0,
        translation: None,
    };
    let reg = register_and_locate(&q, &r, &m).unwrap();
    assert!((reg.rotation_phi - 200f64.to_radians()).abs() < 1e-12);
    assert!(reg.confidence > 0.95);
}

#[test]
fn oversized_scale_is_rejected() {
    let m = pmt_core::MatchResult {
        scale_a: 1e9,
        rotation_phi: 0.0,
        ambiguous: false,
        confidence: 1.0,
        translation: None,
    };
    let img = noise(32, 32, 9);
    assert!(matches!(
        register_and_locate(&img, &img, &m),
        Err(pmt_core::Error::InvalidScale(_))
    ));
}

#[test]
fn matched_pairs_outscore_unrelated_pairs() {
    let n = 256;
    let engine = PmtEngine::new(&PmtParams::new(n, n), SpectrumKind::Magnitude).unwrap();
    let table = engine.table();
    let conf = |a: &Grid<f64>, b: &Grid<f64>| {
        let s = correlate(&engine.signature(b).unwrap(), &engine.signature(a).unwrap()).unwrap();
        peak_to_scale_rotation(&s, table).unwrap().confidence
    };
    for (s, other) in [
        (Shape::Scene, Shape::Ring),
        (Shape::Ell, Shape::Cross),
        (Shape::Star, Shape::Square),
        (Shape::Triangle, Shape::Star),
    ] {
        let r = shape(n, s, 1.0, 0.0, (0.0, 0.0));
        let matched = conf(&r, &shape(n, s, 1.25, 40.0, (3.0, -2.0)));
        let unrelated = conf(&r, &shape(n, other, 1.25, 40.0, (3.0, -2.0)));
        assert!(matched > unrelated, "{s:?}: {matched} vs {unrelated}");
    }
}

#[test]
fn full_match_of_identical_images() {
    let n = 128;
    let img = shape(n, Shape::Scene, 1.0, 0.0, (0.0, 0.0));
    let engine = PmtEngine::new(&PmtParams::new(n, n), SpectrumKind::Magnitude).unwrap();
    let m = match_images(&img, &img, &engine).unwrap();
    assert_eq!((m.result.scale_a, m.result.rotation_phi), (1.0, 0.0));
    assert!((m.result.confidence - 1.0).abs() < 1e-6);
    assert_eq!(m.result.translation, Some((0.0, 0.0)));
    assert!((m.registration.confidence - 1.0).abs() < 1e-6);
}

#[test]
fn mismatched_table_is_rejected() {
    let t = build_map(&PmtParams::new(64, 64).with_output(32, 16)).unwrap();
    let s = correlate(&noise(40, 16, 1), &noise(40, 16, 2)).unwrap();
    assert!(peak_to_scale_rotation(&s, &t).is_err());
}
