//! Shift, scale and rotation invariant matching.
//!
//! Two images are compared through their PMTs: the correlation peak gives
//! scale and rotation, the query is then scaled and turned back and
//! correlated directly against the reference to find the translation that
//! the PMT threw away.

use std::f64::consts::PI;

use pmt_core::matching::resample_similarity;
use pmt_core::{
    build_map, peak_to_scale_rotation, spectrum, CorrelationSurface, Error, Grid, MatchResult,
    PmtParams, RemapTable, SpectrumKind,
};
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::Serialize;

use crate::fft::fft2;
use crate::ft_engine::dft2_centered;
use crate::lpt::apply_lpt;

pub use pmt_core::matching::peak_to_scale_rotation_subpixel;

/// A remap table bound to a spectrum kind; computes PMTs of images of one
/// size.
#[derive(Clone, Debug)]
pub struct PmtEngine {
    table: RemapTable,
    kind: SpectrumKind,
}

impl PmtEngine {
    pub fn new(params: &PmtParams, kind: SpectrumKind) -> pmt_core::Result<Self> {
        Ok(PmtEngine {
            table: build_map(params)?,
            kind,
        })
    }

    pub fn table(&self) -> &RemapTable {
        &self.table
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn transform(&self, image: &Grid<f64>) -> pmt_core::Result<Grid<f64>> {
        let field = dft2_centered(image)?;
        apply_lpt(&self.table, &spectrum(&field, self.kind).values)
    }

    /// The PMT with every rho column standardized; what the matcher
    /// correlates. See [`equalize_columns`].
    pub fn signature(&self, image: &Grid<f64>) -> pmt_core::Result<Grid<f64>> {
        Ok(equalize_columns(&self.transform(image)?))
    }
}

/// Standardize each column (fixed radius) to zero mean and unit variance
/// over theta.
///
/// Magnitude spectra fall off roughly as a power of radius, which in log
/// radius is a smooth trend nearly unchanged by scaling, so a raw PMT
/// correlates best at zero rho lag whatever the scale. Removing the radial
/// profile leaves the angular structure at each radius, which does move
/// with scale. The step commutes with column and circular row shifts, so
/// scale and rotation still become pure translations. Columns with no
/// angular variation (DC block, empty rings) become zero.
pub fn equalize_columns(pmt: &Grid<f64>) -> Grid<f64> {
    let (w, h) = pmt.dims();
    let mut mean = vec![0.0; w];
    let mut var = vec![0.0; w];
    for row in pmt.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= h as f64);
    for row in pmt.rows() {
        for ((s, &v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let inv: Vec<f64> = var
        .iter()
        .zip(&mean)
        .map(|(&s, &m)| {
            let sd = (s / h as f64).sqrt();
            // relative floor: rounding noise on a flat column is not structure
            if sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE) && sd > 0.0 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    Grid::from_fn(w, h, |x, y| (pmt[(x, y)] - mean[x]) * inv[x])
}

/// Polar Mellin transform: log-polar remap of the centered spectrum.
pub fn pmt(
    image: &Grid<f64>,
    params: &PmtParams,
    kind: SpectrumKind,
) -> pmt_core::Result<Grid<f64>> {
    PmtEngine::new(params, kind)?.transform(image)
}

/// Normalized cross-correlation of two PMTs, circular along theta (rows)
/// and zero-padded along rho (columns).
pub fn correlate(pmt_a: &Grid<f64>, pmt_b: &Grid<f64>) -> pmt_core::Result<CorrelationSurface> {
    check_same_dims(pmt_a, pmt_b)?;
    let (rho, theta) = pmt_a.dims();
    let values = ncc_lags(pmt_a, pmt_b, true);
    CorrelationSurface::new(rho, theta, values)
}

/// Normalized cross-correlation over every lag `(dx, dy)` with
/// `|dx| < W`, `|dy| < H`, zero-padded on both axes. Column `dx + W - 1`,
/// row `dy + H - 1`.
pub fn translation_surface(a: &Grid<f64>, b: &Grid<f64>) -> pmt_core::Result<Grid<f64>> {
    check_same_dims(a, b)?;
    Ok(ncc_lags(a, b, false))
}

/// Lag grid of `sum_x a'(x) b'(x + lag) / (|a'| |b'|)` where `'` means
/// zero-mean. Columns are always linear; rows are circular when
/// `circular_rows`.
fn ncc_lags(a: &Grid<f64>, b: &Grid<f64>, circular_rows: bool) -> Grid<f64> {
    let (w, h) = a.dims();
    let pw = 2 * w;
    let ph = if circular_rows { h } else { 2 * h };
    let out_h = if circular_rows { h } else { 2 * h - 1 };

    let (fa, na) = padded_zero_mean(a, pw, ph);
    let (fb, nb) = padded_zero_mean(b, pw, ph);
    let norm = na * nb;
    if norm == 0.0 {
        return Grid::new(2 * w - 1, out_h);
    }
    let mut fa = fa;
    let mut fb = fb;
    fft2(&mut fa, pw, ph, FftDirection::Forward);
    fft2(&mut fb, pw, ph, FftDirection::Forward);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft2(&mut fa, pw, ph, FftDirection::Inverse);
    let scale = 1.0 / ((pw * ph) as f64 * norm);

    Grid::from_fn(2 * w - 1, out_h, |col, row| {
        let dx = col as isize - (w as isize - 1);
        let dy = if circular_rows {
            row as isize
        } else {
            row as isize - (h as isize - 1)
        };
        let px = dx.rem_euclid(pw as isize) as usize;
        let py = dy.rem_euclid(ph as isize) as usize;
        fa[py * pw + px].re * scale
    })
}

fn padded_zero_mean(g: &Grid<f64>, pw: usize, ph: usize) -> (Vec<Complex64>, f64) {
    let (w, _) = g.dims();
    let n = g.data().len() as f64;
    let mean = g.data().iter().sum::<f64>() / n;
    let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
    let mut energy = 0.0;
    for (y, row) in g.rows().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            let z = v - mean;
            energy += z * z;
            buf[y * pw + x] = Complex64::new(z, 0.0);
        }
    }
    debug_assert!(w <= pw);
    (buf, energy.sqrt())
}

fn check_same_dims(a: &Grid<f64>, b: &Grid<f64>) -> pmt_core::Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::InvalidInput(format!(
            "sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Outcome of re-registering a query onto its reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Registration {
    pub dx: f64,
    pub dy: f64,
    pub confidence: f64,
    /// The rotation that won when `phi` and `phi + pi` were both tried.
    pub rotation_phi: f64,
}

/// Undo the scale and rotation in `m` on the query (nearest neighbour,
/// about the image center), then find where it sits in the reference.
///
/// With the ambiguity flag set both `phi` and `phi + pi` are tried and the
/// stronger correlation wins. The translation is `(dx, dy)` such that the
/// re-oriented query is the reference moved by `(dx, dy)`.
pub fn register_and_locate(
    query: &Grid<f64>,
    reference: &Grid<f64>,
    m: &MatchResult,
) -> pmt_core::Result<Registration> {
    check_same_dims(query, reference)?;
    let (w, h) = reference.dims();
    let mut candidates = vec![m.rotation_phi];
    if m.ambiguous {
        candidates.push(m.rotation_phi + PI);
    }

    let mut best: Option<Registration> = None;
    for phi in candidates {
        let upright = resample_similarity(query, m.scale_a, phi)?;
        let surface = ncc_lags(reference, &upright, false);
        let (mut bx, mut by, mut bv) = (0, 0, f64::NEG_INFINITY);
        for (y, row) in surface.rows().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v > bv {
                    (bx, by, bv) = (x, y, v);
                }
            }
        }
        let reg = Registration {
            dx: bx as f64 - (w as f64 - 1.0),
            dy: by as f64 - (h as f64 - 1.0),
            confidence: bv.clamp(0.0, 1.0),
            rotation_phi: phi,
        };
        if best.is_none_or(|b| reg.confidence > b.confidence) {
            best = Some(reg);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Full two-stage match of `query` against `reference`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullMatch {
    pub result: MatchResult,
    pub registration: Registration,
}

pub fn match_images(
    reference: &Grid<f64>,
    query: &Grid<f64>,
    engine: &PmtEngine,
) -> pmt_core::Result<FullMatch> {
    check_same_dims(query, reference)?;
    let surface = correlate(&engine.signature(query)?, &engine.signature(reference)?)?;
    let mut result = peak_to_scale_rotation(&surface, engine.table())?;
    let registration = register_and_locate(query, reference, &result)?;
    result.translation = Some((registration.dx, registration.dy));
    Ok(FullMatch {
        result,
        registration,
    })
}
