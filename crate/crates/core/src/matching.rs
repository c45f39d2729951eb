//! Geometry of PMT correlation peaks.
//!
//! A surface row is a theta lag (circular, `0..theta_size`) and a column is
//! a rho lag, `d_rho = column - (rho_size - 1)`. A lag `(d_rho, d_theta)`
//! means the second PMT is the first one moved right by `d_rho` columns and
//! down by `d_theta` rows.
//!
//! Orientation conventions: correlating `pmt(query)` against
//! `pmt(reference)` gives `a = exp(d_rho * rho_step)`, the size of the query
//! relative to the reference, and `phi = d_theta * theta_step`, the rotation
//! of the query in raster coordinates (x right, y down, positive angles turn
//! +x toward +y). Magnitude spectra of real images repeat every pi in
//! theta, so `phi` is only known modulo pi.

use alloc::format;
use core::f64::consts::PI;

use crate::{center, Error, Grid, RemapTable, Result};

/// Secondary peak strength, relative to the primary, that flags the
/// phi / phi + pi ambiguity.
pub const AMBIGUITY_RATIO: f64 = 0.8;

/// Surfaces whose range is below this are treated as flat.
pub const FLAT_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub d_rho: isize,
    /// Row lag in `0..theta_size`.
    pub d_theta: usize,
    pub value: f64,
}

impl Peak {
    /// Row lag folded into `(-theta_size/2, theta_size/2]`.
    pub fn d_theta_signed(&self, theta_size: usize) -> isize {
        let d = self.d_theta as isize;
        if 2 * d > theta_size as isize {
            d - theta_size as isize
        } else {
            d
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSurface {
    rho_size: usize,
    theta_size: usize,
    values: Grid<f64>,
    peak: Peak,
    secondary_peak: Peak,
}

impl CorrelationSurface {
    /// Wrap raw correlation values and locate the global and twin peaks.
    ///
    /// `values` must be `2 * rho_size - 1` wide and `theta_size` high.
    pub fn new(rho_size: usize, theta_size: usize, values: Grid<f64>) -> Result<Self> {
        if rho_size == 0 || theta_size == 0 || values.dims() != (2 * rho_size - 1, theta_size) {
            return Err(Error::InvalidInput(format!(
                "surface is {}x{}, expected {}x{theta_size}",
                values.width(),
                values.height(),
                (2 * rho_size).saturating_sub(1)
            )));
        }

        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for (y, row) in values.rows().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (x, y, v);
                }
            }
        }
        let lag = |x: usize, y: usize, value: f64| Peak {
            d_rho: x as isize - (rho_size as isize - 1),
            d_theta: y,
            value,
        };
        let peak = lag(best.0, best.1, best.2);

        // twin half a turn away; same rho lag up to a couple of columns
        let twin_row = (best.1 + theta_size / 2) % theta_size;
        let row_radius = (theta_size / 90).max(2) as isize;
        let mut second = (twin_row, best.0, f64::NEG_INFINITY);
        for dy in -row_radius..=row_radius {
            let y = (twin_row as isize + dy).rem_euclid(theta_size as isize) as usize;
            if y == best.1 {
                continue;
            }
            let x0 = best.0.saturating_sub(2);
            let x1 = (best.0 + 2).min(values.width() - 1);
            for x in x0..=x1 {
                let v = values[(x, y)];
                if v > second.2 {
                    second = (y, x, v);
                }
            }
        }
        let secondary_peak = if second.2.is_finite() {
            lag(second.1, second.0, second.2)
        } else {
            peak
        };

        Ok(CorrelationSurface {
            rho_size,
            theta_size,
            values,
            peak,
            secondary_peak,
        })
    }

    pub fn rho_size(&self) -> usize {
        self.rho_size
    }

    pub fn theta_size(&self) -> usize {
        self.theta_size
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn peak(&self) -> Peak {
        self.peak
    }

    pub fn secondary_peak(&self) -> Peak {
        self.secondary_peak
    }

    /// Correlation at a lag; theta wraps, rho outside the surface is `None`.
    pub fn at(&self, d_rho: isize, d_theta: isize) -> Option<f64> {
        let x = d_rho + self.rho_size as isize - 1;
        if x < 0 || x >= self.values.width() as isize {
            return None;
        }
        let y = d_theta.rem_euclid(self.theta_size as isize) as usize;
        Some(self.values[(x as usize, y)])
    }

    /// Peak lag refined with a three-point parabola on each axis.
    pub fn refined_peak(&self) -> (f64, f64) {
        let p = self.peak;
        let dt = p.d_theta as isize;
        let vertex = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
            (Some(lo), Some(hi)) => {
                let denom = lo - 2.0 * p.value + hi;
                if denom < 0.0 {
                    (0.5 * (lo - hi) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let off_rho = vertex(self.at(p.d_rho - 1, dt), self.at(p.d_rho + 1, dt));
        let off_theta = vertex(self.at(p.d_rho, dt - 1), self.at(p.d_rho, dt + 1));
        (p.d_rho as f64 + off_rho, p.d_theta as f64 + off_theta)
    }

    fn range(&self) -> f64 {
        let min = self
            .values
            .data()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        self.peak.value - min
    }
}

/// Scale, rotation and (after registration) translation of a query
/// relative to a reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchResult {
    pub scale_a: f64,
    /// Radians in `[0, pi)`.
    pub rotation_phi: f64,
    /// The twin peak at `phi + pi` is within [`AMBIGUITY_RATIO`] of the
    /// primary, so `phi + pi` is an equally good answer.
    pub ambiguous: bool,
    /// Primary peak value clamped to `[0, 1]`.
    pub confidence: f64,
    pub translation: Option<(f64, f64)>,
}

/// Convert the integer peak of `surface` into scale and rotation using the
/// step sizes of `table`.
pub fn peak_to_scale_rotation(
    surface: &CorrelationSurface,
    table: &RemapTable,
) -> Result<MatchResult> {
    let p = surface.peak();
    lag_to_match(surface, table, p.d_rho as f64, p.d_theta as f64)
}

/// As [`peak_to_scale_rotation`] with the subpixel peak of
/// [`CorrelationSurface::refined_peak`].
pub fn peak_to_scale_rotation_subpixel(
    surface: &CorrelationSurface,
    table: &RemapTable,
) -> Result<MatchResult> {
    let (d_rho, d_theta) = surface.refined_peak();
    lag_to_match(surface, table, d_rho, d_theta)
}

fn lag_to_match(
    surface: &CorrelationSurface,
    table: &RemapTable,
    d_rho: f64,
    d_theta: f64,
) -> Result<MatchResult> {
    if (surface.rho_size(), surface.theta_size()) != (table.rho_size(), table.theta_size()) {
        return Err(Error::InvalidInput(format!(
            "surface is for a {}x{} PMT, table produces {}x{}",
            surface.rho_size(),
            surface.theta_size(),
            table.rho_size(),
            table.theta_size()
        )));
    }
    let range = surface.range();
    if range.is_nan() || range < FLAT_EPSILON {
        return Err(Error::NoMatch);
    }
    let primary = surface.peak().value;
    let mut phi = (d_theta * table.theta_step()).rem_euclid(PI);
    if phi >= PI {
        phi = 0.0;
    }
    Ok(MatchResult {
        scale_a: libm::exp(d_rho * table.rho_step()),
        rotation_phi: phi,
        ambiguous: surface.secondary_peak().value >= AMBIGUITY_RATIO * primary,
        confidence: primary.clamp(0.0, 1.0),
        translation: None,
    })
}

/// Nearest-neighbour resample that shrinks the content by `scale` and turns
/// it by `-phi` about [`center`], undoing a query that was grown by `scale`
/// and turned by `phi` (raster convention).
///
/// Output pixel `p` reads input `c + scale * R(phi) (p - c)`; samples past
/// the edges read zero. An output that reads fewer than two distinct source
/// pixels is an error.
pub fn resample_similarity(image: &Grid<f64>, scale: f64, phi: f64) -> Result<Grid<f64>> {
    if !(scale.is_finite() && scale > 0.0) || !phi.is_finite() {
        return Err(Error::InvalidScale(format!(
            "scale {scale}, rotation {phi}"
        )));
    }
    let (w, h) = image.dims();
    let (cx, cy) = center(w, h);
    let (cx, cy) = (cx as f64, cy as f64);
    let (sin, cos) = (libm::sin(phi) * scale, libm::cos(phi) * scale);
    // an image read from a single source pixel carries nothing to match
    let mut first_source: Option<(usize, usize)> = None;
    let mut sources = 0usize;
    let out = Grid::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let sx = libm::floor(cx + cos * dx - sin * dy + 0.5);
        let sy = libm::floor(cy + sin * dx + cos * dy + 0.5);
        if sx < 0.0 || sy < 0.0 || sx >= w as f64 || sy >= h as f64 {
            return 0.0;
        }
        let src = (sx as usize, sy as usize);
        match first_source {
            None => {
                first_source = Some(src);
                sources = 1;
            }
            Some(f) if f != src => sources = 2,
            _ => {}
        }
        image[src]
    });
    if sources < 2 {
        return Err(Error::InvalidScale(format!(
            "resampling a {w}x{h} image by 1/{scale} reads at most one source pixel"
        )));
    }
    Ok(out)
}
