//! Centered Fourier-plane types and the FPA stand-in: magnitude or
//! intensity of a centered spectrum, and its 8-bit capture with circular
//! DC blocking.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Grid, Result};

/// Pixel that holds the zero-frequency term after centering.
///
/// One rule for even and odd sizes: `(floor(W/2), floor(H/2))`.
#[inline]
pub fn center(width: usize, height: usize) -> (usize, usize) {
    (width / 2, height / 2)
}

/// Complex 2D spectrum with DC at [`center`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid<Complex64>) -> Result<Self> {
        if grid.width() < 2 || grid.height() < 2 {
            return Err(Error::InvalidInput(format!(
                "complex field must be at least 2x2, got {}x{}",
                grid.width(),
                grid.height()
            )));
        }
        Ok(ComplexField { grid })
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn center(&self) -> (usize, usize) {
        center(self.width(), self.height())
    }

    pub fn grid(&self) -> &Grid<Complex64> {
        &self.grid
    }

    pub fn into_grid(self) -> Grid<Complex64> {
        self.grid
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SpectrumKind {
    /// `|F|`, what the PMT is defined on.
    #[default]
    Magnitude,
    /// `|F|^2`, what a focal plane array records.
    Intensity,
}

/// Non-negative real spectrum, DC at center.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFrame {
    pub kind: SpectrumKind,
    pub values: Grid<f64>,
}

impl SpectrumFrame {
    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }
}

pub fn spectrum(field: &ComplexField, kind: SpectrumKind) -> SpectrumFrame {
    let values = field.grid().map(|c| match kind {
        SpectrumKind::Magnitude => libm::hypot(c.re, c.im),
        SpectrumKind::Intensity => c.re * c.re + c.im * c.im,
    });
    SpectrumFrame { kind, values }
}

/// Quantize a spectrum to 8 bits the way the capture stage sees it.
///
/// Pixels closer than `dc_block_radius` to the center are zeroed. The
/// maximum of what remains maps to 255 and everything else scales
/// linearly, rounded to nearest. An all-zero unblocked region gives an
/// all-zero frame.
pub fn quantize8(spectrum: &SpectrumFrame, dc_block_radius: f64) -> Grid<u8> {
    let (w, h) = (spectrum.width(), spectrum.height());
    let (cx, cy) = center(w, h);
    let blocked = |x: usize, y: usize| {
        let dx = x as f64 - cx as f64;
        let dy = y as f64 - cy as f64;
        libm::sqrt(dx * dx + dy * dy) < dc_block_radius
    };

    let mut max = 0.0f64;
    for (y, row) in spectrum.values.rows().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            if v > max && !blocked(x, y) {
                max = v;
            }
        }
    }

    let mut out: Vec<u8> = Vec::with_capacity(w * h);
    for (y, row) in spectrum.values.rows().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            let q = if max <= 0.0 || blocked(x, y) {
                0
            } else {
                libm::floor(v / max * 255.0 + 0.5).clamp(0.0, 255.0) as u8
            };
            out.push(q);
        }
    }
    Grid::from_vec(w, h, out).expect("dimensions preserved")
}
