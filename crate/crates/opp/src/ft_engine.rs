//! Software stand-in for the lens and focal plane array: the centered
//! Fourier transform of an image and its captured 8-bit spectrum.

use pmt_core::{quantize8, spectrum, ComplexField, Error, Grid, SpectrumKind};
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::fft::fft2;

pub use pmt_core::spectrum::{center, SpectrumFrame};

/// Unnormalized forward 2D DFT with the zero-frequency term moved to
/// `center(W, H)`. Any size of at least 2x2; nothing is padded.
pub fn dft2_centered(image: &Grid<f64>) -> pmt_core::Result<ComplexField> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(Error::InvalidInput(format!(
            "image must be at least 2x2, got {w}x{h}"
        )));
    }
    let mut data: Vec<Complex64> = image
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2(&mut data, w, h, FftDirection::Forward);

    let (cx, cy) = center(w, h);
    let mut shifted = vec![Complex64::new(0.0, 0.0); w * h];
    for (y, row) in data.chunks_exact(w).enumerate() {
        let sy = (y + cy) % h;
        for (x, &v) in row.iter().enumerate() {
            shifted[sy * w + (x + cx) % w] = v;
        }
    }
    ComplexField::new(Grid::from_vec(w, h, shifted)?)
}

/// What the capture stage records for an image: its centered spectrum of
/// the given kind, DC-blocked and quantized to 8 bits.
pub fn capture(
    image: &Grid<f64>,
    kind: SpectrumKind,
    dc_block_radius: f64,
) -> pmt_core::Result<Grid<u8>> {
    let field = dft2_centered(image)?;
    Ok(quantize8(&spectrum(&field, kind), dc_block_radius))
}
