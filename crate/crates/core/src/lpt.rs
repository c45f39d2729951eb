//! Log-polar transform by precomputed remap.
//!
//! The source pixel for every output `(rho, theta)` depends only on the
//! geometry in [`PmtParams`], so it is computed once into a
//! [`RemapTable`] and the transform itself is a pure gather.
//!
//! Output layout: `theta_size` rows by `rho_size` columns. Column `i` is
//! `rho = i * rho_step` with `r = r0 * exp(rho)`; row `j` is
//! `theta = j * 2pi / theta_size`, counterclockwise from +x with y up.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{center, Error, Grid, Result};

/// Marks an entry with no source pixel.
const INVALID: u32 = u32::MAX;

/// How the outermost transformed radius is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RMaxMode {
    /// `min(W, H) / 2`: unblocked entries have in-bounds sources except
    /// where the outermost ring rounds past an even-sized edge.
    #[default]
    Inscribed,
    /// Half-diagonal of the input; sources past the edges read as zero.
    Corner,
}

/// Geometry of the transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmtParams {
    /// Fourier-plane width in pixels.
    pub in_width: usize,
    /// Fourier-plane height in pixels.
    pub in_height: usize,
    /// Output columns (log-radius axis).
    pub rho_size: usize,
    /// Output rows (angle axis).
    pub theta_size: usize,
    /// Radius at column 0.
    pub r0: f64,
    /// Entries with `r < r_dc` are blocked.
    pub r_dc: f64,
    pub r_max_mode: RMaxMode,
}

impl PmtParams {
    /// Full HD defaults: 1920 x 1080 output, `r0 = 1`, `r_dc = 4`.
    pub fn new(in_width: usize, in_height: usize) -> Self {
        PmtParams {
            in_width,
            in_height,
            rho_size: 1920,
            theta_size: 1080,
            r0: 1.0,
            r_dc: 4.0,
            r_max_mode: RMaxMode::Inscribed,
        }
    }

    pub fn with_output(mut self, rho_size: usize, theta_size: usize) -> Self {
        self.rho_size = rho_size;
        self.theta_size = theta_size;
        self
    }

    pub fn with_radii(mut self, r0: f64, r_dc: f64) -> Self {
        self.r0 = r0;
        self.r_dc = r_dc;
        self
    }

    pub fn with_r_max_mode(mut self, mode: RMaxMode) -> Self {
        self.r_max_mode = mode;
        self
    }

    pub fn r_max(&self) -> f64 {
        let (w, h) = (self.in_width as f64, self.in_height as f64);
        match self.r_max_mode {
            RMaxMode::Inscribed => w.min(h) / 2.0,
            RMaxMode::Corner => libm::sqrt((w / 2.0) * (w / 2.0) + (h / 2.0) * (h / 2.0)),
        }
    }

    /// Log-radius increment per column, `ln(r_max / r0) / (rho_size - 1)`.
    pub fn rho_step(&self) -> f64 {
        libm::log(self.r_max() / self.r0) / (self.rho_size - 1) as f64
    }

    /// Radians per row, `2pi / theta_size`.
    pub fn theta_step(&self) -> f64 {
        2.0 * PI / self.theta_size as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg| Err(Error::InvalidParams(msg));
        if self.in_width < 2 || self.in_height < 2 {
            return bad(format!(
                "input must be at least 2x2, got {}x{}",
                self.in_width, self.in_height
            ));
        }
        if (self.in_width as u64) * (self.in_height as u64) >= INVALID as u64 {
            return bad(format!(
                "input {}x{} too large for 32-bit source indices",
                self.in_width, self.in_height
            ));
        }
        if self.rho_size < 2 || self.theta_size < 2 {
            return bad(format!(
                "output must be at least 2x2, got rho {} theta {}",
                self.rho_size, self.theta_size
            ));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return bad(format!("r0 must be positive, got {}", self.r0));
        }
        if !(self.r_dc.is_finite() && self.r_dc >= self.r0) {
            return bad(format!("r_dc ({}) must be >= r0 ({})", self.r_dc, self.r0));
        }
        let r_max = self.r_max();
        if r_max <= self.r_dc {
            return bad(format!("r_max ({r_max}) must exceed r_dc ({})", self.r_dc));
        }
        Ok(())
    }
}

/// The precomputed `(rho, theta) -> (x, y)` map.
///
/// Entries are stored as linear source offsets `y * in_width + x`, one per
/// output pixel in output row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct RemapTable {
    in_width: usize,
    in_height: usize,
    rho_size: usize,
    theta_size: usize,
    rho_step: f64,
    theta_step: f64,
    dc_cols: usize,
    src: Vec<u32>,
}

impl RemapTable {
    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn in_height(&self) -> usize {
        self.in_height
    }

    pub fn rho_size(&self) -> usize {
        self.rho_size
    }

    pub fn theta_size(&self) -> usize {
        self.theta_size
    }

    pub fn rho_step(&self) -> f64 {
        self.rho_step
    }

    pub fn theta_step(&self) -> f64 {
        self.theta_step
    }

    /// Number of leading columns that fall inside the DC block.
    pub fn dc_cols(&self) -> usize {
        self.dc_cols
    }

    /// Source `(x, y)` for output column `rho` and row `theta`, `None` when
    /// the entry is blocked or out of bounds.
    pub fn entry(&self, rho: usize, theta: usize) -> Option<(u32, u32)> {
        let s = self.src[theta * self.rho_size + rho];
        (s != INVALID).then(|| {
            let w = self.in_width as u32;
            (s % w, s / w)
        })
    }

    pub fn is_valid(&self, rho: usize, theta: usize) -> bool {
        self.src[theta * self.rho_size + rho] != INVALID
    }

    pub fn valid_count(&self) -> usize {
        self.src.iter().filter(|&&s| s != INVALID).count()
    }

    /// Gather output rows `first_row..first_row + out.len() / rho_size`
    /// into `out`. Every element of `out` is written.
    ///
    /// This is the whole transform; callers split the output into row
    /// bands to run it on several threads.
    pub fn gather_rows<T: Copy + Default>(&self, input: &[T], first_row: usize, out: &mut [T]) {
        let rho = self.rho_size;
        let dc = self.dc_cols;
        debug_assert_eq!(input.len(), self.in_width * self.in_height);
        debug_assert_eq!(out.len() % rho, 0);
        for (k, out_row) in out.chunks_exact_mut(rho).enumerate() {
            let base = (first_row + k) * rho;
            let (blocked, live) = out_row.split_at_mut(dc);
            blocked.fill(T::default());
            for (o, &s) in live.iter_mut().zip(&self.src[base + dc..base + rho]) {
                // INVALID is past the end of any input
                *o = input.get(s as usize).copied().unwrap_or_default();
            }
        }
    }
}

pub fn build_map(params: &PmtParams) -> Result<RemapTable> {
    params.validate()?;
    let (w, h) = (params.in_width, params.in_height);
    let (cx, cy) = center(w, h);
    let (cx, cy) = (cx as f64, cy as f64);
    let rho_step = params.rho_step();
    let theta_step = params.theta_step();

    let radii: Vec<f64> = (0..params.rho_size)
        .map(|i| params.r0 * libm::exp(i as f64 * rho_step))
        .collect();
    let dc_cols = radii
        .iter()
        .position(|&r| r >= params.r_dc)
        .unwrap_or(params.rho_size);

    let mut src = Vec::with_capacity(params.rho_size * params.theta_size);
    for j in 0..params.theta_size {
        let theta = j as f64 * theta_step;
        let (sin, cos) = (libm::sin(theta), libm::cos(theta));
        for &r in &radii {
            if r < params.r_dc {
                src.push(INVALID);
                continue;
            }
            let x = libm::floor(cx + r * cos + 0.5);
            let y = libm::floor(cy - r * sin + 0.5);
            if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                src.push((y as usize * w + x as usize) as u32);
            } else {
                src.push(INVALID);
            }
        }
    }

    Ok(RemapTable {
        in_width: w,
        in_height: h,
        rho_size: params.rho_size,
        theta_size: params.theta_size,
        rho_step,
        theta_step,
        dc_cols,
        src,
    })
}

/// Single-threaded transform: `Output(rho, theta) = Input(map(rho, theta))`,
/// zero where the map has no source.
pub fn apply_lpt<T: Copy + Default>(table: &RemapTable, input: &Grid<T>) -> Result<Grid<T>> {
    check_input_dims(table.in_width, table.in_height, input)?;
    let mut out = Grid::new(table.rho_size, table.theta_size);
    table.gather_rows(input.data(), 0, out.data_mut());
    Ok(out)
}

/// Log-polar transform evaluated per output pixel with live trigonometry
/// and no table. Reference for [`apply_lpt`].
pub fn direct_lpt<T: Copy + Default>(params: &PmtParams, input: &Grid<T>) -> Result<Grid<T>> {
    params.validate()?;
    check_input_dims(params.in_width, params.in_height, input)?;
    let (cx, cy) = center(params.in_width, params.in_height);
    let rho_step = params.rho_step();
    let theta_step = params.theta_step();
    Ok(Grid::from_fn(params.rho_size, params.theta_size, |i, j| {
        let rho = i as f64 * rho_step;
        let r = params.r0 * libm::exp(rho);
        if r < params.r_dc {
            return T::default();
        }
        let theta = j as f64 * theta_step;
        let x = libm::floor(cx as f64 + r * libm::cos(theta) + 0.5);
        let y = libm::floor(cy as f64 - r * libm::sin(theta) + 0.5);
        if x < 0.0 || y < 0.0 {
            return T::default();
        }
        input
            .get(x as usize, y as usize)
            .copied()
            .unwrap_or_default()
    }))
}

fn check_input_dims<T>(width: usize, height: usize, input: &Grid<T>) -> Result<()> {
    if input.dims() != (width, height) {
        return Err(Error::InvalidInput(format!(
            "input is {}x{}, table expects {width}x{height}",
            input.width(),
            input.height()
        )));
    }
    Ok(())
}
