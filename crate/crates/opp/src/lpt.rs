//! Multithreaded application of a [`RemapTable`].

use pmt_core::{Error, Grid, RemapTable};
use rayon::prelude::*;

pub use pmt_core::lpt::{build_map, direct_lpt, PmtParams, RMaxMode};

/// Parallel gather. Output rows are split into one contiguous band per
/// worker of the current rayon pool; the result is identical to
/// [`pmt_core::apply_lpt`].
pub fn apply_lpt<T: Copy + Default + Send + Sync>(
    table: &RemapTable,
    input: &Grid<T>,
) -> pmt_core::Result<Grid<T>> {
    let mut out = Grid::new(table.rho_size(), table.theta_size());
    apply_lpt_into(table, input, &mut out)?;
    Ok(out)
}

/// As [`apply_lpt`], reusing `out`.
pub fn apply_lpt_into<T: Copy + Default + Send + Sync>(
    table: &RemapTable,
    input: &Grid<T>,
    out: &mut Grid<T>,
) -> pmt_core::Result<()> {
    if input.dims() != (table.in_width(), table.in_height()) {
        return Err(Error::InvalidInput(format!(
            "input is {}x{}, table expects {}x{}",
            input.width(),
            input.height(),
            table.in_width(),
            table.in_height()
        )));
    }
    if out.dims() != (table.rho_size(), table.theta_size()) {
        *out = Grid::new(table.rho_size(), table.theta_size());
    }
    let rho = table.rho_size();
    let band = table
        .theta_size()
        .div_ceil(rayon::current_num_threads())
        .max(1);
    let src = input.data();
    out.data_mut()
        .par_chunks_mut(band * rho)
        .enumerate()
        .for_each(|(k, rows)| table.gather_rows(src, k * band, rows));
    Ok(())
}
