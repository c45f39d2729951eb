//! Allocation-only building blocks of the polar Mellin transform (PMT)
//! pre-processor.
//!
//! Everything here is a pure function of its inputs: remap-table
//! construction and the gather that applies it, spectrum magnitude and
//! 8-bit quantization, RGB plane packing, correlation-peak geometry and
//! synthetic test shapes. FFTs, threads, clocks and files live in the
//! `pmt-opp` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod grid;
pub mod lpt;
pub mod matching;
pub mod packing;
pub mod shapes;
pub mod spectrum;

pub use error::{Error, Result};
pub use grid::Grid;
pub use lpt::{apply_lpt, build_map, direct_lpt, PmtParams, RMaxMode, RemapTable};
pub use matching::{peak_to_scale_rotation, CorrelationSurface, MatchResult, Peak};
pub use packing::{pack_planes, pack_planes_into, unpack_planes, ChannelOrder};
pub use spectrum::{center, quantize8, spectrum, ComplexField, SpectrumFrame, SpectrumKind};
