//! Host side of the PMT pre-processor: the Fourier front end, the threaded
//! capture/transform/pack/display schedule, the two-stage matcher and the
//! file formats used by the `opp` binary.

pub mod error;
mod fft;
pub mod formats;
pub mod ft_engine;
pub mod lpt;
pub mod pipeline;
pub mod ssri_match;

pub use error::{FormatError, OppError, Result};
pub use pipeline::{run_pipeline, PipelineConfig, Scenario, SourceSpec, StageStats, TimingReport};
pub use ssri_match::{
    correlate, match_images, pmt, register_and_locate, FullMatch, PmtEngine, Registration,
};

pub use pmt_core;
