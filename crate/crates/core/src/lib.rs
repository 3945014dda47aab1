pub mod discretization;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod manifest;
pub mod medium;
pub mod report;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use experiments::{run_driver, Driver, ExperimentConfig};
pub use geometry::BoxSpec;
pub use manifest::{emit_config, parse_config, parse_config_str, RunManifest};
pub use medium::{ModelParams, RadiiField};
pub use report::ExperimentReport;
pub use sparse::CsrMatrix;
pub use spectral::{EigenSet, Inertia, ShiftedFactorization, SpectralWindow};
