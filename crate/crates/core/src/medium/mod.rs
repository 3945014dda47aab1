//! Random inclusion medium: radius law, realizations and the coefficient fields.

mod coefficient;
mod field;
mod params;
pub mod rng;
mod witness;

pub use coefficient::{
    eval_coefficient, eval_sharp_coefficient, Coefficient, ConstantCoefficient,
    SharpCoefficient, SmoothCoefficient,
};
pub use field::{sample_radii, shift_radii, RadiiField};
pub use params::{derived_constants, DensitySpec, DerivedConstants, ModelParams};
pub use witness::{witness_points, WitnessSet};
