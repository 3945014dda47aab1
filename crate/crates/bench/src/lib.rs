//! Shared fixtures for the benchmarks.

use inclusion_lab::discretization::{assemble_operator, build_grid, FaceRule, Grid, ResolutionPolicy};
use inclusion_lab::medium::{sample_radii, ModelParams, SmoothCoefficient};
use inclusion_lab::{BoxSpec, CsrMatrix};

/// A two-dimensional box of side `side` with `steps` intervals per axis and one random medium.
pub fn fixture(side: f64, steps: usize) -> (Grid, CsrMatrix) {
    let params = ModelParams {
        omega_plus: 0.18,
        ..ModelParams::default()
    };
    let window = BoxSpec::at_origin(2, side);
    let radii = sample_radii(&params, &window, 1, 0).expect("valid window");
    let grid = build_grid(&window, side / steps as f64, ResolutionPolicy::Unconstrained)
        .expect("divisible spacing");
    let coefficient = SmoothCoefficient {
        params: &params,
        radii: &radii,
    };
    let matrix = assemble_operator(&grid, &coefficient, FaceRule::Midpoint)
        .expect("non-empty grid")
        .matrix;
    (grid, matrix)
}
