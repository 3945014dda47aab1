//! Dirichlet finite differences for `-div(a grad)` on boxes, plus region masks.

mod grid;
mod mask;
mod operator;

pub use grid::{build_grid, Grid, ResolutionPolicy};
pub use mask::{mask_for_region, IndexMask, Region};
pub use operator::{assemble_operator, FaceRule, SparseSymmetricOperator};
