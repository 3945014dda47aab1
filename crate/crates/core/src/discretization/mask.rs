use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Geometric regions used to restrict vectors and resolvent blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Inner boundary belt of the box `origin + (0, side)^d`: the closed box of side
    /// `side - eps` centred in it, minus the open box of side `side - 3 eps`.
    Belt {
        origin: Vec<f64>,
        side: f64,
        epsilon: f64,
    },
    /// Open box of side `side / 3` centred in `origin + (0, side)^d`.
    CenteredThird { origin: Vec<f64>, side: f64 },
    /// Open box `origin + (0, side)^d`.
    Cube { origin: Vec<f64>, side: f64 },
}

impl Region {
    pub fn belt(grid: &Grid, epsilon: f64) -> Self {
        Region::Belt {
            origin: grid.origin.clone(),
            side: grid.side,
            epsilon,
        }
    }

    pub fn centered_third(grid: &Grid) -> Self {
        Region::CenteredThird {
            origin: grid.origin.clone(),
            side: grid.side,
        }
    }

    pub fn cube(origin: Vec<f64>, side: f64) -> Self {
        Region::Cube { origin, side }
    }

    pub fn tag(&self) -> String {
        match self {
            Region::Belt { side, .. } => format!("belt(L={side})"),
            Region::CenteredThird { side, .. } => format!("centered_third(L={side})"),
            Region::Cube { origin, side } => format!("cube({origin:?}, {side})"),
        }
    }

    /// Membership test with absolute slack `tol` on every face.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Region::Belt {
                origin,
                side,
                epsilon,
            } => {
                let outer_closed = x.iter().zip(origin).all(|(xi, o)| {
                    *xi >= o + 0.5 * epsilon - tol && *xi <= o + side - 0.5 * epsilon + tol
                });
                let inner_open = x.iter().zip(origin).all(|(xi, o)| {
                    *xi > o + 1.5 * epsilon + tol && *xi < o + side - 1.5 * epsilon - tol
                });
                outer_closed && !inner_open
            }
            Region::CenteredThird { origin, side } => x.iter().zip(origin).all(|(xi, o)| {
                *xi > o + side / 3.0 + tol && *xi < o + 2.0 * side / 3.0 - tol
            }),
            Region::Cube { origin, side } => x
                .iter()
                .zip(origin)
                .all(|(xi, o)| *xi > o + tol && *xi < o + side - tol),
        }
    }
}

/// Sorted interior node indices lying in a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMask {
    pub indices: Vec<usize>,
    pub region: Region,
}

impl IndexMask {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The full node set of a grid.
    pub fn full(grid: &Grid) -> Self {
        Self {
            indices: (0..grid.len()).collect(),
            region: Region::cube(grid.origin.clone(), grid.side),
        }
    }
}

pub fn mask_for_region(grid: &Grid, region: &Region) -> Result<IndexMask> {
    let tol = 1e-9 * grid.h;
    let indices: Vec<usize> = (0..grid.len())
        .filter(|&i| region.contains(&grid.coordinate(i), tol))
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyMask(region.tag()));
    }
    Ok(IndexMask {
        indices,
        region: region.clone(),
    })
}
