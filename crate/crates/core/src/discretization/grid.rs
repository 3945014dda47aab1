use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{integer_ratio, BoxSpec};

/// How strictly the spacing must resolve the boundary layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResolutionPolicy {
    /// No constraint (constant-coefficient problems).
    Unconstrained,
    /// Require `h <= thickness / 2`, i.e. at least two nodes across the layer.
    Layer {
        thickness: f64,
        allow_under_resolved: bool,
    },
}

/// Uniform grid on a Dirichlet box; interior nodes only, first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub side: f64,
    pub h: f64,
    /// Interior nodes per axis, `side / h - 1`.
    pub nodes_per_axis: usize,
    /// Set when the spacing violates the layer policy but the caller opted in.
    pub under_resolved: bool,
}

pub fn build_grid(window: &BoxSpec, h: f64, policy: ResolutionPolicy) -> Result<Grid> {
    let steps = match integer_ratio(window.side, h) {
        Some(n) if n >= 1 && h > 0.0 => n as usize,
        _ => {
            return Err(Error::NonDivisibleSpacing {
                h,
                side: window.side,
            })
        }
    };
    let mut under_resolved = false;
    if let ResolutionPolicy::Layer {
        thickness,
        allow_under_resolved,
    } = policy
    {
        let required = 0.5 * thickness;
        if h > required * (1.0 + 1e-12) {
            if !allow_under_resolved {
                return Err(Error::UnderResolved { h, required });
            }
            under_resolved = true;
        }
    }
    Ok(Grid {
        dim: window.dim(),
        origin: window.origin.clone(),
        side: window.side,
        h,
        nodes_per_axis: steps - 1,
        under_resolved,
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window(&self) -> BoxSpec {
        BoxSpec::new(self.origin.clone(), self.side)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis.pow(axis as u32)
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let m = self.nodes_per_axis;
        (0..self.dim)
            .map(|_| {
                let i = node % m;
                node /= m;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .rev()
            .fold(0, |acc, &i| acc * self.nodes_per_axis + i)
    }

    pub fn coordinate(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .into_iter()
            .zip(&self.origin)
            .map(|(i, o)| o + (i + 1) as f64 * self.h)
            .collect()
    }

    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.coordinate(i)).collect()
    }
}
