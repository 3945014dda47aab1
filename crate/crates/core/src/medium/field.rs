use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::rng;
use crate::error::{Error, Result};
use crate::geometry::{integer_ratio, multi_indices, steps_in, BoxSpec, LATTICE_TOL};

/// A realization of the radii restricted to the cells of one box.
///
/// Cells are indexed lexicographically with the first axis fastest; cell `j` of the window
/// has absolute lattice index `origin_cell + j` and centre `eps * (origin_cell + j) + eps/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiField {
    dim: usize,
    cell_size: f64,
    origin_cell: Vec<i64>,
    cells_per_axis: usize,
    values: Vec<f64>,
    /// Total uniform shift applied since sampling.
    shift: f64,
    master_seed: u64,
    realization: u64,
}

impl RadiiField {
    /// Builds a field from explicit values (lexicographic, first axis fastest).
    pub fn from_values(params: &ModelParams, window: &BoxSpec, values: Vec<f64>) -> Result<Self> {
        let (origin_cell, m) = window_cells(params, window)?;
        if values.len() != m.pow(params.d as u32) {
            return Err(Error::DimensionMismatch {
                expected: m.pow(params.d as u32),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|&&w| !(w > 0.0 && w < 0.25)) {
            return Err(Error::params(format!("radius {bad} outside (0, 1/4)")));
        }
        Ok(Self {
            dim: params.d,
            cell_size: params.epsilon,
            origin_cell,
            cells_per_axis: m,
            values,
            shift: 0.0,
            master_seed: 0,
            realization: 0,
        })
    }

    /// Every cell carries the same radius `omega`.
    pub fn constant(params: &ModelParams, window: &BoxSpec, omega: f64) -> Result<Self> {
        let (_, m) = window_cells(params, window)?;
        Self::from_values(params, window, vec![omega; m.pow(params.d as u32)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn provenance(&self) -> (u64, u64) {
        (self.master_seed, self.realization)
    }

    pub fn window(&self) -> BoxSpec {
        BoxSpec {
            origin: self
                .origin_cell
                .iter()
                .map(|&c| c as f64 * self.cell_size)
                .collect(),
            side: self.cells_per_axis as f64 * self.cell_size,
        }
    }

    /// Absolute lattice index of window cell `j`.
    pub fn lattice_index(&self, j: usize) -> Vec<i64> {
        let mut flat = j;
        self.origin_cell
            .iter()
            .map(|&o| {
                let c = (flat % self.cells_per_axis) as i64;
                flat /= self.cells_per_axis;
                o + c
            })
            .collect()
    }

    /// Centre of window cell `j`.
    pub fn center(&self, j: usize) -> Vec<f64> {
        self.lattice_index(j)
            .into_iter()
            .map(|c| (c as f64 + 0.5) * self.cell_size)
            .collect()
    }

    /// Window cell containing `x` (points on shared faces go to the upper cell; points on
    /// the outer boundary are clamped inward).
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let m = self.cells_per_axis as i64;
        let slack = LATTICE_TOL * m as f64;
        let mut flat = 0usize;
        let mut stride = 1usize;
        for (k, &xk) in x.iter().enumerate() {
            let rel = xk / self.cell_size - self.origin_cell[k] as f64;
            if !(rel >= -slack && rel <= m as f64 + slack) {
                return Err(Error::OutOfWindow { point: x.to_vec() });
            }
            let c = (rel.floor() as i64).clamp(0, m - 1) as usize;
            flat += c * stride;
            stride *= self.cells_per_axis;
        }
        Ok(flat)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, extra_shift: f64) -> Self {
        Self {
            values,
            shift: self.shift + extra_shift,
            ..self.clone()
        }
    }
}

/// Lattice origin and cells per axis of a box whose corner lies in `eps Z^d`.
fn window_cells(params: &ModelParams, window: &BoxSpec) -> Result<(Vec<i64>, usize)> {
    if window.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            got: window.dim(),
        });
    }
    let m = steps_in(window.side, params.epsilon)?;
    let origin = window
        .origin
        .iter()
        .map(|&o| {
            integer_ratio(o.abs(), params.epsilon)
                .map(|n| if o < 0.0 { -n } else { n })
                .ok_or(Error::NonIntegerBox {
                    side: o,
                    unit: params.epsilon,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((origin, m))
}

/// Samples i.i.d. radii for every cell of `window` by inverse CDF on the cell's own
/// counter-based stream.
pub fn sample_radii(
    params: &ModelParams,
    window: &BoxSpec,
    master_seed: u64,
    realization: u64,
) -> Result<RadiiField> {
    params.validate()?;
    let (origin_cell, m) = window_cells(params, window)?;
    let values = multi_indices(params.d, m)
        .map(|local| {
            let cell: Vec<i64> = local
                .iter()
                .zip(&origin_cell)
                .map(|(&l, &o)| o + l as i64)
                .collect();
            params.quantile(rng::cell_uniform(master_seed, realization, &cell))
        })
        .collect();
    Ok(RadiiField {
        dim: params.d,
        cell_size: params.epsilon,
        origin_cell,
        cells_per_axis: m,
        values,
        shift: 0.0,
        master_seed,
        realization,
    })
}

/// Replaces every radius `omega_z` by `omega_z + s`.
pub fn shift_radii(params: &ModelParams, radii: &RadiiField, s: f64) -> Result<RadiiField> {
    let values: Vec<f64> = radii.values.iter().map(|w| w + s).collect();
    for &w in &values {
        if !(w > 0.0 && w < 0.25) {
            return Err(Error::RejectedShift {
                shift: s,
                reason: format!("shifted radius {w} leaves (0, 1/4)"),
            });
        }
        if !params.fits_in_cell(w) {
            return Err(Error::RejectedShift {
                shift: s,
                reason: format!("shifted radius {w} breaks cell containment"),
            });
        }
    }
    Ok(radii.with_values(values, s))
}
