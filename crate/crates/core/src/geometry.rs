use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when checking that a length is an integer multiple of another.
pub(crate) const LATTICE_TOL: f64 = 1e-9;

/// The open box `origin + (0, side)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub origin: Vec<f64>,
    pub side: f64,
}

impl BoxSpec {
    pub fn new(origin: Vec<f64>, side: f64) -> Self {
        Self { origin, side }
    }

    /// Box of side `side` anchored at the origin of `R^d`.
    pub fn at_origin(dim: usize, side: f64) -> Self {
        Self {
            origin: vec![0.0; dim],
            side,
        }
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.origin.iter().map(|o| o + 0.5 * self.side).collect()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }
}

/// Returns `n` when `value == n * unit` up to [`LATTICE_TOL`], with `n >= 0`.
pub(crate) fn integer_ratio(value: f64, unit: f64) -> Option<i64> {
    if !(unit > 0.0) || !value.is_finite() {
        return None;
    }
    let ratio = value / unit;
    let n = ratio.round();
    if (ratio - n).abs() <= LATTICE_TOL * ratio.abs().max(1.0) {
        Some(n as i64)
    } else {
        None
    }
}

/// Number of `unit`-steps in `side`, rejecting non-integer or non-positive ratios.
pub(crate) fn steps_in(side: f64, unit: f64) -> Result<usize> {
    match integer_ratio(side, unit) {
        Some(n) if n > 0 => Ok(n as usize),
        _ => Err(Error::NonIntegerBox { side, unit }),
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Iterates lexicographically (first axis fastest) over `{0..m}^dim`.
pub(crate) fn multi_indices(dim: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = m.pow(dim as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; dim];
        for slot in idx.iter_mut() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    })
}
