use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::harness::{
    box_grid, cell_partition, fit_line, lanczos_options, mean, realization_operator,
    realization_radii, run_realizations, Medium, Spectrum,
};
use super::{require, settle};
use crate::error::{Error, Result};
use crate::geometry::{distance, integer_ratio};
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};
use crate::spectral::{EigenSet, SpectralWindow};

/// Lower end of a spectral window: the configured energy, or just below the spectrum.
pub(crate) fn window_floor(configured: Option<f64>, spectrum: &Spectrum<'_>) -> f64 {
    configured.unwrap_or_else(|| {
        let (lo, hi) = spectrum.matrix().gershgorin();
        lo - 1e-6 * (hi - lo)
    })
}

/// `G_x = V_xᵀ V_x` per cell, so that `‖χ_x P χ_y‖²_HS = <G_x, G_y>_F`.
fn gram_blocks(set: &EigenSet, cells: &[(Vec<f64>, Vec<usize>)]) -> Vec<DMatrix<f64>> {
    let k = set.len();
    cells
        .iter()
        .map(|(_, nodes)| {
            DMatrix::from_fn(k, k, |i, j| {
                nodes
                    .iter()
                    .map(|&n| set.vectors[i][n] * set.vectors[j][n])
                    .sum()
            })
        })
        .collect()
}

struct Kernel {
    rank: usize,
    diagonal_sum: f64,
    /// `(distance, ‖χ_x P χ_y‖_HS)` over unordered pairs of cells.
    pairs: Vec<(f64, f64)>,
}

fn bins(pairs: &[(f64, f64)]) -> BTreeMap<u64, (f64, Vec<f64>)> {
    let mut out: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for &(d, v) in pairs {
        // distances on the cell lattice are exact up to rounding
        let key = (d * 1e9).round() as u64;
        out.entry(key).or_insert((d, Vec::new())).1.push(v);
    }
    out
}

/// Hilbert–Schmidt norms of `χ_x P χ_y` for the spectral projector of `(E0, E+]`, with a
/// stretched-exponential fit `HS(d) = HS(0) exp(-(d/ℓ)^ζ)`.
pub fn projector_decay(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let e_plus = require(cfg.projector.e_plus, "projector.e_plus")?;
    let cell = cfg.projector.cell.unwrap_or(cfg.model.epsilon);
    for &side in &cfg.run.boxes {
        if !matches!(integer_ratio(side, cell), Some(n) if n >= 1) {
            return Err(Error::config(
                0,
                format!("projector.cell = {cell} does not divide L = {side}"),
            ));
        }
    }
    let mut report = ExperimentReport::new(
        "projector_decay",
        manifest,
        &["realization", "L", "rank", "distance", "pairs", "mean_hs", "max_hs"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let partitions: Vec<_> = grids.iter().map(|g| cell_partition(g, cell)).collect();

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Kernel>> {
        let mut out = Vec::new();
        for ((grid, &side), cells) in grids.iter().zip(&cfg.run.boxes).zip(&partitions) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let lo = window_floor(cfg.projector.e0, &spectrum);
            let set = if e_plus > lo {
                spectrum.window(lo, e_plus)?
            } else {
                EigenSet::empty(SpectralWindow::new(lo, e_plus))
            };
            let blocks = gram_blocks(&set, cells);
            let mut pairs = Vec::new();
            let mut diagonal_sum = 0.0;
            for x in 0..cells.len() {
                for y in x..cells.len() {
                    let hs2 = blocks[x].dot(&blocks[y]);
                    if x == y {
                        diagonal_sum += hs2;
                    }
                    pairs.push((distance(&cells[x].0, &cells[y].0), hs2.max(0.0).sqrt()));
                }
            }
            out.push(Kernel {
                rank: set.len(),
                diagonal_sum,
                pairs,
            });
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;

    let mut over_rank = Vec::new();
    let mut empty = 0usize;
    let mut pooled: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.run.boxes.len()];
    for (r, kernels) in &done {
        for (b, k) in kernels.iter().enumerate() {
            let side = cfg.run.boxes[b];
            if k.rank == 0 {
                empty += 1;
            }
            if k.diagonal_sum > k.rank as f64 * (1.0 + 1e-9) + 1e-12 {
                over_rank.push(format!(
                    "realization {r}, L = {side}: Σ ‖χ P χ‖² = {} > rank {}",
                    k.diagonal_sum, k.rank
                ));
            }
            for (_, (d, vals)) in bins(&k.pairs) {
                let max = vals.iter().copied().fold(0.0, f64::max);
                report.record(vec![
                    (*r).into(),
                    side.into(),
                    k.rank.into(),
                    d.into(),
                    vals.len().into(),
                    mean(&vals).into(),
                    max.into(),
                ]);
            }
            pooled[b].extend(k.pairs.iter().copied());
        }
    }

    let mut fits = Vec::new();
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        let profile: Vec<(f64, f64)> = bins(&pooled[b])
            .into_values()
            .map(|(d, v)| (d, mean(&v)))
            .collect();
        let mut curve = Curve::new("hs", Some(side), &["distance", "mean_hs"]);
        curve.rows = profile.iter().map(|&(d, v)| vec![d, v]).collect();
        let hs0 = profile.first().map_or(0.0, |p| p.1);
        let (x, y): (Vec<f64>, Vec<f64>) = profile
            .iter()
            .filter(|&&(d, v)| d > 0.0 && v > 0.0 && v < hs0)
            .map(|&(d, v)| (d.ln(), (-(v / hs0).ln()).ln()))
            .unzip();
        let fit = fit_line(&x, &y);
        if let Some(f) = fit {
            let zeta = f.slope;
            let length = (-f.intercept / zeta).exp();
            curve.params.insert("zeta".into(), zeta);
            curve.params.insert("length".into(), length);
            curve.params.insert("hs0".into(), hs0);
        }
        report.curves.push(curve);
        fits.push(serde_json::json!({
            "L": side,
            "hs0": hs0,
            "fit": fit,
            "zeta": fit.map(|f| f.slope),
            "length": fit.map(|f| (-f.intercept / f.slope).exp()),
        }));
    }
    report.summarize("fits", fits);
    report.summarize("empty_windows", empty);
    report.summarize("proxy", "spectral projector of the window; the supremum over f is not computed");
    report.check(
        "diagonal_blocks_within_rank",
        over_rank.is_empty(),
        if over_rank.is_empty() { "Σ_x ‖χ_x P χ_x‖²_HS <= rank P".into() } else { over_rank.join("; ") },
    );
    Ok(report)
}
