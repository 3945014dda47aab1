use super::harness::{
    box_grid, fit_line, lanczos_options, mean, realization_operator, realization_radii,
    run_realizations, Medium, Spectrum,
};
use super::settle;
use crate::discretization::{mask_for_region, Region};
use crate::error::{Error, Result};
use crate::geometry::integer_ratio;
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

pub const BLOCK_TOL: f64 = 1e-6;

struct Profile {
    side: f64,
    lambda_min: f64,
    /// Per gap fraction: energy and `(distance, norm)` for `j = 0, 1, …`.
    sweeps: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Masked resolvent norms `‖χ_{Λ(x)} (A - E)⁻¹ χ_{Λ(y_j)}‖` below the spectrum,
/// `E = λ_min - g λ_min`, with `Λ(x)` the corner cell and `y_j = x + j c e_1`.
pub fn combes_thomas_probe(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let cell = cfg.combes_thomas.cell.unwrap_or(cfg.model.epsilon);
    let mut fractions = cfg.combes_thomas.gap_fractions.clone();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    for &side in &cfg.run.boxes {
        if !matches!(integer_ratio(side, cell), Some(n) if n >= 2) {
            return Err(Error::config(
                0,
                format!("combes_thomas.cell = {cell} must divide L = {side} at least twice"),
            ));
        }
    }
    let mut report = ExperimentReport::new(
        "combes_thomas",
        manifest,
        &["realization", "L", "gap_fraction", "energy", "j", "distance", "norm", "log_norm"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let masks = grids
        .iter()
        .zip(&cfg.run.boxes)
        .map(|(grid, &side)| {
            let cells = (side / cell).round() as usize;
            (0..cells)
                .map(|j| {
                    let mut origin = grid.origin.clone();
                    origin[0] += j as f64 * cell;
                    mask_for_region(grid, &Region::cube(origin, cell)).map(|m| m.indices)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Profile>> {
        let mut out = Vec::new();
        for ((grid, &side), cubes) in grids.iter().zip(&cfg.run.boxes).zip(&masks) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let lambda_min = spectrum.lowest(1)?[0];
            let mut sweeps = Vec::new();
            for &g in &fractions {
                let e = lambda_min - g * lambda_min;
                let resolvent = spectrum.resolvent(e)?;
                let mut profile = Vec::new();
                for (j, y) in cubes.iter().enumerate() {
                    let norm = resolvent.block_norm(&cubes[0], y, BLOCK_TOL)?;
                    profile.push((j as f64 * cell, norm));
                }
                sweeps.push((e, profile));
            }
            out.push(Profile {
                side,
                lambda_min,
                sweeps,
            });
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;

    let mut slopes: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); fractions.len()]; cfg.run.boxes.len()];
    let mut fit_rows = Vec::new();
    let mut not_decaying = Vec::new();
    let mut not_ordered = Vec::new();
    for (r, profiles) in &done {
        for (b, p) in profiles.iter().enumerate() {
            let mut per_g = Vec::new();
            for (ig, (e, profile)) in p.sweeps.iter().enumerate() {
                let g = fractions[ig];
                let (mut x, mut y) = (Vec::new(), Vec::new());
                for (j, &(dist, norm)) in profile.iter().enumerate() {
                    report.record(vec![
                        (*r).into(),
                        p.side.into(),
                        g.into(),
                        (*e).into(),
                        j.into(),
                        dist.into(),
                        norm.into(),
                        norm.ln().into(),
                    ]);
                    if j > 0 && norm > 0.0 {
                        x.push(dist);
                        y.push(norm.ln());
                    }
                }
                let fit = fit_line(&x, &y);
                let slope = fit.map_or(f64::NAN, |f| f.slope);
                if !(slope < 0.0) {
                    not_decaying.push(format!("realization {r}, L = {}, g = {g}: slope {slope}", p.side));
                }
                slopes[b][ig].push(slope);
                per_g.push(slope);
                fit_rows.push(serde_json::json!({
                    "realization": r,
                    "L": p.side,
                    "gap_fraction": g,
                    "gap": g * p.lambda_min,
                    "energy": e,
                    "lambda_min": p.lambda_min,
                    "fit": fit,
                    "c_ct": if slope < 0.0 { Some(g * p.lambda_min / slope.abs()) } else { None },
                }));
            }
            for pair in per_g.windows(2) {
                if !(pair[1] < pair[0]) {
                    not_ordered.push(format!(
                        "realization {r}, L = {}: slopes {} then {}",
                        p.side, pair[0], pair[1]
                    ));
                }
            }
        }
    }

    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        for (ig, &g) in fractions.iter().enumerate() {
            let mut curve = Curve::new(&format!("g{g}"), Some(side), &["distance", "log_norm"]);
            let n_j = done
                .first()
                .map_or(0, |(_, p)| p[b].sweeps[ig].1.len());
            for j in 0..n_j {
                let logs: Vec<f64> = done.iter().map(|(_, p)| p[b].sweeps[ig].1[j].1.ln()).collect();
                let dist = done[0].1[b].sweeps[ig].1[j].0;
                curve.rows.push(vec![dist, mean(&logs)]);
            }
            let m = mean(&slopes[b][ig]);
            curve.params.insert("mean_slope".into(), m);
            report.curves.push(curve);
        }
    }
    report.summarize("fits", fit_rows);
    report.summarize("gap_fractions", &fractions);
    report.summarize("mean_slopes", &slopes.iter().map(|s| s.iter().map(|v| mean(v)).collect::<Vec<_>>()).collect::<Vec<_>>());
    report.check(
        "decay",
        not_decaying.is_empty(),
        if not_decaying.is_empty() { "every fitted slope is negative".into() } else { not_decaying.join("; ") },
    );
    report.check(
        "rate_grows_with_gap",
        not_ordered.is_empty(),
        if not_ordered.is_empty() { "larger spectral distance, steeper decay".into() } else { not_ordered.join("; ") },
    );
    Ok(report)
}
