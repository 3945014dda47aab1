use super::harness::{
    box_grid, lanczos_options, realization_operator, realization_radii, run_realizations,
    wilson_interval, Medium, Spectrum,
};
use super::{require, settle};
use crate::discretization::{mask_for_region, Region};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

pub const BLOCK_TOL: f64 = 1e-6;

/// Energy grid `E0 + j (L^(-1/2) / 2) / (n - 1)`, `j = 0..n`.
pub fn energy_grid(e0: f64, side: f64, n: usize) -> Vec<f64> {
    let width = 0.5 / side.sqrt();
    if n == 1 {
        return vec![e0];
    }
    (0..n)
        .map(|j| e0 + width * j as f64 / (n - 1) as f64)
        .collect()
}

enum Probe {
    Norm(f64),
    Skipped(String),
}

/// Probability that `‖χ_{Γ_L} (A - E)⁻¹ χ_{Λ_{L/3}}‖ <= L^(-θ)` at every energy of the grid.
pub fn suitability_mc(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let e0 = require(cfg.suitability.e0, "suitability.e0")?;
    let theta = cfg.suitability.theta;
    let n_e = cfg.suitability.energies;
    let eps = cfg.model.epsilon;
    for &side in &cfg.run.boxes {
        if side < 3.0 * eps * (1.0 - 1e-12) {
            return Err(Error::config(
                0,
                format!("run.boxes: the belt needs L >= 3 eps, got L = {side}"),
            ));
        }
    }
    let mut report = ExperimentReport::new(
        "suitability",
        manifest,
        &["realization", "L", "energy", "norm", "threshold", "below", "status"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let masks = grids
        .iter()
        .map(|g| {
            Ok((
                mask_for_region(g, &Region::belt(g, eps))?.indices,
                mask_for_region(g, &Region::centered_third(g))?.indices,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Vec<Probe>>> {
        let mut out = Vec::new();
        for ((grid, &side), (belt, inner)) in grids.iter().zip(&cfg.run.boxes).zip(&masks) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let mut probes = Vec::new();
            for e in energy_grid(e0, side, n_e) {
                match spectrum.block_norm(e, belt, inner, BLOCK_TOL) {
                    Ok(v) => probes.push(Probe::Norm(v)),
                    Err(err @ (Error::UnresolvedShift { .. } | Error::SolveResidual { .. })) => {
                        probes.push(Probe::Skipped(err.to_string()))
                    }
                    Err(err) => return Err(err),
                }
            }
            out.push(probes);
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;
    let trials = done.len();

    let mut skipped = 0usize;
    // worst[b] = per realization, the largest norm over the energy grid
    let mut worst = vec![Vec::new(); cfg.run.boxes.len()];
    for (r, boxes) in &done {
        for (b, probes) in boxes.iter().enumerate() {
            let side = cfg.run.boxes[b];
            let threshold = side.powf(-theta);
            let mut largest: f64 = 0.0;
            for (e, probe) in energy_grid(e0, side, n_e).into_iter().zip(probes) {
                match probe {
                    Probe::Norm(v) => {
                        largest = largest.max(*v);
                        report.record(vec![
                            (*r).into(),
                            side.into(),
                            e.into(),
                            (*v).into(),
                            threshold.into(),
                            (*v <= threshold).into(),
                            "ok".into(),
                        ]);
                    }
                    Probe::Skipped(why) => {
                        skipped += 1;
                        report.record(vec![
                            (*r).into(),
                            side.into(),
                            e.into(),
                            f64::NAN.into(),
                            threshold.into(),
                            false.into(),
                            format!("skipped: {why}").into(),
                        ]);
                    }
                }
            }
            worst[b].push(largest);
        }
    }

    let thetas: Vec<f64> = (0..=8).map(|j| theta - 2.0 + 0.5 * j as f64).collect();
    let mut estimates = Vec::new();
    let mut non_nested = Vec::new();
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        let events = worst[b].iter().filter(|&&w| w <= side.powf(-theta)).count();
        let (lo, hi) = wilson_interval(events, trials);
        let p = events as f64 / trials.max(1) as f64;
        estimates.push(serde_json::json!({
            "L": side,
            "threshold": side.powf(-theta),
            "probability": p,
            "ci": [lo, hi],
            "max_norm": worst[b].iter().copied().fold(0.0, f64::max),
        }));
        let mut curve = Curve::new("theta", Some(side), &["theta", "probability", "ci_low", "ci_high"]);
        let mut previous: Option<f64> = None;
        for &t in &thetas {
            let k = worst[b].iter().filter(|&&w| w <= side.powf(-t)).count();
            let (l, h) = wilson_interval(k, trials);
            let pt = k as f64 / trials.max(1) as f64;
            if let Some(pp) = previous {
                // larger θ, smaller threshold when L > 1
                if side > 1.0 && pt > pp {
                    non_nested.push(format!("L = {side}: P({t}) = {pt} > {pp}"));
                }
            }
            previous = Some(pt);
            curve.rows.push(vec![t, pt, l, h]);
        }
        curve.params.insert("theta".into(), theta);
        curve.params.insert("probability".into(), p);
        report.curves.push(curve);
    }
    report.summarize("estimates", estimates);
    report.summarize("skipped_energies", skipped);
    report.summarize("theta", theta);
    report.check(
        "nested_in_theta",
        non_nested.is_empty(),
        if non_nested.is_empty() { "probability nonincreasing in θ".into() } else { non_nested.join("; ") },
    );
    Ok(report)
}
