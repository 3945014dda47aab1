use std::collections::BTreeMap;

use super::harness::{
    box_grid, fit_line, lanczos_options, mean, mean_interval, realization_operator,
    realization_radii, run_realizations, Medium, Spectrum,
};
use super::settle;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

/// Monte Carlo mean of the eigenvalue count in `(E - δ e_ref, E + δ e_ref]` over energies,
/// window widths and box sizes, with log-log fits in `δ` and in `L`.
pub fn wegner_mc(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let w = &cfg.wegner;
    let mut deltas = w.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut report = ExperimentReport::new(
        "wegner",
        manifest,
        &["realization", "L", "energy", "delta", "count"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;

    // counts[box][energy][delta]
    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Vec<Vec<usize>>>> {
        let mut per_box = Vec::new();
        for (grid, &side) in grids.iter().zip(&cfg.run.boxes) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let mut cache: BTreeMap<u64, usize> = BTreeMap::new();
            let mut at_most = |x: f64| -> Result<usize> {
                if let Some(&n) = cache.get(&x.to_bits()) {
                    return Ok(n);
                }
                let n = spectrum.at_most(x)?;
                cache.insert(x.to_bits(), n);
                Ok(n)
            };
            let mut per_energy = Vec::new();
            for &e in &w.energies {
                let mut row = Vec::new();
                for &d in &deltas {
                    let hi = at_most(e + d * w.e_ref)?;
                    let lo = at_most(e - d * w.e_ref)?;
                    row.push(hi.saturating_sub(lo));
                }
                per_energy.push(row);
            }
            per_box.push(per_energy);
        }
        Ok(per_box)
    });
    let done = settle(&mut report, outcomes)?;
    let trials = done.len().max(1);
    let floor = 1.0 / trials as f64;

    for (r, per_box) in &done {
        for (b, per_energy) in per_box.iter().enumerate() {
            for (ie, row) in per_energy.iter().enumerate() {
                for (id, &c) in row.iter().enumerate() {
                    report.record(vec![
                        (*r).into(),
                        cfg.run.boxes[b].into(),
                        w.energies[ie].into(),
                        deltas[id].into(),
                        c.into(),
                    ]);
                }
            }
        }
    }

    let samples = |b: usize, ie: usize, id: usize| -> Vec<f64> {
        done.iter().map(|(_, v)| v[b][ie][id] as f64).collect()
    };
    let mut means = vec![vec![vec![0.0; deltas.len()]; w.energies.len()]; cfg.run.boxes.len()];
    let mut delta_violations = Vec::new();
    let mut box_violations = Vec::new();
    let mut delta_fits = Vec::new();
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        for (ie, &e) in w.energies.iter().enumerate() {
            let mut curve = Curve::new(
                &format!("delta_E{e}"),
                Some(side),
                &["delta", "mean_count", "ci_low", "ci_high"],
            );
            let (mut lx, mut ly) = (Vec::new(), Vec::new());
            for (id, &d) in deltas.iter().enumerate() {
                let xs = samples(b, ie, id);
                let m = mean(&xs);
                let (lo, hi) = mean_interval(&xs);
                means[b][ie][id] = m;
                curve.rows.push(vec![d, m, lo, hi]);
                if m >= floor {
                    lx.push(d.ln());
                    ly.push(m.ln());
                }
                if id > 0 && m < means[b][ie][id - 1] {
                    delta_violations.push(format!(
                        "L = {side}, E = {e}: mean {m} at δ = {d} below {} at δ = {}",
                        means[b][ie][id - 1],
                        deltas[id - 1]
                    ));
                }
            }
            let fit = fit_line(&lx, &ly);
            if let Some(f) = fit {
                curve.params.insert("delta_slope".into(), f.slope);
                curve.params.insert("log_prefactor".into(), f.intercept);
            }
            report.curves.push(curve);
            delta_fits.push(serde_json::json!({ "L": side, "energy": e, "fit": fit }));
        }
    }

    let mut order: Vec<usize> = (0..cfg.run.boxes.len()).collect();
    order.sort_by(|&i, &j| cfg.run.boxes[i].total_cmp(&cfg.run.boxes[j]));
    let mut box_fits = Vec::new();
    for (ie, &e) in w.energies.iter().enumerate() {
        for (id, &d) in deltas.iter().enumerate() {
            let mut curve = Curve::new(
                &format!("L_E{e}_delta{d}"),
                None,
                &["L", "mean_count"],
            );
            let (mut lx, mut ly) = (Vec::new(), Vec::new());
            let mut previous: Option<(f64, f64)> = None;
            for &b in &order {
                let side = cfg.run.boxes[b];
                let m = means[b][ie][id];
                curve.rows.push(vec![side, m]);
                if m >= floor {
                    lx.push(side.ln());
                    ly.push(m.ln());
                }
                if let Some((ps, pm)) = previous {
                    if side > ps && m < pm {
                        box_violations.push(format!(
                            "E = {e}, δ = {d}: mean {m} at L = {side} below {pm} at L = {ps}"
                        ));
                    }
                }
                previous = Some((side, m));
            }
            let fit = fit_line(&lx, &ly);
            if let Some(f) = fit {
                curve.params.insert("volume_slope".into(), f.slope);
            }
            if cfg.run.boxes.len() > 1 {
                report.curves.push(curve);
            }
            box_fits.push(serde_json::json!({ "energy": e, "delta": d, "fit": fit }));
        }
    }
    report.summarize("means", &means);
    report.summarize("deltas", &deltas);
    report.summarize("delta_fits", delta_fits);
    report.summarize("box_fits", box_fits);
    report.summarize("noise_floor", floor);
    report.check(
        "monotone_in_delta",
        delta_violations.is_empty(),
        if delta_violations.is_empty() { "mean count nondecreasing in δ".into() } else { delta_violations.join("; ") },
    );
    report.check(
        "monotone_in_L",
        box_violations.is_empty(),
        if box_violations.is_empty() { "mean count nondecreasing in L".into() } else { box_violations.join("; ") },
    );
    Ok(report)
}
