use num_complex::Complex64;

use super::harness::{
    box_grid, lanczos_options, mean, realization_operator, realization_radii, run_realizations,
    Medium, Spectrum,
};
use super::projector::window_floor;
use super::{require, settle};
use crate::discretization::{mask_for_region, Region};
use crate::error::Result;
use crate::geometry::distance;
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};
use crate::sparse::dot;
use crate::spectral::{EigenSet, SpectralWindow};

struct Trajectory {
    rank: usize,
    /// `(t, M_n(t), ‖ψ(t)‖, terms)`; empty when the filtered state vanishes.
    points: Vec<(f64, f64, f64, usize)>,
}

/// `M_n(t) = Σ |x - x_c|^n |ψ_t(x)|²`.
pub fn moment(positions: &[f64], state: &[Complex64]) -> f64 {
    positions
        .iter()
        .zip(state)
        .map(|(w, z)| w * z.norm_sqr())
        .sum()
}

/// Spatial moments of `e^{-itA} ψ`, with `ψ` the window projection of the indicator of
/// the centre cell, normalized.
pub fn dynamical_moments(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let dy = &cfg.dynamics;
    let e_plus = require(dy.e_plus, "dynamics.e_plus")?;
    let n = dy.moment as i32;
    let mut times = dy.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut report = ExperimentReport::new(
        "dynamics",
        manifest,
        &["realization", "L", "rank", "t", "moment", "norm", "terms"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let cell = cfg.model.epsilon;
    let setups = grids
        .iter()
        .map(|g| {
            let centre = g.window().center();
            let origin: Vec<f64> = centre.iter().map(|c| c - 0.5 * cell).collect();
            let start = mask_for_region(g, &Region::cube(origin, cell))?.indices;
            let weights: Vec<f64> = (0..g.len())
                .map(|i| distance(&g.coordinate(i), &centre).powi(n))
                .collect();
            Ok((start, weights))
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Trajectory>> {
        let mut out = Vec::new();
        for ((grid, &side), (start, weights)) in grids.iter().zip(&cfg.run.boxes).zip(&setups) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let lo = window_floor(dy.e0, &spectrum);
            let set = if e_plus > lo {
                spectrum.window(lo, e_plus)?
            } else {
                EigenSet::empty(SpectralWindow::new(lo, e_plus))
            };
            let mut indicator = vec![0.0; grid.len()];
            for &i in start {
                indicator[i] = 1.0;
            }
            let mut psi = vec![0.0; grid.len()];
            for v in &set.vectors {
                let c = dot(v, &indicator);
                psi.iter_mut().zip(v).for_each(|(p, x)| *p += c * x);
            }
            let norm = dot(&psi, &psi).sqrt();
            if norm <= 1e-12 * (start.len() as f64).sqrt() {
                out.push(Trajectory {
                    rank: set.len(),
                    points: Vec::new(),
                });
                continue;
            }
            let mut state: Vec<Complex64> =
                psi.iter().map(|&x| Complex64::new(x / norm, 0.0)).collect();
            let mut now = 0.0;
            let mut points = Vec::new();
            for &t in &times {
                let mut terms = 0;
                if t != now {
                    let (next, used) = spectrum.evolve(&state, t - now, dy.tol, dy.max_terms)?;
                    state = next;
                    terms = used;
                    now = t;
                }
                let norm_t = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                points.push((t, moment(weights, &state), norm_t, terms));
            }
            out.push(Trajectory {
                rank: set.len(),
                points,
            });
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;

    let mut unbounded = Vec::new();
    let mut drift = Vec::new();
    let mut empty = 0usize;
    let mut sups = vec![Vec::new(); cfg.run.boxes.len()];
    for (r, trajectories) in &done {
        for (b, tr) in trajectories.iter().enumerate() {
            let side = cfg.run.boxes[b];
            let ceiling = ((cfg.model.d as f64).sqrt() * side).powi(n);
            if tr.points.is_empty() {
                empty += 1;
            }
            let mut sup: f64 = 0.0;
            for &(t, m, nrm, terms) in &tr.points {
                sup = sup.max(m);
                if !(m.is_finite() && m <= ceiling) {
                    unbounded.push(format!("realization {r}, L = {side}, t = {t}: M = {m}"));
                }
                // accumulated over the time steps, each within 10 tol
                let allowed = 10.0 * dy.tol * times.len() as f64;
                if (nrm - 1.0).abs() > allowed {
                    drift.push(format!("realization {r}, L = {side}, t = {t}: ‖ψ‖ = {nrm}"));
                }
                report.record(vec![
                    (*r).into(),
                    side.into(),
                    tr.rank.into(),
                    t.into(),
                    m.into(),
                    nrm.into(),
                    terms.into(),
                ]);
            }
            if !tr.points.is_empty() {
                sups[b].push(sup);
            }
        }
    }
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        let mut curve = Curve::new("moment", Some(side), &["t", "mean_moment"]);
        for (it, &t) in times.iter().enumerate() {
            let ms: Vec<f64> = done
                .iter()
                .filter_map(|(_, trs)| trs[b].points.get(it).map(|p| p.1))
                .collect();
            if !ms.is_empty() {
                curve.rows.push(vec![t, mean(&ms)]);
            }
        }
        curve.params.insert("moment_order".into(), n as f64);
        if !sups[b].is_empty() {
            curve.params.insert("mean_sup_moment".into(), mean(&sups[b]));
        }
        report.curves.push(curve);
    }
    report.summarize("sup_moment", &sups);
    report.summarize("empty_states", empty);
    report.summarize("times", &times);
    report.check(
        "moments_bounded",
        unbounded.is_empty(),
        if unbounded.is_empty() { "M_n(t) finite and within (√d L)^n".into() } else { unbounded.join("; ") },
    );
    report.check(
        "norm_conserved",
        drift.is_empty(),
        if drift.is_empty() { "‖ψ(t)‖ = 1 within tolerance".into() } else { drift.join("; ") },
    );
    Ok(report)
}
