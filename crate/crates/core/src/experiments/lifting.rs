use super::config::ExperimentConfig;
use super::harness::{
    box_grid, fit_line, lanczos_options, mean, realization_operator, realization_radii,
    run_realizations, LinearFit, Medium, Spectrum,
};
use super::settle;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

/// `λ_k` for every shift, per box: `values[box][shift][k]`.
type Sweep = Vec<Vec<Vec<f64>>>;

/// Configured shifts, ascending and always starting at `s = 0`.
fn shift_list(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut shifts = cfg.lifting_shifts();
    shifts.push(0.0);
    shifts.sort_by(f64::total_cmp);
    shifts.dedup();
    shifts
}

fn sweep(cfg: &ExperimentConfig, boxes: &[f64], report: &mut ExperimentReport) -> Result<Vec<(usize, Sweep)>> {
    let shifts = shift_list(cfg);
    let k = cfg.lifting.k;
    let grids = boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_realizations(cfg, |r| -> Result<Sweep> {
        let opts = lanczos_options(cfg, r);
        let mut per_box = Vec::new();
        for (grid, &side) in grids.iter().zip(boxes) {
            let radii = realization_radii(cfg, side, r)?;
            let mut rows = Vec::new();
            for &s in &shifts {
                let a = realization_operator(cfg, grid, &radii, -s, Medium::Smooth)?;
                rows.push(Spectrum::new(&a, grid, cfg, opts)?.lowest(k)?);
            }
            per_box.push(rows);
        }
        Ok(per_box)
    });
    settle(report, outcomes)
}

fn fit_pooled(points: &[(f64, f64)]) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(s, d)| *s > 0.0 && *d > 0.0)
        .map(|(s, d)| (s.ln(), d.ln()))
        .unzip();
    fit_line(&x, &y)
}

/// `Δ_k(s) = λ_k(A_{ω - s}) - λ_k(A_ω)` over the shift list, with a log-log fit of the
/// lifting exponent per `k`.
pub fn lifting_curve(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let shifts = shift_list(cfg);
    let mut report = ExperimentReport::new(
        "lifting",
        manifest,
        &["realization", "L", "k", "s", "lambda", "delta"],
    );
    let done = sweep(cfg, &cfg.run.boxes, &mut report)?;

    let mut negative = Vec::new();
    let mut non_monotone = Vec::new();
    let k_max = cfg.lifting.k;
    // points[b][k] = (s, Δ) pairs pooled over realizations
    let mut points = vec![vec![Vec::new(); k_max]; cfg.run.boxes.len()];
    for (r, per_box) in &done {
        for (b, rows) in per_box.iter().enumerate() {
            let side = cfg.run.boxes[b];
            for k in 0..rows[0].len() {
                let reference = rows[0][k];
                let mut last: Option<(f64, f64)> = None;
                for (i, &s) in shifts.iter().enumerate() {
                    let lambda = rows[i][k];
                    let delta = lambda - reference;
                    if delta < 0.0 {
                        negative.push(format!("realization {r}, L = {side}, k = {}, s = {s}: {delta}", k + 1));
                    }
                    if let Some((ps, pd)) = last {
                        if s > ps && delta < pd {
                            non_monotone.push(format!(
                                "realization {r}, L = {side}, k = {}: Δ({s}) = {delta} < Δ({ps}) = {pd}",
                                k + 1
                            ));
                        }
                    }
                    last = Some((s, delta));
                    points[b][k].push((s, delta));
                    report.record(vec![
                        (*r).into(),
                        side.into(),
                        (k + 1).into(),
                        s.into(),
                        lambda.into(),
                        delta.into(),
                    ]);
                }
            }
        }
    }

    let mut fits = Vec::new();
    let mut all_points = Vec::new();
    for (b, per_k) in points.iter().enumerate() {
        let side = cfg.run.boxes[b];
        for (k, pts) in per_k.iter().enumerate() {
            all_points.extend(pts.iter().copied());
            let fit = fit_pooled(pts);
            let mut curve = Curve::new(&format!("k{}", k + 1), Some(side), &["s", "mean_delta", "min_delta", "max_delta"]);
            for &s in &shifts {
                let ds: Vec<f64> = pts.iter().filter(|p| p.0 == s).map(|p| p.1).collect();
                if ds.is_empty() {
                    continue;
                }
                let lo = ds.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                curve.rows.push(vec![s, mean(&ds), lo, hi]);
            }
            if let Some(f) = fit {
                curve.params.insert("tau_hat".into(), f.slope);
                curve.params.insert("log_prefactor".into(), f.intercept);
            }
            report.curves.push(curve);
            fits.push(serde_json::json!({ "L": side, "k": k + 1, "fit": fit }));
        }
    }
    let pooled = fit_pooled(&all_points);
    report.summarize("fits", fits);
    report.summarize("tau_hat", pooled.map(|f| f.slope));
    report.summarize("tau_fit", pooled);
    report.summarize("shifts", &shifts);

    report.check(
        "lifting_nonnegative",
        negative.is_empty(),
        if negative.is_empty() { "all Δ_k(s) >= 0".to_string() } else { negative.join("; ") },
    );
    report.check(
        "lifting_monotone",
        non_monotone.is_empty(),
        if non_monotone.is_empty() {
            "Δ_k nondecreasing in s".to_string()
        } else {
            non_monotone.join("; ")
        },
    );
    Ok(report)
}

/// Pooled lifting exponent on the smallest configured box.
pub fn lifting_fit(cfg: &ExperimentConfig) -> Result<Option<LinearFit>> {
    let smallest = cfg
        .run
        .boxes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let manifest = RunManifest::new(cfg.clone());
    let mut scratch = ExperimentReport::new("lifting", &manifest, &[]);
    let shifts = shift_list(cfg);
    let done = sweep(cfg, &[smallest], &mut scratch)?;
    let mut points = Vec::new();
    for (_, per_box) in &done {
        let rows = &per_box[0];
        for k in 0..rows[0].len() {
            for (i, &s) in shifts.iter().enumerate() {
                points.push((s, rows[i][k] - rows[0][k]));
            }
        }
    }
    Ok(fit_pooled(&points))
}
