use super::harness::{
    box_grid, lanczos_options, mean, realization_operator, realization_radii, run_realizations,
    Medium, Spectrum,
};
use super::settle;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::ExperimentReport;

struct Triple {
    side: f64,
    lower: Vec<f64>,
    middle: Vec<f64>,
    upper: Vec<f64>,
}

/// Checks `λ_k(Â_{ω+δ}) <= λ_k(A_ω) <= λ_k(Â_ω)` for the lowest `k` eigenvalues, with
/// `δ = s0`, i.e. radii grown by exactly one layer thickness.
pub fn squeeze_check(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let k = cfg.squeeze.k;
    let delta = cfg.model.derived_constants().s0;
    let grown = cfg.model.omega_plus + delta;
    if !cfg.grid.constant_medium && !(grown < 0.25 && cfg.model.fits_in_cell(grown)) {
        return Err(Error::config(
            0,
            format!(
                "model.omega_plus: omega_plus + s0 = {grown} must stay below 1/4 for the squeeze"
            ),
        ));
    }
    let mut report = ExperimentReport::new(
        "squeeze",
        manifest,
        &[
            "realization",
            "L",
            "k",
            "lambda_sharp_grown",
            "lambda_smooth",
            "lambda_sharp",
            "margin_lower",
            "margin_upper",
            "ordered",
        ],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<Triple>> {
        let opts = lanczos_options(cfg, r);
        let mut out = Vec::new();
        for (grid, &side) in grids.iter().zip(&cfg.run.boxes) {
            let radii = realization_radii(cfg, side, r)?;
            let lowest = |shift: f64, medium: Medium| -> Result<Vec<f64>> {
                let a = realization_operator(cfg, grid, &radii, shift, medium)?;
                Spectrum::new(&a, grid, cfg, opts)?.lowest(k)
            };
            let grown = if cfg.grid.constant_medium { 0.0 } else { delta };
            out.push(Triple {
                side,
                lower: lowest(grown, Medium::Sharp)?,
                middle: lowest(0.0, Medium::Smooth)?,
                upper: lowest(0.0, Medium::Sharp)?,
            });
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;

    let mut violations = Vec::new();
    let mut lower_margins = Vec::new();
    let mut upper_margins = Vec::new();
    let mut first_margins = Vec::new();
    for (r, triples) in &done {
        for t in triples {
            for j in 0..t.middle.len().min(t.lower.len()).min(t.upper.len()) {
                let (lo, mid, hi) = (t.lower[j], t.middle[j], t.upper[j]);
                let ordered = lo <= mid && mid <= hi;
                if !ordered {
                    violations.push(format!(
                        "realization {r}, L = {}, k = {}: {lo} <= {mid} <= {hi} fails",
                        t.side,
                        j + 1
                    ));
                }
                lower_margins.push(mid - lo);
                upper_margins.push(hi - mid);
                if j == 0 {
                    first_margins.push((mid - lo).min(hi - mid));
                }
                report.record(vec![
                    (*r).into(),
                    t.side.into(),
                    (j + 1).into(),
                    lo.into(),
                    mid.into(),
                    hi.into(),
                    (mid - lo).into(),
                    (hi - mid).into(),
                    ordered.into(),
                ]);
            }
        }
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    report.summarize("violations", violations.len());
    report.summarize("shift_delta", delta);
    report.summarize(
        "margin_lower",
        serde_json::json!({ "min": min(&lower_margins), "mean": mean(&lower_margins) }),
    );
    report.summarize(
        "margin_upper",
        serde_json::json!({ "min": min(&upper_margins), "mean": mean(&upper_margins) }),
    );
    report.summarize("k1_margin_min", min(&first_margins));
    let detail = if violations.is_empty() {
        format!("{} eigenvalue triples ordered", lower_margins.len())
    } else {
        violations.join("; ")
    };
    report.check("squeeze_ordering", violations.is_empty(), detail);
    Ok(report)
}
