use super::harness::{
    binomial_sigma, box_grid, lanczos_options, realization_operator, realization_radii,
    run_realizations, wilson_interval, Medium, Spectrum,
};
use super::lifting::lifting_fit;
use super::{require, settle};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

struct BoxOutcome {
    hits: Vec<usize>,
    event: Vec<bool>,
}

/// Probability that the spectrum meets `(E0, E0 + L^(-C3)]`, and the radius event
/// `{ω_z < ω+ - s for every cell}` at `s = L^(-C3/τ)` against its closed form.
pub fn ise_mc(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let e0 = require(cfg.ise.e0, "ise.e0")?;
    let c3 = &cfg.ise.c3;
    let mut report = ExperimentReport::new(
        "ise",
        manifest,
        &["realization", "L", "c3", "window_hi", "count", "hit", "s", "event"],
    );
    let (tau, source) = match cfg.ise.tau {
        Some(t) => (t, "config"),
        None => match lifting_fit(cfg)? {
            Some(f) if f.slope > 0.0 => (f.slope, "lifting_fit"),
            other => {
                return Err(Error::Assertion(format!(
                    "lifting fit gave no positive exponent ({other:?}); set ise.tau"
                )))
            }
        },
    };
    report.summarize("tau", tau);
    report.summarize("tau_source", source);
    report.summarize("e0", e0);

    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_realizations(cfg, |r| -> Result<Vec<BoxOutcome>> {
        let mut out = Vec::new();
        for (grid, &side) in grids.iter().zip(&cfg.run.boxes) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let base = spectrum.at_most(e0)?;
            let mut hits = Vec::new();
            let mut event = Vec::new();
            for &c in c3 {
                let hi = e0 + side.powf(-c);
                hits.push(spectrum.at_most(hi)?.saturating_sub(base));
                let s = side.powf(-c / tau);
                let top = cfg.model.omega_plus - s;
                event.push(radii.values().iter().all(|&w| w < top));
            }
            out.push(BoxOutcome { hits, event });
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;
    let trials = done.len();

    for (r, boxes) in &done {
        for (b, o) in boxes.iter().enumerate() {
            let side = cfg.run.boxes[b];
            for (ic, &c) in c3.iter().enumerate() {
                report.record(vec![
                    (*r).into(),
                    side.into(),
                    c.into(),
                    (e0 + side.powf(-c)).into(),
                    o.hits[ic].into(),
                    (o.hits[ic] > 0).into(),
                    side.powf(-c / tau).into(),
                    o.event[ic].into(),
                ]);
            }
        }
    }

    let d = cfg.model.d as i32;
    let mut rows = Vec::new();
    let mut nesting = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        let cells = (side / cfg.model.epsilon).round().powi(d);
        let mut curve = Curve::new(
            "c3",
            Some(side),
            &["c3", "p_hit", "ci_low", "ci_high", "p_event", "p_event_closed_form"],
        );
        let mut by_width: Vec<(f64, f64)> = Vec::new();
        for (ic, &c) in c3.iter().enumerate() {
            let hits = done.iter().filter(|(_, v)| v[b].hits[ic] > 0).count();
            let events = done.iter().filter(|(_, v)| v[b].event[ic]).count();
            let p_hit = hits as f64 / trials.max(1) as f64;
            let p_event = events as f64 / trials.max(1) as f64;
            let s = side.powf(-c / tau);
            let closed = (1.0 - cfg.model.upper_tail(s)).powf(cells);
            let kappa = cfg.model.density.kappa().unwrap_or(1.0);
            let paper_bound = 1.0 - (side / cfg.model.epsilon).powi(d) * s.powf(kappa);
            let sigma = binomial_sigma(closed, trials);
            let z = if sigma > 0.0 {
                (p_event - closed) / sigma
            } else if p_event == closed {
                0.0
            } else {
                f64::INFINITY
            };
            worst_z = worst_z.max(z.abs());
            let (lo, hi) = wilson_interval(hits, trials);
            curve.rows.push(vec![c, p_hit, lo, hi, p_event, closed]);
            by_width.push((side.powf(-c), p_hit));
            rows.push(serde_json::json!({
                "L": side,
                "c3": c,
                "window": [e0, e0 + side.powf(-c)],
                "p_hit": p_hit,
                "p_hit_ci": [lo, hi],
                "paper_rate": cfg.model.epsilon.powi(-d) * side.powf(d as f64 + 1.0 - kappa * c / tau),
                "s": s,
                "p_event": p_event,
                "p_event_closed_form": closed,
                "p_event_paper_bound": paper_bound,
                "sigma": sigma,
                "z": z,
            }));
        }
        by_width.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in by_width.windows(2) {
            if pair[1].0 > pair[0].0 && pair[1].1 < pair[0].1 {
                nesting.push(format!(
                    "L = {side}: P = {} on width {} exceeds P = {} on width {}",
                    pair[0].1, pair[0].0, pair[1].1, pair[1].0
                ));
            }
        }
        report.curves.push(curve);
    }
    report.summarize("estimates", rows);
    report.summarize("max_abs_z", worst_z);
    report.check(
        "nested_windows",
        nesting.is_empty(),
        if nesting.is_empty() { "probability nonincreasing as the window shrinks".into() } else { nesting.join("; ") },
    );
    report.check(
        "event_closed_form",
        worst_z <= 3.0,
        format!("largest |z| = {worst_z} against the closed-form product"),
    );
    Ok(report)
}
