use super::harness::{
    box_grid, lanczos_options, mean, realization_operator, realization_radii, run_realizations,
    Medium, Spectrum,
};
use super::settle;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::{Curve, ExperimentReport};

struct BoxSpectrum {
    side: f64,
    below: f64,
    values: Vec<f64>,
}

/// Maximal empty intervals of a sorted point set inside `(floor, ceiling]`, widest first.
fn empty_intervals(points: &[f64], floor: f64, ceiling: f64) -> Vec<(f64, f64)> {
    let mut edges = vec![floor];
    edges.extend(points.iter().copied().filter(|&p| p > floor && p <= ceiling));
    edges.push(ceiling);
    let mut gaps: Vec<(f64, f64)> = edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1]))
        .collect();
    gaps.sort_by(|a, b| (b.1 - b.0).total_cmp(&(a.1 - a.0)).then(a.0.total_cmp(&b.0)));
    gaps
}

fn widest_interior(points: &[f64]) -> Option<(f64, f64)> {
    points
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
}

/// All eigenvalues below `e_max` on every box of every realization, and the intervals
/// left empty by their union.
pub fn gap_scan(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = &manifest.config;
    let e_max = cfg.gap_scan.e_max;
    if cfg.run.boxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(0, "run.boxes must be strictly increasing for gap-scan"));
    }
    let mut report = ExperimentReport::new(
        "gap_scan",
        manifest,
        &["realization", "L", "index", "eigenvalue", "residual"],
    );
    let grids = cfg
        .run
        .boxes
        .iter()
        .map(|&l| box_grid(cfg, l))
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_realizations(cfg, |r| -> Result<Vec<(BoxSpectrum, Vec<f64>)>> {
        let mut out = Vec::new();
        for (grid, &side) in grids.iter().zip(&cfg.run.boxes) {
            let radii = realization_radii(cfg, side, r)?;
            let a = realization_operator(cfg, grid, &radii, 0.0, Medium::Smooth)?;
            let spectrum = Spectrum::new(&a, grid, cfg, lanczos_options(cfg, r))?;
            let (glo, ghi) = a.gershgorin();
            let below = glo - 1e-6 * (ghi - glo);
            if e_max <= below {
                out.push((BoxSpectrum { side, below, values: Vec::new() }, Vec::new()));
                continue;
            }
            let set = spectrum.window(below, e_max)?;
            out.push((
                BoxSpectrum {
                    side,
                    below,
                    values: set.values,
                },
                set.residuals,
            ));
        }
        Ok(out)
    });
    let done = settle(&mut report, outcomes)?;

    let mut union: Vec<f64> = Vec::new();
    let mut per_box: Vec<Vec<f64>> = vec![Vec::new(); cfg.run.boxes.len()];
    let mut floor = f64::INFINITY;
    let mut above_gap: Vec<(usize, Vec<f64>)> = Vec::new();
    for (r, boxes) in &done {
        let mut mins = Vec::new();
        for (b, (spec, residuals)) in boxes.iter().enumerate() {
            floor = floor.min(spec.below);
            for (k, (&v, &res)) in spec.values.iter().zip(residuals).enumerate() {
                report.record(vec![
                    (*r).into(),
                    spec.side.into(),
                    k.into(),
                    v.into(),
                    res.into(),
                ]);
            }
            union.extend(&spec.values);
            per_box[b].extend(&spec.values);
            mins.push(spec.values.clone());
        }
        above_gap.push((*r, mins.concat()));
    }
    union.sort_by(f64::total_cmp);
    floor = floor.min(0.0);

    let top = cfg.gap_scan.top;
    let gaps = empty_intervals(&union, floor, e_max);
    let listed: Vec<_> = gaps
        .iter()
        .take(top)
        .map(|&(lo, hi)| {
            serde_json::json!({ "lo": lo, "hi": hi, "width": hi - lo, "below_spectrum": lo == floor })
        })
        .collect();
    report.summarize("empty_intervals", listed);
    report.summarize("lambda_min", union.first().copied());

    // interior candidate: widest empty interval between two observed eigenvalues
    let candidate = widest_interior(&union);
    if let Some((lo, hi)) = candidate {
        report.summarize("gap_candidate", [lo, hi]);
        let edges: Vec<f64> = above_gap
            .iter()
            .filter_map(|(_, vals)| {
                vals.iter()
                    .copied()
                    .filter(|&v| v >= hi)
                    .min_by(f64::total_cmp)
            })
            .collect();
        if !edges.is_empty() {
            let lo_edge = edges.iter().copied().fold(f64::INFINITY, f64::min);
            let hi_edge = edges.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            report.summarize(
                "e0_estimate",
                serde_json::json!({ "mean": mean(&edges), "min": lo_edge, "max": hi_edge }),
            );
        }
    }

    let mut stability = Vec::new();
    let mut previous: Option<f64> = None;
    for (b, &side) in cfg.run.boxes.iter().enumerate() {
        let mut vals = per_box[b].clone();
        vals.sort_by(f64::total_cmp);
        let widest = widest_interior(&vals);
        let width = widest.map(|(lo, hi)| hi - lo);
        stability.push(serde_json::json!({
            "L": side,
            "count": vals.len(),
            "widest_gap": widest.map(|(lo, hi)| [lo, hi]),
            "shrinkage": match (previous, width) {
                (Some(p), Some(w)) => Some(p - w),
                _ => None,
            },
        }));
        previous = width;
        let mut curve = Curve::new("spectrum", Some(side), &["index", "eigenvalue"]);
        curve.rows = vals
            .iter()
            .enumerate()
            .map(|(k, &v)| vec![k as f64, v])
            .collect();
        if let Some((lo, hi)) = widest {
            curve.params.insert("gap_lo".into(), lo);
            curve.params.insert("gap_hi".into(), hi);
        }
        report.curves.push(curve);
    }
    report.summarize("per_box", stability);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_intervals_are_sorted_by_width() {
        let g = empty_intervals(&[1.0, 2.0, 5.0], 0.0, 6.0);
        assert_eq!(g[0], (2.0, 5.0));
        assert_eq!(g.len(), 4);
        assert_eq!(empty_intervals(&[], 0.0, 1.0), vec![(0.0, 1.0)]);
    }
}
