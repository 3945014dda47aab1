use num_complex::Complex64;
use rand::Rng;

use super::config::ExperimentConfig;
use super::harness::{
    box_grid, lanczos_options, realization_operator, realization_radii, run_realizations, Medium,
    Spectrum,
};
use super::settle;
use crate::discretization::{assemble_operator, mask_for_region, Region};
use crate::medium::ConstantCoefficient;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::medium::rng::{auxiliary_rng, mix64};
use crate::report::ExperimentReport;
use crate::spectral::dense::{dense_block_resolvent_norm, dense_count, dense_eigen, dense_evolve};

pub const WINDOWS: usize = 20;
pub const EIGEN_RTOL: f64 = 1e-8;
pub const NORM_RTOL: f64 = 1e-6;
pub const EVOLVE_TOL: f64 = 1e-8;

/// Nodes per axis of the oracle grids.
fn oracle_steps(d: usize) -> usize {
    if d <= 2 {
        13
    } else {
        7
    }
}

/// The configuration the oracle suite runs on: the configured medium on a box of four
/// cells per axis, at most `12^d` nodes.
pub fn oracle_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    let side = 4.0 * c.model.epsilon;
    c.run.boxes = vec![side];
    c.grid.h = Some(side / oracle_steps(c.model.d) as f64);
    c.grid.allow_under_resolved = true;
    c.grid.constant_medium = false;
    c.run.oracle_dense = false;
    c
}

struct Check {
    name: &'static str,
    value: f64,
    passed: bool,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Dense-oracle equivalence of counts, window eigenpairs, resolvent blocks and evolution
/// on small random media, plus the closed-form spectrum of the constant medium.
pub fn selftest(manifest: &RunManifest) -> Result<ExperimentReport> {
    let cfg = oracle_config(&manifest.config);
    let side = cfg.run.boxes[0];
    let mut report = ExperimentReport::new(
        "selftest",
        manifest,
        &["realization", "check", "value", "passed"],
    );
    let grid = box_grid(&cfg, side)?;
    let belt = mask_for_region(&grid, &Region::belt(&grid, cfg.model.epsilon))?.indices;
    let inner = mask_for_region(&grid, &Region::centered_third(&grid))?.indices;

    let outcomes = run_realizations(&cfg, |r| -> Result<Vec<Check>> {
        let radii = realization_radii(&cfg, side, r)?;
        let a = realization_operator(&cfg, &grid, &radii, 0.0, Medium::Smooth)?;
        let opts = lanczos_options(&cfg, r);
        let spectrum = Spectrum::new(&a, &grid, &cfg, opts)?;
        let (values, vectors) = dense_eigen(&a);
        let mut rng = auxiliary_rng(mix64(cfg.run.master_seed ^ 0x5E1F ^ r as u64));
        let lo_all = values[0] - 1.0;
        let hi_all = values[values.len() - 1] + 1.0;
        let mut checks = Vec::new();

        let mut mismatches = 0.0;
        for _ in 0..WINDOWS {
            let x: f64 = rng.random_range(lo_all..hi_all);
            let y: f64 = rng.random_range(lo_all..hi_all);
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            if spectrum.count(lo, hi)? != dense_count(&values, lo, hi) {
                mismatches += 1.0;
            }
        }
        checks.push(Check {
            name: "inertia_counts",
            value: mismatches,
            passed: mismatches == 0.0,
        });

        // a window holding roughly the lower quarter of the spectrum
        let q = values.len() / 4;
        let hi = 0.5 * (values[q] + values[q + 1]);
        let set = spectrum.window(lo_all, hi)?;
        let mut worst: f64 = if set.len() == q + 1 { 0.0 } else { f64::INFINITY };
        for (v, w) in set.values.iter().zip(&values) {
            worst = worst.max(relative(*v, *w));
        }
        checks.push(Check {
            name: "lanczos_window",
            value: worst,
            passed: worst <= EIGEN_RTOL,
        });
        let low = spectrum.lowest(5)?;
        let worst_low = low
            .iter()
            .zip(&values)
            .map(|(v, w)| relative(*v, *w))
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "lanczos_lowest",
            value: worst_low,
            passed: worst_low <= EIGEN_RTOL,
        });

        let e = 0.5 * values[0];
        let sparse = spectrum.block_norm(e, &belt, &inner, 1e-10)?;
        let dense = dense_block_resolvent_norm(&values, &vectors, e, &belt, &inner);
        let err = relative(sparse, dense);
        checks.push(Check {
            name: "block_resolvent_norm",
            value: err,
            passed: err <= NORM_RTOL,
        });

        let state: Vec<Complex64> = (0..a.n())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let scale = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let state: Vec<Complex64> = state.iter().map(|z| z / scale).collect();
        let mut worst_evolve: f64 = 0.0;
        for t in [0.01, 0.1] {
            let (cheb, _) = spectrum.evolve(&state, t, 1e-13, 200_000)?;
            let exact = dense_evolve(&values, &vectors, &state, t);
            let diff = cheb
                .iter()
                .zip(&exact)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst_evolve = worst_evolve.max(diff);
        }
        checks.push(Check {
            name: "chebyshev_evolution",
            value: worst_evolve,
            passed: worst_evolve <= EVOLVE_TOL,
        });
        Ok(checks)
    });
    let done = settle(&mut report, outcomes)?;

    let mut failures = Vec::new();
    for (r, checks) in &done {
        for c in checks {
            if !c.passed {
                failures.push(format!("realization {r}: {} = {}", c.name, c.value));
            }
            report.record(vec![(*r).into(), c.name.into(), c.value.into(), c.passed.into()]);
        }
    }
    let analytic = analytic_check(cfg.model.d)?;
    report.record(vec![
        (-1i64).into(),
        "laplacian_closed_form".into(),
        analytic.into(),
        (analytic <= 1e-10).into(),
    ]);
    if analytic > 1e-10 {
        failures.push(format!("closed-form Laplacian spectrum off by {analytic}"));
    }
    report.summarize("grid_nodes", grid.len());
    report.summarize("box_side", side);
    report.check(
        "dense_oracle_agreement",
        failures.is_empty() && report.flagged.is_empty(),
        if failures.is_empty() && report.flagged.is_empty() {
            format!("{} realizations agree with the dense oracle", done.len())
        } else {
            [failures, report.flagged.clone()].concat().join("; ")
        },
    );
    Ok(report)
}

/// Largest relative error of the computed spectrum of `-Δ_h` on the unit box (`h = 1/8`)
/// against `Σ (4/h²) sin²(k_i π h / 2)`.
fn analytic_check(d: usize) -> Result<f64> {
    use crate::discretization::{build_grid, ResolutionPolicy};
    use crate::geometry::BoxSpec;
    use crate::spectral::dense::dense_eigenvalues;

    let d = d.clamp(1, 2);
    let h = 1.0 / 8.0;
    let grid = build_grid(&BoxSpec::at_origin(d, 1.0), h, ResolutionPolicy::Unconstrained)?;
    let a = assemble_operator(&grid, &ConstantCoefficient(1.0), Default::default())?.matrix;
    let computed = dense_eigenvalues(&a);
    let mu: Vec<f64> = (1..8)
        .map(|k| 4.0 / (h * h) * (k as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2))
        .collect();
    let mut exact: Vec<f64> = if d == 1 {
        mu.clone()
    } else {
        mu.iter().flat_map(|a| mu.iter().map(move |b| a + b)).collect()
    };
    exact.sort_by(f64::total_cmp);
    Ok(computed
        .iter()
        .zip(&exact)
        .map(|(c, e)| relative(*c, *e))
        .fold(0.0, f64::max))
}
