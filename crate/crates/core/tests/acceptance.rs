use std::f64::consts::PI;
use std::time::Instant;

use inclusion_lab::discretization::{assemble_operator, build_grid, FaceRule, ResolutionPolicy};
use inclusion_lab::medium::{
    eval_coefficient, sample_radii, shift_radii, witness_points, ConstantCoefficient, DensitySpec,
    SmoothCoefficient,
};
use inclusion_lab::report::Cell;
use inclusion_lab::spectral::{chebyshev_evolve, lowest_eigenpairs, LanczosOptions};
use inclusion_lab::{run_driver, BoxSpec, CsrMatrix, Driver, ExperimentConfig, ExperimentReport, RunManifest};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn drive(driver: Driver, cfg: ExperimentConfig) -> (ExperimentReport, f64) {
    let start = Instant::now();
    let report = run_driver(driver, &RunManifest::new(cfg))
        .unwrap_or_else(|e| panic!("{}: {e}", driver.subcommand()));
    (report, start.elapsed().as_secs_f64())
}

fn failures(report: &ExperimentReport) -> String {
    let mut out: Vec<String> = report
        .failed_assertions()
        .iter()
        .map(|a| format!("{}: {}", a.name, a.detail))
        .collect();
    out.extend(report.flagged.iter().cloned());
    out.join("; ")
}

fn sorted_eigenvalues(a: &CsrMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = a.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn solver_oracle_suite() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.run.realizations = 30;
    let (report, secs) = drive(Driver::Selftest, cfg);
    let realizations: std::collections::BTreeSet<i64> = report
        .records
        .rows
        .iter()
        .filter_map(|row| match row[0] {
            Cell::Int(r) if r >= 0 => Some(r),
            _ => None,
        })
        .collect();
    let nodes = report.summary["grid_nodes"].as_u64().unwrap_or(u64::MAX);
    let passed = report.passed() && realizations.len() == 30 && nodes <= 144 && secs < 120.0;
    outcome(
        passed,
        format!(
            "{} media on {nodes} nodes, {secs:.1} s{}",
            realizations.len(),
            if report.passed() { String::new() } else { format!(", {}", failures(&report)) }
        ),
    )
}

fn analytic_spectrum() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for d in [1usize, 2] {
        let h = 1.0 / 8.0;
        let grid = build_grid(&BoxSpec::at_origin(d, 1.0), h, ResolutionPolicy::Unconstrained).unwrap();
        let a = assemble_operator(&grid, &ConstantCoefficient(1.0), FaceRule::Midpoint).unwrap().matrix;
        let mu: Vec<f64> = (1..8)
            .map(|k| 4.0 / (h * h) * (k as f64 * PI * h / 2.0).sin().powi(2))
            .collect();
        let mut exact: Vec<f64> = if d == 1 {
            mu.clone()
        } else {
            mu.iter().flat_map(|x| mu.iter().map(move |y| x + y)).collect()
        };
        exact.sort_by(f64::total_cmp);
        for (c, e) in sorted_eigenvalues(&a).iter().zip(&exact) {
            worst = worst.max((c - e).abs() / e);
        }

        let continuum: Vec<f64> = if d == 1 {
            vec![PI * PI, 4.0 * PI * PI, 9.0 * PI * PI]
        } else {
            vec![2.0 * PI * PI, 5.0 * PI * PI, 5.0 * PI * PI, 8.0 * PI * PI]
        };
        let errors: Vec<Vec<f64>> = [8usize, 16, 32]
            .iter()
            .map(|&m| {
                let grid = build_grid(&BoxSpec::at_origin(d, 1.0), 1.0 / m as f64, ResolutionPolicy::Unconstrained).unwrap();
                let a = assemble_operator(&grid, &ConstantCoefficient(1.0), FaceRule::Midpoint).unwrap().matrix;
                let set = lowest_eigenpairs(&a, continuum.len(), &LanczosOptions::default()).unwrap();
                set.values.iter().zip(&continuum).map(|(l, e)| (l - e).abs()).collect()
            })
            .collect();
        for k in 0..continuum.len() {
            for pair in errors.windows(2) {
                min_order = min_order.min((pair[0][k] / pair[1][k]).log2());
            }
        }
    }
    outcome(
        worst <= 1e-10 && min_order >= 1.8,
        format!("closed-form relative error {worst:.2e}, smallest observed order {min_order:.3}"),
    )
}

fn coefficient_invariants() -> Outcome {
    let p = ExperimentConfig::default().model;
    let window = BoxSpec::at_origin(p.d, 1.0);
    let bound = 4.0 / p.epsilon.powf(p.gamma);
    let reach = p.epsilon.powf(p.gamma) / 40.0;
    let s0 = p.derived_constants().s0;
    let (mut range_bad, mut lipschitz_bad, mut witness_bad) = (0usize, 0usize, 0usize);
    let mut steepest: f64 = 0.0;
    for seed in 0..20u64 {
        let radii = sample_radii(&p, &window, seed, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..p.d).map(|_| rng.random_range(0.0..1.0)).collect();
            let a = eval_coefficient(&p, &radii, &x).unwrap();
            if !(a >= p.epsilon * p.epsilon && a <= 1.0) {
                range_bad += 1;
            }
            let y: Vec<f64> = x
                .iter()
                .map(|xi| (xi + rng.random_range(-reach..reach)).clamp(0.0, 1.0 - 1e-12))
                .collect();
            let dist = x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            if dist > 0.0 {
                let ratio = (a - eval_coefficient(&p, &radii, &y).unwrap()).abs() / dist;
                steepest = steepest.max(ratio);
                if ratio > bound + 1e-12 {
                    lipschitz_bad += 1;
                }
            }
        }
        let witnesses = witness_points(&p, &radii);
        for s in [s0 / 4.0, s0 / 2.0, s0] {
            let grown = shift_radii(&p, &radii, s).unwrap();
            let rho = witnesses.ball_radius(s);
            for x in &witnesses.points {
                for _ in 0..16 {
                    let dir: Vec<f64> = (0..p.d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                    let r = rho * rng.random_range(0.0..1.0f64);
                    let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + r * di / norm).collect();
                    let drop = eval_coefficient(&p, &radii, &y).unwrap() - eval_coefficient(&p, &grown, &y).unwrap();
                    if drop < witnesses.lower_bound(s) - 1e-12 {
                        witness_bad += 1;
                    }
                }
            }
        }
    }
    outcome(
        range_bad + lipschitz_bad + witness_bad == 0,
        format!(
            "violations: range {range_bad}, Lipschitz {lipschitz_bad} (steepest {steepest:.3} vs {bound}), witness {witness_bad}"
        ),
    )
}

fn squeeze() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.run.boxes = vec![2.0];
    cfg.run.realizations = 20;
    cfg.squeeze.k = 10;
    let (report, secs) = drive(Driver::Squeeze, cfg);
    let triples = report.records.len();
    outcome(
        report.passed() && triples == 200 && secs < 300.0,
        format!("{triples} triples, violations {}, {secs:.1} s {}", report.summary["violations"], failures(&report)),
    )
}

fn lifting() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.run.realizations = 20;
    cfg.lifting.k = 5;
    let (report, _) = drive(Driver::Lifting, cfg);
    let fit = &report.summary["tau_fit"];
    let tau = fit["slope"].as_f64().unwrap_or(f64::NAN);
    let ci = &fit["slope_ci"];
    outcome(
        report.passed() && tau > 0.0 && ci.is_array(),
        format!("tau_hat = {tau:.4}, 95% CI {ci} {}", failures(&report)),
    )
}

fn wegner() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.h = Some(1.0 / 25.0);
    cfg.grid.allow_under_resolved = true;
    cfg.run.realizations = 100;
    let (sparse, _) = drive(Driver::Wegner, cfg.clone());
    cfg.run.oracle_dense = true;
    let (dense, _) = drive(Driver::Wegner, cfg);
    let slope = sparse.curves[0].params.get("delta_slope").copied().unwrap_or(f64::NAN);
    let means = &sparse.summary["means"];
    let equal = means == &dense.summary["means"] && sparse.records_csv() == dense.records_csv();
    outcome(
        sparse.passed() && slope > 0.0 && equal,
        format!(
            "means {}, delta slope {slope:.4}, dense oracle {} {}",
            means[0][0],
            if equal { "identical" } else { "differs" },
            failures(&sparse)
        ),
    )
}

fn combes_thomas() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.run.realizations = 10;
    cfg.combes_thomas.gap_fractions = vec![0.5, 1.0];
    let (report, secs) = drive(Driver::CombesThomas, cfg);
    let slopes = &report.summary["mean_slopes"][0];
    let (a, b) = (slopes[0].as_f64().unwrap_or(f64::NAN), slopes[1].as_f64().unwrap_or(f64::NAN));
    outcome(
        report.passed() && a < 0.0 && b < a && secs < 600.0,
        format!("mean slopes g=0.5: {a:.3}, g=1: {b:.3}, {secs:.1} s {}", failures(&report)),
    )
}

fn initial_scale() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.model.density = DensitySpec::PolynomialThin { kappa: 2.0 };
    cfg.run.boxes = vec![2.0, 3.0];
    cfg.run.realizations = 200;
    cfg.grid.h = Some(1.0 / 32.0);
    cfg.grid.allow_under_resolved = true;
    cfg.ise.e0 = Some(4.2);
    cfg.ise.tau = Some(1.0);
    cfg.ise.c3 = vec![2.0, 4.0, 6.0];
    let (report, _) = drive(Driver::Ise, cfg);
    let z = report.summary["max_abs_z"].as_f64().unwrap_or(f64::INFINITY);
    let p_hit: Vec<String> = report.summary["estimates"]
        .as_array()
        .map(|rows| rows.iter().map(|r| format!("{}", r["p_hit"])).collect())
        .unwrap_or_default();
    outcome(
        report.passed() && z <= 3.0,
        format!("largest |z| {z:.3}, P[hit] by (L, C3): {} {}", p_hit.join(" "), failures(&report)),
    )
}

fn propagator() -> Outcome {
    let p = ExperimentConfig::default().model;
    let window = BoxSpec::at_origin(2, 1.0);
    let grid = build_grid(&window, 1.0 / 11.0, ResolutionPolicy::Unconstrained).unwrap();
    let radii = sample_radii(&p, &window, 3, 0).unwrap();
    let a = assemble_operator(&grid, &SmoothCoefficient { params: &p, radii: &radii }, FaceRule::Midpoint)
        .unwrap()
        .matrix;
    let n = a.n();
    let eig = a.to_dense().symmetric_eigen();
    let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let raw: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let scale = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u: Vec<Complex64> = raw.iter().map(|z| z / scale).collect();
    let (mut worst, mut drift): (f64, f64) = (0.0, 0.0);
    for t in [0.1, 1.0, 10.0] {
        let cheb = chebyshev_evolve(&a, &u, t, 1e-12).unwrap();
        let mut coeff = vectors.adjoint() * DVector::from_column_slice(&u);
        for (k, c) in coeff.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, -t * eig.eigenvalues[k]);
        }
        let exact = &vectors * coeff;
        let err = cheb.iter().zip(exact.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(err);
        drift = drift.max((cheb.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs());
    }
    outcome(
        n == 100 && worst <= 1e-8 && drift <= 1e-7,
        format!("{n} nodes, largest error {worst:.2e}, norm drift {drift:.2e}"),
    )
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.h = Some(1.0 / 13.0);
    cfg.grid.allow_under_resolved = true;
    cfg.run.realizations = 3;
    cfg.run.master_seed = 7;
    cfg.gap_scan.e_max = 80.0;
    cfg.wegner.energies = vec![40.0];
    cfg.wegner.e_ref = 40.0;
    cfg.ise.e0 = Some(38.0);
    cfg.ise.tau = Some(1.0);
    cfg.suitability.e0 = Some(10.0);
    cfg.projector.e_plus = Some(70.0);
    cfg.dynamics.e_plus = Some(70.0);
    let mut differing = Vec::new();
    for driver in Driver::ALL {
        let (first, _) = drive(driver, cfg.clone());
        let (second, _) = drive(driver, cfg.clone());
        if first.records.is_empty() || first.records_csv() != second.records_csv() {
            differing.push(driver.subcommand());
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} drivers rerun byte-identically", Driver::ALL.len())
        } else {
            format!("records differ or are empty: {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("solver oracle suite", solver_oracle_suite),
        ("analytic spectrum", analytic_spectrum),
        ("coefficient invariants", coefficient_invariants),
        ("squeeze", squeeze),
        ("lifting", lifting),
        ("wegner", wegner),
        ("combes-thomas", combes_thomas),
        ("initial scale estimate", initial_scale),
        ("propagator", propagator),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} ({:.1} s) {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
