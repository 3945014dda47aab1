use inclusion_lab::discretization::FaceRule;
use inclusion_lab::medium::DensitySpec;
use inclusion_lab::{emit_config, parse_config, parse_config_str, Error, ExperimentConfig};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, 1e-12..1e-3f64, Just(0.1), Just(1.0 / 3.0)]
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        (
            prop::sample::select(vec![0.25, 0.2, 0.125]),
            2.0..3.0f64,
            0.01..0.1f64,
            0.12..0.18f64,
            prop::option::of(1.0..5.0f64),
            prop::sample::select(vec![2usize, 3]),
        ),
        (
            prop::collection::vec(1usize..5, 1..4),
            1usize..500,
            any::<u64>(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
        ),
        (
            prop::option::of(finite()),
            prop::collection::vec(finite(), 0..5),
            prop::option::of(prop::collection::vec(0.0..1.0f64, 1..5)),
            prop::option::of(0.1..3.0f64),
            0.01..3.0f64,
        ),
    )
        .prop_map(|(model, run, extra)| {
            let (epsilon, gamma, omega_minus, omega_plus, kappa, d) = model;
            let (cells, realizations, seed, dense, harmonic, under) = run;
            let (e0, energies, shifts, tau, theta) = extra;
            let mut c = ExperimentConfig::default();
            c.model.epsilon = epsilon;
            c.model.gamma = gamma;
            c.model.omega_minus = omega_minus;
            c.model.omega_plus = omega_plus;
            c.model.d = d;
            c.model.density = kappa.map_or(DensitySpec::Uniform, |kappa| DensitySpec::PolynomialThin { kappa });
            let mut boxes: Vec<f64> = cells.iter().map(|&m| m as f64 * epsilon).collect();
            boxes.sort_by(f64::total_cmp);
            boxes.dedup();
            c.run.boxes = boxes;
            c.run.realizations = realizations;
            c.run.master_seed = seed;
            c.run.oracle_dense = dense;
            c.grid.face_rule = if harmonic { FaceRule::Harmonic } else { FaceRule::Midpoint };
            c.grid.h = Some(epsilon / 64.0);
            c.grid.allow_under_resolved = under || c.validate().is_err_and(|i| i.key == "grid.h");
            c.ise.e0 = e0;
            c.ise.tau = tau;
            c.wegner.energies = if energies.is_empty() { vec![1.0] } else { energies };
            let s0 = c.model.derived_constants().s0;
            c.lifting.shifts = shifts.map(|v| v.iter().map(|f| f * s0).collect());
            c.suitability.theta = 2.0 * d as f64 + theta;
            c.dynamics.e_plus = e0.map(|e| e.abs() + 1.0);
            c
        })
        .prop_filter("valid configuration", |c| c.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn emitted_configuration_parses_back_to_itself(cfg in config_strategy()) {
        let manifest = parse_config_str(&emit_config(&cfg)).unwrap();
        prop_assert_eq!(manifest.config, cfg);
        prop_assert!(manifest.warnings.is_empty());
    }
}

#[test]
fn minimal_file_on_disk_echoes_every_resolved_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "run.master_seed = 42\nmodel.epsilon = 0.25\n").unwrap();
    let manifest = parse_config(&path).unwrap();
    assert_eq!(manifest.master_seed(), 42);
    assert_eq!(manifest.path.as_deref(), Some(path.to_str().unwrap()));
    let emitted = emit_config(&manifest.config);
    for key in ["model.gamma", "grid.h", "run.boxes", "wegner.deltas", "dynamics.max_terms"] {
        assert!(emitted.contains(&format!("{key} = ")), "{key} missing from\n{emitted}");
    }
}

#[test]
fn duplicate_keys_keep_the_last_value_and_warn() {
    let manifest = parse_config_str("run.realizations = 4\nrun.realizations = 9\n").unwrap();
    assert_eq!(manifest.config.run.realizations, 9);
    assert_eq!(manifest.warnings.len(), 1);
    assert!(manifest.warnings[0].contains("run.realizations"));
}

#[test]
fn configuration_errors_carry_line_numbers() {
    let cases = [
        ("model.epsilon = 0.25\nmodel.omega_plus = 0.3\n", 2),
        ("\n\nmodel.colour = blue\n", 3),
        ("run.boxes = 1.0, 0.3\n", 1),
        ("run.realizations = many\n", 1),
        ("just some words\n", 1),
    ];
    for (text, expected) in cases {
        match parse_config_str(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, expected, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn missing_file_is_a_configuration_error() {
    let err = parse_config(std::path::Path::new("/nonexistent/run.cfg")).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
}
