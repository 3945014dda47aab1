use inclusion_lab::report::{emit_plotdata, Cell, ExperimentReport};
use inclusion_lab::{parse_config_str, run_driver, Driver, Error, RunManifest};

/// A 12 x 12 interior grid on the unit box with three realizations.
const TINY: &str = "
grid.h = 0.07692307692307693
grid.allow_under_resolved = true
run.realizations = 3
run.master_seed = 7
gap_scan.e_max = 80
wegner.energies = 40
wegner.e_ref = 40
ise.e0 = 38
ise.tau = 1
suitability.e0 = 10
projector.e_plus = 70
dynamics.e_plus = 70
dynamics.times = 0, 0.01, 0.05
";

fn tiny(extra: &str) -> RunManifest {
    parse_config_str(&format!("{TINY}{extra}")).unwrap()
}

fn run(driver: Driver, manifest: &RunManifest) -> ExperimentReport {
    run_driver(driver, manifest).unwrap_or_else(|e| panic!("{}: {e}", driver.subcommand()))
}

const DRIVERS: [Driver; 9] = [
    Driver::GapScan,
    Driver::Squeeze,
    Driver::Lifting,
    Driver::Wegner,
    Driver::Ise,
    Driver::CombesThomas,
    Driver::Suitability,
    Driver::ProjectorDecay,
    Driver::Dynamics,
];

/// Columns that depend on the backend rather than on the spectrum.
const BACKEND_COLUMNS: [&str; 2] = ["residual", "terms"];

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-6 * a.abs().max(b.abs()) + 1e-9
}

#[test]
fn every_driver_is_deterministic() {
    let manifest = tiny("");
    for driver in DRIVERS.into_iter().chain([Driver::Selftest]) {
        let first = run(driver, &manifest);
        let second = run(driver, &manifest);
        assert!(!first.records.is_empty(), "{}", driver.subcommand());
        assert_eq!(first.records_csv(), second.records_csv(), "{}", driver.subcommand());
        assert!(first.passed(), "{}: {:?}", driver.subcommand(), first.failed_assertions());
    }
}

#[test]
fn realizations_do_not_depend_on_the_batch() {
    let few = tiny("");
    let many = tiny("run.realizations = 5\n");
    for driver in [Driver::GapScan, Driver::Wegner, Driver::Lifting] {
        let a = run(driver, &few);
        let b = run(driver, &many);
        let prefix: Vec<_> = b
            .records
            .rows
            .iter()
            .filter(|row| matches!(row[0], Cell::Int(r) if r < 3))
            .cloned()
            .collect();
        assert_eq!(a.records.rows, prefix, "{}", driver.subcommand());
    }
}

#[test]
fn dense_oracle_mode_agrees_with_the_sparse_engine() {
    let sparse = tiny("");
    let dense = tiny("run.oracle_dense = true\n");
    for driver in DRIVERS {
        let s = run(driver, &sparse);
        let d = run(driver, &dense);
        let name = driver.subcommand();
        assert_eq!(s.records.columns, d.records.columns, "{name}");
        assert_eq!(s.records.len(), d.records.len(), "{name}");
        for (rs, rd) in s.records.rows.iter().zip(&d.records.rows) {
            for ((col, x), y) in s.records.columns.iter().zip(rs).zip(rd) {
                if BACKEND_COLUMNS.contains(&col.as_str()) {
                    continue;
                }
                match (x, y) {
                    (Cell::Float(a), Cell::Float(b)) => {
                        assert!(close(*a, *b), "{name}.{col}: {a} vs {b}")
                    }
                    _ => assert_eq!(x, y, "{name}.{col}"),
                }
            }
        }
    }
}

#[test]
fn reports_embed_the_manifest_and_emit_artifacts() {
    let manifest = tiny("");
    let report = run(Driver::Wegner, &manifest);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["manifest"]["master_seed"], 7);
    assert_eq!(json["manifest"]["resolved"]["wegner.e_ref"], "40.0");
    let csv = report.records_csv();
    assert!(csv.starts_with("# driver: wegner\n"));
    assert!(csv.contains("# master_seed: 7\n"));

    let dir = tempfile::tempdir().unwrap();
    let written = report.write_all(dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"wegner.json".to_string()));
    assert!(names.contains(&"wegner_records.csv".to_string()));
    assert!(names.contains(&"wegner_1_delta_E40.tsv".to_string()), "{names:?}");
    let tsv = std::fs::read_to_string(dir.path().join("wegner_1_delta_E40.tsv")).unwrap();
    let header = tsv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "delta\tmean_count\tci_low\tci_high");
    assert_eq!(emit_plotdata(&report, dir.path()).unwrap().len(), report.curves.len());
}

#[test]
fn combes_thomas_plot_data_has_distance_and_log_norm() {
    let report = run(Driver::CombesThomas, &tiny(""));
    let dir = tempfile::tempdir().unwrap();
    for path in emit_plotdata(&report, dir.path()).unwrap() {
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert!(header.starts_with("distance\tlog_norm"), "{header}");
    }
}

#[test]
fn squeeze_rejects_a_shift_that_leaves_the_cell() {
    let err = run_driver(Driver::Squeeze, &tiny("model.omega_plus = 0.2\n")).unwrap_err();
    assert!(matches!(err, Error::Config { .. }), "{err:?}");
}

#[test]
fn drivers_needing_an_energy_report_the_missing_key() {
    let manifest = parse_config_str("grid.h = 0.07692307692307693\ngrid.allow_under_resolved = true\n").unwrap();
    for (driver, key) in [
        (Driver::Ise, "ise.e0"),
        (Driver::Suitability, "suitability.e0"),
        (Driver::ProjectorDecay, "projector.e_plus"),
        (Driver::Dynamics, "dynamics.e_plus"),
    ] {
        match run_driver(driver, &manifest) {
            Err(Error::Config { message, .. }) => assert!(message.contains(key), "{message}"),
            other => panic!("{}: {other:?}", driver.subcommand()),
        }
    }
}

#[test]
fn weyl_guardrail_or_count_limit_stops_runaway_windows() {
    let manifest = tiny("gap_scan.e_max = 100000\nrun.max_count = 20\n");
    let report = run_driver(Driver::GapScan, &manifest);
    match report {
        Ok(r) => assert!(!r.flagged.is_empty() && r.records.is_empty(), "{:?}", r.flagged),
        Err(e) => assert!(matches!(e, Error::TooManyEigenvalues { .. } | Error::WeylGuardrail { .. }), "{e:?}"),
    }
}
