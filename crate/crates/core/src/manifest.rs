//! Line-oriented `key = value` configuration with dotted sections.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretization::FaceRule;
use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::medium::DensitySpec;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A parsed configuration with everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub path: Option<String>,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub tool_version: String,
    pub output_dir: Option<String>,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            path: None,
            config,
            warnings: Vec::new(),
            tool_version: TOOL_VERSION.to_string(),
            output_dir: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.config.run.master_seed
    }
}

const KEYS: &[&str] = &[
    "model.d",
    "model.epsilon",
    "model.gamma",
    "model.omega_minus",
    "model.omega_plus",
    "model.density.kind",
    "model.density.kappa",
    "grid.h",
    "grid.allow_under_resolved",
    "grid.face_rule",
    "grid.constant_medium",
    "run.boxes",
    "run.realizations",
    "run.master_seed",
    "run.oracle_dense",
    "run.threads",
    "run.tol_eig",
    "run.max_count",
    "gap_scan.e_max",
    "gap_scan.top",
    "squeeze.k",
    "lifting.k",
    "lifting.shifts",
    "wegner.energies",
    "wegner.deltas",
    "wegner.e_ref",
    "ise.e0",
    "ise.c3",
    "ise.c4",
    "ise.tau",
    "combes_thomas.gap_fractions",
    "combes_thomas.cell",
    "suitability.e0",
    "suitability.theta",
    "suitability.energies",
    "projector.e0",
    "projector.e_plus",
    "projector.cell",
    "dynamics.e0",
    "dynamics.e_plus",
    "dynamics.times",
    "dynamics.moment",
    "dynamics.tol",
    "dynamics.max_terms",
];

fn scalar<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("cannot parse {value:?}: {e}"))
}

fn list(value: &str) -> std::result::Result<Vec<f64>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| scalar(v.trim())).collect()
}

fn flag(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {value:?}")),
    }
}

fn optional(value: &str) -> std::result::Result<Option<f64>, String> {
    match value {
        "" | "none" | "auto" => Ok(None),
        v => scalar(v).map(Some),
    }
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let kappa_of = |d: &DensitySpec| d.kappa().unwrap_or(2.0);
    match key {
        "model.d" => cfg.model.d = scalar(value)?,
        "model.epsilon" => cfg.model.epsilon = scalar(value)?,
        "model.gamma" => cfg.model.gamma = scalar(value)?,
        "model.omega_minus" => cfg.model.omega_minus = scalar(value)?,
        "model.omega_plus" => cfg.model.omega_plus = scalar(value)?,
        "model.density.kind" => {
            cfg.model.density = match value {
                "uniform" => DensitySpec::Uniform,
                "polynomial_thin" => DensitySpec::PolynomialThin {
                    kappa: kappa_of(&cfg.model.density),
                },
                _ => return Err(format!("unknown density kind {value:?}")),
            }
        }
        "model.density.kappa" => {
            let kappa = scalar(value)?;
            cfg.model.density = DensitySpec::PolynomialThin { kappa };
        }
        "grid.h" => cfg.grid.h = optional(value)?,
        "grid.allow_under_resolved" => cfg.grid.allow_under_resolved = flag(value)?,
        "grid.face_rule" => {
            cfg.grid.face_rule = match value {
                "midpoint" => FaceRule::Midpoint,
                "harmonic" => FaceRule::Harmonic,
                _ => return Err(format!("unknown face rule {value:?}")),
            }
        }
        "grid.constant_medium" => cfg.grid.constant_medium = flag(value)?,
        "run.boxes" => cfg.run.boxes = list(value)?,
        "run.realizations" => cfg.run.realizations = scalar(value)?,
        "run.master_seed" => cfg.run.master_seed = scalar(value)?,
        "run.oracle_dense" => cfg.run.oracle_dense = flag(value)?,
        "run.threads" => cfg.run.threads = scalar(value)?,
        "run.tol_eig" => cfg.run.tol_eig = scalar(value)?,
        "run.max_count" => cfg.run.max_count = scalar(value)?,
        "gap_scan.e_max" => cfg.gap_scan.e_max = scalar(value)?,
        "gap_scan.top" => cfg.gap_scan.top = scalar(value)?,
        "squeeze.k" => cfg.squeeze.k = scalar(value)?,
        "lifting.k" => cfg.lifting.k = scalar(value)?,
        "lifting.shifts" => {
            cfg.lifting.shifts = match value {
                "auto" | "none" => None,
                v => Some(list(v)?),
            }
        }
        "wegner.energies" => cfg.wegner.energies = list(value)?,
        "wegner.deltas" => cfg.wegner.deltas = list(value)?,
        "wegner.e_ref" => cfg.wegner.e_ref = scalar(value)?,
        "ise.e0" => cfg.ise.e0 = optional(value)?,
        "ise.c3" => cfg.ise.c3 = list(value)?,
        "ise.c4" => cfg.ise.c4 = scalar(value)?,
        "ise.tau" => cfg.ise.tau = optional(value)?,
        "combes_thomas.gap_fractions" => cfg.combes_thomas.gap_fractions = list(value)?,
        "combes_thomas.cell" => cfg.combes_thomas.cell = optional(value)?,
        "suitability.e0" => cfg.suitability.e0 = optional(value)?,
        "suitability.theta" => cfg.suitability.theta = scalar(value)?,
        "suitability.energies" => cfg.suitability.energies = scalar(value)?,
        "projector.e0" => cfg.projector.e0 = optional(value)?,
        "projector.e_plus" => cfg.projector.e_plus = optional(value)?,
        "projector.cell" => cfg.projector.cell = optional(value)?,
        "dynamics.e0" => cfg.dynamics.e0 = optional(value)?,
        "dynamics.e_plus" => cfg.dynamics.e_plus = optional(value)?,
        "dynamics.times" => cfg.dynamics.times = list(value)?,
        "dynamics.moment" => cfg.dynamics.moment = scalar(value)?,
        "dynamics.tol" => cfg.dynamics.tol = scalar(value)?,
        "dynamics.max_terms" => cfg.dynamics.max_terms = scalar(value)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

fn show(x: f64) -> String {
    format!("{x:?}")
}

fn show_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| show(x)).collect::<Vec<_>>().join(", ")
}

fn show_opt(x: Option<f64>) -> String {
    x.map(show).unwrap_or_else(|| "auto".into())
}

/// Every resolved key with its value, in canonical order.
pub fn resolved_entries(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let mut out = Vec::with_capacity(KEYS.len());
    for &key in KEYS {
        let value = match key {
            "model.d" => cfg.model.d.to_string(),
            "model.epsilon" => show(cfg.model.epsilon),
            "model.gamma" => show(cfg.model.gamma),
            "model.omega_minus" => show(cfg.model.omega_minus),
            "model.omega_plus" => show(cfg.model.omega_plus),
            "model.density.kind" => cfg.model.density.name().to_string(),
            "model.density.kappa" => match cfg.model.density.kappa() {
                Some(k) => show(k),
                None => continue,
            },
            "grid.h" => show_opt(cfg.grid.h),
            "grid.allow_under_resolved" => cfg.grid.allow_under_resolved.to_string(),
            "grid.face_rule" => match cfg.grid.face_rule {
                FaceRule::Midpoint => "midpoint".into(),
                FaceRule::Harmonic => "harmonic".into(),
            },
            "grid.constant_medium" => cfg.grid.constant_medium.to_string(),
            "run.boxes" => show_list(&cfg.run.boxes),
            "run.realizations" => cfg.run.realizations.to_string(),
            "run.master_seed" => cfg.run.master_seed.to_string(),
            "run.oracle_dense" => cfg.run.oracle_dense.to_string(),
            "run.threads" => cfg.run.threads.to_string(),
            "run.tol_eig" => show(cfg.run.tol_eig),
            "run.max_count" => cfg.run.max_count.to_string(),
            "gap_scan.e_max" => show(cfg.gap_scan.e_max),
            "gap_scan.top" => cfg.gap_scan.top.to_string(),
            "squeeze.k" => cfg.squeeze.k.to_string(),
            "lifting.k" => cfg.lifting.k.to_string(),
            "lifting.shifts" => match &cfg.lifting.shifts {
                Some(s) => show_list(s),
                None => "auto".into(),
            },
            "wegner.energies" => show_list(&cfg.wegner.energies),
            "wegner.deltas" => show_list(&cfg.wegner.deltas),
            "wegner.e_ref" => show(cfg.wegner.e_ref),
            "ise.e0" => show_opt(cfg.ise.e0),
            "ise.c3" => show_list(&cfg.ise.c3),
            "ise.c4" => show(cfg.ise.c4),
            "ise.tau" => show_opt(cfg.ise.tau),
            "combes_thomas.gap_fractions" => show_list(&cfg.combes_thomas.gap_fractions),
            "combes_thomas.cell" => show_opt(cfg.combes_thomas.cell),
            "suitability.e0" => show_opt(cfg.suitability.e0),
            "suitability.theta" => show(cfg.suitability.theta),
            "suitability.energies" => cfg.suitability.energies.to_string(),
            "projector.e0" => show_opt(cfg.projector.e0),
            "projector.e_plus" => show_opt(cfg.projector.e_plus),
            "projector.cell" => show_opt(cfg.projector.cell),
            "dynamics.e0" => show_opt(cfg.dynamics.e0),
            "dynamics.e_plus" => show_opt(cfg.dynamics.e_plus),
            "dynamics.times" => show_list(&cfg.dynamics.times),
            "dynamics.moment" => cfg.dynamics.moment.to_string(),
            "dynamics.tol" => show(cfg.dynamics.tol),
            "dynamics.max_terms" => cfg.dynamics.max_terms.to_string(),
            _ => unreachable!("key table and emitter disagree on {key}"),
        };
        out.push((key, value));
    }
    out
}

/// Canonical text of a configuration; `parse_config_str` reproduces it exactly.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut text = String::new();
    let mut section = "";
    for (key, value) in resolved_entries(cfg) {
        let head = key.split('.').next().unwrap_or("");
        if head != section {
            if !section.is_empty() {
                text.push('\n');
            }
            section = head;
        }
        text.push_str(&format!("{key} = {value}\n"));
    }
    text
}

pub fn parse_config_str(text: &str) -> Result<RunManifest> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut kappa_line = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(line_no, format!("expected `key = value`, got {line:?}")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::config(line_no, format!("unknown key {key:?}")));
        }
        if let Some(previous) = seen.insert(key.to_string(), line_no) {
            warnings.push(format!(
                "line {line_no}: duplicate key {key} (first set on line {previous}); last value wins"
            ));
        }
        if key == "model.density.kappa" {
            kappa_line = Some(value.to_string());
        }
        apply(&mut cfg, key, value).map_err(|m| Error::config(line_no, m))?;
    }
    // kind and kappa may come in either order
    if let (Some(kappa), Some(DensitySpec::Uniform)) = (kappa_line, Some(cfg.model.density)) {
        if seen.contains_key("model.density.kind") {
            let line = seen["model.density.kappa"].max(seen["model.density.kind"]);
            if seen["model.density.kind"] < seen["model.density.kappa"] {
                return Err(Error::config(
                    line,
                    format!("density.kappa = {kappa} given for a uniform density"),
                ));
            }
        }
    }
    cfg.validate().map_err(|issue| {
        let line = seen.get(issue.key).copied().unwrap_or(0);
        Error::config(line, format!("{}: {}", issue.key, issue.message))
    })?;
    let mut manifest = RunManifest::new(cfg);
    manifest.warnings = warnings;
    Ok(manifest)
}

pub fn parse_config(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(0, format!("cannot read {}: {e}", path.display())))?;
    let mut manifest = parse_config_str(&text)?;
    manifest.path = Some(path.display().to_string());
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_defaults_and_edits() {
        let cfg = ExperimentConfig::default();
        assert_eq!(parse_config_str(&emit_config(&cfg)).unwrap().config, cfg);
        let mut cfg = cfg;
        cfg.model.density = DensitySpec::PolynomialThin { kappa: 2.0 };
        cfg.run.boxes = vec![1.0, 1.5, 2.0];
        cfg.ise.e0 = Some(4.25);
        cfg.lifting.shifts = Some(vec![0.0, 0.01]);
        cfg.grid.h = Some(1.0 / 64.0);
        cfg.grid.allow_under_resolved = true;
        let back = parse_config_str(&emit_config(&cfg)).unwrap();
        assert_eq!(back.config, cfg);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn omega_plus_bound_reports_line() {
        let err = parse_config_str("# comment\nmodel.omega_plus = 0.3\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("1/4"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_duplicates() {
        assert!(matches!(
            parse_config_str("run.realizations = 3\nmodel.colour = red\n"),
            Err(Error::Config { line: 2, .. })
        ));
        let m = parse_config_str("run.realizations = 3\nrun.realizations = 4\n").unwrap();
        assert_eq!(m.config.run.realizations, 4);
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn minimal_file_resolves_defaults() {
        let m = parse_config_str("").unwrap();
        assert_eq!(m.config, ExperimentConfig::default());
        let text = emit_config(&m.config);
        assert!(text.contains("model.epsilon = 0.25"));
        assert!(text.contains("run.master_seed = 1"));
    }

    #[test]
    fn non_integer_box_is_rejected_with_line() {
        assert!(matches!(
            parse_config_str("\n\nrun.boxes = 1.0, 1.1\n"),
            Err(Error::Config { line: 3, .. })
        ));
    }
}
