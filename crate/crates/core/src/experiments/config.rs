use serde::{Deserialize, Serialize};

use crate::discretization::{FaceRule, ResolutionPolicy};
use crate::geometry::integer_ratio;
use crate::medium::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Grid spacing; `None` means `eps^gamma / 8`.
    pub h: Option<f64>,
    pub allow_under_resolved: bool,
    pub face_rule: FaceRule,
    /// Replace the random coefficient by `a ≡ 1` (control runs).
    pub constant_medium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Box sides `L`, each a multiple of `eps`.
    pub boxes: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    /// Use the dense eigensolver instead of the sparse engine.
    pub oracle_dense: bool,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub tol_eig: f64,
    pub max_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScanConfig {
    pub e_max: f64,
    /// Number of widest empty intervals reported.
    pub top: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeConfig {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftingConfig {
    pub k: usize,
    /// Radius shrinkages; `None` means `{0, s0/8, s0/4, s0/2, s0}`.
    pub shifts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerConfig {
    pub energies: Vec<f64>,
    /// Half-widths, in units of `e_ref`.
    pub deltas: Vec<f64>,
    pub e_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IseConfig {
    pub e0: Option<f64>,
    pub c3: Vec<f64>,
    pub c4: f64,
    /// Lifting exponent for `s_L = L^(-C3/tau)`; fitted by the lifting driver when absent.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombesThomasConfig {
    /// Spectral distances `g` as fractions of `lambda_min`.
    pub gap_fractions: Vec<f64>,
    /// Side of the cubes `Λ(x)`, `Λ(y)`; `None` means `eps`.
    pub cell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityConfig {
    pub e0: Option<f64>,
    pub theta: f64,
    /// Number of energies on `[E0, E0 + L^(-1/2) / 2]`.
    pub energies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorConfig {
    pub e0: Option<f64>,
    pub e_plus: Option<f64>,
    pub cell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub e0: Option<f64>,
    pub e_plus: Option<f64>,
    pub times: Vec<f64>,
    pub moment: u32,
    pub tol: f64,
    pub max_terms: usize,
}

/// Everything a driver reads. Defaults describe a small two-dimensional run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid: GridConfig,
    pub run: RunConfig,
    pub gap_scan: GapScanConfig,
    pub squeeze: SqueezeConfig,
    pub lifting: LiftingConfig,
    pub wegner: WegnerConfig,
    pub ise: IseConfig,
    pub combes_thomas: CombesThomasConfig,
    pub suitability: SuitabilityConfig,
    pub projector: ProjectorConfig,
    pub dynamics: DynamicsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelParams {
                omega_plus: 0.18,
                ..ModelParams::default()
            },
            grid: GridConfig {
                h: None,
                allow_under_resolved: false,
                face_rule: FaceRule::Midpoint,
                constant_medium: false,
            },
            run: RunConfig {
                boxes: vec![1.0],
                realizations: 10,
                master_seed: 1,
                oracle_dense: false,
                threads: 0,
                tol_eig: 1e-10,
                max_count: 200,
            },
            gap_scan: GapScanConfig {
                e_max: 60.0,
                top: 5,
            },
            squeeze: SqueezeConfig { k: 10 },
            lifting: LiftingConfig { k: 5, shifts: None },
            wegner: WegnerConfig {
                energies: vec![41.0],
                deltas: vec![0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625, 0.125],
                e_ref: 41.0,
            },
            ise: IseConfig {
                e0: None,
                c3: vec![1.0, 2.0, 4.0],
                c4: 1.0,
                tau: None,
            },
            combes_thomas: CombesThomasConfig {
                gap_fractions: vec![0.5, 1.0],
                cell: None,
            },
            suitability: SuitabilityConfig {
                e0: None,
                theta: 5.0,
                energies: 5,
            },
            projector: ProjectorConfig {
                e0: None,
                e_plus: None,
                cell: None,
            },
            dynamics: DynamicsConfig {
                e0: None,
                e_plus: None,
                times: vec![0.0, 0.01, 0.1],
                moment: 2,
                tol: 1e-10,
                max_terms: 200_000,
            },
        }
    }
}

/// A validation failure tied to the configuration key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: &'static str,
    pub message: String,
}

fn issue(key: &'static str, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        key,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn spacing(&self) -> f64 {
        self.grid
            .h
            .unwrap_or_else(|| self.model.epsilon.powf(self.model.gamma) / 8.0)
    }

    pub fn resolution_policy(&self) -> ResolutionPolicy {
        if self.grid.constant_medium {
            ResolutionPolicy::Unconstrained
        } else {
            ResolutionPolicy::Layer {
                thickness: self.model.layer_thickness(),
                allow_under_resolved: self.grid.allow_under_resolved,
            }
        }
    }

    pub fn lifting_shifts(&self) -> Vec<f64> {
        let s0 = self.model.derived_constants().s0;
        self.lifting
            .shifts
            .clone()
            .unwrap_or_else(|| vec![0.0, s0 / 8.0, s0 / 4.0, s0 / 2.0, s0])
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigIssue> {
        let m = &self.model;
        m.validate().map_err(|e| {
            let key = match e.to_string() {
                s if s.contains("kappa") => "model.density.kappa",
                s if s.contains(": d =") => "model.d",
                s if s.contains("epsilon") => "model.epsilon",
                s if s.contains("gamma") => "model.gamma",
                s if s.contains("omega_minus") => "model.omega_minus",
                _ => "model.omega_plus",
            };
            issue(key, e.to_string())
        })?;
        let h = self.spacing();
        if !(h > 0.0) {
            return Err(issue("grid.h", format!("spacing {h} must be positive")));
        }
        if self.run.boxes.is_empty() {
            return Err(issue("run.boxes", "at least one box side is required"));
        }
        for &side in &self.run.boxes {
            match integer_ratio(side, m.epsilon) {
                Some(n) if n >= 1 => {}
                _ => {
                    return Err(issue(
                        "run.boxes",
                        format!("box side {side} is not a positive multiple of epsilon = {}", m.epsilon),
                    ))
                }
            }
            match integer_ratio(side, h) {
                Some(n) if n >= 2 => {}
                _ => {
                    return Err(issue(
                        "grid.h",
                        format!("spacing {h} does not divide box side {side}"),
                    ))
                }
            }
        }
        if let ResolutionPolicy::Layer {
            thickness,
            allow_under_resolved: false,
        } = self.resolution_policy()
        {
            if h > 0.5 * thickness * (1.0 + 1e-12) {
                return Err(issue(
                    "grid.h",
                    format!(
                        "spacing {h} under-resolves the layer of thickness {thickness}; set grid.allow_under_resolved = true to override"
                    ),
                ));
            }
        }
        if self.run.realizations == 0 {
            return Err(issue("run.realizations", "need at least one realization"));
        }
        if !(self.run.tol_eig > 0.0) {
            return Err(issue("run.tol_eig", "tolerance must be positive"));
        }
        if self.squeeze.k == 0 {
            return Err(issue("squeeze.k", "k must be at least 1"));
        }
        if self.lifting.k == 0 {
            return Err(issue("lifting.k", "k must be at least 1"));
        }
        let s0 = m.derived_constants().s0;
        if self
            .lifting_shifts()
            .iter()
            .any(|&s| !(s >= 0.0 && s <= s0 * (1.0 + 1e-12)))
        {
            return Err(issue("lifting.shifts", format!("shifts must lie in [0, s0 = {s0}]")));
        }
        if self.wegner.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(issue("wegner.deltas", "window half-widths must be positive"));
        }
        if !(self.wegner.e_ref > 0.0) {
            return Err(issue("wegner.e_ref", "reference energy must be positive"));
        }
        if self.ise.c3.iter().any(|&c| !(c > 0.0)) {
            return Err(issue("ise.c3", "C3 values must be positive"));
        }
        if let Some(tau) = self.ise.tau {
            if !(tau > 0.0) {
                return Err(issue("ise.tau", "tau must be positive"));
            }
        }
        if self.combes_thomas.gap_fractions.iter().any(|&g| !(g > 0.0)) {
            return Err(issue("combes_thomas.gap_fractions", "gap fractions must be positive"));
        }
        if !(self.suitability.theta > 2.0 * m.d as f64) {
            return Err(issue(
                "suitability.theta",
                format!("theta = {} must exceed 2d = {}", self.suitability.theta, 2 * m.d),
            ));
        }
        if self.suitability.energies == 0 {
            return Err(issue("suitability.energies", "need at least one energy"));
        }
        if self.dynamics.times.iter().any(|&t| !(t >= 0.0)) {
            return Err(issue("dynamics.times", "times must be nonnegative"));
        }
        if !(self.dynamics.tol > 0.0) {
            return Err(issue("dynamics.tol", "tolerance must be positive"));
        }
        for (key, cell) in [
            ("combes_thomas.cell", self.combes_thomas.cell),
            ("projector.cell", self.projector.cell),
        ] {
            if let Some(c) = cell {
                if !(c > 0.0) {
                    return Err(issue(key, "cell side must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        assert_eq!(c.validate(), Ok(()));
        assert_eq!(c.spacing(), 1.0 / 128.0);
        assert_eq!(c.lifting_shifts(), vec![0.0, 0.0078125, 0.015625, 0.03125, 0.0625]);
    }

    #[test]
    fn rejects_bad_boxes_and_theta() {
        let mut c = ExperimentConfig::default();
        c.run.boxes = vec![0.3];
        assert_eq!(c.validate().unwrap_err().key, "run.boxes");
        let mut c = ExperimentConfig::default();
        c.suitability.theta = 4.0;
        assert_eq!(c.validate().unwrap_err().key, "suitability.theta");
        let mut c = ExperimentConfig::default();
        c.model.omega_plus = 0.3;
        assert_eq!(c.validate().unwrap_err().key, "model.omega_plus");
    }
}
