use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the i.i.d. radius variables on `[omega_minus, omega_plus]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Constant density `1 / (omega_plus - omega_minus)`.
    Uniform,
    /// Density proportional to `(omega_plus - x)^(kappa - 1)`, so that the upper tail
    /// `mu([omega_plus - s, omega_plus]) = (s / (omega_plus - omega_minus))^kappa`.
    PolynomialThin { kappa: f64 },
}

impl DensitySpec {
    pub fn name(&self) -> &'static str {
        match self {
            DensitySpec::Uniform => "uniform",
            DensitySpec::PolynomialThin { .. } => "polynomial_thin",
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            DensitySpec::Uniform => None,
            DensitySpec::PolynomialThin { kappa } => Some(kappa),
        }
    }
}

/// Deterministic knobs of the inclusion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub density: DensitySpec,
}

/// Constants derived from `(epsilon, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Witness lower-bound slope `2 (1 - eps^2) / eps^(gamma - 1)`.
    pub alpha_epsilon: f64,
    /// Largest admissible uniform radius shift `eps^(gamma - 1) / 4`.
    pub s0: f64,
    /// Thickness `eps^gamma / 4` of the boundary layer.
    pub layer_thickness: f64,
    /// Uniform Lipschitz bound `4 / eps^gamma` of the smooth coefficient.
    pub lipschitz_bound: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            d: 2,
            epsilon: 0.25,
            gamma: 2.0,
            omega_minus: 0.1,
            omega_plus: 0.2,
            density: DensitySpec::Uniform,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.d) {
            return Err(Error::params(format!("d = {} must be 2 or 3", self.d)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::params(format!(
                "epsilon = {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        if !(self.gamma >= 2.0) || !self.gamma.is_finite() {
            return Err(Error::params(format!("gamma = {} must be >= 2", self.gamma)));
        }
        if !(self.omega_minus > 0.0) {
            return Err(Error::params(format!(
                "omega_minus = {} must be positive",
                self.omega_minus
            )));
        }
        if !(self.omega_minus < self.omega_plus) {
            return Err(Error::params(format!(
                "omega_minus = {} must be below omega_plus = {}",
                self.omega_minus, self.omega_plus
            )));
        }
        if !(self.omega_plus < 0.25) {
            return Err(Error::params(format!(
                "omega_plus = {} must be below the bound 1/4",
                self.omega_plus
            )));
        }
        if let DensitySpec::PolynomialThin { kappa } = self.density {
            // kappa < 1 makes the density unbounded near omega_plus.
            if !(kappa >= 1.0) || !kappa.is_finite() {
                return Err(Error::params(format!(
                    "density.kappa = {kappa} must be >= 1 (bounded density)"
                )));
            }
        }
        if !self.fits_in_cell(self.omega_plus) {
            return Err(Error::params(
                "inclusion plus boundary layer does not fit strictly inside a cell",
            ));
        }
        Ok(())
    }

    /// Whether an inclusion of dimensionless radius `omega` together with its layer lies
    /// strictly inside its cell.
    pub fn fits_in_cell(&self, omega: f64) -> bool {
        self.epsilon * omega + self.layer_thickness() < 0.5 * self.epsilon
    }

    pub fn layer_thickness(&self) -> f64 {
        self.epsilon.powf(self.gamma) / 4.0
    }

    pub fn contrast(&self) -> f64 {
        self.epsilon * self.epsilon
    }

    pub fn derived_constants(&self) -> DerivedConstants {
        let eps = self.epsilon;
        DerivedConstants {
            alpha_epsilon: 2.0 * (1.0 - eps * eps) / eps.powf(self.gamma - 1.0),
            s0: eps.powf(self.gamma - 1.0) / 4.0,
            layer_thickness: self.layer_thickness(),
            lipschitz_bound: 4.0 / eps.powf(self.gamma),
        }
    }

    /// `mu([omega_plus - s, omega_plus])`.
    pub fn upper_tail(&self, s: f64) -> f64 {
        let width = self.omega_plus - self.omega_minus;
        let x = (s / width).clamp(0.0, 1.0);
        match self.density {
            DensitySpec::Uniform => x,
            DensitySpec::PolynomialThin { kappa } => x.powf(kappa),
        }
    }

    /// Inverse CDF of the radius law; `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let width = self.omega_plus - self.omega_minus;
        match self.density {
            DensitySpec::Uniform => self.omega_minus + width * u,
            DensitySpec::PolynomialThin { kappa } => {
                self.omega_plus - width * (1.0 - u).powf(1.0 / kappa)
            }
        }
    }
}

/// Free-function form of [`ModelParams::derived_constants`].
pub fn derived_constants(params: &ModelParams) -> DerivedConstants {
    params.derived_constants()
}
