use super::field::RadiiField;
use super::params::ModelParams;
use crate::error::Result;
use crate::geometry::distance;

/// Anything that can be sampled as a scalar diffusion coefficient.
pub trait Coefficient: Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;
}

impl<F> Coefficient for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        self(x)
    }
}

/// Radial profile of the smooth coefficient around one inclusion.
fn smooth_profile(params: &ModelParams, omega: f64, r: f64) -> f64 {
    let contrast = params.contrast();
    let layer = params.layer_thickness();
    let inner = params.epsilon * omega;
    let outer = inner + layer;
    if r < inner {
        contrast
    } else if r >= outer {
        1.0
    } else {
        // dist(x, matrix) = outer - r inside the layer
        (1.0 - (1.0 - contrast) * (outer - r) / layer).clamp(contrast, 1.0)
    }
}

fn locate_radius(radii: &RadiiField, x: &[f64]) -> Result<(f64, f64)> {
    let j = radii.locate(x)?;
    Ok((radii.values()[j], distance(x, &radii.center(j))))
}

/// Coefficient with linear boundary layer: `eps^2` in inclusions, `1` in the matrix.
pub fn eval_coefficient(params: &ModelParams, radii: &RadiiField, x: &[f64]) -> Result<f64> {
    let (omega, r) = locate_radius(radii, x)?;
    Ok(smooth_profile(params, omega, r))
}

/// Sharp two-phase coefficient: `eps^2` in inclusions, `1` on layer and matrix.
pub fn eval_sharp_coefficient(params: &ModelParams, radii: &RadiiField, x: &[f64]) -> Result<f64> {
    let (omega, r) = locate_radius(radii, x)?;
    Ok(if r < params.epsilon * omega {
        params.contrast()
    } else {
        1.0
    })
}

/// The smooth coefficient of one realization.
#[derive(Debug, Clone)]
pub struct SmoothCoefficient<'a> {
    pub params: &'a ModelParams,
    pub radii: &'a RadiiField,
}

impl Coefficient for SmoothCoefficient<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        eval_coefficient(self.params, self.radii, x)
    }
}

/// The sharp coefficient of one realization.
#[derive(Debug, Clone)]
pub struct SharpCoefficient<'a> {
    pub params: &'a ModelParams,
    pub radii: &'a RadiiField,
}

impl Coefficient for SharpCoefficient<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        eval_sharp_coefficient(self.params, self.radii, x)
    }
}

/// Spatially constant coefficient.
#[derive(Debug, Clone, Copy)]
pub struct ConstantCoefficient(pub f64);

impl Coefficient for ConstantCoefficient {
    fn value(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSpec;
    use crate::medium::shift_radii;

    fn single_cell(omega: f64) -> (ModelParams, RadiiField) {
        let p = ModelParams::default();
        let f = RadiiField::constant(&p, &BoxSpec::at_origin(2, 0.25), omega).unwrap();
        (p, f)
    }

    fn at_radius(r: f64) -> [f64; 2] {
        [0.125 + r, 0.125]
    }

    #[test]
    fn three_branch_values() {
        let (p, f) = single_cell(0.2);
        let inside = eval_coefficient(&p, &f, &at_radius(0.02)).unwrap();
        assert!((inside - 0.0625).abs() < 1e-15);
        let mid = eval_coefficient(&p, &f, &at_radius(0.0578125)).unwrap();
        assert!((mid - 0.53125).abs() < 1e-12);
        assert_eq!(eval_coefficient(&p, &f, &at_radius(0.07)).unwrap(), 1.0);
    }

    #[test]
    fn sharp_values() {
        let (p, f) = single_cell(0.2);
        assert_eq!(eval_sharp_coefficient(&p, &f, &at_radius(0.02)).unwrap(), 0.0625);
        assert_eq!(eval_sharp_coefficient(&p, &f, &at_radius(0.06)).unwrap(), 1.0);
        assert_eq!(eval_sharp_coefficient(&p, &f, &at_radius(0.1)).unwrap(), 1.0);
    }

    #[test]
    fn continuous_at_branch_boundaries() {
        let (p, f) = single_cell(0.2);
        let inner = 0.05;
        let outer = inner + p.layer_thickness();
        for &r in &[inner, outer] {
            let lo = eval_coefficient(&p, &f, &at_radius(r - 1e-12)).unwrap();
            let hi = eval_coefficient(&p, &f, &at_radius(r + 1e-12)).unwrap();
            assert!((lo - hi).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_window_errors() {
        let (p, f) = single_cell(0.2);
        assert!(eval_coefficient(&p, &f, &[0.3, 0.1]).is_err());
        assert!(eval_sharp_coefficient(&p, &f, &[-0.1, 0.1]).is_err());
    }

    #[test]
    fn squeeze_on_a_ray() {
        let (p, f) = single_cell(0.15);
        let grown = shift_radii(&p, &f, p.derived_constants().s0).unwrap();
        for i in 0..=1000 {
            let x = at_radius(0.125 * i as f64 / 1000.0);
            let a = eval_coefficient(&p, &f, &x).unwrap();
            assert!(eval_sharp_coefficient(&p, &grown, &x).unwrap() <= a);
            assert!(a <= eval_sharp_coefficient(&p, &f, &x).unwrap());
        }
    }
}
