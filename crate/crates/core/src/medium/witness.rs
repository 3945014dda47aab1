use serde::{Deserialize, Serialize};

use super::field::RadiiField;
use super::params::ModelParams;

/// One witness point per cell, carrying the lower bound
/// `a_omega - a_{omega + s} >= alpha_eps * s` on the ball of radius `(eps^gamma / 10) * s`
/// around it, for every `0 <= s <= s0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSet {
    pub points: Vec<Vec<f64>>,
    /// Equidistribution radius `eps^gamma / 10`.
    pub radius: f64,
    pub alpha_epsilon: f64,
    pub s0: f64,
    cell_size: f64,
    centers: Vec<Vec<f64>>,
}

impl WitnessSet {
    /// Radius of the ball carrying the bound at shift `s`.
    pub fn ball_radius(&self, s: f64) -> f64 {
        self.radius * s
    }

    /// Guaranteed coefficient drop on the ball at shift `s`.
    pub fn lower_bound(&self, s: f64) -> f64 {
        self.alpha_epsilon * s
    }

    /// Whether every ball of radius `eps^gamma / 10` sits inside its (open) cell.
    pub fn is_equidistributed(&self) -> bool {
        let half = 0.5 * self.cell_size;
        self.points.iter().zip(&self.centers).all(|(x, c)| {
            x.iter()
                .zip(c)
                .all(|(xi, ci)| (xi - ci).abs() + self.radius < half)
        })
    }
}

/// Places the witness of cell `z` on the first coordinate axis through the cell centre,
/// just outside the middle of the unshifted boundary layer.
///
/// The coefficient drop `a_omega - a_{omega+s}` is at least `alpha_eps * s` on the radial
/// band `[eps*omega + eps*s/2, eps*omega + layer + eps*s/2]`; the outward offset by the
/// largest witness-ball radius keeps the whole ball inside that band up to `s = s0`.
pub fn witness_points(params: &ModelParams, radii: &RadiiField) -> WitnessSet {
    let constants = params.derived_constants();
    let layer = constants.layer_thickness;
    let radius = params.epsilon.powf(params.gamma) / 10.0;
    let max_ball = radius * constants.s0;
    let half = 0.5 * params.epsilon;
    let mut points = Vec::with_capacity(radii.len());
    let mut centers = Vec::with_capacity(radii.len());
    for (j, &omega) in radii.values().iter().enumerate() {
        let base = params.epsilon * omega + 0.5 * layer + max_ball;
        let slack = half - (base + radius);
        let offset = base + max_ball.min(0.5 * slack.max(0.0));
        let c = radii.center(j);
        let mut x = c.clone();
        x[0] += offset;
        points.push(x);
        centers.push(c);
    }
    WitnessSet {
        points,
        radius,
        alpha_epsilon: constants.alpha_epsilon,
        s0: constants.s0,
        cell_size: params.epsilon,
        centers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSpec;
    use crate::medium::{eval_coefficient, sample_radii, shift_radii};
    use rand::{Rng, SeedableRng};

    #[test]
    fn balls_are_inside_cells() {
        let p = ModelParams::default();
        let f = sample_radii(&p, &BoxSpec::at_origin(2, 1.0), 5, 0).unwrap();
        assert!(witness_points(&p, &f).is_equidistributed());
        // extreme corner of the admissible parameter range
        let p = ModelParams {
            epsilon: 0.99,
            omega_minus: 0.2,
            omega_plus: 0.2499,
            ..ModelParams::default()
        };
        let f = RadiiField::constant(&p, &BoxSpec::at_origin(2, 0.99), 0.2499).unwrap();
        assert!(witness_points(&p, &f).is_equidistributed());
    }

    #[test]
    fn drop_bound_on_sampled_ball_points() {
        let p = ModelParams::default();
        let f = sample_radii(&p, &BoxSpec::at_origin(2, 0.5), 17, 3).unwrap();
        let w = witness_points(&p, &f);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for &s in &[0.0, w.s0 / 4.0, w.s0 / 2.0, w.s0] {
            let grown = shift_radii(&p, &f, s).unwrap();
            for x in &w.points {
                for _ in 0..100 {
                    let r = w.ball_radius(s) * rng.random::<f64>().sqrt();
                    let th = std::f64::consts::TAU * rng.random::<f64>();
                    let y = [x[0] + r * th.cos(), x[1] + r * th.sin()];
                    let diff = eval_coefficient(&p, &f, &y).unwrap()
                        - eval_coefficient(&p, &grown, &y).unwrap();
                    assert!(diff >= w.lower_bound(s), "s={s} diff={diff}");
                }
            }
        }
    }
}
