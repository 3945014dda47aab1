//! Chebyshev expansion of the propagator `e^{-itA}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_MAX_TERMS: usize = 200_000;

/// `J_0(x), …, J_{order}(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = order.max(x.ceil() as usize) + 20 + (4.0 * x.cbrt()).ceil() as usize + 16;
    let start = start + (start % 2);
    let mut next = 0.0;
    let mut current = 1e-300;
    let mut norm = 0.0;
    let mut values = vec![0.0; start + 1];
    values[start] = current;
    for k in (1..=start).rev() {
        let previous = 2.0 * k as f64 / x * current - next;
        next = current;
        current = previous;
        values[k - 1] = current;
        if current.abs() > 1e250 {
            for v in &mut values[k - 1..] {
                *v *= 1e-250;
            }
            next *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
    }
    norm += values[0];
    for k in 0..=order {
        out[k] = values[k] / norm;
    }
    out
}

/// Number of terms after which every `2|J_k(x)|` stays below `tol`.
fn terms_needed(j: &[f64], x: f64, tol: f64) -> Option<usize> {
    let floor = x.ceil() as usize;
    (floor..j.len().saturating_sub(1))
        .find(|&k| 2.0 * j[k].abs() < tol && 2.0 * j[k + 1].abs() < tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionStats {
    pub terms: usize,
    pub norm_drift: f64,
}

/// `e^{-itA} ψ` with the spectrum enclosed by Gershgorin discs.
pub fn chebyshev_evolve(
    a: &CsrMatrix,
    state: &[Complex64],
    t: f64,
    tol: f64,
) -> Result<Vec<Complex64>> {
    chebyshev_evolve_with(a, state, t, tol, DEFAULT_MAX_TERMS).map(|(v, _)| v)
}

pub fn chebyshev_evolve_with(
    a: &CsrMatrix,
    state: &[Complex64],
    t: f64,
    tol: f64,
    max_terms: usize,
) -> Result<(Vec<Complex64>, EvolutionStats)> {
    let n = a.n();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.len(),
        });
    }
    let (lo, hi) = a.gershgorin();
    let center = 0.5 * (hi + lo);
    let radius = 0.5 * (hi - lo);
    let tau = (t * radius).abs();
    let norm0 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let estimate = tau.ceil() as usize + 40 + (10.0 * tau.cbrt()).ceil() as usize;
    if estimate > max_terms {
        return Err(Error::DegreeOverflow {
            needed: estimate,
            limit: max_terms,
        });
    }
    let j = bessel_j_sequence(tau, estimate + 2);
    let terms = terms_needed(&j, tau, tol).unwrap_or(estimate) + 1;

    // (-i)^k for t >= 0; the sign of t flips the phase
    let step = if t >= 0.0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    };
    let scaled = |x: &[Complex64], y: &mut [Complex64]| {
        a.matvec_complex_into(x, y);
        if radius > 0.0 {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (*yi - *xi * center) / radius;
            }
        } else {
            y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        }
    };

    let mut out: Vec<Complex64> = state.iter().map(|z| z * j[0]).collect();
    let mut prev = state.to_vec();
    let mut cur = vec![Complex64::new(0.0, 0.0); n];
    let mut phase = Complex64::new(1.0, 0.0);
    if terms > 1 {
        scaled(&prev, &mut cur);
        phase *= step;
        let c = phase * (2.0 * j[1]);
        for (o, v) in out.iter_mut().zip(&cur) {
            *o += c * v;
        }
    }
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    for k in 2..terms {
        scaled(&cur, &mut next);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = *nx * 2.0 - p;
        }
        phase *= step;
        let c = phase * (2.0 * j[k]);
        for (o, v) in out.iter_mut().zip(&next) {
            *o += c * v;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let global = Complex64::from_polar(1.0, -t * center);
    out.iter_mut().for_each(|z| *z *= global);

    let norm1 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let drift = (norm1 - norm0).abs();
    let allowed = 10.0 * tol * norm0.max(f64::MIN_POSITIVE);
    if drift > allowed {
        return Err(Error::NormDrift {
            drift,
            tolerance: allowed,
        });
    }
    Ok((
        out,
        EvolutionStats {
            terms,
            norm_drift: drift,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn series_j(k: usize, x: f64) -> f64 {
        (0..60)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * (x / 2.0).powi((2 * m + k) as i32)
                    / (gamma(m as f64 + 1.0) * gamma((m + k) as f64 + 1.0))
            })
            .sum()
    }

    #[test]
    fn bessel_matches_power_series() {
        for &x in &[0.1, 1.0, 2.5] {
            let j = bessel_j_sequence(x, 12);
            for k in 0..=12 {
                assert!((j[k] - series_j(k, x)).abs() < 1e-13, "J_{k}({x})");
            }
        }
    }

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(7.0, 3);
        assert!((j[0] - 0.300_079_270_519_555_6).abs() < 1e-14);
        assert!((j[1] + 0.004_682_823_482_345_735).abs() < 1e-14);
        let j = bessel_j_sequence(2.5, 5);
        assert!((j[5] - 0.019_501_625_134_503_22).abs() < 1e-14);
    }

    #[test]
    fn bessel_large_argument_stays_normalized() {
        let x = 3000.0;
        let j = bessel_j_sequence(x, 3200);
        let s: f64 = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12);
        let sq: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((sq - 1.0).abs() < 1e-10);
        assert!(j[3200].abs() < 1e-15);
    }

    #[test]
    fn zero_time_is_identity() {
        let a = CsrMatrix::from_diagonal(&[1.0, 3.0, 4.0]);
        let psi = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)];
        assert_eq!(chebyshev_evolve(&a, &psi, 0.0, 1e-12).unwrap(), psi);
    }

    #[test]
    fn eigenvector_picks_up_phase() {
        let a = CsrMatrix::from_diagonal(&[1.0, 3.0, 4.0]);
        let psi = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let out = chebyshev_evolve(&a, &psi, 2.5, 1e-12).unwrap();
        let want = Complex64::from_polar(1.0, -7.5);
        assert!((out[1] - want).norm() < 1e-11);
        assert!(out[0].norm() < 1e-11 && out[2].norm() < 1e-11);
    }

    #[test]
    fn overflow_is_reported() {
        let a = CsrMatrix::from_diagonal(&[0.0, 1e6]);
        let psi = vec![Complex64::new(1.0, 0.0); 2];
        assert!(matches!(
            chebyshev_evolve_with(&a, &psi, 10.0, 1e-10, 1000),
            Err(Error::DegreeOverflow { .. })
        ));
    }
}
