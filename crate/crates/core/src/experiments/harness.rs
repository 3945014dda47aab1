//! Shared plumbing of the drivers: per-realization operators, the spectral backend,
//! the Weyl guardrail, the realization pool and small statistics helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::config::ExperimentConfig;
use crate::discretization::{assemble_operator, build_grid, Grid};
use crate::error::{Error, Result};
use crate::geometry::BoxSpec;
use crate::medium::rng::mix64;
use crate::medium::{
    sample_radii, shift_radii, Coefficient, ConstantCoefficient, RadiiField, SharpCoefficient,
    SmoothCoefficient,
};
use crate::sparse::CsrMatrix;
use crate::spectral::dense::{dense_block_resolvent_norm, dense_eigen, dense_evolve};
use crate::spectral::{
    block_norm_with, chebyshev_evolve_with, eigenpairs_with, factor_resolved,
    lowest_eigenpairs_with, EigenSet, LanczosOptions, ShiftedFactorization, SpectralWindow,
    SpectrumCounter,
};

/// Largest operator the dense backend accepts.
pub const DENSE_LIMIT: usize = 4096;
/// A window count above this multiple of the Weyl ceiling aborts the solve.
pub const WEYL_FACTOR: usize = 10;

/// Which coefficient field an operator is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Medium {
    Smooth,
    Sharp,
}

pub fn box_grid(cfg: &ExperimentConfig, side: f64) -> Result<Grid> {
    build_grid(
        &BoxSpec::at_origin(cfg.model.d, side),
        cfg.spacing(),
        cfg.resolution_policy(),
    )
}

/// Radii of realization `r` on `Λ_L`; boxes of different sides share the cells they overlap.
pub fn realization_radii(cfg: &ExperimentConfig, side: f64, r: usize) -> Result<RadiiField> {
    sample_radii(
        &cfg.model,
        &BoxSpec::at_origin(cfg.model.d, side),
        cfg.run.master_seed,
        r as u64,
    )
}

/// Operator of one realization with radii shifted by `shift` (in units of `eps`).
pub fn realization_operator(
    cfg: &ExperimentConfig,
    grid: &Grid,
    radii: &RadiiField,
    shift: f64,
    medium: Medium,
) -> Result<CsrMatrix> {
    let rule = cfg.grid.face_rule;
    if cfg.grid.constant_medium {
        return Ok(assemble_operator(grid, &ConstantCoefficient(1.0), rule)?.matrix);
    }
    let shifted;
    let radii = if shift == 0.0 {
        radii
    } else {
        shifted = shift_radii(&cfg.model, radii, shift)?;
        &shifted
    };
    let params = &cfg.model;
    let coefficient: &dyn Coefficient = match medium {
        Medium::Smooth => &SmoothCoefficient { params, radii },
        Medium::Sharp => &SharpCoefficient { params, radii },
    };
    Ok(assemble_operator(grid, coefficient, rule)?.matrix)
}

pub fn lanczos_options(cfg: &ExperimentConfig, r: usize) -> LanczosOptions {
    LanczosOptions {
        tol_eig: cfg.run.tol_eig,
        max_count: cfg.run.max_count,
        seed: mix64(cfg.run.master_seed ^ mix64(r as u64)),
        ..LanczosOptions::default()
    }
}

/// Lower bound of the coefficient, used by the Weyl ceiling.
pub fn coefficient_floor(cfg: &ExperimentConfig) -> f64 {
    if cfg.grid.constant_medium {
        1.0
    } else {
        cfg.model.contrast()
    }
}

/// `#{λ <= e}` for `floor · (discrete Dirichlet Laplacian)` on `grid`. Since
/// `a >= floor` pointwise, this bounds the count of the random operator from above.
pub fn weyl_ceiling(grid: &Grid, floor: f64, e: f64) -> usize {
    let m = grid.nodes_per_axis;
    let h = grid.h;
    let mu: Vec<f64> = (1..=m)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (m + 1) as f64)).sin();
            4.0 / (h * h) * s * s
        })
        .collect();
    fn walk(mu: &[f64], depth: usize, budget: f64) -> usize {
        if depth == 0 {
            return 1;
        }
        let mut total = 0;
        for &v in mu {
            if v > budget {
                break;
            }
            total += walk(mu, depth - 1, budget - v);
        }
        total
    }
    let budget = e / floor;
    walk(&mu, grid.dim, budget * (1.0 + 1e-12))
}

enum Backend<'a> {
    Sparse(SpectrumCounter<'a>),
    Dense { values: Vec<f64>, vectors: DMatrix<f64> },
}

/// Spectral queries on one operator, served by the sparse engine or the dense oracle.
pub struct Spectrum<'a> {
    a: &'a CsrMatrix,
    grid: &'a Grid,
    floor: f64,
    opts: LanczosOptions,
    backend: Backend<'a>,
}

impl<'a> Spectrum<'a> {
    pub fn new(
        a: &'a CsrMatrix,
        grid: &'a Grid,
        cfg: &ExperimentConfig,
        opts: LanczosOptions,
    ) -> Result<Self> {
        let backend = if cfg.run.oracle_dense {
            if a.n() > DENSE_LIMIT {
                return Err(Error::config(
                    0,
                    format!(
                        "run.oracle_dense: operator of size {} exceeds the dense limit {DENSE_LIMIT}",
                        a.n()
                    ),
                ));
            }
            let (values, vectors) = dense_eigen(a);
            Backend::Dense { values, vectors }
        } else {
            Backend::Sparse(SpectrumCounter::new(a))
        };
        Ok(Self {
            a,
            grid,
            floor: coefficient_floor(cfg),
            opts,
            backend,
        })
    }

    pub fn matrix(&self) -> &'a CsrMatrix {
        self.a
    }

    pub fn grid(&self) -> &'a Grid {
        self.grid
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.backend, Backend::Dense { .. })
    }

    /// `#{λ <= x}`.
    pub fn at_most(&self, x: f64) -> Result<usize> {
        match &self.backend {
            Backend::Sparse(c) => c.at_most(x),
            Backend::Dense { values, .. } => Ok(values.iter().filter(|&&l| l <= x).count()),
        }
    }

    /// `#{lo < λ <= hi}`.
    pub fn count(&self, lo: f64, hi: f64) -> Result<usize> {
        match &self.backend {
            Backend::Sparse(c) => c.count(lo, hi),
            Backend::Dense { .. } => {
                if !(lo < hi) {
                    return Err(Error::Assertion(format!("empty window ({lo}, {hi}]")));
                }
                Ok(self.at_most(hi)? - self.at_most(lo)?)
            }
        }
    }

    /// The `k` lowest eigenvalues, ascending.
    pub fn lowest(&self, k: usize) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Sparse(c) => {
                let set = lowest_eigenpairs_with(c, k, &self.opts)?;
                let mut v = set.values;
                v.sort_by(f64::total_cmp);
                v.truncate(k);
                Ok(v)
            }
            Backend::Dense { values, .. } => Ok(values.iter().take(k).copied().collect()),
        }
    }

    fn guard(&self, hi: f64, count: usize) -> Result<()> {
        let ceiling = weyl_ceiling(self.grid, self.floor, hi);
        if count > WEYL_FACTOR * ceiling.max(1) {
            return Err(Error::WeylGuardrail {
                count,
                ceiling,
                energy: hi,
            });
        }
        Ok(())
    }

    /// Certified eigenpairs in `(lo, hi]`, sorted by eigenvalue.
    pub fn window(&self, lo: f64, hi: f64) -> Result<EigenSet> {
        let window = SpectralWindow::new(lo, hi);
        let count = self.count(lo, hi)?;
        self.guard(hi, self.at_most(hi)?)?;
        if count > self.opts.max_count {
            return Err(Error::TooManyEigenvalues {
                lo,
                hi,
                count,
                limit: self.opts.max_count,
            });
        }
        let mut set = match &self.backend {
            Backend::Sparse(c) => eigenpairs_with(c, lo, hi, &self.opts)?,
            Backend::Dense { values, vectors } => {
                let mut set = EigenSet::empty(window);
                for (j, &l) in values.iter().enumerate() {
                    if window.contains(l) {
                        let v: Vec<f64> = vectors.column(j).iter().copied().collect();
                        let av = self.a.matvec(&v);
                        let res = av
                            .iter()
                            .zip(&v)
                            .map(|(x, y)| (x - l * y).powi(2))
                            .sum::<f64>()
                            .sqrt();
                        set.values.push(l);
                        set.vectors.push(v);
                        set.residuals.push(res);
                    }
                }
                set.count = set.values.len();
                set
            }
        };
        let mut order: Vec<usize> = (0..set.values.len()).collect();
        order.sort_by(|&i, &j| set.values[i].total_cmp(&set.values[j]));
        set.values = order.iter().map(|&i| set.values[i]).collect();
        set.vectors = order.iter().map(|&i| std::mem::take(&mut set.vectors[i])).collect();
        set.residuals = order.iter().map(|&i| set.residuals[i]).collect();
        Ok(set)
    }

    /// `(A - E)⁻¹` ready for repeated masked solves; the sparse path applies the
    /// perturbation contract to unresolved energies.
    pub fn resolvent(&self, e: f64) -> Result<Resolvent<'_>> {
        match &self.backend {
            Backend::Sparse(c) => Ok(Resolvent::Sparse(factor_resolved(c.context(), e)?)),
            Backend::Dense { values, vectors } => {
                let eta = 1e-12 * self.a.norm_inf();
                if let Some((step, &l)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, &l)| (l - e).abs() < eta)
                {
                    return Err(Error::UnresolvedShift {
                        shift: e,
                        pivot: l - e,
                        step,
                    });
                }
                Ok(Resolvent::Dense { values, vectors, e })
            }
        }
    }

    /// `‖χ_rows (A - E)⁻¹ χ_cols‖₂`.
    pub fn block_norm(&self, e: f64, rows: &[usize], cols: &[usize], tol: f64) -> Result<f64> {
        self.resolvent(e)?.block_norm(rows, cols, tol)
    }

    /// `e^{-itA} ψ` and the number of Chebyshev terms used (0 on the dense path).
    pub fn evolve(
        &self,
        state: &[Complex64],
        t: f64,
        tol: f64,
        max_terms: usize,
    ) -> Result<(Vec<Complex64>, usize)> {
        match &self.backend {
            Backend::Sparse(_) => {
                chebyshev_evolve_with(self.a, state, t, tol, max_terms).map(|(v, s)| (v, s.terms))
            }
            Backend::Dense { values, vectors } => Ok((dense_evolve(values, vectors, state, t), 0)),
        }
    }
}

pub enum Resolvent<'s> {
    Sparse(ShiftedFactorization<'s>),
    Dense {
        values: &'s [f64],
        vectors: &'s DMatrix<f64>,
        e: f64,
    },
}

impl Resolvent<'_> {
    pub fn block_norm(&self, rows: &[usize], cols: &[usize], tol: f64) -> Result<f64> {
        match self {
            Resolvent::Sparse(f) => block_norm_with(f, rows, cols, tol),
            Resolvent::Dense { values, vectors, e } => {
                Ok(dense_block_resolvent_norm(values, vectors, *e, rows, cols))
            }
        }
    }
}

/// Runs `f` for every realization index on a bounded pool; results keep index order.
pub fn run_realizations<T, F>(cfg: &ExperimentConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let n = cfg.run.realizations;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.threads)
        .build();
    match pool {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Errors that abort a run outright instead of flagging one realization.
pub fn is_fatal(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. }
            | Error::Assertion(_)
            | Error::InvalidParams(_)
            | Error::NonIntegerBox { .. }
            | Error::NonDivisibleSpacing { .. }
            | Error::UnderResolved { .. }
            | Error::EmptyMask(_)
            | Error::RejectedShift { .. }
            | Error::Io(_)
    )
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// 95% t-interval for a mean.
pub fn mean_interval(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, m);
    }
    let half = t_quantile(xs.len() - 1) * sample_sd(xs) / (xs.len() as f64).sqrt();
    (m - half, m + half)
}

fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

/// Ordinary least squares `y = intercept + slope x` with a 95% interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: Option<(f64, f64)>,
    pub points: usize,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_ci = (n > 2).then(|| {
        let se = (sse / (n - 2) as f64 / sxx).sqrt();
        let half = t_quantile(n - 2) * se;
        (slope - half, slope + half)
    });
    Some(LinearFit {
        slope,
        intercept,
        slope_ci,
        points: n,
        r_squared,
    })
}

/// Nodes grouped into the half-open cells `origin + c (z + [0, 1)^d)` tiling the box.
pub fn cell_partition(grid: &Grid, cell: f64) -> Vec<(Vec<f64>, Vec<usize>)> {
    let per_axis = (grid.side / cell).round() as usize;
    let count = per_axis.pow(grid.dim as u32);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for node in 0..grid.len() {
        let x = grid.coordinate(node);
        let mut flat = 0;
        let mut stride = 1;
        for (xi, o) in x.iter().zip(&grid.origin) {
            let z = (((xi - o) / cell) + 1e-9).floor() as usize;
            flat += z.min(per_axis - 1) * stride;
            stride *= per_axis;
        }
        groups[flat].push(node);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(flat, nodes)| {
            let mut rest = flat;
            let centre = grid
                .origin
                .iter()
                .map(|o| {
                    let z = rest % per_axis;
                    rest /= per_axis;
                    o + (z as f64 + 0.5) * cell
                })
                .collect();
            (centre, nodes)
        })
        .collect()
}
