//! Shift-invert Lanczos with full reorthogonalization, locking, and an inertia certificate.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::count::{factor_resolved, SpectrumCounter};
use super::ldlt::ShiftedFactorization;
use crate::error::{Error, Result};
use crate::medium::rng::{auxiliary_rng, mix64};
use crate::sparse::{axpy, dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Residual tolerance relative to `‖A‖∞`.
    pub tol_eig: f64,
    /// Largest window count accepted.
    pub max_count: usize,
    /// Windows holding more eigenvalues are split by inertia bisection.
    pub chunk: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol_eig: 1e-10,
            max_count: 200,
            chunk: 40,
            seed: 0x5EED,
        }
    }
}

/// Half-open energy interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub lo: f64,
    pub hi: f64,
}

impl SpectralWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Eigenpairs in a window, certified complete by inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub window: SpectralWindow,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Inertia count of the window; always equals `values.len()`.
    pub count: usize,
}

impl EigenSet {
    pub(crate) fn empty(window: SpectralWindow) -> Self {
        Self {
            window,
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
            count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `|<v_i, v_j> - δ_ij|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.vectors.len() {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.vectors[i], &self.vectors[j]) - target).abs());
            }
        }
        worst
    }

    /// `index,eigenvalue,residual` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,eigenvalue,residual")?;
        for (k, (v, r)) in self.values.iter().zip(&self.residuals).enumerate() {
            writeln!(out, "{k},{v:.17e},{r:.3e}")?;
        }
        Ok(())
    }
}

struct Pair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

struct ShiftInvert<'f, 'a> {
    f: &'f ShiftedFactorization<'a>,
    sigma: f64,
    threshold: f64,
    scale: f64,
    locked: Vec<Pair>,
    rng: ChaCha8Rng,
}

impl<'f, 'a> ShiftInvert<'f, 'a> {
    fn new(f: &'f ShiftedFactorization<'a>, tol: f64, seed: u64) -> Self {
        Self {
            f,
            sigma: f.shift,
            threshold: tol * f.norm(),
            scale: f.norm() + f.shift.abs(),
            locked: Vec::new(),
            rng: auxiliary_rng(seed),
        }
    }

    fn n(&self) -> usize {
        self.f.n()
    }

    fn orthogonalize(&self, basis: &[Vec<f64>], w: &mut [f64]) {
        for _ in 0..2 {
            for q in self.locked.iter().map(|p| &p.vector).chain(basis) {
                let c = dot(q, w);
                axpy(-c, q, w);
            }
        }
    }

    fn start_vector(&mut self) -> Option<Vec<f64>> {
        let mut v: Vec<f64> = (0..self.n()).map(|_| self.rng.random::<f64>() - 0.5).collect();
        self.orthogonalize(&[], &mut v);
        let nv = norm2(&v);
        if nv < 1e-8 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        Some(v)
    }

    /// Ritz data of the current tridiagonal: `(λ, estimate, coefficient column)`.
    fn ritz(&self, alpha: &[f64], beta: &[f64]) -> Vec<(f64, f64, Vec<f64>)> {
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let b = beta[k - 1];
        (0..k)
            .filter(|&i| eig.eigenvalues[i].abs() > 0.0)
            .map(|i| {
                let theta = eig.eigenvalues[i];
                let s = eig.eigenvectors.column(i);
                let estimate = (b * s[k - 1]).abs() / theta.abs() * self.scale;
                (self.sigma + 1.0 / theta, estimate, s.iter().copied().collect())
            })
            .collect()
    }

    /// One Lanczos run orthogonal to the locked pairs. Every Ritz pair whose true
    /// residual passes the threshold is locked; returns how many were added.
    fn run(&mut self, kmax: usize, enough: &dyn Fn(&[f64]) -> bool) -> Result<usize> {
        let Some(q0) = self.start_vector() else {
            return Ok(0);
        };
        let kmax = kmax.min(self.n() - self.locked.len()).max(1);
        let mut basis = vec![q0];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut scale: f64 = 0.0;
        for j in 0..kmax {
            let mut w = self.f.solve(&basis[j])?;
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            let a = dot(&basis[j], &w);
            axpy(-a, &basis[j], &mut w);
            self.orthogonalize(&basis, &mut w);
            let b = norm2(&w);
            alpha.push(a);
            beta.push(b);
            scale = scale.max(a.abs()).max(b);
            let exhausted = b <= 1e-12 * scale;
            let steps = j + 1;
            if exhausted || steps == kmax {
                break;
            }
            if steps % 5 == 0 {
                let mut done: Vec<f64> = self.locked.iter().map(|p| p.value).collect();
                done.extend(
                    self.ritz(&alpha, &beta)
                        .into_iter()
                        .filter(|r| r.1 <= self.threshold)
                        .map(|r| r.0),
                );
                if enough(&done) {
                    break;
                }
            }
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        basis.truncate(alpha.len());

        let a = self.f.matrix();
        let mut added = 0;
        for (_, estimate, s) in self.ritz(&alpha, &beta) {
            if estimate > 1e3 * self.threshold {
                continue;
            }
            let mut y = vec![0.0; self.n()];
            for (c, q) in s.iter().zip(&basis) {
                axpy(*c, q, &mut y);
            }
            let ny = norm2(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            let ay = a.matvec(&y);
            let value = dot(&y, &ay);
            let residual = ay
                .iter()
                .zip(&y)
                .map(|(p, q)| (p - value * q).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= self.threshold {
                self.locked.push(Pair {
                    value,
                    vector: y,
                    residual,
                });
                added += 1;
            }
        }
        Ok(added)
    }

    fn locked_in(&self, w: SpectralWindow) -> usize {
        self.locked.iter().filter(|p| w.contains(p.value)).count()
    }

    fn into_set(self, window: SpectralWindow) -> EigenSet {
        let mut pairs: Vec<Pair> = self
            .locked
            .into_iter()
            .filter(|p| window.contains(p.value))
            .collect();
        pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
        let count = pairs.len();
        let mut set = EigenSet::empty(window);
        for p in pairs {
            set.values.push(p.value);
            set.residuals.push(p.residual);
            set.vectors.push(p.vector);
        }
        set.count = count;
        set
    }
}

/// Factors at `sigma`, stepping by `step` until solves meet their residual contract.
fn usable_shift<'a>(
    counter: &SpectrumCounter<'a>,
    sigma: f64,
    step: f64,
) -> Result<ShiftedFactorization<'a>> {
    let n = counter.context().matrix().n();
    let probe: Vec<f64> = (0..n)
        .map(|i| (mix64(i as u64) >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        .collect();
    let mut last = None;
    for attempt in 0..8 {
        let f = match factor_resolved(counter.context(), sigma + attempt as f64 * step) {
            Ok(f) => f,
            Err(e @ Error::UnresolvedShift { .. }) => {
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        match f.solve(&probe) {
            Ok(_) => return Ok(f),
            Err(e @ Error::SolveResidual { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn initial_steps(wanted: usize) -> usize {
    (2 * wanted + 30).max(50)
}

/// Solves one chunk whose inertia count is `m`.
fn solve_chunk(
    counter: &SpectrumCounter<'_>,
    window: SpectralWindow,
    below_lo: usize,
    m: usize,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    let f = if below_lo == 0 {
        usable_shift(counter, window.lo, -0.05 * window.width())?
    } else {
        usable_shift(counter, 0.5 * (window.lo + window.hi), 0.013 * window.width())?
    };
    let seed = mix64(opts.seed ^ window.lo.to_bits() ^ window.hi.to_bits().rotate_left(29));
    let mut si = ShiftInvert::new(&f, opts.tol_eig, seed);
    let enough = |vals: &[f64]| vals.iter().filter(|&&v| window.contains(v)).count() >= m;
    let mut steps = initial_steps(m);
    for _ in 0..(m + 10) {
        let before = si.locked_in(window);
        si.run(steps, &enough)?;
        let found = si.locked_in(window);
        if found >= m {
            break;
        }
        if found == before {
            steps = steps * 3 / 2;
        }
    }
    let found = si.locked_in(window);
    if found != m {
        return Err(Error::CertificationFailed {
            lo: window.lo,
            hi: window.hi,
            expected: m,
            found,
        });
    }
    Ok(si.into_set(window))
}

fn split(
    counter: &SpectrumCounter<'_>,
    lo: f64,
    hi: f64,
    n_lo: usize,
    n_hi: usize,
    chunk: usize,
    out: &mut Vec<(SpectralWindow, usize, usize)>,
) -> Result<()> {
    let m = n_hi - n_lo;
    if m == 0 {
        return Ok(());
    }
    let width_floor = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    if m <= chunk || hi - lo <= width_floor {
        out.push((SpectralWindow::new(lo, hi), n_lo, m));
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    let (n_mid, mid) = counter.resolve(mid)?;
    let n_mid = n_mid.clamp(n_lo, n_hi);
    split(counter, lo, mid, n_lo, n_mid, chunk, out)?;
    split(counter, mid, hi, n_mid, n_hi, chunk, out)
}

/// Eigenpairs in `(lo, hi]` using an existing counter.
pub fn eigenpairs_with(
    counter: &SpectrumCounter<'_>,
    lo: f64,
    hi: f64,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    let window = SpectralWindow::new(lo, hi);
    if !(lo < hi) {
        return Err(Error::Assertion(format!("empty window ({lo}, {hi}]")));
    }
    // membership follows the endpoints the counts were taken at
    let (n_lo, lo_eff) = counter.resolve(lo)?;
    let (n_hi, hi_eff) = counter.resolve(hi)?;
    let count = n_hi.saturating_sub(n_lo);
    if count > opts.max_count {
        return Err(Error::TooManyEigenvalues {
            lo,
            hi,
            count,
            limit: opts.max_count,
        });
    }
    if count == 0 {
        return Ok(EigenSet::empty(window));
    }
    let mut chunks = Vec::new();
    split(counter, lo_eff, hi_eff, n_lo, n_hi, opts.chunk, &mut chunks)?;
    let mut set = EigenSet::empty(window);
    for (w, below, m) in chunks {
        let part = solve_chunk(counter, w, below, m, opts)?;
        set.values.extend(part.values);
        set.vectors.extend(part.vectors);
        set.residuals.extend(part.residuals);
    }
    set.count = count;
    if set.values.len() != count {
        return Err(Error::CertificationFailed {
            lo,
            hi,
            expected: count,
            found: set.values.len(),
        });
    }
    Ok(set)
}

/// Certified eigenpairs of `A` in `(lo, hi]`.
pub fn eigenpairs_in_window(
    a: &CsrMatrix,
    lo: f64,
    hi: f64,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    eigenpairs_with(&SpectrumCounter::new(a), lo, hi, opts)
}

/// A certified window `(lo, hi]` with `lo` below the spectrum holding at least the `k`
/// lowest eigenpairs. The upper end sits in the first gap after the k-th eigenvalue.
pub fn lowest_eigenpairs_with(
    counter: &SpectrumCounter<'_>,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    let a = counter.context().matrix();
    let n = a.n();
    let (glo, ghi) = a.gershgorin();
    let spread = (ghi - glo).max(f64::MIN_POSITIVE);
    let lo = glo - 1e-6 * spread;
    if k == 0 {
        return Ok(EigenSet::empty(SpectralWindow::new(lo, lo + spread)));
    }
    let k = k.min(n);
    if k == n {
        return eigenpairs_with(counter, lo, ghi + 1e-6 * spread, opts);
    }
    let f = usable_shift(counter, lo, -1e-3 * spread)?;
    let seed = mix64(opts.seed ^ 0x10E5 ^ (k as u64));
    let mut si = ShiftInvert::new(&f, opts.tol_eig, seed);
    let enough = |vals: &[f64]| vals.len() > k;
    let mut steps = initial_steps(k);
    for _ in 0..(k + 10) {
        let before = si.locked.len();
        si.run(steps, &enough)?;
        if si.locked.len() == before {
            steps = steps * 3 / 2;
        }
        if si.locked.len() < k {
            continue;
        }
        let mut vals: Vec<f64> = si.locked.iter().map(|p| p.value).collect();
        vals.sort_by(f64::total_cmp);
        let gap_tol = 1e-8 * spread;
        let mut cut = None;
        for j in (k - 1)..vals.len() {
            match vals.get(j + 1) {
                Some(&next) if next - vals[j] > gap_tol => {
                    cut = Some(0.5 * (vals[j] + next));
                    break;
                }
                None => {
                    // margin well above the residual-level eigenvalue error
                    cut = Some(vals[j] + 1e-6 * spread);
                }
                _ => {}
            }
        }
        let Some(hi) = cut else { continue };
        let window = SpectralWindow::new(lo, hi);
        let (certified, hi_eff) = counter.resolve(hi)?;
        if certified == si.locked_in(SpectralWindow::new(lo, hi_eff)) && certified >= k {
            let mut set = si.into_set(SpectralWindow::new(lo, hi_eff));
            set.window = window;
            set.count = certified;
            return Ok(set);
        }
        if certified >= k && certified <= opts.max_count {
            // copies of repeated eigenvalues are missing: solve the certified window by count
            return eigenpairs_with(counter, lo, hi, opts);
        }
        if certified > opts.max_count {
            break;
        }
    }
    // fall back on a window solve past the estimate
    let mut vals: Vec<f64> = si.locked.iter().map(|p| p.value).collect();
    vals.sort_by(f64::total_cmp);
    let mut hi = vals
        .get(k - 1)
        .map_or(lo + spread * 1e-3, |v| v + 1e-6 * spread);
    while counter.at_most(hi)? < k {
        hi = lo + 2.0 * (hi - lo);
    }
    eigenpairs_with(counter, lo, hi, opts)
}

/// The `k` lowest eigenpairs (and any further ones up to the first gap).
pub fn lowest_eigenpairs(a: &CsrMatrix, k: usize, opts: &LanczosOptions) -> Result<EigenSet> {
    lowest_eigenpairs_with(&SpectrumCounter::new(a), k, opts)
}
