use super::ldlt::{LdlContext, ShiftedFactorization};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative size of the endpoint perturbation applied to unresolved shifts.
pub const PERTURBATION: f64 = 1e-9;
/// Perturbation attempts before an unresolved shift is reported.
pub const MAX_PERTURBATIONS: usize = 3;

/// Factors `A - x`, moving `x` up by `η = 1e-9‖A‖∞` while the shift is unresolved.
pub fn factor_resolved<'a>(ctx: &LdlContext<'a>, x: f64) -> Result<ShiftedFactorization<'a>> {
    let eta = PERTURBATION * ctx.norm().max(f64::MIN_POSITIVE);
    let mut last = None;
    for attempt in 0..=MAX_PERTURBATIONS {
        match ctx.factor(x + attempt as f64 * eta) {
            Ok(f) => return Ok(f),
            Err(e @ Error::UnresolvedShift { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Counts eigenvalues of one matrix on half-open windows, reusing the symbolic analysis.
#[derive(Debug, Clone)]
pub struct SpectrumCounter<'a> {
    ctx: LdlContext<'a>,
}

impl<'a> SpectrumCounter<'a> {
    pub fn new(a: &'a CsrMatrix) -> Self {
        Self {
            ctx: LdlContext::new(a),
        }
    }

    pub fn from_context(ctx: LdlContext<'a>) -> Self {
        Self { ctx }
    }

    pub fn context(&self) -> &LdlContext<'a> {
        &self.ctx
    }

    /// `#{λ <= x}` (up to the perturbation contract).
    pub fn at_most(&self, x: f64) -> Result<usize> {
        Ok(self.resolve(x)?.0)
    }

    /// `#{λ <= x'}` together with the endpoint `x'` actually counted at: `x` itself, or
    /// `x` moved up by the perturbation when `x` is unresolved.
    pub fn resolve(&self, x: f64) -> Result<(usize, f64)> {
        if x < self.ctx.matrix().gershgorin().0 {
            return Ok((0, x));
        }
        let f = factor_resolved(&self.ctx, x)?;
        Ok((f.inertia.negative, f.shift))
    }

    /// `#{a < λ <= b}`.
    pub fn count(&self, lo: f64, hi: f64) -> Result<usize> {
        if !(lo < hi) {
            return Err(Error::Assertion(format!("empty window ({lo}, {hi}]")));
        }
        let below_hi = self.at_most(hi)?;
        if below_hi == 0 {
            return Ok(0);
        }
        Ok(below_hi - self.at_most(lo)?.min(below_hi))
    }
}

/// Number of eigenvalues of `A` in `(lo, hi]`.
pub fn count_eigenvalues(a: &CsrMatrix, lo: f64, hi: f64) -> Result<usize> {
    SpectrumCounter::new(a).count(lo, hi)
}
