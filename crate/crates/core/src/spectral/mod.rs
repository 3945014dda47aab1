//! Sparse symmetric eigen-machinery: inertia counting, certified window eigensolves,
//! masked resolvent norms and Chebyshev propagation.

pub mod chebyshev;
pub mod count;
pub mod dense;
pub mod lanczos;
pub mod ldlt;
pub mod ordering;
pub mod resolvent;

pub use chebyshev::{bessel_j_sequence, chebyshev_evolve, chebyshev_evolve_with, EvolutionStats};
pub use count::{count_eigenvalues, factor_resolved, SpectrumCounter};
pub use lanczos::{
    eigenpairs_in_window, eigenpairs_with, lowest_eigenpairs, lowest_eigenpairs_with, EigenSet,
    LanczosOptions, SpectralWindow,
};
pub use ldlt::{factor, solve, Inertia, LdlContext, ShiftedFactorization, SymbolicLdl};
pub use ordering::approximate_minimum_degree;
pub use resolvent::{block_norm_with, block_resolvent_norm};
