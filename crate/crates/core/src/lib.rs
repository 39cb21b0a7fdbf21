//! Numerical laboratory for mixed moments of a degree-2 Hecke L-function
//! against |ζ|² on the critical line.
//!
//! The pieces, bottom up:
//! - [`hecke_coeffs`]: exact τ(n), coefficient files and the binary cache.
//! - [`special_functions`]: log Γ, gamma-factor ratios, cutoff kernels, W_s.
//! - [`lfun_eval`]: AFE evaluators for ζ and L(s, f) plus a ζ oracle.
//! - [`test_functions`]: the smooth weights V.
//! - [`moments`]: the moment integrals and the mean-value diagnostic.
//! - [`asymptotics`]: predicted main terms, c_f, residual fits.
//! - [`oscillatory_lab`]: stationary-phase experiments.
//! - [`reports`]: configuration, run records and tabular output.

pub mod asymptotics;
pub mod error;
pub mod hecke_coeffs;
pub mod lfun_eval;
pub mod moments;
pub mod oscillatory_lab;
pub mod quadrature;
pub mod reports;
pub mod special_functions;
pub mod test_functions;

pub use error::{MmlError, Result};
