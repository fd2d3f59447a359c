//! Numerical machinery for fractional evolution equations at desk scale.
//!
//! The crate evaluates the two-parameter Mittag-Leffler function E_{α,β}(z)
//! ([`mlf`]), provides Riemann-Liouville kernels, weakly singular convolution
//! quadrature and the Caputo derivative ([`kernels`]), constructs the
//! resolvent families S_α(t) and P_α(t) of a matrix generator by two
//! independent routes ([`resolvent`]), estimates the semivariation of an
//! operator family ([`semivariation`]), and solves the fractional Cauchy
//! problem D_t^α u = Au + f with maximal-regularity diagnostics ([`solver`]).
//! A verification battery ([`verify`]) cross-checks every identity the other
//! modules rely on, and [`cli`] exposes the whole thing as the `alphares`
//! binary.
//!
//! All operations are pure functions of their inputs; constructed grids,
//! sampled functions and operator families are immutable, so everything here
//! can be shared freely across threads.

pub mod cli;
pub mod dd;
pub mod io;
pub mod kernels;
pub mod mlf;
pub mod resolvent;
pub mod semivariation;
pub mod solver;
pub mod special;
pub mod verify;

/// Crate-wide error type. The two variants correspond to the process exit
/// codes of the `alphares` binary: invalid input (exit 2) versus a numerical
/// failure at run time (exit 3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The request itself is malformed: bad parameters, mismatched
    /// dimensions, unreadable input files.
    #[error("validation error: {0}")]
    Validation(String),
    /// The request was well-formed but the computation left its supported
    /// envelope or a property check failed.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for validation, 3 for numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
