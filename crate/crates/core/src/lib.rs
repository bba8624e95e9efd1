//! Coefficient engine and numerical checks for l-fold products of a level-one
//! Hecke eigenform.
//!
//! * [`eigenform`]: exact and normalized Fourier coefficients, Satake angles.
//! * [`sym`]: exact Chebyshev-basis expansion of lambda(p)^l.
//! * [`local`]: prime-power Dirichlet coefficients of the l-fold product and
//!   symmetric-power L-functions.
//! * [`dirichlet`]: truncated series and Euler products, the correction
//!   factors `U_l`, `G_l`, and factorization residuals.
//! * [`exponents`]: exact error exponents and the quoted-value audit.
//! * [`moments`]: squarefree moment sums, main-term fits and sign-change scans.

pub mod config;
pub mod dirichlet;
pub mod eigenform;
pub mod error;
pub mod exponents;
pub mod local;
pub mod moments;
pub mod qseries;
pub mod sieve;
pub mod summation;
pub mod sym;

pub use eigenform::{EigenformTable, QExpansion, SatakeAngle};
pub use exponents::{ExactRational, ExponentReport};
pub use error::{LfoldError, Result};

pub use config::RunConfig;
pub use dirichlet::{CorrectionFactor, TruncatedSeries};
pub use local::{LocalSeries, TensorCoefficientTable};
pub use moments::{FitResult, MomentSeries, SignChangeRecord};
pub use sieve::SquarefreeSieve;
pub use sym::ChebyshevExpansion;
