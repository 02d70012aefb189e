//! Numerical toolkit for dilations of operator moment sequences.
//!
//! Everything lives at finite dimension: operators are dense complex
//! matrices, a moment sequence `A_0 = I, A_1, ..., A_N` acts on `C^d`, and a
//! dilation is a larger matrix whose compressed powers reproduce the
//! sequence. The base space is always embedded as the first `d`
//! coordinates of the dilation space.
//!
//! Modules:
//! - [`opcore`]: Hermitian spectral kernel, PSD verdicts, roots, block
//!   assembly, block Krylov bases, numerical radius.
//! - [`moments`]: moment sequences and the existence criteria (Hankel,
//!   complete monotonicity, Toeplitz, Szegő/Poisson kernels, Jacobi data).
//! - [`dilations`]: constructors and the universal verifier.
//! - [`ca_class`]: the `C_A`-class criteria and explicit block dilations.

pub mod ca_class;
pub mod dilations;
pub mod error;
pub mod json;
pub mod moments;
pub mod opcore;
pub mod par;
pub mod random;

pub use error::{DilationError, Result};
pub use opcore::{c64, ComplexMatrix, Tolerance};
