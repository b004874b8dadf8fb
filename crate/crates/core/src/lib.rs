//! Numerical laboratory for bilinear inverse problems with sparsity priors.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`]: sparse complex vectors, linear/circular convolution and
//!   correlation, the unitary DFT and time reversal.
//! * [`linalg`]: small dense complex matrices, Hermitian eigensolvers and
//!   determinants used by the searches below.
//! * [`operators`]: measurement ensembles (Gaussian, sign flips, partial
//!   circulant and universal random demodulators, Weyl–Heisenberg shifts)
//!   and lifted bilinear maps.
//! * [`rnmp`]: restricted norm multiplicativity constants of sparse
//!   convolutions via autocorrelation Toeplitz matrices.
//! * [`embedding`]: covering-number and sample-complexity calculators plus
//!   Monte Carlo distortion verification.
//! * [`recovery`]: complex basis pursuit (synthesis and analysis forms) and
//!   rank-one factorization.
//! * [`phase`]: symmetrization maps and the Fourier phase-retrieval
//!   stability experiment.
//! * [`freiman`]: order-2 Freiman isomorphisms and support compression.
//! * [`cli`]: reproducible experiment driver behind the `bilab` binary.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod freiman;
pub mod linalg;
pub mod operators;
pub mod phase;
pub mod recovery;
pub mod rng;
pub mod rnmp;
pub mod signals;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
