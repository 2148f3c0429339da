//! Exact SU(n) valence-bond-solid (VBS) states and their block entanglement.
//!
//! The crate builds the open-boundary VBS state (adjoint bulk sites plus a
//! fundamental/conjugate boundary pair) and the periodic VBS ring as dense
//! amplitude vectors in a Bell-basis labeling, and computes reduced density
//! matrices, spectra and von Neumann / Rényi entropies in two independent ways:
//!
//! * [`oracle`]: brute-force partial traces and a Jacobi eigensolver acting on
//!   explicit state vectors;
//! * [`closed_form`]: the analytic block spectra, entropies, saturation limits
//!   and complex-α branch points of the Rényi entropy.
//!
//! [`edge`] rebuilds the block density matrix from the degenerate edge states
//! of the open chain, and [`cli`] exposes everything as a command-line tool that
//! emits CSV/JSON tables.

pub mod cli;
pub mod closed_form;
pub mod edge;
mod error;
pub mod oracle;
pub mod vbs;
pub mod weyl;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Default cap on the number of amplitudes a constructed state may hold.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 26;

/// Default cap on the side length of a dense density matrix.
pub const DEFAULT_MATRIX_BUDGET: usize = 4096;
