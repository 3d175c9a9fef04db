//! Multi-order moment node embeddings and swap-test kernel classification on
//! attributed interaction networks.
//!
//! * [`graph`]: immutable network with neighbor, feature and degree queries.
//! * [`embed`]: raw-moment statistics, the QMME embedding and the MoPro baseline.
//! * [`qsim`]: exact statevector simulation of the embedding circuit and of the
//!   swap-test pipeline, plus resource accounting.
//! * [`classify`]: fidelity kernels, expectation values, labels and shot sampling.
//! * [`bench`]: balanced splits, metrics, paired t-tests, synthetic data and
//!   experiment reports.
//! * [`cli`]: the `qmme` command-line frontend.

pub mod bench;
pub mod classify;
pub mod cli;
pub mod embed;
pub mod error;
pub mod graph;
pub mod qsim;
#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
