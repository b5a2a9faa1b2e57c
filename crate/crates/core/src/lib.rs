//! Quantum state transfer through finite spin chains, with interference
//! accounting.
//!
//! The crate builds the chain Hamiltonians (uniform Heisenberg, XY with weak
//! end bonds, flux-qubit, XY+Ising), evolves them spectrally, extracts the
//! reduced propagator of the two end spins as a quantum channel, and computes
//! the interference and fidelity measures that characterize the transfer.
//!
//! Layering, bottom to top:
//!
//! * [`hamiltonians`] — dense Hermitian matrices in the single-excitation
//!   subspace (dimension N+1) or the full 2^N product space.
//! * [`dynamics`] — eigendecomposition and U(t), transfer amplitudes
//!   f_ij(t) in the vacuum-rotating gauge.
//! * [`channel`] — the reduced propagator tensor P_{ij,kl} of spins 1 and N,
//!   assembled analytically for conserving chains or numerically by partial
//!   trace in the general case.
//! * [`measures`] — interference I(P), normalized unitary interference,
//!   closed-form reduced interference, average transfer fidelity and its
//!   Monte Carlo validation.
//! * [`experiments`] — figure-level drivers: time series, Δ-sweeps, pairwise
//!   fidelities.
//! * [`cli`] — command-line front end emitting CSV/JSON.

pub mod channel;
pub mod cli;
pub mod dynamics;
pub mod experiments;
pub mod hamiltonians;
pub mod measures;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// `InvalidSpec`/`Usage` map to misuse of the API or CLI (exit code 2);
/// the numerical-contract variants indicate a violated invariant discovered
/// at run time (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    /// A chain specification violates its invariants.
    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),

    /// Input matrix fails the Hermiticity tolerance.
    #[error("matrix is not Hermitian: max |H - H†| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    /// A propagator or eigenvector matrix fails the unitarity tolerance.
    #[error("matrix is not unitary: max |U†U - I| = {residual:.3e}")]
    NotUnitary { residual: f64 },

    /// Dimensions of two objects that must agree do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Requested chain length exceeds the full-space cap.
    #[error(
        "chain of {n} sites needs a dense {dim}×{dim} matrix; the full-space \
         builder is capped at {cap} sites to keep eigendecomposition tractable"
    )]
    SizeCap { n: usize, dim: usize, cap: usize },

    /// Invalid argument outside the spec structs (sample counts, grids, ...).
    #[error("{0}")]
    Usage(String),

    /// A numerical contract was violated during computation.
    #[error("numerical contract violated: {0}")]
    Numerics(String),

    /// Failure writing or reading an output artifact.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is a usage/validation problem rather than a
    /// numerical-contract violation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::Usage(_)
                | Error::DimensionMismatch { .. }
                | Error::SizeCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
