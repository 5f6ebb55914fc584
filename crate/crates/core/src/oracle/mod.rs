//! Reference computations at desk scale.
//!
//! * [`transfer`]: exact propagation of the biased walk's distribution over
//!   all `2^n` configurations.
//! * [`enumerate`]: brute-force sum of trajectory weights, an independent
//!   route to the same `g_x`.
//! * [`haar`]: statevector simulation of the random circuit itself with
//!   Haar-random two-qudit gates, checking the walk against the quantum model.

pub mod basis;
pub mod enumerate;
pub mod haar;
pub mod statevector;
pub mod transfer;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::hamiltonian::{HamiltonianError, SupportPattern};

pub use basis::OperatorBasis;
pub use enumerate::{exact_gx_enumeration, exact_gx_enumeration_gates};
pub use haar::{haar_first_moment, haar_gx, haar_mean_expectation, haar_unitary, HaarConfig};
pub use statevector::StateVector;
pub use transfer::{exact_absorption_probability, exact_gx, exact_second_moment, StateDistribution};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("n = {n} exceeds the transfer-matrix cap of {cap} sites")]
    TooManySites { n: usize, cap: usize },
    #[error("enumeration needs n <= {max_n} and m <= {max_m}, got n = {n}, m = {m}")]
    EnumerationTooLarge { n: usize, m: usize, max_n: usize, max_m: usize },
    #[error("state dimension q^n = {q}^{n} exceeds the statevector cap of {cap}")]
    DimensionTooLarge { q: usize, n: usize, cap: usize },
    #[error("support site {site} out of range for n = {n}")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("operator index {index} out of range for q = {q}")]
    OperatorOutOfRange { index: usize, q: usize },
    #[error("basis has q = {basis} but the architecture has q = {arch}")]
    BasisMismatch { basis: usize, arch: usize },
    #[error("architecture has (n, q) = ({}, {}) but the Hamiltonian has ({}, {})", .arch.0, .arch.1, .spec.0, .spec.1)]
    Mismatch { arch: (usize, usize), spec: (usize, usize) },
    #[error("the Pauli basis needs q = 2, got q = {0}")]
    PauliNeedsQubits(usize),
    #[error("sample count must be at least 1")]
    ZeroSamples,
}

/// Size caps for the exact and statevector oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_transfer_n: usize,
    pub max_enum_n: usize,
    pub max_enum_m: usize,
    pub max_statevector_dim: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_transfer_n: 20,
            max_enum_n: 8,
            max_enum_m: 12,
            max_statevector_dim: 1 << 20,
        }
    }
}

pub(crate) fn check_support(x: &SupportPattern, n: usize) -> Result<(), OracleError> {
    match x.max_site() {
        Some(site) if site >= n => Err(OracleError::SiteOutOfRange { site, n }),
        _ => Ok(()),
    }
}

pub(crate) fn support_mask(x: &SupportPattern) -> usize {
    x.support().fold(0usize, |m, s| m | (1 << s))
}
