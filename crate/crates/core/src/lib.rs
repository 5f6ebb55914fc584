//! Barren-plateau diagnostics for random variational circuits.
//!
//! The second moment `E_V E_θ f²` of a variational objective over random
//! two-qudit entangling gates equals `Σ_x |c_x|² g_x`, and each `g_x` is the
//! probability that a classical random walk on `{I, S}^n` ends with every
//! site of `supp(x)` labelled `S`. This crate simulates that walk, checks it
//! against exact and statevector oracles, and evaluates the analytic bounds.

pub mod bounds;
pub mod circuit;
pub mod hamiltonian;
pub mod oracle;
pub mod par;
pub mod sweep;
pub mod walk;

pub use bounds::{BoundReport, BoundsError, GradientBoundInputs};
pub use circuit::{Architecture, CircuitError, Gate};
pub use hamiltonian::{BasisKind, HamiltonianError, HamiltonianSpec, SupportPattern, Term};
pub use oracle::{OperatorBasis, OracleError, OracleLimits};
pub use par::Execution;
pub use sweep::{run_sweep, SweepConfig, SweepError, SweepRow};
pub use walk::{EstimateReport, EstimatorConfig, Method, WalkError, WalkKind};
