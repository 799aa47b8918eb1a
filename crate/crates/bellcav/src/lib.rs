//! Dynamics of a pair of Bell-entangled two-level atoms, each coupled to its
//! own single-mode cavity.
//!
//! The composite system is two qubits plus two truncated bosonic modes. Each
//! atom interacts only with its local mode through a full (counter-rotating)
//! σ^x coupling; the two subsystems never talk to each other directly, so the
//! joint generator factorizes. Two regimes are covered:
//!
//! - leaky cavities starting from vacuum, integrated as a Lindblad master
//!   equation with one photon-loss dissipator per mode;
//! - perfect cavities starting from a thermal state, evolved unitarily as a
//!   weighted mixture of pure product states.
//!
//! Entanglement is tracked with the two-qubit concurrence, decoherence with
//! the overlap fidelity against the interaction-free qubit evolution, and
//! information loss with the base-2 von Neumann entropy of the reduced
//! two-qubit state.
//!
//! All core math is generic over the floating-point scalar via [`Scalar`];
//! the `runner` and the CLI work in `f64` through the aliases below.

pub mod error;
pub mod hilbert;
#[cfg(test)]
pub(crate) mod test_util;
pub mod metrics;
pub mod model;
pub mod propagators;
pub mod runner;
pub mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex scalar over `f64`, the default precision.
pub type C64 = num_complex::Complex<f64>;
/// Complex scalar over `f32`.
pub type C32 = num_complex::Complex<f32>;

pub type SpaceLayout = hilbert::SpaceLayout;
pub type OperatorMatrix64 = hilbert::OperatorMatrix<f64>;
pub type DensityMatrix64 = hilbert::DensityMatrix<f64>;
pub type StateVector64 = hilbert::StateVector<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type LaguerreConfig64 = propagators::LaguerreConfig<f64>;
pub type TimeGrid64 = propagators::TimeGrid<f64>;
pub type Trajectory64 = propagators::Trajectory<f64>;
