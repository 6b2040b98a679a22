//! Dense statevector simulation.
//!
//! Rotation conventions: `RX/RY/RZ(θ) = exp(-iθP/2)` and
//! `RZZ(θ) = exp(-iθ Z⊗Z/2)`. Qubit 0 is the most significant bit of the
//! amplitude index.

mod adjoint;
mod circuit;
mod sampling;
mod state;

pub use adjoint::{adjoint_gradient, adjoint_gradients, Observable};
pub(crate) use adjoint::backward_sweep;
pub use circuit::{Angle, CircuitProgram, Gate, GateKind};
pub use sampling::sample_shots;
pub use state::{Statevector, MAX_QUBITS};

pub use num_complex::Complex64 as C64;
