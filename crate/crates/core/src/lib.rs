//! Quantum image classification on a dense statevector simulator.
//!
//! The crate covers the whole pipeline: amplitude, block-amplitude and
//! piecewise-angle data loading, hardware-efficient processing circuits with a
//! classical softmax readout, adjoint-mode training with Adam, and the tooling
//! needed to take a trained model to hardware (OpenQASM 2.0 export, gate
//! statistics, shot-noise inference and model persistence).
//!
//! Amplitude index bits are big-endian over qubits: qubit 0 is the most
//! significant bit of the basis-state index.

pub mod data;
pub mod encoders;
mod error;
pub mod hwio;
pub mod model;
pub mod simulator;
pub mod train;

pub use error::{QsError, Result};

pub use data::{Dataset, ImageTensor};
pub use model::{ModelSpec, Scheme, TrainableParams};
pub use simulator::{CircuitProgram, Gate, GateKind, Statevector};
