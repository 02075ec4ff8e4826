//! Hamiltonian hybrid quantum-classical dynamics.
//!
//! Two interacting qubits, written as a classical Hamiltonian system in the
//! canonical coordinates of their state vector, are coupled to a classical
//! harmonic oscillator. The quantum part is either symmetric (σz¹ and σz² are
//! conserved) or breaks that symmetry; the crate integrates the coupled flow and
//! measures whether the resulting orbits are regular or chaotic.
//!
//! Module map:
//!
//! - [`pauli`]: 4×4 two-qubit operators and the exact propagator.
//! - [`phase_space`]: canonical coordinates and quadratic Hamilton functions.
//! - [`hybrid`]: the coupled model, its vector field and Poisson brackets.
//! - [`integrator`]: registry of one-step schemes and trajectory sampling.
//! - [`diagnostics`]: spectra, Lyapunov exponents and conservation drift.
//! - [`config`], [`runner`]: experiment files, presets, sweeps and output.
//! - [`verify`]: the end-to-end checks behind `hybrid-orbits verify`.

pub mod config;
pub mod diagnostics;
pub mod hybrid;
pub mod integrator;
pub mod pauli;
pub mod phase_space;
pub mod runner;
pub mod verify;

pub use diagnostics::{ChaosReport, Verdict};
pub use hybrid::{HybridModel, HybridState, ModelParams};
pub use integrator::{Integrator, IntegratorConfig, Trajectory};
pub use pauli::ModelKind;
