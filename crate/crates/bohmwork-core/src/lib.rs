//! Bohmian (quantum Hamilton-Jacobi) work statistics for a driven harmonic
//! oscillator: spectral propagation, trajectory integration with work
//! accumulation, statistical-mixture estimators and a two-point-measurement
//! reference distribution.

// validations use `!(x > 0.0)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod analytic;
pub mod error;
pub mod fields;
pub mod fock;
pub mod grid;
pub mod hamiltonian;
pub mod mixture;
pub mod propagator;
pub mod spectral;
pub mod stats;
pub mod tmp;
pub mod trajectories;
pub mod wavefunction;

pub use analytic::{OscillatorParams, TwoLevelWellState};
pub use error::{BohmError, Result};
pub use fields::{BohmFields, DerivativeScheme};
pub use grid::Grid1D;
pub use hamiltonian::{Drive, HamiltonianSpec, Potential};
pub use mixture::{Allocation, Engine, MixtureSpec, WorkDistribution};
pub use propagator::{PropagationPlan, SnapshotSeries};
pub use tmp::TmpDistribution;
pub use trajectories::{Trajectory, TrajectorySpec};
pub use wavefunction::WaveFunction;
