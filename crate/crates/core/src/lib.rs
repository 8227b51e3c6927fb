//! Simulation of cold-collision density shifts in an optical lattice clock.
//!
//! The crate implements the full pipeline: thermal Monte-Carlo sampling of
//! motional states in a one-dimensional lattice, mode-dependent contact
//! interaction couplings from harmonic-oscillator overlap integrals, exact
//! diagonalization of the resulting effective spin-1/2 model, Ramsey and Rabi
//! spectroscopy with peak extraction, and a scattering-length calibration fit
//! against measured shift data.

pub mod calibration;
pub mod config;
pub mod couplings;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod hermite;
pub mod overlap;
pub mod sampler;
pub mod spectroscopy;
pub mod util;

pub use config::{AtomConfig, Config, McConfig, PhysicalConstants, Protocol, ProtocolConfig, TrapConfig};
pub use couplings::CouplingTables;
pub use error::{Error, Result};
pub use evolution::{EigenSystem, StateVector};
pub use hamiltonian::{HamiltonianMatrix, SpinSectorBasis};
pub use overlap::{OverlapCache, SliceOverlaps};
pub use sampler::{MotionalState, PartitionTable, SampleEnsemble};
pub use spectroscopy::{RunOutput, ShiftResult, Spectrum};
pub use calibration::{FitResult, ShiftDataset};
