//! Construction and validation of total-differential (TD) three-phase
//! relative-permeability/capillary-pressure data from two-phase edge data,
//! the global capillary pressure function by path-ODE integration, stability
//! diagnostics of the global-pressure formulation, and a 1D simulator that
//! runs the phase-pressure and global-pressure Darcy forms side by side.

pub mod boundary;
pub mod error;
pub mod fem;
pub mod field;
pub mod fluids;
pub mod flows;
pub mod gcp;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod ode;
pub mod presets;
pub mod reconstruct;
pub mod sim1d;
pub mod ternary;
pub mod twophase;

pub use error::{Error, Result};
pub use fluids::{FluidSystem, Phase, PhaseModel, PressureWindow, VolumeFactor};
pub use flows::{FlowContext, Provenance, ThreePhaseKr};
pub use ternary::{Edge, Ternary};
pub use twophase::{CapillaryCurves, TwoPhaseDataset, ValidationReport};
