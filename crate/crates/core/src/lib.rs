//! Deterministic 1-D Maxwell-Bloch simulator for a three-level ionic medium
//! in which a pump pulse stores an X–A coherence that a delayed read pulse
//! converts, through two-photon absorption, into a UV signal on B–X.
//!
//! - [`model`]: parameters, pulse envelopes, effective Bloch equations
//! - [`solver`]: (z, t) propagation and convergence checks
//! - [`theory`]: weak-excitation closed forms
//! - [`analysis`]: spectra, integrals, scans, fits
//! - [`four_level`]: reference integrator with the intermediate level kept
//! - [`validate`]: runnable invariant and oracle suite

pub mod analysis;
pub mod constants;
pub mod four_level;
pub mod model;
pub mod ode;
pub mod solver;
pub mod theory;
pub mod validate;

pub use analysis::{AnalysisError, ExpFit, ScanResult, ScanRow, Spectrum};
pub use model::{BlochState, DerivedRates, FieldTriple, MediumParams, ModelError, PulseRole, PulseSpec};
pub use solver::{RunConfig, SimulationGrid, SimulationRecord, SolverError, SolverHooks};
