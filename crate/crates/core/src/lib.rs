//! Trapped-ion simulation of Dicke-state generation by rapid adiabatic
//! passage on the red motional sideband.
//!
//! Two or more qubits share one motional mode truncated at `n_max`. A
//! chirped Gaussian pulse drives the red sideband of all ions at once and
//! carries `|↓…↓⟩|1⟩` adiabatically into the single-excitation Dicke state
//! `|D_N^(1)⟩|0⟩`. The off-resonant carrier coupling shifts the levels
//! during the pulse; [`CompensationMode`] selects whether it is kept,
//! removed, or offset by a second tone.
//!
//! Units: ħ = 1, times in seconds, all frequencies angular (rad/s).
//!
//! ```
//! use dicke_core::{run_rap, ExperimentConfig};
//!
//! let mut cfg = ExperimentConfig::operating_point();
//! cfg.n_max = 3;
//! cfg.pulse = cfg.pulse.with_width(60e-6).unwrap();
//! let out = run_rap(&cfg).unwrap();
//! assert!(out.fidelity > 0.5);
//! ```

pub mod drive;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod linalg;
pub mod measurement;
pub mod propagator;
pub mod spectral;

pub use nalgebra;
pub use num_complex;

pub use drive::{
    angular, derive_eta, CompensationMode, DriveConfig, EnvelopeKind, HamiltonianSource,
    PulseShape, Sideband,
};
pub use error::{Error, Result};
pub use experiment::{
    potentials_report, prepare_fock1, run_rap, sweep, EtaSpec, ExperimentConfig,
    MeasurementSettings, PotentialsReport, PrepMode, RapOutcome, SweepAxis, SweepResult,
};
pub use hilbert::{build_space, embed, make_dicke, HilbertSpace, Spin, StateVector};
pub use measurement::{InternalDensityMatrix, ParityFit, ReadoutModel};
pub use propagator::{evolve, EvolutionResult};
pub use spectral::{adiabatic_spectrum, AdiabaticFrame, DiabaticBound, FiveStateModel};
