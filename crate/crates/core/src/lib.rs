//! Conservative Fourier pseudo-spectral solvers for the generalized
//! Korteweg-de Vries equation `u_t + u_xxx + u^(p-1) u_x = 0` on a periodic
//! interval `[-L, L)`.

pub mod diagnostics;
pub mod error;
pub mod integrators;
pub mod sav;
pub mod scenarios;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use integrators::{evolve, Evolution, RunLog, RunOptions, Scheme, StepperConfig};
pub use scenarios::{Preset, Scenario};
pub use spectral::{FieldVector, SpectralGrid};
