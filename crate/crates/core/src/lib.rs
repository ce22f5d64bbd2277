//! Resonant excitation of coherent modes in a trapped condensate: two-mode
//! amplitude dynamics, the time-averaged order parameter of the locked /
//! unlocked transition, variational mode wavefunctions and the map from a
//! laboratory quadrupole drive to dimensionless parameters.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod ode;
pub mod order;
pub mod quadrature;
pub mod units;
pub mod variational;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use dynamics::{DimensionlessParams, Frame, ModeAmplitudes, Trajectory};
pub use error::{Error, Result};
pub use experiment::{AtomSpecies, DrivenExperiment, PhysicalSetup, SolvedSetup, TrapConfig};
pub use order::{AveragingConfig, CriticalConfig, CriticalKind, CriticalPoint, EtaEstimate, RegimeLabel};
pub use variational::{ModeCache, ModeIndex, VariationalMode};
