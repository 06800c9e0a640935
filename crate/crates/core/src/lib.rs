//! Numerical laboratory for light cones in long-range interacting spin systems.
//!
//! * [`lattice`]: hypercubic geometry, balls, greedy coarse graining, the
//!   geometric constant `gamma` and the discrete summation check.
//! * [`hamiltonian`]: symbolic Pauli-string Hamiltonians, truncation by
//!   interaction diameter and the power-law decay assumptions.
//! * [`dynamics`]: exact small-system operator dynamics, local
//!   approximations, shell decompositions, light-cone scans and fronts.
//! * [`bounds`]: the analytic bound apparatus with explicit constants,
//!   evaluated in log space.
//! * [`protocol`]: the GHZ state-transfer protocol that saturates the bound.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod logreal;
pub mod protocol;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianSpec, InteractionTerm, Pauli};
pub use lattice::{GammaReport, Lattice, SiteSet};
pub use logreal::LogReal;

/// Complex scalar used by every dense kernel.
pub type C64 = num_complex::Complex64;

/// Version tag written into every exported artifact.
pub const ARTIFACT_VERSION: &str = concat!("lclab/", env!("CARGO_PKG_VERSION"));
