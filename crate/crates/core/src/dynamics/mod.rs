//! Exact operator dynamics on small Hilbert spaces.
//!
//! Up to eight sites the Hamiltonian is diagonalized directly. Larger systems
//! use a matrix-free Pauli sum with a Chebyshev propagator; dense evolved
//! operators are available up to twelve sites and commutator norms up to the
//! site cap through Lanczos.

pub mod evolve;
pub mod linalg;
pub mod operator;
pub mod pauli_sum;
pub mod propagator;
pub mod scan;

pub use linalg::LanczosOpts;
pub use evolve::{
    commutator_norm, commutator_norm_local, evolve_operator, realize, taylor_evolve, Backend, Evolver, Realization,
    DEFAULT_CAP_SITES, DENSE_MAX_SITES, EIGEN_MAX_SITES,
};
pub use operator::{pauli_matrix, CMatrix, DenseOperator};
pub use pauli_sum::PauliSum;
pub use propagator::Propagator;
pub use scan::{
    approx_error, approx_error_evolved, decompose_evolved_operator, front_extract, lightcone_scan, line_fit,
    Diagnostic, Envelope, FrontFit, FrontPoint, LightConeScan, Probe, ScanRequest, ScanRow, Shell, ShellDecomposition,
    SCAN_CSV_HEADER,
};
