//! Numerical laboratory for the mean-field limit of bosonic many-body dynamics.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fluctuation;
pub mod fock;
pub mod hartree;
pub mod lattice;
pub mod linalg;
pub mod manybody;
pub mod xlab;

pub use error::{Error, Result};
pub use fock::{FockBasis, FockState, ModeFunction};
pub use lattice::{build_grid, certify_d, regularize, LatticeGrid, PotentialFamily, PotentialSpec};
pub use fluctuation::{FluctuationGenerator, GeneratorSeries, QuadraticPropagator};
pub use hartree::HartreeTrajectory;
pub use manybody::{ManyBodyHamiltonian, ReducedDensity, SectorBasis, SectorState};
pub use xlab::{load_config, Bundle, CheckRecord, ExperimentConfig, LoadedConfig};
