//! Blow-up asymptotics and numerics for `−Δu = λe^u` with Dirichlet data on
//! disks and annuli.
//!
//! The numerical kernels are generic over [`Scalar`]; the aliases below fix
//! the scalar to `f64`.

pub mod eigen;
mod error;
pub mod green;
pub mod hamiltonian;
pub mod harness;
pub mod linalg;
pub mod pde;
pub mod peaks;
pub mod quadrature;
mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = green::Point<f64>;
pub type Domain = green::DomainSpec<f64>;
pub type Configuration = hamiltonian::Configuration<f64>;
pub type HMatrix = spectral::HMatrix<f64>;
pub type Prediction = spectral::SpectralPrediction<f64>;
pub type Grid = pde::GridSpec<f64>;
pub type Discretization = pde::Discretization<f64>;
pub type Branch = pde::SolutionBranch<f64>;
pub type BranchState = pde::BranchState<f64>;
pub type EigenPair = eigen::EigenPair<f64>;
pub type PeakData = peaks::PeakData<f64>;
