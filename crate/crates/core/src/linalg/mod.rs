//! Small self-contained linear algebra kernels: dense symmetric eigen
//! decomposition, banded LU with partial pivoting, tridiagonal pencil
//! eigenvalues and shift-invert subspace iteration for banded pencils.

mod banded;
mod dense;
mod subspace;
mod symeig;
mod tridiag;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::Matrix;
pub use subspace::{shift_invert_subspace, SubspaceOptions, SubspaceResult};
pub use symeig::{generalized_symmetric_eigen, symmetric_eigen, SymmetricEigen};
pub use tridiag::{tridiagonal_pencil_eigen, SymTridiagonal, TridiagonalPair};
