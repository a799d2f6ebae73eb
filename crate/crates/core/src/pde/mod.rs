//! Finite-volume solver and branch continuation for `−Δu = λe^u`, `u = 0` on `∂Ω`.

mod continuation;
mod exact;
mod grid;
mod newton;

pub use continuation::{
    continue_branch, BranchState, BranchTarget, Checkpoint, Continuation, ContinuationOptions, Fold, SolutionBranch,
};
pub use exact::{DiskBranch, DiskSolution};
pub use grid::{Discretization, GridKind, GridSpec};
pub use newton::{ansatz_seed, newton_solve, residual_norm, NewtonOptions, NewtonReport, RefinedLu, Solver};
