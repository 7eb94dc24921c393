//! Combined Newton / primal-dual active-set iteration and its linear
//! solver.

pub mod active_set;
pub mod gmres;
pub mod newton;
pub mod precond;

pub use active_set::{update_active_set, update_active_set_above, ActiveSet};
pub use gmres::{gmres, GmresOptions, GmresStats};
pub use newton::{solve_step, IterationRecord, NewtonReport, NewtonSettings, StepProblem};
pub use precond::{solve_block_triangular, BlockDiagonal, Identity, Ilu0, Jacobi, Preconditioner};
